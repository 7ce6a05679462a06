#include "hetlb/gat.hpp"

#include <cmath>

#include "hetlb/errors.hpp"

namespace hetlb {

void GatConfig::validate() const {
  if (n_layers < 1) throw Error(ErrorKind::InvalidConfig, "GAT needs at least one layer");
  if (n_heads < 1) throw Error(ErrorKind::InvalidConfig, "GAT needs at least one head");
  if (hidden_dim < 1) throw Error(ErrorKind::InvalidConfig, "hidden_dim must be >= 1");
  if (in_dim < 2 || out_dim + 1 != in_dim) throw Error(ErrorKind::InvalidConfig, "GAT out_dim must equal in_dim - 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw Error(ErrorKind::InvalidConfig, "dropout_p must be in [0, 1)");
  if (!(leaky_slope >= 0.0)) throw Error(ErrorKind::InvalidConfig, "leaky_slope must be >= 0");
}

GatConfig GatConfig::for_subflows(std::size_t n_subflows, std::size_t n_heads) {
  GatConfig c;
  c.in_dim = n_subflows + 1;
  c.out_dim = n_subflows;
  c.n_heads = n_heads;
  return c;
}

std::vector<Mat*> GatParams::tensors() {
  std::vector<Mat*> out;
  for (auto& l : layers) {
    for (auto& w : l.weight) out.push_back(&w);
    for (auto& a : l.attention) out.push_back(&a);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Mat*> GatParams::tensors() const {
  std::vector<const Mat*> out;
  for (const auto& l : layers) {
    for (const auto& w : l.weight) out.push_back(&w);
    for (const auto& a : l.attention) out.push_back(&a);
    out.push_back(&l.bias);
  }
  return out;
}

GatParams GatParams::zeros_like() const {
  GatParams z = *this;
  for (Mat* t : z.tensors()) t->fill(0.0);
  return z;
}

namespace {

void glorot(Mat& m, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (double& v : m.data) v = u(rng);
}

}  // namespace

GatParams init_gat(const GatConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = make_rng(seed, 0x4741540);
  GatParams p;
  p.config = cfg;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::size_t in = cfg.layer_in(l), out = cfg.layer_out(l);
    GatLayer layer;
    for (std::size_t k = 0; k < cfg.n_heads; ++k) {
      Mat w(out, in);
      glorot(w, in, out, rng);
      layer.weight.push_back(std::move(w));
      Mat a(1, 2 * out);
      glorot(a, 2 * out, 1, rng);
      layer.attention.push_back(std::move(a));
    }
    layer.bias = Mat(1, out);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

GraphBatch make_batch(std::span<const SampleGraph* const> graphs) {
  GraphBatch b;
  if (graphs.empty()) return b;
  const std::size_t nf = graphs.front()->n_subflows;
  std::size_t n_nodes = 0, n_edges = 0, n_ue = 0;
  for (const SampleGraph* g : graphs) {
    if (g->n_subflows != nf) throw Error(ErrorKind::ModelMismatch, "batch mixes different subflow counts");
    n_nodes += g->n_nodes();
    n_edges += g->edges.size();
    n_ue += g->n_ue;
  }
  const bool labelled = graphs.front()->labelled();
  b.n_subflows = nf;
  b.features = Mat(n_nodes, nf + 1);
  if (labelled) b.labels = Mat(n_ue, nf);

  // Counting sort of edges by destination.
  std::vector<std::size_t> indeg(n_nodes, 0);
  std::size_t base = 0;
  for (const SampleGraph* g : graphs) {
    for (const auto& [src, dst] : g->edges) ++indeg[base + dst];
    base += g->n_nodes();
  }
  b.csr.offsets.assign(n_nodes + 1, 0);
  for (std::size_t v = 0; v < n_nodes; ++v) b.csr.offsets[v + 1] = b.csr.offsets[v] + indeg[v];
  b.csr.src.assign(n_edges, 0);
  std::vector<std::size_t> fill(b.csr.offsets.begin(), b.csr.offsets.end() - 1);

  base = 0;
  b.sample_ue_offset.push_back(0);
  for (const SampleGraph* g : graphs) {
    if (g->labelled() != labelled) throw Error(ErrorKind::Integrity, "batch mixes labelled and unlabelled graphs");
    std::copy(g->node_features.data.begin(), g->node_features.data.end(),
              b.features.data.begin() + static_cast<std::ptrdiff_t>(base * (nf + 1)));
    for (const auto& [src, dst] : g->edges) b.csr.src[fill[base + dst]++] = base + src;
    for (std::size_t j = 0; j < g->n_ue; ++j) {
      if (labelled)
        for (std::size_t k = 0; k < nf; ++k) b.labels(b.ue_rows.size(), k) = g->ue_labels(j, k);
      b.ue_rows.push_back(base + j);
    }
    b.sample_ue_offset.push_back(b.ue_rows.size());
    base += g->n_nodes();
  }
  return b;
}

GraphBatch make_batch(const SampleGraph& g) {
  const SampleGraph* one[] = {&g};
  return make_batch(std::span<const SampleGraph* const>(one));
}

GatLayerCache gat_layer_fwd(const Mat& h, const kernels::Csr& csr, const GatLayer& layer, Activation act,
                            double slope, double dropout_p, bool training, Rng* rng) {
  const std::size_t heads = layer.weight.size();
  const std::size_t out_dim = layer.bias.cols;
  if (csr.n_nodes() != h.rows) throw Error(ErrorKind::Shape, "GAT layer: node count mismatch");
  GatLayerCache c;
  if (training && dropout_p > 0.0) {
    if (!rng) throw Error(ErrorKind::InvalidArgument, "training-mode dropout needs an RNG");
    auto d = dropout(h, dropout_p, true, *rng);
    c.input = std::move(d.y);
    c.dropout_mask = std::move(d.mask);
  } else {
    c.input = h;
  }

  Mat agg(h.rows, out_dim);
  const double scale = 1.0 / static_cast<double>(heads);
  c.z.resize(heads);
  c.s_self.assign(heads, std::vector<double>(h.rows));
  c.s_nbr.assign(heads, std::vector<double>(h.rows));
  c.logits.assign(heads, std::vector<double>(csr.n_edges()));
  c.alpha.assign(heads, std::vector<double>(csr.n_edges()));
  for (std::size_t k = 0; k < heads; ++k) {
    if (layer.weight[k].cols != h.cols || layer.weight[k].rows != out_dim)
      throw Error(ErrorKind::Shape, "GAT layer: weight shape");
    kernels::matmul_nt(c.input, layer.weight[k], {}, c.z[k]);
    const Mat& z = c.z[k];
    const double* a = layer.attention[k].data.data();
    for (std::size_t v = 0; v < h.rows; ++v) {
      double ss = 0.0, sn = 0.0;
      for (std::size_t d = 0; d < out_dim; ++d) {
        ss += a[d] * z(v, d);
        sn += a[out_dim + d] * z(v, d);
      }
      c.s_self[k][v] = ss;
      c.s_nbr[k][v] = sn;
    }
    kernels::attention_aggregate(z, c.s_self[k], c.s_nbr[k], csr, slope, scale, c.logits[k], c.alpha[k], agg);
  }
  c.pre = std::move(agg);
  for (std::size_t v = 0; v < h.rows; ++v)
    for (std::size_t d = 0; d < out_dim; ++d) c.pre(v, d) += layer.bias(0, d);
  c.out = apply(act, c.pre, slope);
  check_finite(c.out, "GAT layer output");
  return c;
}

Mat gat_layer_bwd(const GatLayerCache& c, const kernels::Csr& csr, const GatLayer& layer, Activation act,
                  double slope, const Mat& dout, GatLayer& grad) {
  const std::size_t heads = layer.weight.size();
  const std::size_t n = c.input.rows;
  const std::size_t out_dim = layer.bias.cols;
  const Mat dpre = apply_grad(act, c.pre, c.out, dout, slope);
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t d = 0; d < out_dim; ++d) grad.bias(0, d) += dpre(v, d);

  const double scale = 1.0 / static_cast<double>(heads);
  Mat dinput(n, c.input.cols);
  Mat dz(n, out_dim);
  std::vector<double> dalpha(csr.n_edges());
  std::vector<double> ds_self(n), ds_nbr(n);
  for (std::size_t k = 0; k < heads; ++k) {
    const Mat& z = c.z[k];
    const auto& alpha = c.alpha[k];
    dz.fill(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double* g = dpre.data.data() + i * out_dim;
      for (std::size_t e = csr.offsets[i]; e < csr.offsets[i + 1]; ++e) {
        const std::size_t j = csr.src[e];
        const double* zj = z.data.data() + j * out_dim;
        double* dzj = dz.data.data() + j * out_dim;
        double acc = 0.0;
        for (std::size_t d = 0; d < out_dim; ++d) {
          acc += scale * g[d] * zj[d];
          dzj[d] += scale * alpha[e] * g[d];
        }
        dalpha[e] = acc;
      }
    }
    const std::vector<double> dact = segment_softmax_bwd(alpha, dalpha, csr.offsets);
    std::fill(ds_self.begin(), ds_self.end(), 0.0);
    std::fill(ds_nbr.begin(), ds_nbr.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t e = csr.offsets[i]; e < csr.offsets[i + 1]; ++e) {
        const double dl = dact[e] * leaky_relu_grad(c.logits[k][e], slope);
        ds_self[i] += dl;
        ds_nbr[csr.src[e]] += dl;
      }
    }
    const double* a = layer.attention[k].data.data();
    double* ga = grad.attention[k].data.data();
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t d = 0; d < out_dim; ++d) {
        dz(v, d) += a[d] * ds_self[v] + a[out_dim + d] * ds_nbr[v];
        ga[d] += ds_self[v] * z(v, d);
        ga[out_dim + d] += ds_nbr[v] * z(v, d);
      }
    }
    kernels::matmul_tn(dz, c.input, grad.weight[k], true);
    kernels::matmul_nn(dz, layer.weight[k], dinput, true);
  }
  return dropout_bwd(dinput, c.dropout_mask);
}

GatForward gat_forward(const GraphBatch& batch, const GatParams& params, bool training, Rng* rng) {
  const GatConfig& cfg = params.config;
  if (batch.features.cols != cfg.in_dim)
    throw Error(ErrorKind::ModelMismatch, "graph feature width " + std::to_string(batch.features.cols) +
                                              " does not match model input " + std::to_string(cfg.in_dim));
  if (params.layers.size() != cfg.n_layers) throw Error(ErrorKind::ModelMismatch, "layer count mismatch");
  GatForward f;
  const Mat* h = &batch.features;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const bool last = l + 1 == cfg.n_layers;
    f.layers.push_back(gat_layer_fwd(*h, batch.csr, params.layers[l],
                                     last ? cfg.output_activation : cfg.hidden_activation, cfg.leaky_slope,
                                     cfg.dropout_p, training, rng));
    h = &f.layers.back().out;
  }
  f.predictions = Mat(batch.ue_rows.size(), cfg.out_dim);
  for (std::size_t r = 0; r < batch.ue_rows.size(); ++r)
    for (std::size_t d = 0; d < cfg.out_dim; ++d) f.predictions(r, d) = (*h)(batch.ue_rows[r], d);
  return f;
}

GatParams gat_backward(const GraphBatch& batch, const GatParams& params, const GatForward& fwd, const Mat& dpred) {
  const GatConfig& cfg = params.config;
  if (!dpred.same_shape(fwd.predictions)) throw Error(ErrorKind::Shape, "gat_backward: gradient shape");
  GatParams grads = params.zeros_like();
  Mat dh(batch.features.rows, cfg.out_dim);
  for (std::size_t r = 0; r < batch.ue_rows.size(); ++r)
    for (std::size_t d = 0; d < cfg.out_dim; ++d) dh(batch.ue_rows[r], d) = dpred(r, d);
  for (std::size_t l = cfg.n_layers; l-- > 0;) {
    const bool last = l + 1 == cfg.n_layers;
    dh = gat_layer_bwd(fwd.layers[l], batch.csr, params.layers[l],
                       last ? cfg.output_activation : cfg.hidden_activation, cfg.leaky_slope, dh, grads.layers[l]);
  }
  return grads;
}

}  // namespace hetlb
