#include "hetlb/dnn.hpp"

#include <cmath>

#include "hetlb/errors.hpp"

namespace hetlb {

void DnnConfig::validate() const {
  if (n_hidden_layers < 1 || hidden_width < 1) throw Error(ErrorKind::InvalidConfig, "DNN needs hidden layers");
  if (n_ue < 1 || n_subflows < 1) throw Error(ErrorKind::InvalidConfig, "DNN needs N_u, N_f >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw Error(ErrorKind::InvalidConfig, "dropout_p must be in [0, 1)");
}

std::vector<Mat*> DnnParams::tensors() {
  std::vector<Mat*> out;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    out.push_back(&weight[l]);
    out.push_back(&bias[l]);
  }
  return out;
}

std::vector<const Mat*> DnnParams::tensors() const {
  std::vector<const Mat*> out;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    out.push_back(&weight[l]);
    out.push_back(&bias[l]);
  }
  return out;
}

DnnParams DnnParams::zeros_like() const {
  DnnParams z = *this;
  for (Mat* t : z.tensors()) t->fill(0.0);
  return z;
}

DnnParams init_dnn(const DnnConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = make_rng(seed, 0x444e4e);
  DnnParams p;
  p.config = cfg;
  std::size_t in = cfg.in_dim();
  for (std::size_t l = 0; l <= cfg.n_hidden_layers; ++l) {
    const std::size_t out = l == cfg.n_hidden_layers ? cfg.out_dim() : cfg.hidden_width;
    Mat w(out, in);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& v : w.data) v = u(rng);
    p.weight.push_back(std::move(w));
    p.bias.emplace_back(1, out);
    in = out;
  }
  return p;
}

Mat dnn_inputs(const GraphBatch& batch, std::size_t n_ue) {
  const std::size_t nf = batch.n_subflows;
  const std::size_t samples = batch.n_samples();
  Mat x(samples, n_ue * (nf + 1));
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t begin = batch.sample_ue_offset[s], end = batch.sample_ue_offset[s + 1];
    if (end - begin != n_ue)
      throw Error(ErrorKind::ModelMismatch, "DNN is fixed to N_u = " + std::to_string(n_ue) + ", sample has " +
                                                std::to_string(end - begin));
    for (std::size_t u = 0; u < n_ue; ++u) {
      const auto row = batch.features.row(batch.ue_rows[begin + u]);
      for (std::size_t k = 0; k <= nf; ++k) x(s, u * (nf + 1) + k) = row[k];
    }
  }
  return x;
}

DnnForward dnn_forward(const Mat& x, const DnnParams& params, bool training, Rng* rng) {
  const DnnConfig& cfg = params.config;
  if (x.cols != cfg.in_dim())
    throw Error(ErrorKind::ModelMismatch, "DNN input length " + std::to_string(x.cols) + " != " +
                                              std::to_string(cfg.in_dim()));
  DnnForward f;
  const Mat* h = &x;
  const std::size_t layers = params.weight.size();
  for (std::size_t l = 0; l < layers; ++l) {
    const bool last = l + 1 == layers;
    if (training && cfg.dropout_p > 0.0) {
      if (!rng) throw Error(ErrorKind::InvalidArgument, "training-mode dropout needs an RNG");
      auto d = dropout(*h, cfg.dropout_p, true, *rng);
      f.inputs.push_back(std::move(d.y));
      f.masks.push_back(std::move(d.mask));
    } else {
      f.inputs.push_back(*h);
      f.masks.emplace_back();
    }
    f.pre.push_back(affine_fwd(f.inputs.back(), params.weight[l], params.bias[l]));
    f.out.push_back(apply(last ? Activation::Sigmoid : Activation::Elu, f.pre.back()));
    h = &f.out.back();
  }
  // Reshape samples x (N_u * N_f) into (samples * N_u) x N_f.
  f.predictions = Mat(h->rows * cfg.n_ue, cfg.n_subflows);
  f.predictions.data = h->data;
  return f;
}

DnnParams dnn_backward(const DnnParams& params, const DnnForward& fwd, const Mat& dpred) {
  if (!dpred.same_shape(fwd.predictions)) throw Error(ErrorKind::Shape, "dnn_backward: gradient shape");
  DnnParams grads = params.zeros_like();
  const std::size_t layers = params.weight.size();
  Mat dh(fwd.out.back().rows, fwd.out.back().cols);
  dh.data = dpred.data;
  for (std::size_t l = layers; l-- > 0;) {
    const bool last = l + 1 == layers;
    const Mat dpre = apply_grad(last ? Activation::Sigmoid : Activation::Elu, fwd.pre[l], fwd.out[l], dh);
    AffineGrads g = affine_bwd(dpre, fwd.inputs[l], params.weight[l]);
    grads.weight[l] = std::move(g.dw);
    grads.bias[l] = std::move(g.db);
    dh = dropout_bwd(g.dx, fwd.masks[l]);
  }
  return grads;
}

}  // namespace hetlb
