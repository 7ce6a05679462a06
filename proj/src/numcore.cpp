#include "hetlb/numcore.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hetlb/errors.hpp"

namespace hetlb {

Rng make_rng(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32)};
  return Rng(seq);
}

Mat affine_fwd(const Mat& x, const Mat& w, const Mat& b) {
  if (!b.empty() && (b.rows != 1 || b.cols != w.rows)) throw Error(ErrorKind::Shape, "affine: bias shape");
  Mat y;
  kernels::matmul_nt(x, w, b.empty() ? std::span<const double>{} : std::span<const double>(b.data), y);
  return y;
}

AffineGrads affine_bwd(const Mat& dy, const Mat& x, const Mat& w) {
  if (dy.rows != x.rows || dy.cols != w.rows) throw Error(ErrorKind::Shape, "affine_bwd: dy shape");
  AffineGrads g;
  kernels::matmul_nn(dy, w, g.dx, false);
  kernels::matmul_tn(dy, x, g.dw, false);
  g.db = Mat(1, dy.cols);
  for (std::size_t r = 0; r < dy.rows; ++r)
    for (std::size_t c = 0; c < dy.cols; ++c) g.db(0, c) += dy(r, c);
  return g;
}

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_grad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

const char* to_string(Activation a) {
  switch (a) {
    case Activation::Elu: return "elu";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::LeakyRelu: return "leaky_relu";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& s) {
  if (s == "elu") return Activation::Elu;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "leaky_relu") return Activation::LeakyRelu;
  if (s == "identity") return Activation::Identity;
  throw Error(ErrorKind::Schema, "unknown activation '" + s + "'");
}

Mat apply(Activation act, const Mat& pre, double slope) {
  Mat out(pre.rows, pre.cols);
  for (std::size_t k = 0; k < pre.size(); ++k) {
    const double x = pre.data[k];
    switch (act) {
      case Activation::Elu: out.data[k] = elu(x); break;
      case Activation::Sigmoid: out.data[k] = sigmoid(x); break;
      case Activation::LeakyRelu: out.data[k] = leaky_relu(x, slope); break;
      case Activation::Identity: out.data[k] = x; break;
    }
  }
  return out;
}

Mat apply_grad(Activation act, const Mat& pre, const Mat& out, const Mat& dout, double slope) {
  if (!pre.same_shape(dout) || !out.same_shape(dout)) throw Error(ErrorKind::Shape, "activation grad shape");
  Mat d(pre.rows, pre.cols);
  for (std::size_t k = 0; k < pre.size(); ++k) {
    double g = 1.0;
    switch (act) {
      case Activation::Elu: g = elu_grad(pre.data[k]); break;
      case Activation::Sigmoid: g = sigmoid_grad_from_output(out.data[k]); break;
      case Activation::LeakyRelu: g = leaky_relu_grad(pre.data[k], slope); break;
      case Activation::Identity: break;
    }
    d.data[k] = g * dout.data[k];
  }
  return d;
}

namespace {

void check_segments(std::size_t n, std::span<const std::size_t> offsets) {
  if (offsets.empty() || offsets.front() != 0 || offsets.back() != n)
    throw Error(ErrorKind::ContractViolation, "segment offsets must cover every element");
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s)
    if (offsets[s + 1] <= offsets[s]) throw Error(ErrorKind::ContractViolation, "empty softmax segment");
}

}  // namespace

std::vector<double> segment_softmax(std::span<const double> logits, std::span<const std::size_t> offsets) {
  check_segments(logits.size(), offsets);
  std::vector<double> out(logits.size());
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    const std::size_t b = offsets[s], e = offsets[s + 1];
    const double mx = *std::max_element(logits.begin() + b, logits.begin() + e);
    double denom = 0.0;
    for (std::size_t k = b; k < e; ++k) {
      out[k] = std::exp(logits[k] - mx);
      denom += out[k];
    }
    for (std::size_t k = b; k < e; ++k) out[k] /= denom;
  }
  return out;
}

std::vector<double> segment_softmax_bwd(std::span<const double> probs, std::span<const double> dprobs,
                                        std::span<const std::size_t> offsets) {
  if (probs.size() != dprobs.size()) throw Error(ErrorKind::Shape, "softmax_bwd: length mismatch");
  check_segments(probs.size(), offsets);
  std::vector<double> d(probs.size());
  for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
    const std::size_t b = offsets[s], e = offsets[s + 1];
    double dotp = 0.0;
    for (std::size_t k = b; k < e; ++k) dotp += probs[k] * dprobs[k];
    for (std::size_t k = b; k < e; ++k) d[k] = probs[k] * (dprobs[k] - dotp);
  }
  return d;
}

DropoutResult dropout(const Mat& x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidArgument, "dropout probability must be in [0, 1)");
  if (!training || p == 0.0) return {x, Mat()};
  DropoutResult r{Mat(x.rows, x.cols), Mat(x.rows, x.cols)};
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  for (std::size_t k = 0; k < x.size(); ++k) {
    r.mask.data[k] = keep(rng) ? scale : 0.0;
    r.y.data[k] = x.data[k] * r.mask.data[k];
  }
  return r;
}

Mat dropout_bwd(const Mat& dy, const Mat& mask) {
  if (mask.empty()) return dy;
  if (!mask.same_shape(dy)) throw Error(ErrorKind::Shape, "dropout_bwd: mask shape");
  Mat dx(dy.rows, dy.cols);
  for (std::size_t k = 0; k < dy.size(); ++k) dx.data[k] = dy.data[k] * mask.data[k];
  return dx;
}

double mse_loss(const Mat& pred, const Mat& target) {
  if (!pred.same_shape(target)) throw Error(ErrorKind::Shape, "mse: shape mismatch");
  if (pred.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const double d = pred.data[k] - target.data[k];
    acc += d * d;
  }
  return acc / static_cast<double>(pred.size());
}

Mat mse_grad(const Mat& pred, const Mat& target) {
  if (!pred.same_shape(target)) throw Error(ErrorKind::Shape, "mse: shape mismatch");
  Mat g(pred.rows, pred.cols);
  const double scale = 2.0 / static_cast<double>(std::max<std::size_t>(1, pred.size()));
  for (std::size_t k = 0; k < pred.size(); ++k) g.data[k] = scale * (pred.data[k] - target.data[k]);
  return g;
}

AdamState make_adam(std::span<Mat* const> params, double lr, double lr_decay) {
  AdamState s;
  s.lr = lr;
  s.lr_decay = lr_decay;
  for (const Mat* p : params) {
    s.first_moment.emplace_back(p->rows, p->cols);
    s.second_moment.emplace_back(p->rows, p->cols);
  }
  return s;
}

void adam_step(std::span<Mat* const> params, std::span<const Mat> grads, AdamState& s) {
  if (params.size() != grads.size() || params.size() != s.first_moment.size())
    throw Error(ErrorKind::Shape, "adam: parameter/gradient count mismatch");
  ++s.step_count;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
  for (std::size_t t = 0; t < params.size(); ++t) {
    Mat& p = *params[t];
    const Mat& g = grads[t];
    Mat& m = s.first_moment[t];
    Mat& v = s.second_moment[t];
    if (!p.same_shape(g) || !p.same_shape(m)) throw Error(ErrorKind::Shape, "adam: tensor shape mismatch");
    for (std::size_t k = 0; k < p.size(); ++k) {
      m.data[k] = s.beta1 * m.data[k] + (1.0 - s.beta1) * g.data[k];
      v.data[k] = s.beta2 * v.data[k] + (1.0 - s.beta2) * g.data[k] * g.data[k];
      const double mhat = m.data[k] / bc1;
      const double vhat = v.data[k] / bc2;
      p.data[k] -= s.lr * mhat / (std::sqrt(vhat) + s.eps_hat);
    }
  }
}

GradCheckReport grad_check(const std::function<double()>& loss, std::span<Mat* const> params,
                           std::span<const Mat> analytic, double h, double abs_floor) {
  if (params.size() != analytic.size()) throw Error(ErrorKind::Shape, "grad_check: tensor count mismatch");
  GradCheckReport rep;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Mat& p = *params[t];
    if (!p.same_shape(analytic[t])) throw Error(ErrorKind::Shape, "grad_check: gradient shape mismatch");
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double saved = p.data[k];
      p.data[k] = saved + h;
      const double up = loss();
      p.data[k] = saved - h;
      const double down = loss();
      p.data[k] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[t].data[k];
      const double abs_err = std::abs(a - numeric);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), abs_floor});
      rep.max_abs_error = std::max(rep.max_abs_error, abs_err);
      if (rel > rep.max_rel_error || rep.checked == 0) {
        rep.max_rel_error = std::max(rep.max_rel_error, rel);
        rep.worst_tensor = t;
        rep.worst_index = k;
      }
      ++rep.checked;
    }
  }
  return rep;
}

}  // namespace hetlb
