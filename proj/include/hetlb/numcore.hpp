#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hetlb/kernels.hpp"
#include "hetlb/mat.hpp"

namespace hetlb {

using Rng = std::mt19937_64;

// Derives an independent stream from (seed, tag) through seed_seq mixing.
Rng make_rng(std::uint64_t seed, std::uint64_t tag = 0);

// ---- affine ---------------------------------------------------------------

struct AffineGrads {
  Mat dx;
  Mat dw;
  Mat db;  // 1 x out
};

// Y = X W^T + b, with W: out x in and b: 1 x out (or empty for no bias).
Mat affine_fwd(const Mat& x, const Mat& w, const Mat& b);
AffineGrads affine_bwd(const Mat& dy, const Mat& x, const Mat& w);

// ---- elementwise ------------------------------------------------------------

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }
inline double leaky_relu_grad(double x, double slope) { return x > 0.0 ? 1.0 : slope; }
double elu(double x);
double elu_grad(double x);
double sigmoid(double x);
inline double sigmoid_grad_from_output(double y) { return y * (1.0 - y); }

enum class Activation { Elu, Sigmoid, LeakyRelu, Identity };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

Mat apply(Activation act, const Mat& pre, double slope = 0.2);
// dL/dpre given dL/dout, the pre-activation and the activation output.
Mat apply_grad(Activation act, const Mat& pre, const Mat& out, const Mat& dout, double slope = 0.2);

// ---- segment softmax --------------------------------------------------------

// offsets partition logits into segments [offsets[s], offsets[s+1]).
std::vector<double> segment_softmax(std::span<const double> logits, std::span<const std::size_t> offsets);
std::vector<double> segment_softmax_bwd(std::span<const double> probs, std::span<const double> dprobs,
                                        std::span<const std::size_t> offsets);

// ---- dropout ----------------------------------------------------------------

struct DropoutResult {
  Mat y;
  Mat mask;  // already scaled by 1/(1-p); empty when dropout was the identity
};

DropoutResult dropout(const Mat& x, double p, bool training, Rng& rng);
Mat dropout_bwd(const Mat& dy, const Mat& mask);

// ---- loss -------------------------------------------------------------------

double mse_loss(const Mat& pred, const Mat& target);
Mat mse_grad(const Mat& pred, const Mat& target);

// ---- Adam -------------------------------------------------------------------

struct AdamState {
  std::vector<Mat> first_moment;
  std::vector<Mat> second_moment;
  std::int64_t step_count = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
  double lr_decay = 0.95;

  // Called by the training loop at each epoch boundary.
  void decay() { lr *= lr_decay; }
};

AdamState make_adam(std::span<Mat* const> params, double lr, double lr_decay);
void adam_step(std::span<Mat* const> params, std::span<const Mat> grads, AdamState& state);

// ---- gradient check ---------------------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Central differences on every entry of every tensor in params. The loss
// closure must be deterministic and read the params in place.
// Relative error is |a - n| / max(|a|, |n|, abs_floor).
GradCheckReport grad_check(const std::function<double()>& loss, std::span<Mat* const> params,
                           std::span<const Mat> analytic, double h = 1e-5, double abs_floor = 1e-6);

}  // namespace hetlb
