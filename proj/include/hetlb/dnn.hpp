#pragma once

#include <cstdint>
#include <vector>

#include "hetlb/gat.hpp"
#include "hetlb/numcore.hpp"

namespace hetlb {

// Network-centric fully connected baseline: the whole scene in, every UE's
// shares out. N_u is baked into the input/output widths.
struct DnnConfig {
  std::size_t n_hidden_layers = 4;
  std::size_t hidden_width = 128;
  std::size_t n_ue = 20;
  std::size_t n_subflows = 3;
  double dropout_p = 0.5;

  std::size_t in_dim() const { return n_ue * (n_subflows + 1); }
  std::size_t out_dim() const { return n_ue * n_subflows; }
  void validate() const;
};

struct DnnParams {
  DnnConfig config;
  std::vector<Mat> weight;  // per layer: out x in
  std::vector<Mat> bias;    // per layer: 1 x out

  std::vector<Mat*> tensors();
  std::vector<const Mat*> tensors() const;
  DnnParams zeros_like() const;
};

DnnParams init_dnn(const DnnConfig& cfg, std::uint64_t seed);

// One row per sample: UE feature rows flattened UE-major.
Mat dnn_inputs(const GraphBatch& batch, std::size_t n_ue);

struct DnnForward {
  std::vector<Mat> inputs;  // per layer, after dropout
  std::vector<Mat> masks;
  std::vector<Mat> pre;
  std::vector<Mat> out;
  Mat predictions;  // (samples * N_u) x N_f, same row order as GraphBatch::ue_rows
};

DnnForward dnn_forward(const Mat& x, const DnnParams& params, bool training, Rng* rng = nullptr);
DnnParams dnn_backward(const DnnParams& params, const DnnForward& fwd, const Mat& dpred);

}  // namespace hetlb
