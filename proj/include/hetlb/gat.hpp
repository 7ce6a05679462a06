#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hetlb/kernels.hpp"
#include "hetlb/numcore.hpp"
#include "hetlb/scenario.hpp"

namespace hetlb {

struct GatConfig {
  std::size_t n_layers = 2;
  std::size_t hidden_dim = 32;
  std::size_t n_heads = 3;
  std::size_t in_dim = 4;   // N_f + 1
  std::size_t out_dim = 3;  // N_f
  double leaky_slope = 0.2;
  double dropout_p = 0.5;
  Activation hidden_activation = Activation::Elu;
  Activation output_activation = Activation::Sigmoid;

  void validate() const;
  std::size_t layer_in(std::size_t l) const { return l == 0 ? in_dim : hidden_dim; }
  std::size_t layer_out(std::size_t l) const { return l + 1 == n_layers ? out_dim : hidden_dim; }

  // 3 heads up to 20 UEs, 8 beyond.
  static std::size_t default_heads(std::size_t n_ue) { return n_ue <= 20 ? 3 : 8; }
  static GatConfig for_subflows(std::size_t n_subflows, std::size_t n_heads = 3);
};

struct GatLayer {
  std::vector<Mat> weight;     // per head: out x in
  std::vector<Mat> attention;  // per head: 1 x 2*out, [destination half | neighbour half]
  Mat bias;                    // 1 x out, added after head averaging
};

struct GatParams {
  GatConfig config;
  std::vector<GatLayer> layers;

  std::vector<Mat*> tensors();
  std::vector<const Mat*> tensors() const;
  GatParams zeros_like() const;
};

// Glorot-uniform weights and attention vectors, zero biases.
GatParams init_gat(const GatConfig& cfg, std::uint64_t seed);

// Disjoint union of one or more sample graphs: node blocks are concatenated
// and edges offset so attention never crosses samples.
struct GraphBatch {
  Mat features;
  kernels::Csr csr;
  std::vector<std::size_t> ue_rows;  // node row of every UE, sample-major
  Mat labels;                        // ue_rows.size() x N_f, empty if unlabelled
  std::vector<std::size_t> sample_ue_offset;  // into ue_rows; size n_samples + 1
  std::size_t n_subflows = 0;

  std::size_t n_samples() const { return sample_ue_offset.empty() ? 0 : sample_ue_offset.size() - 1; }
};

GraphBatch make_batch(std::span<const SampleGraph* const> graphs);
GraphBatch make_batch(const SampleGraph& g);

struct GatLayerCache {
  Mat input;  // after dropout
  Mat dropout_mask;
  std::vector<Mat> z;
  std::vector<std::vector<double>> s_self, s_nbr, logits, alpha;
  Mat pre;
  Mat out;
};

struct GatForward {
  std::vector<GatLayerCache> layers;
  Mat predictions;  // UE rows of the last layer, ue_rows order
};

GatLayerCache gat_layer_fwd(const Mat& h, const kernels::Csr& csr, const GatLayer& layer, Activation act,
                            double slope, double dropout_p, bool training, Rng* rng);
// Returns dL/dh and accumulates parameter gradients into grad.
Mat gat_layer_bwd(const GatLayerCache& cache, const kernels::Csr& csr, const GatLayer& layer, Activation act,
                  double slope, const Mat& dout, GatLayer& grad);

GatForward gat_forward(const GraphBatch& batch, const GatParams& params, bool training, Rng* rng = nullptr);
GatParams gat_backward(const GraphBatch& batch, const GatParams& params, const GatForward& fwd, const Mat& dpred);

}  // namespace hetlb
