#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hetlb/mat.hpp"

// Hot loops of the GAT/DNN forward pass. Each kernel has a serial reference
// and an OpenMP version; both compute every output element with the same
// sequence of floating-point operations, so results are bitwise identical.
namespace hetlb::kernels {

// Incoming-edge adjacency: the in-neighbours of node i are
// src[offsets[i] .. offsets[i+1]).
struct Csr {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> src;

  std::size_t n_nodes() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t n_edges() const { return src.size(); }
};

namespace serial {

// Y = X W^T (+ b per column if b non-empty). X: n x k, W: m x k, Y: n x m.
void matmul_nt(const Mat& x, const Mat& w, std::span<const double> b, Mat& y);
// Y = A^T B. A: n x m, B: n x k, Y: m x k. Accumulates into Y when accumulate.
void matmul_tn(const Mat& a, const Mat& b, Mat& y, bool accumulate);
// Y = A B. A: n x m, B: m x k, Y: n x k. Accumulates into Y when accumulate.
void matmul_nn(const Mat& a, const Mat& b, Mat& y, bool accumulate);

// One attention head: for every destination node i,
//   logit_ij = leaky(s_self[i] + s_nbr[j]),  alpha_i. = softmax over in-edges,
//   out_i   += scale * sum_j alpha_ij z_j.
// alpha is indexed by edge position in csr.src; logits gets the pre-activation.
void attention_aggregate(const Mat& z, std::span<const double> s_self, std::span<const double> s_nbr,
                         const Csr& csr, double slope, double scale, std::span<double> logits,
                         std::span<double> alpha, Mat& out);

}  // namespace serial

namespace omp {

void matmul_nt(const Mat& x, const Mat& w, std::span<const double> b, Mat& y);
void matmul_tn(const Mat& a, const Mat& b, Mat& y, bool accumulate);
void matmul_nn(const Mat& a, const Mat& b, Mat& y, bool accumulate);
void attention_aggregate(const Mat& z, std::span<const double> s_self, std::span<const double> s_nbr,
                         const Csr& csr, double slope, double scale, std::span<double> logits,
                         std::span<double> alpha, Mat& out);

}  // namespace omp

// Dispatch: OpenMP when more than one thread is available and the work is
// large enough to amortise the fork, else serial.
void matmul_nt(const Mat& x, const Mat& w, std::span<const double> b, Mat& y);
void matmul_tn(const Mat& a, const Mat& b, Mat& y, bool accumulate);
void matmul_nn(const Mat& a, const Mat& b, Mat& y, bool accumulate);
void attention_aggregate(const Mat& z, std::span<const double> s_self, std::span<const double> s_nbr,
                         const Csr& csr, double slope, double scale, std::span<double> logits,
                         std::span<double> alpha, Mat& out);

// Minimum multiply-adds before dispatch goes parallel.
inline constexpr std::size_t kParallelThreshold = 1u << 15;

}  // namespace hetlb::kernels
