#include "hetlb/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <omp.h>

#include "hetlb/errors.hpp"

namespace hetlb::kernels {

namespace {

void check_nt(const Mat& x, const Mat& w, std::span<const double> b, Mat& y) {
  if (x.cols != w.cols) throw Error(ErrorKind::Shape, "matmul_nt: inner dimensions differ");
  if (!b.empty() && b.size() != w.rows) throw Error(ErrorKind::Shape, "matmul_nt: bias length");
  if (y.rows != x.rows || y.cols != w.rows) y = Mat(x.rows, w.rows);
}

void check_tn(const Mat& a, const Mat& b, Mat& y, bool accumulate) {
  if (a.rows != b.rows) throw Error(ErrorKind::Shape, "matmul_tn: row counts differ");
  if (y.rows != a.cols || y.cols != b.cols) {
    if (accumulate) throw Error(ErrorKind::Shape, "matmul_tn: accumulator shape");
    y = Mat(a.cols, b.cols);
  } else if (!accumulate) {
    y.fill(0.0);
  }
}

void check_nn(const Mat& a, const Mat& b, Mat& y, bool accumulate) {
  if (a.cols != b.rows) throw Error(ErrorKind::Shape, "matmul_nn: inner dimensions differ");
  if (y.rows != a.rows || y.cols != b.cols) {
    if (accumulate) throw Error(ErrorKind::Shape, "matmul_nn: accumulator shape");
    y = Mat(a.rows, b.cols);
  } else if (!accumulate) {
    y.fill(0.0);
  }
}

void check_attention(const Mat& z, std::span<const double> s_self, std::span<const double> s_nbr,
                     const Csr& csr, std::span<double> logits, std::span<double> alpha, Mat& out) {
  const std::size_t n = z.rows;
  if (csr.n_nodes() != n || s_self.size() != n || s_nbr.size() != n)
    throw Error(ErrorKind::Shape, "attention: node count mismatch");
  if (logits.size() != csr.n_edges() || alpha.size() != csr.n_edges())
    throw Error(ErrorKind::Shape, "attention: edge buffer length");
  if (!out.same_shape(z)) throw Error(ErrorKind::Shape, "attention: output shape");
}

inline void row_nt(const Mat& x, const Mat& w, std::span<const double> b, Mat& y, std::size_t r) {
  const double* xr = x.data.data() + r * x.cols;
  double* yr = y.data.data() + r * y.cols;
  for (std::size_t c = 0; c < w.rows; ++c) {
    const double* wr = w.data.data() + c * w.cols;
    double acc = b.empty() ? 0.0 : b[c];
    for (std::size_t k = 0; k < x.cols; ++k) acc += xr[k] * wr[k];
    yr[c] = acc;
  }
}

inline void row_tn(const Mat& a, const Mat& b, Mat& y, std::size_t p) {
  double* yr = y.data.data() + p * y.cols;
  for (std::size_t n = 0; n < a.rows; ++n) {
    const double av = a.data[n * a.cols + p];
    if (av == 0.0) continue;
    const double* br = b.data.data() + n * b.cols;
    for (std::size_t q = 0; q < b.cols; ++q) yr[q] += av * br[q];
  }
}

inline void row_nn(const Mat& a, const Mat& b, Mat& y, std::size_t r) {
  double* yr = y.data.data() + r * y.cols;
  const double* ar = a.data.data() + r * a.cols;
  for (std::size_t m = 0; m < a.cols; ++m) {
    const double av = ar[m];
    if (av == 0.0) continue;
    const double* br = b.data.data() + m * b.cols;
    for (std::size_t q = 0; q < b.cols; ++q) yr[q] += av * br[q];
  }
}

inline void node_attention(const Mat& z, std::span<const double> s_self, std::span<const double> s_nbr,
                           const Csr& csr, double slope, double scale, std::span<double> logits,
                           std::span<double> alpha, Mat& out, std::size_t i) {
  const std::size_t begin = csr.offsets[i];
  const std::size_t end = csr.offsets[i + 1];
  if (begin == end) throw Error(ErrorKind::ContractViolation, "node without incoming edges");
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t e = begin; e < end; ++e) {
    const double raw = s_self[i] + s_nbr[csr.src[e]];
    logits[e] = raw;
    const double act = raw > 0.0 ? raw : slope * raw;
    alpha[e] = act;
    mx = std::max(mx, act);
  }
  double denom = 0.0;
  for (std::size_t e = begin; e < end; ++e) {
    alpha[e] = std::exp(alpha[e] - mx);
    denom += alpha[e];
  }
  double* orow = out.data.data() + i * out.cols;
  for (std::size_t e = begin; e < end; ++e) {
    alpha[e] /= denom;
    const double w = scale * alpha[e];
    const double* zr = z.data.data() + csr.src[e] * z.cols;
    for (std::size_t c = 0; c < z.cols; ++c) orow[c] += w * zr[c];
  }
}

bool go_parallel(std::size_t work) { return omp_get_max_threads() > 1 && work >= kParallelThreshold; }

}  // namespace

namespace serial {

void matmul_nt(const Mat& x, const Mat& w, std::span<const double> b, Mat& y) {
  check_nt(x, w, b, y);
  for (std::size_t r = 0; r < x.rows; ++r) row_nt(x, w, b, y, r);
}

void matmul_tn(const Mat& a, const Mat& b, Mat& y, bool accumulate) {
  check_tn(a, b, y, accumulate);
  for (std::size_t p = 0; p < a.cols; ++p) row_tn(a, b, y, p);
}

void matmul_nn(const Mat& a, const Mat& b, Mat& y, bool accumulate) {
  check_nn(a, b, y, accumulate);
  for (std::size_t r = 0; r < a.rows; ++r) row_nn(a, b, y, r);
}

void attention_aggregate(const Mat& z, std::span<const double> s_self, std::span<const double> s_nbr,
                         const Csr& csr, double slope, double scale, std::span<double> logits,
                         std::span<double> alpha, Mat& out) {
  check_attention(z, s_self, s_nbr, csr, logits, alpha, out);
  for (std::size_t i = 0; i < z.rows; ++i) node_attention(z, s_self, s_nbr, csr, slope, scale, logits, alpha, out, i);
}

}  // namespace serial

namespace omp {

void matmul_nt(const Mat& x, const Mat& w, std::span<const double> b, Mat& y) {
  check_nt(x, w, b, y);
  const auto n = static_cast<std::ptrdiff_t>(x.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) row_nt(x, w, b, y, static_cast<std::size_t>(r));
}

void matmul_tn(const Mat& a, const Mat& b, Mat& y, bool accumulate) {
  check_tn(a, b, y, accumulate);
  const auto m = static_cast<std::ptrdiff_t>(a.cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < m; ++p) row_tn(a, b, y, static_cast<std::size_t>(p));
}

void matmul_nn(const Mat& a, const Mat& b, Mat& y, bool accumulate) {
  check_nn(a, b, y, accumulate);
  const auto n = static_cast<std::ptrdiff_t>(a.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) row_nn(a, b, y, static_cast<std::size_t>(r));
}

void attention_aggregate(const Mat& z, std::span<const double> s_self, std::span<const double> s_nbr,
                         const Csr& csr, double slope, double scale, std::span<double> logits,
                         std::span<double> alpha, Mat& out) {
  check_attention(z, s_self, s_nbr, csr, logits, alpha, out);
  for (std::size_t i = 0; i < z.rows; ++i)
    if (csr.offsets[i] == csr.offsets[i + 1])
      throw Error(ErrorKind::ContractViolation, "node without incoming edges");
  const auto n = static_cast<std::ptrdiff_t>(z.rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    node_attention(z, s_self, s_nbr, csr, slope, scale, logits, alpha, out, static_cast<std::size_t>(i));
}

}  // namespace omp

void matmul_nt(const Mat& x, const Mat& w, std::span<const double> b, Mat& y) {
  if (go_parallel(x.rows * x.cols * w.rows))
    omp::matmul_nt(x, w, b, y);
  else
    serial::matmul_nt(x, w, b, y);
}

void matmul_tn(const Mat& a, const Mat& b, Mat& y, bool accumulate) {
  if (go_parallel(a.rows * a.cols * b.cols))
    omp::matmul_tn(a, b, y, accumulate);
  else
    serial::matmul_tn(a, b, y, accumulate);
}

void matmul_nn(const Mat& a, const Mat& b, Mat& y, bool accumulate) {
  if (go_parallel(a.rows * a.cols * b.cols))
    omp::matmul_nn(a, b, y, accumulate);
  else
    serial::matmul_nn(a, b, y, accumulate);
}

void attention_aggregate(const Mat& z, std::span<const double> s_self, std::span<const double> s_nbr,
                         const Csr& csr, double slope, double scale, std::span<double> logits,
                         std::span<double> alpha, Mat& out) {
  if (go_parallel(csr.n_edges() * z.cols))
    omp::attention_aggregate(z, s_self, s_nbr, csr, slope, scale, logits, alpha, out);
  else
    serial::attention_aggregate(z, s_self, s_nbr, csr, slope, scale, logits, alpha, out);
}

}  // namespace hetlb::kernels
