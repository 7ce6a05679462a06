#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hetlb {

// Dense row-major matrix of doubles.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

  void fill(double v);
  bool all_finite() const;

  static Mat identity(std::size_t n);
};

bool operator==(const Mat& a, const Mat& b);

// Throws ErrorKind::Numeric if any entry is NaN/Inf. Only active when the
// NaN check mode is on (off by default).
void check_finite(const Mat& m, const char* where);
void set_nan_check(bool enabled);
bool nan_check_enabled();

}  // namespace hetlb
