#include "hetlb/mat.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "hetlb/errors.hpp"

namespace hetlb {

namespace {
std::atomic<bool> g_nan_check{false};
}

void Mat::fill(double v) { std::fill(data.begin(), data.end(), v); }

bool Mat::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool operator==(const Mat& a, const Mat& b) { return a.rows == b.rows && a.cols == b.cols && a.data == b.data; }

void set_nan_check(bool enabled) { g_nan_check = enabled; }
bool nan_check_enabled() { return g_nan_check; }

void check_finite(const Mat& m, const char* where) {
  if (g_nan_check && !m.all_finite()) throw Error(ErrorKind::Numeric, std::string("non-finite value in ") + where);
}

}  // namespace hetlb
