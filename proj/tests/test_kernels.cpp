#include <doctest.h>

#include <omp.h>

#include <array>
#include <numeric>

#include "hetlb/kernels.hpp"
#include "support.hpp"

using namespace hetlb;
using hetlb::test::random_mat;

namespace {

kernels::Csr random_csr(Rng& rng, std::size_t n, std::size_t max_deg) {
  std::uniform_int_distribution<std::size_t> deg(0, max_deg), node(0, n - 1);
  kernels::Csr c;
  c.offsets.push_back(0);
  for (std::size_t i = 0; i < n; ++i) {
    c.src.push_back(i);
    for (std::size_t d = deg(rng); d > 0; --d) c.src.push_back(node(rng));
    c.offsets.push_back(c.src.size());
  }
  return c;
}

struct ThreadGuard {
  int saved = omp_get_max_threads();
  explicit ThreadGuard(int n) { omp_set_num_threads(n); }
  ~ThreadGuard() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("OpenMP matmuls are bitwise equal to the serial reference") {
  ThreadGuard guard(4);
  Rng rng = make_rng(1);
  for (auto [n, k, m] : {std::array<std::size_t, 3>{1, 1, 1}, {7, 5, 3}, {300, 37, 64}, {1025, 32, 32}}) {
    const Mat x = random_mat(rng, n, k), w = random_mat(rng, m, k), bias = random_mat(rng, 1, m);
    Mat ys(n, m), yo(n, m);
    kernels::serial::matmul_nt(x, w, bias.data, ys);
    kernels::omp::matmul_nt(x, w, bias.data, yo);
    CHECK(ys == yo);

    const Mat a = random_mat(rng, n, m), b = random_mat(rng, n, k);
    Mat ts = random_mat(rng, m, k), to = ts;
    kernels::serial::matmul_tn(a, b, ts, true);
    kernels::omp::matmul_tn(a, b, to, true);
    CHECK(ts == to);

    const Mat c = random_mat(rng, k, m);
    Mat ns(n, m), no(n, m);
    kernels::serial::matmul_nn(x, c, ns, false);
    kernels::omp::matmul_nn(x, c, no, false);
    CHECK(ns == no);
  }
}

TEST_CASE("matmul_nt matches a naive triple loop") {
  Rng rng = make_rng(2);
  const Mat x = random_mat(rng, 4, 3), w = random_mat(rng, 2, 3);
  Mat y(4, 2);
  kernels::matmul_nt(x, w, {}, y);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (std::size_t t = 0; t < 3; ++t) s += x(i, t) * w(j, t);
      CHECK(y(i, j) == doctest::Approx(s).epsilon(1e-15));
    }
}

TEST_CASE("OpenMP attention is bitwise equal to the serial reference") {
  ThreadGuard guard(4);
  Rng rng = make_rng(3);
  for (std::size_t n : {1u, 9u, 2000u}) {
    const kernels::Csr csr = random_csr(rng, n, 6);
    const Mat z = random_mat(rng, n, 16);
    const Mat ss = random_mat(rng, 1, n), sn = random_mat(rng, 1, n);
    std::vector<double> ls(csr.n_edges()), lo(csr.n_edges()), as(csr.n_edges()), ao(csr.n_edges());
    Mat os = random_mat(rng, n, 16), oo = os;
    kernels::serial::attention_aggregate(z, ss.data, sn.data, csr, 0.2, 1.0 / 3, ls, as, os);
    kernels::omp::attention_aggregate(z, ss.data, sn.data, csr, 0.2, 1.0 / 3, lo, ao, oo);
    CHECK(ls == lo);
    CHECK(as == ao);
    CHECK(os == oo);
  }
}

TEST_CASE("empty in-neighbourhood is a contract error in both kernels") {
  ThreadGuard guard(2);
  kernels::Csr csr{{0, 1, 1}, {0}};
  const Mat z(2, 2, 1.0);
  std::vector<double> s(2), l(1), a(1);
  Mat out(2, 2);
  CHECK_THROWS(kernels::serial::attention_aggregate(z, s, s, csr, 0.2, 1.0, l, a, out));
  CHECK_THROWS(kernels::omp::attention_aggregate(z, s, s, csr, 0.2, 1.0, l, a, out));
}
