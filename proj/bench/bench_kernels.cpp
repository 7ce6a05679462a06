// Serial reference vs OpenMP: forward-pass kernels and dataset labelling.
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "hetlb/kernels.hpp"
#include "hetlb/pipeline.hpp"
#include "hetlb/numcore.hpp"

using namespace hetlb;
using Clock = std::chrono::steady_clock;

namespace {

double median_seconds(const std::function<void()>& fn, int repeats) {
  fn();
  std::vector<double> t;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  std::nth_element(t.begin(), t.begin() + t.size() / 2, t.end());
  return t[t.size() / 2];
}

Mat random_mat(Rng& rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat m(r, c);
  for (double& v : m.data) v = u(rng);
  return m;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %10.3f ms   omp %10.3f ms   speedup %5.2fx\n", name, serial * 1e3, parallel * 1e3,
              serial / parallel);
}

}  // namespace

int main() {
  std::printf("omp threads: %d\n", omp_get_max_threads());
  Rng rng = make_rng(7, 0);

  for (std::size_t n : {1000u, 10000u}) {
    const Mat x = random_mat(rng, n, 64);
    const Mat w = random_mat(rng, 64, 64);
    Mat y(n, 64);
    char name[64];
    std::snprintf(name, sizeof name, "matmul_nt %zux64x64", n);
    report(name, median_seconds([&] { kernels::serial::matmul_nt(x, w, {}, y); }, 20),
           median_seconds([&] { kernels::omp::matmul_nt(x, w, {}, y); }, 20));
    std::snprintf(name, sizeof name, "matmul_tn %zux64x64", n);
    report(name, median_seconds([&] { kernels::serial::matmul_tn(x, x, y, false); }, 20),
           median_seconds([&] { kernels::omp::matmul_tn(x, x, y, false); }, 20));
  }

  {
    // Bipartite graph: 2000 UE nodes, each linked to 4 of 200 AP nodes, plus self-loops.
    const std::size_t n_ue = 2000, n_ap = 200, n = n_ue + n_ap;
    std::vector<std::vector<std::size_t>> in(n);
    std::uniform_int_distribution<std::size_t> pick(0, n_ap - 1);
    for (std::size_t u = 0; u < n_ue; ++u)
      for (int k = 0; k < 4; ++k) {
        const std::size_t a = n_ue + pick(rng);
        in[u].push_back(a);
        in[a].push_back(u);
      }
    kernels::Csr csr;
    csr.offsets.push_back(0);
    for (std::size_t i = 0; i < n; ++i) {
      in[i].push_back(i);
      csr.src.insert(csr.src.end(), in[i].begin(), in[i].end());
      csr.offsets.push_back(csr.src.size());
    }
    const Mat z = random_mat(rng, n, 64);
    const Mat s = random_mat(rng, 2, n);
    std::vector<double> logits(csr.n_edges()), alpha(csr.n_edges());
    Mat out(n, 64);
    report("attention_aggregate 2200n",
           median_seconds([&] { kernels::serial::attention_aggregate(z, s.row(0), s.row(1), csr, 0.2, 1.0, logits, alpha, out); }, 20),
           median_seconds([&] { kernels::omp::attention_aggregate(z, s.row(0), s.row(1), csr, 0.2, 1.0, logits, alpha, out); }, 20));
  }

  {
    GenConfig g;
    g.n_samples = 40;
    g.seed = 11;
    g.workers = 1;
    GenResult base = generate_records(g);
    auto relabel = [&](int workers) {
      std::vector<Record> rs = base.records;
      label_records(rs, LabelMethod::Optimizer, g.solver, workers);
    };
    report("label 40 samples (optimizer)", median_seconds([&] { relabel(1); }, 3),
           median_seconds([&] { relabel(0); }, 3));
  }
  return 0;
}
