#pragma once

#include <random>
#include <vector>

#include "hetlb/allocator.hpp"
#include "hetlb/numcore.hpp"
#include "hetlb/scenario.hpp"

namespace hetlb::test {

// Bare allocation instance: only capacities, demands and serving sets are
// meaningful. AP 0 is tagged WiFi, the rest LiFi.
inline Scenario abstract_scenario(const Mat& cap, std::vector<double> req,
                                  std::vector<std::vector<std::size_t>> serving) {
  Scenario sc;
  for (std::size_t i = 0; i < cap.rows; ++i) {
    sc.ap_kinds.push_back(i == 0 ? ApKind::WiFi : ApKind::LiFi);
    sc.ap_pos.push_back({});
  }
  sc.ue_pos.assign(cap.cols, Vec3{});
  sc.req_bps = std::move(req);
  sc.capacity_bps = cap;
  sc.sinr = Mat(cap.rows, cap.cols, 1.0);
  sc.serving = std::move(serving);
  return sc;
}

// Random tiny instance: N_a in [1, max_ap], N_u in [1, max_ue], each UE served
// by min(N_f, N_a) distinct APs.
inline Scenario random_tiny(Rng& rng, std::size_t max_ap, std::size_t max_ue, std::size_t max_nf) {
  std::uniform_int_distribution<std::size_t> na_d(1, max_ap), nu_d(1, max_ue), nf_d(1, max_nf);
  std::uniform_real_distribution<double> cap_d(5e6, 300e6);
  std::exponential_distribution<double> req_d(1.0 / 100e6);
  const std::size_t na = na_d(rng), nu = nu_d(rng), nf = std::min(nf_d(rng), na);
  Mat cap(na, nu);
  std::vector<std::vector<std::size_t>> serving(nu);
  std::vector<double> req(nu);
  for (std::size_t j = 0; j < nu; ++j) {
    std::vector<std::size_t> aps(na);
    for (std::size_t i = 0; i < na; ++i) aps[i] = i;
    std::shuffle(aps.begin(), aps.end(), rng);
    aps.resize(nf);
    for (std::size_t i : aps) cap(i, j) = cap_d(rng);
    serving[j] = aps;
    req[j] = std::max(1e6, req_d(rng));
  }
  return abstract_scenario(cap, std::move(req), std::move(serving));
}

inline Mat random_mat(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Mat m(r, c);
  for (double& v : m.data) v = d(rng);
  return m;
}

}  // namespace hetlb::test
