#include <doctest.h>

#include <cmath>
#include <vector>

#include "hetlb/allocator.hpp"
#include "support.hpp"

using namespace hetlb;
using hetlb::test::abstract_scenario;
using hetlb::test::random_tiny;

namespace {

Scenario kkt_instance() {
  Mat cap(1, 2);
  cap(0, 0) = 100e6;
  cap(0, 1) = 100e6;
  return abstract_scenario(cap, {20e6, 1e9}, {{0}, {0}});
}

Scenario real_instance(std::uint64_t seed, std::size_t n_ue = 10, int scale = 1, std::size_t nf = 2) {
  return build_scenario(RoomConfig::scale(scale, n_ue, nf), {}, {}, seed);
}

}  // namespace

TEST_CASE("heuristic shares") {
  Mat cap(3, 3, 50e6);
  const Scenario sc = abstract_scenario(cap, {1e8, 1e8, 1e8}, {{0, 1}, {0, 1}, {0}});
  const AllocationMatrix a = heuristic_allocate(sc);
  CHECK(a.rho(1, 0) == 0.5);
  CHECK(a.rho(1, 1) == 0.5);
  CHECK(a.rho(1, 2) == 0.0);
  CHECK(a.rho(0, 2) == doctest::Approx(1.0 / 3));
  for (std::size_t j = 0; j < 3; ++j) CHECK(a.rho(2, j) == 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 3; ++j) s += a.rho(i, j);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(is_feasible(sc, a));
}

TEST_CASE("throughput") {
  Mat cap(1, 1, 100e6);
  Scenario one = abstract_scenario(cap, {50e6}, {{0}});
  AllocationMatrix a = empty_allocation(one);
  a.rho(0, 0) = 1.0;
  CHECK(throughput(one, a).total_bps == 50e6);

  Mat cap2(2, 1);
  cap2(0, 0) = 100e6;
  cap2(1, 0) = 200e6;
  Scenario two = abstract_scenario(cap2, {1e9}, {{0, 1}});
  AllocationMatrix b = empty_allocation(two);
  b.rho(0, 0) = 0.5;
  b.rho(1, 0) = 0.5;
  CHECK(throughput(two, b).total_bps == doctest::Approx(150e6).epsilon(1e-15));
  CHECK(throughput(two, empty_allocation(two)).total_bps == 0.0);

  b.rho(0, 0) = 1.5;
  try {
    throughput(two, b);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ContractViolation);
  }
}

TEST_CASE("objective and floor") {
  Mat cap(2, 2);
  cap(0, 0) = 100e6;
  cap(1, 1) = 100e6;
  const Scenario sc = abstract_scenario(cap, {100e6, 100e6}, {{0}, {1}});
  AllocationMatrix a = empty_allocation(sc);
  a.rho(0, 0) = 1.0;
  a.rho(1, 1) = 1.0;
  const Objective o = objective(sc, a);
  CHECK(o.value == doctest::Approx(36.841361487904731).epsilon(1e-14));
  CHECK(o.floored == 0);
  a.rho(1, 1) = 0.0;
  const Objective f = objective(sc, a);
  CHECK(std::isfinite(f.value));
  CHECK(f.floored == 1);
  CHECK(f.value == doctest::Approx(std::log(100e6) + std::log(1e-9 * 100e6)));
}

TEST_CASE("optimizer: analytic KKT instance") {
  const Scenario sc = kkt_instance();
  const AllocationMatrix a = optimize_allocate(sc);
  const double opt = 35.00878002415642;
  CHECK(std::abs(objective(sc, a).value - opt) / opt < 1e-6);
  CHECK(throughput(sc, a).total_bps == doctest::Approx(100e6).epsilon(1e-6));
  CHECK(feasibility_violation(sc, a) <= 1e-9);
  CHECK(throughput(sc, heuristic_allocate(sc)).total_bps == doctest::Approx(70e6).epsilon(1e-15));
}

TEST_CASE("optimizer: symmetric and single-UE instances") {
  Mat cap(1, 2, 100e6);
  const Scenario sym = abstract_scenario(cap, {1e9, 1e9}, {{0}, {0}});
  const AllocationMatrix a = optimize_allocate(sym);
  CHECK(a.rho(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(a.rho(0, 1) == doctest::Approx(0.5).epsilon(1e-6));

  Mat c1(1, 1, 80e6);
  const Scenario single = abstract_scenario(c1, {200e6}, {{0}});
  const AllocationMatrix s = optimize_allocate(single);
  CHECK(objective(single, s).value == doctest::Approx(std::log(80e6)).epsilon(1e-9));
}

TEST_CASE("grid oracle on the KKT instance") {
  const Scenario sc = kkt_instance();
  const AllocationMatrix g = grid_oracle(sc);
  const double opt = 35.00878002415642;
  CHECK(std::abs(objective(sc, g).value - opt) / opt < 1e-3);

  Mat c1(1, 1, 80e6);
  const Scenario single = abstract_scenario(c1, {200e6}, {{0}});
  CHECK(grid_oracle(single).rho(0, 0) == 1.0);
}

TEST_CASE("oracle <= optimizer on random tiny instances") {
  Rng rng = make_rng(11);
  SolverConfig cfg;
  for (int k = 0; k < 50; ++k) {
    const Scenario sc = random_tiny(rng, 2, 3, 2);
    const AllocationMatrix opt = optimize_allocate(sc, cfg);
    const AllocationMatrix orc = grid_oracle(sc, cfg);
    const double vo = objective(sc, opt).value, vg = objective(sc, orc).value;
    CHECK(vo >= vg - 1e-3 * std::abs(vg));
    CHECK(feasibility_violation(sc, opt) <= 1e-9);
    CHECK(feasibility_violation(sc, orc) <= 1e-9);
  }
}

TEST_CASE("heuristic <= optimizer on generated scenarios") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Scenario sc = real_instance(seed, 8);
    const double vh = objective(sc, heuristic_allocate(sc)).value;
    const AllocationMatrix opt = optimize_allocate(sc);
    CHECK(objective(sc, opt).value >= vh - 1e-9);
    CHECK(feasibility_violation(sc, opt) <= 1e-9);
  }
}

TEST_CASE("objective is concave along segments") {
  Rng rng = make_rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    const Scenario sc = real_instance(100 + k, 6);
    auto random_feasible = [&] {
      Mat raw(sc.n_ue(), sc.n_subflows());
      for (double& v : raw.data) v = u(rng);
      return project_feasible(raw, sc);
    };
    const AllocationMatrix a = random_feasible(), b = random_feasible();
    AllocationMatrix mid = a;
    for (std::size_t i = 0; i < mid.rho.size(); ++i) mid.rho.data[i] = 0.5 * (a.rho.data[i] + b.rho.data[i]);
    const double fm = objective(sc, mid).value;
    CHECK(fm >= 0.5 * (objective(sc, a).value + objective(sc, b).value) - 1e-12);
  }
}

TEST_CASE("capacity scaling shifts the optimum by N_u ln(alpha)") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Scenario sc = real_instance(seed, 6);
    for (double& r : sc.req_bps) r = 1e15;
    const double base = objective(sc, optimize_allocate(sc)).value;
    Scenario scaled = sc;
    const double alpha = 3.0;
    for (double& c : scaled.capacity_bps.data) c *= alpha;
    const double shifted = objective(scaled, optimize_allocate(scaled)).value;
    CHECK(shifted - base == doctest::Approx(6.0 * std::log(alpha)).epsilon(1e-6));
  }
}

TEST_CASE("project_feasible") {
  Mat cap(2, 2, 50e6);
  const Scenario sc = abstract_scenario(cap, {1e8, 1e8}, {{0, 1}, {0, 1}});
  Mat raw(2, 2);
  raw(0, 0) = 0.3;
  raw(1, 0) = 0.4;  // AP 0 row: (0.3, 0.4)
  raw(0, 1) = 0.7;
  raw(1, 1) = 0.8;  // AP 1 row: (0.7, 0.8)
  const AllocationMatrix p = project_feasible(raw, sc);
  CHECK(p.rho(0, 0) == 0.3);
  CHECK(p.rho(0, 1) == 0.4);
  CHECK(p.rho(1, 0) == doctest::Approx(0.7 / 1.5).epsilon(1e-15));
  CHECK(p.rho(1, 1) == doctest::Approx(0.8 / 1.5).epsilon(1e-15));
  CHECK(is_feasible(sc, p));

  raw(0, 0) = -0.1;
  raw(1, 1) = 7.0;
  const AllocationMatrix c = project_feasible(raw, sc);
  CHECK(c.rho(0, 0) == 0.0);
  CHECK(is_feasible(sc, c));

  raw(0, 1) = std::nan("");
  try {
    project_feasible(raw, sc);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidPrediction);
  }
}

TEST_CASE("project_feasible is idempotent") {
  Rng rng = make_rng(13);
  std::uniform_real_distribution<double> u(-0.5, 1.5);
  for (int k = 0; k < 50; ++k) {
    const Scenario sc = real_instance(200 + k, 12);
    Mat raw(sc.n_ue(), sc.n_subflows());
    for (double& v : raw.data) v = u(rng);
    const AllocationMatrix once = project_feasible(raw, sc);
    const AllocationMatrix twice = project_feasible(labels_from_allocation(sc, once), sc);
    CHECK(once.rho == twice.rho);
    CHECK(feasibility_violation(sc, once) <= 1e-9);
  }
}

TEST_CASE("labels round trip through serving order") {
  const Scenario sc = real_instance(5, 10);
  const AllocationMatrix a = optimize_allocate(sc);
  const Mat l = labels_from_allocation(sc, a);
  CHECK(l.rows == 10);
  CHECK(l.cols == 2);
  CHECK(allocation_from_labels(sc, l).rho == a.rho);
}

TEST_CASE("size guard and convergence error") {
  const Scenario sc = real_instance(3, 20, 2, 3);
  try {
    grid_oracle(sc);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SizeGuard);
  }
  SolverConfig tight;
  tight.max_iters = 2;
  try {
    optimize_allocate(sc, tight);
    FAIL("expected throw");
  } catch (const ConvergenceError& e) {
    CHECK(e.kind() == ErrorKind::Convergence);
    CHECK(e.best_iterate().rho.rows == sc.n_ap());
    CHECK(feasibility_violation(sc, e.best_iterate()) <= 1e-9);
  }
  SolverConfig bad;
  bad.grid_steps = 1;
  CHECK_THROWS_AS(bad.validate(), Error);
}
