// Acceptance run: one PASS/FAIL line per criterion. Exit status is the number
// of failed criteria. `--long` runs only the optional Scale II, 5000-sample check.
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "hetlb/allocator.hpp"
#include "hetlb/gat.hpp"
#include "hetlb/metrics.hpp"
#include "hetlb/pipeline.hpp"
#include "support.hpp"

using namespace hetlb;

namespace {

// Tolerances and thresholds.
constexpr double kOracleRelTol = 1e-3;
constexpr double kConstraintTol = 1e-9;
constexpr double kSolverBudgetS = 60.0;
constexpr double kKktRelTol = 1e-6;
constexpr double kGradRelTol = 1e-4;
constexpr double kGradBudgetS = 60.0;
constexpr double kEquivarianceTol = 1e-9;
constexpr double kConvergenceRatio = 0.5;
constexpr double kConvergenceBudgetS = 15 * 60.0;
constexpr double kSumRateFraction = 0.8;
constexpr double kInductiveRelTol = 0.10;
constexpr double kGatGrowthMax = 3.0;
constexpr double kOptimizerGrowthMin = 10.0;
constexpr double kGatLatencyMaxS = 10e-3;
constexpr double kLongGapMax = 0.115;

constexpr std::size_t kTrainSamples = 1000;
constexpr std::size_t kHeldOutSamples = 500;
constexpr std::uint64_t kTrainSeed = 1'000'000;
constexpr std::uint64_t kHeldOutSeed = 2'000'000;

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<Record> scale1(std::size_t n, std::uint64_t seed, std::size_t n_ue, std::size_t n_f = 2) {
  GenConfig g;
  g.room = RoomConfig::scale(1, n_ue, n_f);
  g.n_samples = n;
  g.seed = seed;
  return generate_records(g).records;
}

// Default training budget; early stopping off so every run sees the same
// number of epochs.
TrainConfig desk_training() {
  TrainConfig t;
  t.patience = 0;
  return t;
}

// Artifacts shared by the learning criteria, built on first use.
struct Lab {
  std::vector<Record> train10, held10;
  std::optional<TrainResult> gat10, dnn10;
  std::optional<EvalReport> report;
  double gat10_train_s = 0.0;

  const std::vector<Record>& training() {
    if (train10.empty()) train10 = scale1(kTrainSamples, kTrainSeed, 10);
    return train10;
  }
  const std::vector<Record>& held_out() {
    if (held10.empty()) held10 = scale1(kHeldOutSamples, kHeldOutSeed, 10);
    return held10;
  }
  const TrainResult& gat() {
    if (!gat10) {
      const auto t0 = Clock::now();
      gat10 = train(ModelKind::Gat, desk_training(), training());
      gat10_train_s = std::chrono::duration<double>(Clock::now() - t0).count();
    }
    return *gat10;
  }
  const TrainResult& dnn() {
    if (!dnn10) dnn10 = train(ModelKind::Dnn, desk_training(), training());
    return *dnn10;
  }
  const EvalReport& eval() {
    if (!report) {
      const std::vector<Method> methods{Method::heuristic(), Method::optimizer(), Method::learned(gat().model),
                                        Method::learned(dnn().model)};
      report = evaluate(methods, held_out());
    }
    return *report;
  }
};

Outcome solver_vs_oracle() {
  const auto t0 = Clock::now();
  Rng rng = make_rng(2024, 1);
  SolverConfig cfg;
  cfg.grid_steps = 200;
  double worst_rel = -1e300, worst_violation = 0.0;
  std::size_t bad = 0;
  for (int k = 0; k < 200; ++k) {
    const Scenario sc = test::random_tiny(rng, 2, 3, 2);
    const AllocationMatrix opt = optimize_allocate(sc, cfg);
    const AllocationMatrix orc = grid_oracle(sc, cfg);
    const double vo = objective(sc, opt, cfg).value, vg = objective(sc, orc, cfg).value;
    const double rel = (vg - vo) / std::abs(vg);
    worst_rel = std::max(worst_rel, rel);
    worst_violation = std::max(worst_violation, feasibility_violation(sc, opt));
    if (rel > kOracleRelTol) ++bad;
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return {bad == 0 && worst_violation <= kConstraintTol && secs < kSolverBudgetS,
          format("200 instances, oracle excess %.2e rel (max %.0e), violation %.1e, %.1f s", worst_rel, kOracleRelTol,
                 worst_violation, secs)};
}

Outcome analytic_kkt() {
  Mat cap(1, 2, 100e6);
  const Scenario sc = test::abstract_scenario(cap, {20e6, 1e9}, {{0}, {0}});
  const AllocationMatrix a = optimize_allocate(sc);
  const double want = std::log(20e6) + std::log(80e6);
  const double got = objective(sc, a).value;
  const double rel = std::abs(got - want) / want;
  const double t_opt = throughput(sc, a).total_bps;
  const double t_heu = throughput(sc, heuristic_allocate(sc)).total_bps;
  const bool pass = rel <= kKktRelTol && std::abs(t_heu - 70e6) <= 1e-6 && std::abs(t_opt - 100e6) / 100e6 <= kKktRelTol;
  return {pass, format("objective rel err %.1e, heuristic %.6f Mbps, optimizer %.6f Mbps", rel, t_heu / 1e6,
                       t_opt / 1e6)};
}

SampleGraph five_node_graph(std::uint64_t seed) {
  RoomConfig room;
  room.length_m = 5.0;
  room.width_m = 2.5;
  room.grid_rows = 1;
  room.grid_cols = 2;
  room.n_ue = 2;
  room.n_subflows = 2;
  const Scenario sc = build_scenario(room, {}, {}, seed);
  SampleGraph g = build_graph(sc, nullptr, NormMeta{-30.0, 80.0, 0.0, 4e8});
  Rng rng = make_rng(seed, 7);
  g.node_features = test::random_mat(rng, g.n_nodes(), 3);
  g.ue_labels = test::random_mat(rng, g.n_ue, 2, 0.0, 1.0);
  return g;
}

Outcome gradient_integrity() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const GraphBatch b = make_batch(five_node_graph(seed));
    GatConfig cfg = GatConfig::for_subflows(2, 3);
    cfg.dropout_p = 0.0;
    GatParams p = init_gat(cfg, 100 + seed);
    Rng brng = make_rng(seed, 8);
    for (GatLayer& l : p.layers) l.bias = test::random_mat(brng, 1, l.bias.cols, -0.1, 0.1);
    const GatForward f = gat_forward(b, p, false);
    const GatParams grad = gat_backward(b, p, f, mse_grad(f.predictions, b.labels));
    std::vector<Mat> analytic;
    for (const Mat* m : grad.tensors()) analytic.push_back(*m);
    auto params = p.tensors();
    const GradCheckReport rep =
        grad_check([&] { return mse_loss(gat_forward(b, p, false).predictions, b.labels); }, params, analytic);
    worst = std::max(worst, rep.max_rel_error);
    checked += rep.checked;
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return {worst < kGradRelTol && secs < kGradBudgetS,
          format("L=2, K=3, F'=32, 10 graphs, %zu entries, max rel err %.2e, %.1f s", checked, worst, secs)};
}

Outcome equivariance() {
  Rng rng = make_rng(77, 0);
  std::uniform_int_distribution<std::size_t> nu_d(2, 30);
  double worst = 0.0;
  for (std::uint64_t g = 0; g < 50; ++g) {
    const std::size_t nu = nu_d(rng);
    const std::size_t nf = 2 + g % 3;
    const GatParams p = init_gat(GatConfig::for_subflows(nf, g % 2 ? 8 : 3), 500 + g);
    const Scenario sc = build_scenario(RoomConfig::scale(1 + static_cast<int>(g % 3), nu, nf), {}, {}, 9000 + g);
    std::vector<std::size_t> perm(nu);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Scenario q = sc;
    for (std::size_t j = 0; j < nu; ++j) {
      q.req_bps[j] = sc.req_bps[perm[j]];
      q.serving[j] = sc.serving[perm[j]];
      q.ue_pos[j] = sc.ue_pos[perm[j]];
      for (std::size_t i = 0; i < sc.n_ap(); ++i) {
        q.sinr(i, j) = sc.sinr(i, perm[j]);
        q.capacity_bps(i, j) = sc.capacity_bps(i, perm[j]);
      }
    }
    const NormMeta norm{-30.0, 80.0, 0.0, 4e8};
    const Mat a = gat_forward(make_batch(build_graph(sc, nullptr, norm)), p, false).predictions;
    const Mat b = gat_forward(make_batch(build_graph(q, nullptr, norm)), p, false).predictions;
    for (std::size_t j = 0; j < nu; ++j)
      for (std::size_t k = 0; k < nf; ++k) worst = std::max(worst, std::abs(b(j, k) - a(perm[j], k)));
  }
  return {worst < kEquivarianceTol, format("50 graphs, max abs deviation %.1e", worst)};
}

Outcome convergence(Lab& lab) {
  const TrainResult& r = lab.gat();
  bool finite = true;
  for (const HistoryRow& h : r.history) finite = finite && std::isfinite(h.train_mse) && std::isfinite(h.val_mse);
  if (r.history.size() <= 20) return {false, "history shorter than 20 epochs"};
  const double v0 = r.history[0].val_mse, v20 = r.history[20].val_mse;
  return {finite && v20 <= kConvergenceRatio * v0 && lab.gat10_train_s < kConvergenceBudgetS,
          format("val MSE epoch 0 %.4f, epoch 20 %.4f (ratio %.3f, need <= %.2f), best %.4f @%zu, %.0f s", v0, v20,
                 v20 / v0, kConvergenceRatio, r.history[r.best_epoch].val_mse, r.best_epoch, lab.gat10_train_s)};
}

Outcome sum_rate_gap(Lab& lab) {
  const EvalReport& rep = lab.eval();
  const double g = rep.of("gat").sum_rate_bps.mean, o = rep.of("optimizer").sum_rate_bps.mean;
  return {g >= kSumRateFraction * o,
          format("GAT %.1f Mbps vs optimizer %.1f Mbps = %.1f%% (need >= %.0f%%)", g / 1e6, o / 1e6, 100 * g / o,
                 100 * kSumRateFraction)};
}

Outcome model_ordering(Lab& lab) {
  const EvalReport& rep = lab.eval();
  const double g = rep.of("gat").sum_rate_bps.mean, d = rep.of("dnn").sum_rate_bps.mean;
  return {g >= d, format("GAT %.1f Mbps, DNN %.1f Mbps", g / 1e6, d / 1e6)};
}

Outcome fairness_ordering(Lab& lab) {
  const EvalReport& rep = lab.eval();
  const double h = rep.of("heuristic").jain.mean, g = rep.of("gat").jain.mean, d = rep.of("dnn").jain.mean;
  return {h >= g && h >= d, format("Jain heuristic %.4f, GAT %.4f, DNN %.4f", h, g, d)};
}

Outcome inductive(Lab& lab) {
  const std::vector<Record> train20 = scale1(kTrainSamples, kTrainSeed + 20'000, 20);
  const std::vector<Record> train30 = scale1(kTrainSamples, kTrainSeed + 30'000, 30);
  const TrainResult m20 = train(ModelKind::Gat, desk_training(), train20);
  const TrainResult m30 = train(ModelKind::Gat, desk_training(), train30);
  const std::vector<Record> held30 = scale1(kHeldOutSamples, kHeldOutSeed + 30'000, 30);

  auto mean_rate = [](const Model& m, const std::vector<Record>& data) {
    const std::vector<Method> methods{Method::learned(m)};
    return evaluate(methods, data).summary[0].sum_rate_bps.mean;
  };
  const double x10 = mean_rate(m20.model, lab.held_out()), own10 = mean_rate(lab.gat().model, lab.held_out());
  const double x30 = mean_rate(m20.model, held30), own30 = mean_rate(m30.model, held30);
  const double d10 = std::abs(x10 - own10) / own10, d30 = std::abs(x30 - own30) / own30;
  return {d10 <= kInductiveRelTol && d30 <= kInductiveRelTol,
          format("N_u=10: %.1f vs %.1f Mbps (%.1f%%); N_u=30: %.1f vs %.1f Mbps (%.1f%%); limit %.0f%%", x10 / 1e6,
                 own10 / 1e6, 100 * d10, x30 / 1e6, own30 / 1e6, 100 * d30, 100 * kInductiveRelTol)};
}

Outcome latency_trend(Lab& lab) {
  std::vector<Record> data = scale1(20, 3'000'000, 10);
  const std::vector<Record> big = scale1(20, 3'100'000, 50);
  data.insert(data.end(), big.begin(), big.end());
  const std::vector<Method> methods{Method::learned(lab.gat().model), Method::optimizer()};
  BenchOptions opt;
  const std::vector<BenchRow> rows = bench_inference(methods, data, opt);
  auto median = [&](const std::string& m, std::size_t nu) {
    for (const BenchRow& r : rows)
      if (r.method == m && r.n_u == nu) return r.median_s;
    return std::nan("");
  };
  const double g10 = median("gat", 10), g50 = median("gat", 50);
  const double o10 = median("optimizer", 10), o50 = median("optimizer", 50);
  const double gr = g50 / g10, orr = o50 / o10;
  return {gr < kGatGrowthMax && orr > kOptimizerGrowthMin && g50 < kGatLatencyMaxS,
          format("GAT %.3f -> %.3f ms (x%.2f, need < %.0f); optimizer %.3f -> %.3f ms (x%.1f, need > %.0f)", g10 * 1e3,
                 g50 * 1e3, gr, kGatGrowthMax, o10 * 1e3, o50 * 1e3, orr, kOptimizerGrowthMin)};
}

Outcome feasibility(Lab& lab) {
  std::size_t total = 0, ok = 0;
  double worst = 0.0;
  for (const Model* m : {&lab.gat().model, &lab.dnn().model}) {
    for (const Record& r : lab.held_out()) {
      const AllocationMatrix a = m->allocate(r.scenario);
      const double v = feasibility_violation(r.scenario, a);
      worst = std::max(worst, v);
      ++total;
      if (v <= kConstraintTol) ++ok;
    }
  }
  return {ok == total, format("%zu/%zu projected outputs feasible (GAT and DNN), worst violation %.1e", ok, total, worst)};
}

Outcome long_scale2() {
  GenConfig g;
  g.n_samples = 5000;
  g.seed = 5'000'000;
  const std::vector<Record> data = generate_records(g).records;
  g.n_samples = 1000;
  g.seed = 6'000'000;
  const std::vector<Record> held = generate_records(g).records;
  const TrainResult r = train(ModelKind::Gat, TrainConfig{}, data);
  const std::vector<Method> methods{Method::learned(r.model), Method::optimizer()};
  const EvalReport rep = evaluate(methods, held);
  const double gap = rep.of("gat").gap.mean;
  return {gap <= kLongGapMax, format("Scale II, N_u=20, N_f=3: mean gap %.1f%% (need <= %.1f%%)", 100 * gap,
                                     100 * kLongGapMax)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const bool long_run = argc > 1 && std::string(argv[1]) == "--long";
  Lab lab;
  std::vector<Criterion> criteria;
  if (long_run) {
    criteria.push_back({12, "Scale II sum-rate gap (long)", long_scale2});
  } else {
    criteria = {
        {1, "solver vs grid oracle", solver_vs_oracle},
        {2, "analytic KKT instance", analytic_kkt},
        {3, "GAT gradient check", gradient_integrity},
        {4, "UE permutation equivariance", equivariance},
        {5, "training convergence", [&] { return convergence(lab); }},
        {6, "GAT sum rate vs optimizer", [&] { return sum_rate_gap(lab); }},
        {7, "GAT vs DNN sum rate", [&] { return model_ordering(lab); }},
        {8, "heuristic fairness highest", [&] { return fairness_ordering(lab); }},
        {9, "inductive N_u transfer", [&] { return inductive(lab); }},
        {10, "latency growth", [&] { return latency_trend(lab); }},
        {11, "projected feasibility", [&] { return feasibility(lab); }},
    };
  }
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("%s %2d %-30s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
