#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hetlb/allocator.hpp"
#include "hetlb/dataset_io.hpp"
#include "hetlb/model.hpp"

namespace hetlb {

// Jain's index over satisfaction ratios min(s_j, R_j)/R_j, or over the raw
// served rates when `absolute`. 1 when every entry is zero.
double jain_fairness(std::span<const double> served, std::span<const double> required, bool absolute = false);

enum class MethodKind { Heuristic, Optimizer, Oracle, Learned };

struct Method {
  std::string name;
  MethodKind kind = MethodKind::Heuristic;
  const Model* model = nullptr;

  AllocationMatrix run(const Scenario& sc, const SolverConfig& cfg) const;
  bool compatible(const Scenario& sc) const;

  static Method heuristic() { return {"heuristic", MethodKind::Heuristic, nullptr}; }
  static Method optimizer() { return {"optimizer", MethodKind::Optimizer, nullptr}; }
  static Method oracle() { return {"oracle", MethodKind::Oracle, nullptr}; }
  // Named after the model kind unless a name is given.
  static Method learned(const Model& m, std::string name = {});
};

struct EvalOptions {
  SolverConfig solver;
  int workers = 0;
  std::size_t bootstrap_resamples = 1000;
  std::uint64_t bootstrap_seed = 0;
  bool jain_absolute = false;
  // Use stored optimizer labels as the reference allocation when present.
  bool reuse_labels = true;
};

struct EvalRow {
  std::size_t instance_id = 0;
  std::string method;
  std::size_t n_a = 0, n_u = 0, n_f = 0;
  double sum_rate_bps = 0.0;
  double jain = 0.0;
  double objective = 0.0;
  double gap = 0.0;
  double wall_time_s = 0.0;
};

struct Interval {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct MethodSummary {
  std::string method;
  std::size_t n = 0;
  Interval sum_rate_bps, jain, objective, gap, wall_time_s;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // instance-major
  std::vector<MethodSummary> summary;

  const MethodSummary& of(const std::string& method) const;
};

// Percentile bootstrap of the mean.
Interval bootstrap_mean(std::span<const double> xs, std::size_t resamples, std::uint64_t seed);

EvalReport evaluate(std::span<const Method> methods, std::span<const Record> records, const EvalOptions& opt = {});

void write_report_csv(const std::filesystem::path& path, const EvalReport& report);
nlohmann::json summary_json(const EvalReport& report);
std::string format_summary_table(const EvalReport& report);

// ---- latency ----------------------------------------------------------------

struct BenchOptions {
  std::size_t repeats = 50;
  std::size_t warmup = 3;
  std::size_t max_instances = 20;  // per (N_a, N_u, N_f) group
  SolverConfig solver;
};

struct BenchRow {
  std::string method;
  std::size_t n_a = 0, n_u = 0, n_f = 0;
  std::size_t samples = 0;
  double median_s = 0.0;
  double p95_s = 0.0;
};

// Single-threaded wall time per instance, warmup runs excluded. Rows are keyed
// by (method, N_a, N_u, N_f); incompatible (model, group) pairs are skipped, and a
// model that fits no group at all raises ModelMismatch.
std::vector<BenchRow> bench_inference(std::span<const Method> methods, std::span<const Record> records,
                                      const BenchOptions& opt = {});

void write_bench_csv(const std::filesystem::path& path, std::span<const BenchRow> rows);

}  // namespace hetlb
