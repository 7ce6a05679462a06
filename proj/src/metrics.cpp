#include "hetlb/metrics.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "hetlb/errors.hpp"
#include "hetlb/format.hpp"
#include "hetlb/log.hpp"

namespace hetlb {

double jain_fairness(std::span<const double> served, std::span<const double> required, bool absolute) {
  if (served.size() != required.size()) throw Error(ErrorKind::Shape, "jain: served/required length mismatch");
  if (served.empty()) return 1.0;
  double s = 0.0, s2 = 0.0;
  for (std::size_t j = 0; j < served.size(); ++j) {
    if (!(required[j] > 0.0)) throw Error(ErrorKind::InvalidArgument, "jain: requirements must be > 0");
    const double x = absolute ? served[j] : std::min(served[j], required[j]) / required[j];
    s += x;
    s2 += x * x;
  }
  if (s2 == 0.0) return 1.0;
  return s * s / (static_cast<double>(served.size()) * s2);
}

Method Method::learned(const Model& m, std::string name) {
  return {name.empty() ? std::string(to_string(m.kind)) : std::move(name), MethodKind::Learned, &m};
}

AllocationMatrix Method::run(const Scenario& sc, const SolverConfig& cfg) const {
  switch (kind) {
    case MethodKind::Heuristic: return heuristic_allocate(sc);
    case MethodKind::Optimizer: return optimize_allocate(sc, cfg);
    case MethodKind::Oracle: return grid_oracle(sc, cfg);
    case MethodKind::Learned: return model->allocate(sc);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown method kind");
}

bool Method::compatible(const Scenario& sc) const {
  if (kind != MethodKind::Learned) return true;
  try {
    model->check_compatible(sc);
    return true;
  } catch (const Error&) {
    return false;
  }
}

const MethodSummary& EvalReport::of(const std::string& method) const {
  for (const MethodSummary& s : summary)
    if (s.method == method) return s;
  throw Error(ErrorKind::InvalidArgument, "no summary for method '" + method + "'");
}

Interval bootstrap_mean(std::span<const double> xs, std::size_t resamples, std::uint64_t seed) {
  Interval out;
  if (xs.empty()) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(xs.size());
  if (resamples == 0 || xs.size() == 1) {
    out.lo = out.hi = out.mean;
    return out;
  }
  Rng rng = make_rng(seed, 0x424f4f54);
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  std::vector<double> means(resamples);
  for (double& m : means) {
    double s = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) s += xs[pick(rng)];
    m = s / static_cast<double>(xs.size());
  }
  std::sort(means.begin(), means.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(resamples - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, resamples - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  out.lo = at(0.025);
  out.hi = at(0.975);
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

EvalReport evaluate(std::span<const Method> methods, std::span<const Record> records, const EvalOptions& opt) {
  opt.solver.validate();
  for (const Method& m : methods) {
    if (m.kind == MethodKind::Learned && !m.model) throw Error(ErrorKind::InvalidArgument, "learned method without a model");
    for (const Record& r : records)
      if (m.kind == MethodKind::Learned) m.model->check_compatible(r.scenario);
  }

  const std::size_t nm = methods.size(), nr = records.size();
  EvalReport rep;
  rep.rows.resize(nr * nm);
  std::vector<std::exception_ptr> errors(nr);
  const int threads = opt.workers > 0 ? opt.workers : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::size_t k = 0; k < nr; ++k) {
    try {
      const Record& rec = records[k];
      const Scenario& sc = rec.scenario;
      std::vector<AllocationMatrix> allocs(nm);
      std::vector<double> times(nm);
      for (std::size_t m = 0; m < nm; ++m) {
        const auto t0 = Clock::now();
        allocs[m] = methods[m].run(sc, opt.solver);
        times[m] = seconds_since(t0);
      }
      double ref_rate = 0.0;
      if (opt.reuse_labels && rec.labels && rec.label_method == "optimizer") {
        ref_rate = throughput(sc, allocation_from_labels(sc, *rec.labels)).total_bps;
      } else {
        const auto it = std::find_if(methods.begin(), methods.end(),
                                     [](const Method& m) { return m.kind == MethodKind::Optimizer; });
        const AllocationMatrix ref = it != methods.end() ? allocs[static_cast<std::size_t>(it - methods.begin())]
                                                         : optimize_allocate(sc, opt.solver);
        ref_rate = throughput(sc, ref).total_bps;
      }
      for (std::size_t m = 0; m < nm; ++m) {
        const Throughput t = throughput(sc, allocs[m]);
        EvalRow& row = rep.rows[k * nm + m];
        row.instance_id = k;
        row.method = methods[m].name;
        row.n_a = sc.n_ap();
        row.n_u = sc.n_ue();
        row.n_f = sc.n_subflows();
        row.sum_rate_bps = t.total_bps;
        row.jain = jain_fairness(t.served_bps, sc.req_bps, opt.jain_absolute);
        row.objective = objective(sc, allocs[m], opt.solver).value;
        row.gap = ref_rate > 0.0 ? (ref_rate - t.total_bps) / ref_rate : 0.0;
        row.wall_time_s = times[m];
      }
    } catch (const Error& e) {
      errors[k] = std::make_exception_ptr(Error(e.kind(), "instance " + std::to_string(k) + ": " + e.message()));
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t m = 0; m < nm; ++m) {
    std::vector<double> rate, jain, obj, gap, wall;
    for (std::size_t k = 0; k < nr; ++k) {
      const EvalRow& row = rep.rows[k * nm + m];
      rate.push_back(row.sum_rate_bps);
      jain.push_back(row.jain);
      obj.push_back(row.objective);
      gap.push_back(row.gap);
      wall.push_back(row.wall_time_s);
    }
    const std::uint64_t s = opt.bootstrap_seed + 31 * m;
    MethodSummary ms;
    ms.method = methods[m].name;
    ms.n = nr;
    ms.sum_rate_bps = bootstrap_mean(rate, opt.bootstrap_resamples, s);
    ms.jain = bootstrap_mean(jain, opt.bootstrap_resamples, s + 1);
    ms.objective = bootstrap_mean(obj, opt.bootstrap_resamples, s + 2);
    ms.gap = bootstrap_mean(gap, opt.bootstrap_resamples, s + 3);
    ms.wall_time_s = bootstrap_mean(wall, opt.bootstrap_resamples, s + 4);
    rep.summary.push_back(std::move(ms));
  }
  return rep;
}

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "instance_id,method,n_a,n_u,n_f,sum_rate_bps,jain,objective,gap,wall_time_s\n";
  for (const EvalRow& r : report.rows)
    out << r.instance_id << ',' << r.method << ',' << r.n_a << ',' << r.n_u << ',' << r.n_f << ','
        << fmt(r.sum_rate_bps) << ',' << fmt(r.jain) << ',' << fmt(r.objective) << ',' << fmt(r.gap) << ','
        << fmt(r.wall_time_s) << '\n';
}

nlohmann::json summary_json(const EvalReport& report) {
  auto iv = [](const Interval& i) { return nlohmann::json{{"mean", i.mean}, {"ci95", {i.lo, i.hi}}}; };
  nlohmann::json methods = nlohmann::json::array();
  for (const MethodSummary& s : report.summary)
    methods.push_back({{"method", s.method},
                       {"n", s.n},
                       {"sum_rate_bps", iv(s.sum_rate_bps)},
                       {"jain", iv(s.jain)},
                       {"objective", iv(s.objective)},
                       {"gap", iv(s.gap)},
                       {"wall_time_s", iv(s.wall_time_s)}});
  return {{"methods", std::move(methods)}};
}

std::string format_summary_table(const EvalReport& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %6s %14s %22s %8s %9s %12s\n", "method", "n", "sum_rate_Mbps",
                "95% CI", "jain", "gap", "time_ms");
  os << line;
  for (const MethodSummary& s : report.summary) {
    char ci[64];
    std::snprintf(ci, sizeof ci, "[%.1f, %.1f]", s.sum_rate_bps.lo / 1e6, s.sum_rate_bps.hi / 1e6);
    std::snprintf(line, sizeof line, "%-12s %6zu %14.2f %22s %8.4f %8.2f%% %12.4f\n", s.method.c_str(), s.n,
                  s.sum_rate_bps.mean / 1e6, ci, s.jain.mean, 100.0 * s.gap.mean, 1e3 * s.wall_time_s.mean);
    os << line;
  }
  return os.str();
}

// ---- latency ----------------------------------------------------------------

std::vector<BenchRow> bench_inference(std::span<const Method> methods, std::span<const Record> records,
                                      const BenchOptions& opt) {
  if (opt.repeats < 10) throw Error(ErrorKind::InvalidArgument, "bench needs repeats >= 10");
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < records.size(); ++k) {
    const Scenario& sc = records[k].scenario;
    auto& g = groups[{sc.n_ap(), sc.n_ue(), sc.n_subflows()}];
    if (g.size() < opt.max_instances) g.push_back(k);
  }

  const int saved_threads = omp_get_max_threads();
  omp_set_num_threads(1);
  std::vector<BenchRow> rows;
  try {
    for (const Method& m : methods) {
      const std::size_t before = rows.size();
      for (const auto& [key, idx] : groups) {
        const Scenario& first = records[idx.front()].scenario;
        if (!m.compatible(first)) {
          log_info("bench: skipping " + m.name + " on N_u = " + std::to_string(first.n_ue()));
          continue;
        }
        std::vector<double> times;
        for (std::size_t k : idx) {
          const Scenario& sc = records[k].scenario;
          for (std::size_t w = 0; w < opt.warmup; ++w) (void)m.run(sc, opt.solver);
          for (std::size_t r = 0; r < opt.repeats; ++r) {
            const auto t0 = Clock::now();
            const AllocationMatrix a = m.run(sc, opt.solver);
            times.push_back(seconds_since(t0));
          }
        }
        std::sort(times.begin(), times.end());
        auto quantile = [&](double q) {
          const double pos = q * static_cast<double>(times.size() - 1);
          const auto lo = static_cast<std::size_t>(std::floor(pos));
          const auto hi = std::min(lo + 1, times.size() - 1);
          return times[lo] + (pos - static_cast<double>(lo)) * (times[hi] - times[lo]);
        };
        const auto [na, nu, nf] = key;
        rows.push_back({m.name, na, nu, nf, times.size(), quantile(0.5), quantile(0.95)});
      }
      if (rows.size() == before && !groups.empty())
        m.model->check_compatible(records[groups.begin()->second.front()].scenario);
    }
  } catch (...) {
    omp_set_num_threads(saved_threads);
    throw;
  }
  omp_set_num_threads(saved_threads);
  return rows;
}

void write_bench_csv(const std::filesystem::path& path, std::span<const BenchRow> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "method,n_a,n_u,n_f,samples,median_s,p95_s\n";
  for (const BenchRow& r : rows)
    out << r.method << ',' << r.n_a << ',' << r.n_u << ',' << r.n_f << ',' << r.samples << ',' << fmt(r.median_s)
        << ',' << fmt(r.p95_s) << '\n';
}

}  // namespace hetlb
