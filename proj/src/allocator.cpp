#include "hetlb/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace hetlb {

namespace {

// Internal rate unit for the barrier solver (bits/s -> Mbit/s).
constexpr double kRateUnit = 1e6;

void check_shapes(const Scenario& sc) {
  const std::size_t na = sc.n_ap(), nu = sc.n_ue();
  if (sc.capacity_bps.rows != na || sc.capacity_bps.cols != nu || sc.req_bps.size() != nu || sc.serving.size() != nu)
    throw Error(ErrorKind::ContractViolation, "scenario link data shape mismatch");
  for (const auto& s : sc.serving)
    for (std::size_t i : s)
      if (i >= na) throw Error(ErrorKind::ContractViolation, "serving AP index out of range");
}

// (AP, UE) pairs in serving order: pair p = offset[j] + k.
struct Pairs {
  std::vector<std::size_t> ap, ue, offset;
  std::vector<std::vector<std::size_t>> by_ap;
};

Pairs make_pairs(const Scenario& sc) {
  Pairs p;
  p.by_ap.resize(sc.n_ap());
  for (std::size_t j = 0; j < sc.n_ue(); ++j) {
    p.offset.push_back(p.ap.size());
    for (std::size_t i : sc.serving[j]) {
      p.by_ap[i].push_back(p.ap.size());
      p.ap.push_back(i);
      p.ue.push_back(j);
    }
  }
  p.offset.push_back(p.ap.size());
  return p;
}

}  // namespace

void SolverConfig::validate() const {
  if (!(tolerance > 0.0)) throw Error(ErrorKind::InvalidConfig, "solver tolerance must be > 0");
  if (grid_steps < 2) throw Error(ErrorKind::InvalidConfig, "grid_steps must be >= 2");
  if (!(log_floor > 0.0)) throw Error(ErrorKind::InvalidConfig, "log_floor must be > 0");
  if (max_iters == 0) throw Error(ErrorKind::InvalidConfig, "max_iters must be >= 1");
}

AllocationMatrix empty_allocation(const Scenario& sc) {
  check_shapes(sc);
  AllocationMatrix a{Mat(sc.n_ap(), sc.n_ue()), std::vector<char>(sc.n_ap() * sc.n_ue(), 0)};
  for (std::size_t j = 0; j < sc.n_ue(); ++j)
    for (std::size_t i : sc.serving[j]) a.mask[i * sc.n_ue() + j] = 1;
  return a;
}

double feasibility_violation(const Scenario& sc, const AllocationMatrix& a) {
  const std::size_t na = sc.n_ap(), nu = sc.n_ue();
  if (a.rho.rows != na || a.rho.cols != nu || a.mask.size() != na * nu)
    return std::numeric_limits<double>::infinity();
  const AllocationMatrix ref = empty_allocation(sc);
  double worst = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < nu; ++j) {
      const double r = a.rho(i, j);
      if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
      if (!ref.served(i, j)) worst = std::max(worst, std::abs(r));
      worst = std::max({worst, -r, r - 1.0});
      if (ref.served(i, j)) sum += r;
    }
    worst = std::max(worst, sum - 1.0);
  }
  return worst;
}

bool is_feasible(const Scenario& sc, const AllocationMatrix& a, double tol) {
  return feasibility_violation(sc, a) <= tol;
}

AllocationMatrix heuristic_allocate(const Scenario& sc) {
  AllocationMatrix a = empty_allocation(sc);
  const std::size_t nu = sc.n_ue();
  for (std::size_t i = 0; i < sc.n_ap(); ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < nu; ++j) count += a.served(i, j) ? 1 : 0;
    if (count == 0) continue;
    const double share = 1.0 / static_cast<double>(count);
    for (std::size_t j = 0; j < nu; ++j)
      if (a.served(i, j)) a.rho(i, j) = share;
  }
  return a;
}

Throughput throughput(const Scenario& sc, const AllocationMatrix& a) {
  check_shapes(sc);
  const double viol = feasibility_violation(sc, a);
  if (!(viol <= 1e-9))
    throw Error(ErrorKind::ContractViolation, "allocation violates the budget/mask/range constraints");
  Throughput t;
  t.served_bps.resize(sc.n_ue());
  for (std::size_t j = 0; j < sc.n_ue(); ++j) {
    double s = 0.0;
    for (std::size_t i : sc.serving[j]) s += a.rho(i, j) * sc.capacity_bps(i, j);
    t.served_bps[j] = std::min(s, sc.req_bps[j]);
    t.total_bps += t.served_bps[j];
  }
  return t;
}

Objective objective(const Scenario& sc, const AllocationMatrix& a, const SolverConfig& cfg) {
  const Throughput t = throughput(sc, a);
  Objective o;
  for (std::size_t j = 0; j < sc.n_ue(); ++j) {
    const double floor = cfg.log_floor * sc.req_bps[j];
    if (t.served_bps[j] < floor) ++o.floored;
    o.value += std::log(std::max(t.served_bps[j], floor));
  }
  return o;
}

// ---- interior point ---------------------------------------------------------

namespace {

struct Barrier {
  const Pairs& pairs;
  std::vector<double> cap;  // per pair, scaled
  std::vector<double> req;  // per UE, scaled
  std::vector<std::size_t> active_aps;
  std::size_t n_pairs = 0;
  std::size_t n_ue = 0;

  std::size_t dim() const { return n_pairs + n_ue; }
  std::size_t n_constraints() const { return n_pairs + active_aps.size() + 2 * n_ue; }

  double served(const Eigen::VectorXd& x, std::size_t j) const {
    double s = 0.0;
    for (std::size_t p = pairs.offset[j]; p < pairs.offset[j + 1]; ++p) s += x[static_cast<Eigen::Index>(p)] * cap[p];
    return s;
  }

  double budget_slack(const Eigen::VectorXd& x, std::size_t ap) const {
    double s = 1.0;
    for (std::size_t p : pairs.by_ap[ap]) s -= x[static_cast<Eigen::Index>(p)];
    return s;
  }

  // tau * (-sum ln t) - sum ln(slacks); +inf outside the domain.
  double value(const Eigen::VectorXd& x, double tau) const {
    double f = 0.0;
    for (std::size_t p = 0; p < n_pairs; ++p) {
      const double r = x[static_cast<Eigen::Index>(p)];
      if (!(r > 0.0)) return std::numeric_limits<double>::infinity();
      f -= std::log(r);
    }
    for (std::size_t ap : active_aps) {
      const double u = budget_slack(x, ap);
      if (!(u > 0.0)) return std::numeric_limits<double>::infinity();
      f -= std::log(u);
    }
    for (std::size_t j = 0; j < n_ue; ++j) {
      const double t = x[static_cast<Eigen::Index>(n_pairs + j)];
      const double w = served(x, j) - t;
      const double v = req[j] - t;
      if (!(t > 0.0) || !(w > 0.0) || !(v > 0.0)) return std::numeric_limits<double>::infinity();
      f += -tau * std::log(t) - std::log(w) - std::log(v);
    }
    return f;
  }

  void derivatives(const Eigen::VectorXd& x, double tau, Eigen::VectorXd& g, Eigen::MatrixXd& h) const {
    const auto n = static_cast<Eigen::Index>(dim());
    g.setZero(n);
    h.setZero(n, n);
    for (std::size_t p = 0; p < n_pairs; ++p) {
      const auto k = static_cast<Eigen::Index>(p);
      g[k] -= 1.0 / x[k];
      h(k, k) += 1.0 / (x[k] * x[k]);
    }
    for (std::size_t ap : active_aps) {
      const double u = budget_slack(x, ap);
      const double inv = 1.0 / u, inv2 = inv * inv;
      for (std::size_t p : pairs.by_ap[ap]) {
        g[static_cast<Eigen::Index>(p)] += inv;
        for (std::size_t q : pairs.by_ap[ap]) h(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) += inv2;
      }
    }
    for (std::size_t j = 0; j < n_ue; ++j) {
      const auto tj = static_cast<Eigen::Index>(n_pairs + j);
      const double t = x[tj];
      const double w = served(x, j) - t;
      const double v = req[j] - t;
      g[tj] += -tau / t + 1.0 / w + 1.0 / v;
      h(tj, tj) += tau / (t * t) + 1.0 / (v * v);
      // -ln(w) with w = sum rho c - t: gradient direction (c..., -1).
      const double inv = 1.0 / w, inv2 = inv * inv;
      for (std::size_t p = pairs.offset[j]; p < pairs.offset[j + 1]; ++p) {
        const auto kp = static_cast<Eigen::Index>(p);
        g[kp] -= cap[p] * inv;
        for (std::size_t q = pairs.offset[j]; q < pairs.offset[j + 1]; ++q)
          h(kp, static_cast<Eigen::Index>(q)) += inv2 * cap[p] * cap[q];
        h(kp, tj) -= inv2 * cap[p];
        h(tj, kp) -= inv2 * cap[p];
      }
      h(tj, tj) += inv2;
    }
  }
};

AllocationMatrix to_allocation(const Scenario& sc, const Pairs& pairs, const Eigen::VectorXd& x) {
  AllocationMatrix a = empty_allocation(sc);
  for (std::size_t p = 0; p < pairs.ap.size(); ++p) a.rho(pairs.ap[p], pairs.ue[p]) = x[static_cast<Eigen::Index>(p)];
  return a;
}

}  // namespace

AllocationMatrix optimize_allocate(const Scenario& sc, const SolverConfig& cfg, SolveStats* stats) {
  check_shapes(sc);
  cfg.validate();
  const Pairs pairs = make_pairs(sc);
  Barrier b{pairs, {}, {}, {}, 0, 0};
  b.n_pairs = pairs.ap.size();
  b.n_ue = sc.n_ue();
  for (std::size_t p = 0; p < b.n_pairs; ++p) b.cap.push_back(sc.capacity_bps(pairs.ap[p], pairs.ue[p]) / kRateUnit);
  for (double r : sc.req_bps) b.req.push_back(r / kRateUnit);
  for (std::size_t i = 0; i < sc.n_ap(); ++i)
    if (!pairs.by_ap[i].empty()) b.active_aps.push_back(i);

  for (std::size_t j = 0; j < b.n_ue; ++j) {
    bool any = false;
    for (std::size_t p = pairs.offset[j]; p < pairs.offset[j + 1]; ++p) any = any || b.cap[p] > 0.0;
    if (!any) throw Error(ErrorKind::ContractViolation, "UE " + std::to_string(j) + " has no serving link with C > 0");
    if (!(b.req[j] > 0.0)) throw Error(ErrorKind::ContractViolation, "rate requirement must be > 0");
  }
  if (b.n_ue == 0) return empty_allocation(sc);

  // Strictly feasible start.
  Eigen::VectorXd x(static_cast<Eigen::Index>(b.dim()));
  for (std::size_t p = 0; p < b.n_pairs; ++p)
    x[static_cast<Eigen::Index>(p)] = 1.0 / static_cast<double>(pairs.by_ap[pairs.ap[p]].size() + 1);
  for (std::size_t j = 0; j < b.n_ue; ++j)
    x[static_cast<Eigen::Index>(b.n_pairs + j)] = 0.5 * std::min(b.served(x, j), b.req[j]);

  const double m = static_cast<double>(b.n_constraints());
  const double unit_shift = static_cast<double>(b.n_ue) * std::log(kRateUnit);
  double tau = 1.0;
  constexpr double kTauGrowth = 20.0;

  SolveStats st;
  Eigen::VectorXd g, dx;
  Eigen::MatrixXd h;
  for (;;) {
    // Centering.
    double fx = b.value(x, tau);
    for (;;) {
      if (st.newton_steps >= cfg.max_iters)
        throw ConvergenceError("interior point exceeded max_iters", to_allocation(sc, pairs, x));
      b.derivatives(x, tau, g, h);
      Eigen::LLT<Eigen::MatrixXd> llt(h);
      if (llt.info() != Eigen::Success) {
        h.diagonal().array() += 1e-12 * (1.0 + h.diagonal().cwiseAbs().maxCoeff());
        llt.compute(h);
      }
      dx = -llt.solve(g);
      const double decrement = -g.dot(dx);
      ++st.newton_steps;
      if (!(decrement > 2e-10)) break;

      double step = 1.0;
      double fnew = b.value(x + step * dx, tau);
      int halvings = 0;
      while ((!std::isfinite(fnew) || fnew > fx - 0.25 * step * decrement) && halvings < 80) {
        step *= 0.5;
        fnew = b.value(x + step * dx, tau);
        ++halvings;
      }
      if (!std::isfinite(fnew) || fnew >= fx) break;  // no further progress at this precision
      x += step * dx;
      fx = fnew;
    }
    ++st.outer_steps;

    double obj = unit_shift;
    for (std::size_t j = 0; j < b.n_ue; ++j) obj += std::log(std::min(b.served(x, j), b.req[j]));
    st.duality_gap = m / tau;
    if (st.duality_gap <= cfg.tolerance * std::max(1.0, std::abs(obj))) break;
    tau *= kTauGrowth;
  }

  if (stats) *stats = st;
  return to_allocation(sc, pairs, x);
}

// ---- grid oracle ------------------------------------------------------------

namespace {

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Advances a composition (fixed total) to the next one in lexicographic order
// of the leading parts. Returns false after the last one.
bool next_composition(std::vector<std::size_t>& parts) {
  const std::size_t n = parts.size();
  if (n <= 1) return false;
  std::size_t right = parts[n - 1];
  for (std::size_t k = n - 1; k-- > 0;) {
    if (right > 0) {
      ++parts[k];
      for (std::size_t i = k + 1; i + 1 < n; ++i) parts[i] = 0;
      parts[n - 1] = right - 1;
      return true;
    }
    right += parts[k];
  }
  return false;
}

}  // namespace

AllocationMatrix grid_oracle(const Scenario& sc, const SolverConfig& cfg) {
  check_shapes(sc);
  cfg.validate();
  const Pairs pairs = make_pairs(sc);
  const std::size_t nt = cfg.grid_steps;
  const double step = 1.0 / static_cast<double>(nt);
  const std::size_t nu = sc.n_ue();

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < sc.n_ap(); ++i)
    if (!pairs.by_ap[i].empty()) active.push_back(i);
  AllocationMatrix best = empty_allocation(sc);
  if (active.empty()) return best;

  // Greedy AP = the one with most served UEs; enumerate the rest.
  const auto greedy_it = std::max_element(active.begin(), active.end(), [&](std::size_t a, std::size_t b) {
    return pairs.by_ap[a].size() < pairs.by_ap[b].size();
  });
  const std::size_t greedy_ap = *greedy_it;
  std::vector<std::size_t> enumerated;
  double points = 1.0;
  for (std::size_t i : active) {
    if (i == greedy_ap) continue;
    enumerated.push_back(i);
    const std::size_t n = pairs.by_ap[i].size();
    points *= binomial(nt + n - 1, n - 1);
  }
  if (points > cfg.oracle_max_points && !cfg.oracle_allow_large)
    throw Error(ErrorKind::SizeGuard, "grid oracle would enumerate " + std::to_string(points) + " points");

  // Full-budget compositions suffice: the objective is non-decreasing in rho.
  std::vector<std::vector<std::size_t>> comp(enumerated.size());
  for (std::size_t e = 0; e < enumerated.size(); ++e) {
    comp[e].assign(pairs.by_ap[enumerated[e]].size(), 0);
    comp[e].back() = nt;
  }

  const auto& gpairs = pairs.by_ap[greedy_ap];
  std::vector<double> base(nu), floor(nu);
  for (std::size_t j = 0; j < nu; ++j) floor[j] = cfg.log_floor * sc.req_bps[j];
  std::vector<std::size_t> units(gpairs.size());
  std::vector<std::size_t> best_units;
  std::vector<std::vector<std::size_t>> best_comp;
  double best_value = -std::numeric_limits<double>::infinity();

  auto value_of = [&](std::size_t j, double rate) {
    return std::log(std::max(std::min(rate, sc.req_bps[j]), floor[j]));
  };

  for (;;) {
    std::fill(base.begin(), base.end(), 0.0);
    for (std::size_t e = 0; e < enumerated.size(); ++e) {
      const auto& ps = pairs.by_ap[enumerated[e]];
      for (std::size_t q = 0; q < ps.size(); ++q) {
        const std::size_t p = ps[q];
        base[pairs.ue[p]] += static_cast<double>(comp[e][q]) * step * sc.capacity_bps(pairs.ap[p], pairs.ue[p]);
      }
    }
    // Greedy fill of the remaining AP in units of 1/N_t.
    std::fill(units.begin(), units.end(), 0);
    std::vector<double> rate(gpairs.size());
    for (std::size_t q = 0; q < gpairs.size(); ++q) rate[q] = base[pairs.ue[gpairs[q]]];
    for (std::size_t u = 0; u < nt; ++u) {
      std::size_t pick = 0;
      double gain = -std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < gpairs.size(); ++q) {
        const std::size_t p = gpairs[q];
        const std::size_t j = pairs.ue[p];
        const double inc = step * sc.capacity_bps(greedy_ap, j);
        const double d = value_of(j, rate[q] + inc) - value_of(j, rate[q]);
        if (d > gain) {
          gain = d;
          pick = q;
        }
      }
      rate[pick] += step * sc.capacity_bps(greedy_ap, pairs.ue[gpairs[pick]]);
      ++units[pick];
    }
    for (std::size_t q = 0; q < gpairs.size(); ++q) base[pairs.ue[gpairs[q]]] = rate[q];
    double total = 0.0;
    for (std::size_t j = 0; j < nu; ++j) total += value_of(j, base[j]);
    if (total > best_value) {
      best_value = total;
      best_units = units;
      best_comp = comp;
    }

    std::size_t e = 0;
    while (e < comp.size()) {
      if (next_composition(comp[e])) break;
      std::fill(comp[e].begin(), comp[e].end(), 0);
      comp[e].back() = nt;
      ++e;
    }
    if (e == comp.size()) break;
  }

  for (std::size_t e = 0; e < enumerated.size(); ++e) {
    const auto& ps = pairs.by_ap[enumerated[e]];
    for (std::size_t q = 0; q < ps.size(); ++q)
      best.rho(pairs.ap[ps[q]], pairs.ue[ps[q]]) = static_cast<double>(best_comp[e][q]) * step;
  }
  for (std::size_t q = 0; q < gpairs.size(); ++q)
    best.rho(greedy_ap, pairs.ue[gpairs[q]]) = static_cast<double>(best_units[q]) * step;
  return best;
}

// ---- projection -------------------------------------------------------------

AllocationMatrix project_feasible(const Mat& raw, const Scenario& sc) {
  check_shapes(sc);
  const std::size_t nu = sc.n_ue();
  const std::size_t nf = sc.n_subflows();
  if (raw.rows != nu || raw.cols != nf) throw Error(ErrorKind::Shape, "prediction shape must be N_u x N_f");
  for (double v : raw.data)
    if (std::isnan(v)) throw Error(ErrorKind::InvalidPrediction, "NaN in model prediction");
  AllocationMatrix a = empty_allocation(sc);
  for (std::size_t j = 0; j < nu; ++j)
    for (std::size_t k = 0; k < nf; ++k) a.rho(sc.serving[j][k], j) = std::clamp(raw(j, k), 0.0, 1.0);
  for (std::size_t i = 0; i < sc.n_ap(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < nu; ++j) sum += a.rho(i, j);
    if (sum > 1.0 + 1e-12)
      for (std::size_t j = 0; j < nu; ++j) a.rho(i, j) /= sum;
  }
  return a;
}

Mat labels_from_allocation(const Scenario& sc, const AllocationMatrix& a) {
  const std::size_t nu = sc.n_ue(), nf = sc.n_subflows();
  if (a.rho.rows != sc.n_ap() || a.rho.cols != nu) throw Error(ErrorKind::Shape, "allocation shape mismatch");
  Mat l(nu, nf);
  for (std::size_t j = 0; j < nu; ++j)
    for (std::size_t k = 0; k < nf; ++k) l(j, k) = a.rho(sc.serving[j][k], j);
  return l;
}

AllocationMatrix allocation_from_labels(const Scenario& sc, const Mat& labels) {
  const std::size_t nu = sc.n_ue(), nf = sc.n_subflows();
  if (labels.rows != nu || labels.cols != nf) throw Error(ErrorKind::Shape, "labels must be N_u x N_f");
  AllocationMatrix a = empty_allocation(sc);
  for (std::size_t j = 0; j < nu; ++j)
    for (std::size_t k = 0; k < nf; ++k) a.rho(sc.serving[j][k], j) = labels(j, k);
  return a;
}

}  // namespace hetlb
