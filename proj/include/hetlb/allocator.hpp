#pragma once

#include <cstdint>
#include <vector>

#include "hetlb/errors.hpp"
#include "hetlb/mat.hpp"
#include "hetlb/scenario.hpp"

namespace hetlb {

// rho(i, j): share of AP i's airtime given to UE j.
struct AllocationMatrix {
  Mat rho;                 // N_a x N_u
  std::vector<char> mask;  // N_a x N_u row-major, 1 where j is served by i

  bool served(std::size_t ap, std::size_t ue) const { return mask[ap * rho.cols + ue] != 0; }
};

struct SolverConfig {
  double tolerance = 1e-8;  // relative objective accuracy
  std::size_t max_iters = 10000;
  double log_floor = 1e-9;  // epsilon in ln(max(t_j, epsilon R_j))
  std::size_t grid_steps = 100;
  // Grid oracle refuses instances whose enumeration exceeds this many points.
  double oracle_max_points = 5e7;
  bool oracle_allow_large = false;

  void validate() const;
};

// Thrown by optimize_allocate when max_iters is exhausted.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, AllocationMatrix best)
      : Error(ErrorKind::Convergence, what), best_(std::move(best)) {}
  const AllocationMatrix& best_iterate() const { return best_; }

 private:
  AllocationMatrix best_;
};

AllocationMatrix empty_allocation(const Scenario& sc);

// Largest violation of the three constraint families (budget, mask, range).
double feasibility_violation(const Scenario& sc, const AllocationMatrix& a);
bool is_feasible(const Scenario& sc, const AllocationMatrix& a, double tol = 1e-9);

AllocationMatrix heuristic_allocate(const Scenario& sc);

struct Throughput {
  double total_bps = 0.0;
  std::vector<double> served_bps;  // min(sum_i rho C, R_j)
};

Throughput throughput(const Scenario& sc, const AllocationMatrix& a);

struct Objective {
  double value = 0.0;
  std::size_t floored = 0;  // UEs whose rate hit the epsilon R_j floor
};

Objective objective(const Scenario& sc, const AllocationMatrix& a, const SolverConfig& cfg = {});

struct SolveStats {
  std::size_t newton_steps = 0;
  std::size_t outer_steps = 0;
  double duality_gap = 0.0;
};

// Max-sum-log-rate allocation via a log-barrier interior-point method on the
// epigraph form (auxiliary served rate t_j per UE).
AllocationMatrix optimize_allocate(const Scenario& sc, const SolverConfig& cfg = {}, SolveStats* stats = nullptr);

// Exhaustive search over the simplex grid with step 1/grid_steps. All APs but
// the busiest are enumerated; the busiest one is filled greedily, which is
// exact on the grid because the per-UE objective is separable and concave.
AllocationMatrix grid_oracle(const Scenario& sc, const SolverConfig& cfg = {});

// Predictions (N_u x N_f, serving order) -> feasible allocation: clip to [0,1],
// scatter, and rescale any AP row whose sum exceeds 1.
AllocationMatrix project_feasible(const Mat& raw, const Scenario& sc);

// Serving-order view of an allocation (N_u x N_f) and its inverse scatter.
Mat labels_from_allocation(const Scenario& sc, const AllocationMatrix& a);
AllocationMatrix allocation_from_labels(const Scenario& sc, const Mat& labels);

}  // namespace hetlb
