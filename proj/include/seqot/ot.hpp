#ifndef SEQOT_OT_HPP
#define SEQOT_OT_HPP

#include "seqot/common.hpp"

namespace seqot {

// A nonnegative weight vector summing to one; the marginal of one sequence's
// token distribution.
struct SimplexWeights {
  Vector w;

  SimplexWeights() = default;
  explicit SimplexWeights(Vector weights);

  static SimplexWeights uniform(Eigen::Index n);

  Eigen::Index size() const { return w.size(); }
};

// A coupling between two token distributions: nonnegative entries whose row
// sums match `row_marginal` and column sums match `col_marginal`.
struct TransportPlan {
  Matrix m;
  Vector row_marginal;
  Vector col_marginal;

  double max_marginal_error() const;
  double min_entry() const { return m.size() ? m.minCoeff() : 0.0; }
};

struct IpotConfig {
  double epsilon = 1.0;       // proximal step size is 1/epsilon
  int outer_iters = 50;
  int inner_iters = 1;        // Sinkhorn sweeps per proximal step
  double convergence_tol = 1e-6;

  void validate() const;
};

// Per-run record: objective trajectory is kept so callers can inspect the
// (expected, not enforced) monotone decrease across proximal steps.
struct IpotDiagnostics {
  std::vector<double> objectives;
  int iterations = 0;
  double final_delta = 0.0;
  bool converged = false;
};

double ot_objective(const Matrix& cost, const TransportPlan& plan);
double ot_objective(const Matrix& cost, const Matrix& plan);

// Proximal-point approximation of the exact transport optimum. Stops when the
// max-abs plan change between proximal steps drops below convergence_tol or
// the iteration cap is reached.
TransportPlan ipot_solve(const Matrix& cost, const SimplexWeights& u,
                         const SimplexWeights& p, const IpotConfig& config,
                         IpotDiagnostics* diag = nullptr);

struct ExactOtResult {
  TransportPlan plan;
  double value = 0.0;
};

// Exact reference solver. Square instances with uniform marginals (T <= 8)
// are solved by exhaustive permutation search; everything else small goes
// through a transportation-simplex LP solve.
ExactOtResult exact_ot_oracle(const Matrix& cost, const SimplexWeights& u,
                              const SimplexWeights& p);

// The two exact routes, exposed for cross-checking.
ExactOtResult exact_ot_assignment(const Matrix& cost);
ExactOtResult exact_ot_simplex(const Matrix& cost, const SimplexWeights& u,
                               const SimplexWeights& p);

// Entropic-regularized baseline. Throws on kernel underflow instead of
// clamping.
TransportPlan sinkhorn_solve(const Matrix& cost, const SimplexWeights& u,
                             const SimplexWeights& p, double reg, int iters);

// Mean |i/T - j/T'| under the plan (1-based positions, each normalized by
// its own length). Diagnostic for how order-preserving a matching is.
double expected_position_gap(const Matrix& plan);

}  // namespace seqot

#endif  // SEQOT_OT_HPP
