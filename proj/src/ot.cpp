#include "seqot/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace seqot {

namespace {

void check_cost_finite(const Matrix& cost) {
  if (!cost.allFinite())
    throw std::invalid_argument("cost matrix contains non-finite entries");
}

void check_dims(const Matrix& cost, const SimplexWeights& u,
                const SimplexWeights& p) {
  if (cost.rows() != u.size() || cost.cols() != p.size())
    throw std::invalid_argument("cost/marginal dimension mismatch");
  if (cost.rows() == 0 || cost.cols() == 0)
    throw std::invalid_argument("empty cost matrix");
}

}  // namespace

SimplexWeights::SimplexWeights(Vector weights) : w(std::move(weights)) {
  if (w.size() == 0) throw std::invalid_argument("empty weight vector");
  if (w.minCoeff() < 0.0)
    throw std::invalid_argument("simplex weights must be nonnegative");
  if (std::abs(w.sum() - 1.0) > 1e-9)
    throw std::invalid_argument("simplex weights must sum to 1");
}

SimplexWeights SimplexWeights::uniform(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("simplex dimension must be >= 1");
  return SimplexWeights(Vector::Constant(n, 1.0 / static_cast<double>(n)));
}

double TransportPlan::max_marginal_error() const {
  const double row_err = (m.rowwise().sum() - row_marginal).cwiseAbs().maxCoeff();
  const double col_err =
      (m.colwise().sum().transpose() - col_marginal).cwiseAbs().maxCoeff();
  return std::max(row_err, col_err);
}

void IpotConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("ipot: epsilon must be > 0");
  if (outer_iters < 1) throw std::invalid_argument("ipot: outer_iters must be >= 1");
  if (inner_iters < 1) throw std::invalid_argument("ipot: inner_iters must be >= 1");
  if (!(convergence_tol > 0.0))
    throw std::invalid_argument("ipot: convergence_tol must be > 0");
}

double ot_objective(const Matrix& cost, const Matrix& plan) {
  if (cost.rows() != plan.rows() || cost.cols() != plan.cols())
    throw std::invalid_argument("ot_objective: cost/plan dimension mismatch");
  return cost.cwiseProduct(plan).sum();
}

double ot_objective(const Matrix& cost, const TransportPlan& plan) {
  return ot_objective(cost, plan.m);
}

TransportPlan ipot_solve(const Matrix& cost, const SimplexWeights& u,
                         const SimplexWeights& p, const IpotConfig& config,
                         IpotDiagnostics* diag) {
  config.validate();
  check_dims(cost, u, p);
  check_cost_finite(cost);

  const Eigen::Index t_rows = cost.rows();
  const Eigen::Index t_cols = cost.cols();

  const Matrix kernel = (-cost / config.epsilon).array().exp();
  Matrix plan = Matrix::Ones(t_rows, t_cols);
  Vector sigma = Vector::Constant(t_cols, 1.0 / static_cast<double>(t_cols));
  Vector delta(t_rows);

  if (diag) *diag = IpotDiagnostics{};

  Matrix prev = plan;
  double final_delta = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;

  for (int t = 0; t < config.outer_iters; ++t) {
    const Matrix q = kernel.cwiseProduct(plan);
    for (int k = 0; k < config.inner_iters; ++k) {
      delta = u.w.cwiseQuotient(q * sigma);
      sigma = p.w.cwiseQuotient(q.transpose() * delta);
    }
    plan = delta.asDiagonal() * q * sigma.asDiagonal();
    ++iterations;

    if (diag) diag->objectives.push_back(ot_objective(cost, plan));

    final_delta = (plan - prev).cwiseAbs().maxCoeff();
    if (final_delta < config.convergence_tol) {
      converged = true;
      break;
    }
    prev = plan;
  }

  if (diag) {
    diag->iterations = iterations;
    diag->final_delta = final_delta;
    diag->converged = converged;
  }
  return TransportPlan{std::move(plan), u.w, p.w};
}

ExactOtResult exact_ot_assignment(const Matrix& cost) {
  const Eigen::Index n = cost.rows();
  if (n != cost.cols())
    throw std::invalid_argument("exact_ot_assignment: cost must be square");
  if (n > 8)
    throw std::invalid_argument(
        "exact_ot_assignment: instance too large for exhaustive mode (T > 8)");
  check_cost_finite(cost);

  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_sum = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += cost(i, perm[static_cast<size_t>(i)]);
    if (s < best_sum) {
      best_sum = s;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  const double mass = 1.0 / static_cast<double>(n);
  Matrix plan = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) plan(i, best[static_cast<size_t>(i)]) = mass;

  ExactOtResult result;
  result.value = best_sum * mass;
  result.plan = TransportPlan{std::move(plan), Vector::Constant(n, mass),
                              Vector::Constant(n, mass)};
  return result;
}

namespace {

// Spanning-tree representation of a transportation-simplex basis over the
// bipartite row/column node set.
struct SimplexBasis {
  Eigen::Index n, m;
  std::vector<std::pair<int, int>> cells;

  bool contains(int i, int j) const {
    for (const auto& c : cells)
      if (c.first == i && c.second == j) return true;
    return false;
  }
};

// Path between row i0 and column j0 through the basis tree; returned as the
// alternating cell cycle starting with the entering cell.
std::vector<std::pair<int, int>> find_cycle(const SimplexBasis& basis, int i0,
                                            int j0) {
  const int n = static_cast<int>(basis.n);
  const int m = static_cast<int>(basis.m);
  const int total = n + m;
  std::vector<std::vector<int>> adj(static_cast<size_t>(total));
  for (const auto& [i, j] : basis.cells) {
    adj[static_cast<size_t>(i)].push_back(n + j);
    adj[static_cast<size_t>(n + j)].push_back(i);
  }
  std::vector<int> parent(static_cast<size_t>(total), -2);
  std::vector<int> queue{i0};
  parent[static_cast<size_t>(i0)] = -1;
  for (size_t head = 0; head < queue.size(); ++head) {
    const int v = queue[head];
    for (int w : adj[static_cast<size_t>(v)]) {
      if (parent[static_cast<size_t>(w)] == -2) {
        parent[static_cast<size_t>(w)] = v;
        queue.push_back(w);
      }
    }
  }
  const int target = n + j0;
  if (parent[static_cast<size_t>(target)] == -2)
    throw std::runtime_error("transport simplex: disconnected basis tree");

  std::vector<int> nodes;
  for (int v = target; v != -1; v = parent[static_cast<size_t>(v)])
    nodes.push_back(v);
  std::reverse(nodes.begin(), nodes.end());  // i0 ... j0

  std::vector<std::pair<int, int>> cycle;
  cycle.emplace_back(i0, j0);  // entering cell closes the loop
  for (size_t k = 0; k + 1 < nodes.size(); ++k) {
    const int a = nodes[k];
    const int b = nodes[k + 1];
    if (a < n)
      cycle.emplace_back(a, b - n);
    else
      cycle.emplace_back(b, a - n);
  }
  return cycle;
}

}  // namespace

ExactOtResult exact_ot_simplex(const Matrix& cost, const SimplexWeights& u,
                               const SimplexWeights& p) {
  check_dims(cost, u, p);
  check_cost_finite(cost);
  const Eigen::Index n = cost.rows();
  const Eigen::Index m = cost.cols();
  if (n + m > 128)
    throw std::invalid_argument("exact_ot_simplex: instance too large");
  if (std::abs(u.w.sum() - p.w.sum()) > 1e-9)
    throw std::invalid_argument("exact_ot_simplex: infeasible marginals");

  Matrix x = Matrix::Zero(n, m);
  SimplexBasis basis{n, m, {}};

  // Northwest-corner initial basic feasible solution. When a row and column
  // are exhausted together, only one index advances so the basis keeps
  // n + m - 1 cells (some possibly zero).
  {
    Vector a = u.w, b = p.w;
    Eigen::Index i = 0, j = 0;
    while (true) {
      const double q = std::min(a[i], b[j]);
      x(i, j) = q;
      basis.cells.emplace_back(static_cast<int>(i), static_cast<int>(j));
      a[i] -= q;
      b[j] -= q;
      if (i == n - 1 && j == m - 1) break;
      if (a[i] <= b[j] && i < n - 1)
        ++i;
      else
        ++j;
    }
  }

  const int max_pivots = 20000;
  for (int pivot = 0; pivot <= max_pivots; ++pivot) {
    // Duals from the basis tree: alpha_i + beta_j = C_ij on basic cells.
    Vector alpha = Vector::Constant(n, std::numeric_limits<double>::quiet_NaN());
    Vector beta = Vector::Constant(m, std::numeric_limits<double>::quiet_NaN());
    alpha[0] = 0.0;
    bool progress = true;
    while (progress) {
      progress = false;
      for (const auto& [i, j] : basis.cells) {
        const bool ai = std::isnan(alpha[i]);
        const bool bj = std::isnan(beta[j]);
        if (!ai && bj) {
          beta[j] = cost(i, j) - alpha[i];
          progress = true;
        } else if (ai && !bj) {
          alpha[i] = cost(i, j) - beta[j];
          progress = true;
        }
      }
    }
    if (alpha.hasNaN() || beta.hasNaN())
      throw std::runtime_error("transport simplex: degenerate basis tree");

    // Entering cell: most negative reduced cost, lexicographic tie-break.
    double best_red = -1e-10;
    int ei = -1, ej = -1;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        const double red = cost(i, j) - alpha[i] - beta[j];
        if (red < best_red) {
          best_red = red;
          ei = static_cast<int>(i);
          ej = static_cast<int>(j);
        }
      }
    if (ei < 0) break;  // optimal
    if (pivot == max_pivots)
      throw std::runtime_error("transport simplex: pivot limit exceeded");

    auto cycle = find_cycle(basis, ei, ej);
    double theta = std::numeric_limits<double>::infinity();
    size_t leave_pos = 0;
    for (size_t k = 1; k < cycle.size(); k += 2) {
      const double v = x(cycle[k].first, cycle[k].second);
      if (v < theta) {
        theta = v;
        leave_pos = k;
      }
    }
    for (size_t k = 0; k < cycle.size(); ++k) {
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      x(cycle[k].first, cycle[k].second) += sign * theta;
    }
    x(cycle[leave_pos].first, cycle[leave_pos].second) = 0.0;

    const auto leaving = cycle[leave_pos];
    auto it = std::find(basis.cells.begin(), basis.cells.end(), leaving);
    basis.cells.erase(it);
    basis.cells.emplace_back(ei, ej);
  }

  ExactOtResult result;
  result.value = cost.cwiseProduct(x).sum();
  result.plan = TransportPlan{std::move(x), u.w, p.w};
  return result;
}

ExactOtResult exact_ot_oracle(const Matrix& cost, const SimplexWeights& u,
                              const SimplexWeights& p) {
  check_dims(cost, u, p);
  const Eigen::Index n = cost.rows();
  const bool square = n == cost.cols();
  const double mass = 1.0 / static_cast<double>(n);
  const bool uniform = square &&
                       (u.w.array() - mass).abs().maxCoeff() < 1e-12 &&
                       (p.w.array() - mass).abs().maxCoeff() < 1e-12;
  if (uniform && n <= 8) return exact_ot_assignment(cost);
  return exact_ot_simplex(cost, u, p);
}

double expected_position_gap(const Matrix& plan) {
  if (plan.size() == 0)
    throw std::invalid_argument("expected_position_gap: empty plan");
  const double mass = plan.sum();
  if (!(mass > 0.0))
    throw std::invalid_argument("expected_position_gap: zero-mass plan");
  const Eigen::Index t = plan.rows();
  const Eigen::Index tp = plan.cols();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j < tp; ++j) {
      const double gap = static_cast<double>(i + 1) / static_cast<double>(t) -
                         static_cast<double>(j + 1) / static_cast<double>(tp);
      acc += plan(i, j) * std::abs(gap);
    }
  return acc / mass;
}

TransportPlan sinkhorn_solve(const Matrix& cost, const SimplexWeights& u,
                             const SimplexWeights& p, double reg, int iters) {
  if (!(reg > 0.0)) throw std::invalid_argument("sinkhorn: reg must be > 0");
  if (iters < 1) throw std::invalid_argument("sinkhorn: iters must be >= 1");
  check_dims(cost, u, p);
  check_cost_finite(cost);

  // exp underflows to zero (or a saturated subnormal, depending on the SIMD
  // path) below log(DBL_MIN); that silently forbids mass on those cells
  const double underflow_edge = std::log(std::numeric_limits<double>::min());
  if (((-cost.array() / reg) < underflow_edge).any())
    throw std::runtime_error("sinkhorn: kernel underflow, reg too small");
  const Matrix kernel = (-cost / reg).array().exp();
  Vector right = Vector::Ones(cost.cols());
  Vector left(cost.rows());
  for (int it = 0; it < iters; ++it) {
    Vector den = kernel * right;
    if (den.minCoeff() <= 0.0)
      throw std::runtime_error("sinkhorn: kernel underflow, reg too small");
    left = u.w.cwiseQuotient(den);
    den = kernel.transpose() * left;
    if (den.minCoeff() <= 0.0)
      throw std::runtime_error("sinkhorn: kernel underflow, reg too small");
    right = p.w.cwiseQuotient(den);
  }
  Matrix plan = left.asDiagonal() * kernel * right.asDiagonal();
  return TransportPlan{std::move(plan), u.w, p.w};
}

}  // namespace seqot
