#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "seqot/ot.hpp"

using namespace seqot;

namespace {

Matrix random_cost(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Matrix c(n, m);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m; ++j) c(i, j) = dist(rng);
  return c;
}

// independent route: brute-force assignment value, re-derived in test code
double brute_force_uniform_value(const Matrix& cost) {
  const Eigen::Index n = cost.rows();
  std::vector<int> perm(static_cast<size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += cost(i, perm[static_cast<size_t>(i)]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / static_cast<double>(n);
}

IpotConfig tight_ipot() {
  IpotConfig cfg;
  cfg.epsilon = 1.0;
  cfg.outer_iters = 5000;
  cfg.inner_iters = 1;
  cfg.convergence_tol = 1e-12;
  return cfg;
}

}  // namespace

TEST_CASE("simplex weights validate") {
  CHECK_NOTHROW(SimplexWeights::uniform(5));
  CHECK_THROWS_AS(SimplexWeights(Vector::Constant(3, 0.5)),
                  std::invalid_argument);
  Vector neg(2);
  neg << 1.5, -0.5;
  CHECK_THROWS_AS(SimplexWeights{neg}, std::invalid_argument);
}

TEST_CASE("ot objective hand values") {
  Matrix one(1, 1);
  one << 1.0;
  CHECK(ot_objective(one, one) == doctest::Approx(1.0));

  Matrix cost(2, 2), plan(2, 2);
  cost << 0, 1, 1, 0;
  plan << 0.5, 0, 0, 0.5;
  CHECK(ot_objective(cost, plan) == doctest::Approx(0.0));

  Matrix c2(2, 2), p2(2, 2);
  c2 << 1, 2, 3, 4;
  p2 << 0.25, 0.25, 0.25, 0.25;
  CHECK(ot_objective(c2, p2) == doctest::Approx(2.5));

  Matrix bad(2, 3);
  CHECK_THROWS_AS(ot_objective(c2, bad), std::invalid_argument);
}

TEST_CASE("ipot single cell") {
  Matrix cost(1, 1);
  cost << 3.25;
  const auto plan = ipot_solve(cost, SimplexWeights::uniform(1),
                               SimplexWeights::uniform(1), IpotConfig{});
  CHECK(plan.m(0, 0) == doctest::Approx(1.0));
  CHECK(ot_objective(cost, plan) == doctest::Approx(3.25));
}

TEST_CASE("ipot finds the zero-cost diagonal") {
  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  IpotDiagnostics diag;
  const auto plan = ipot_solve(cost, SimplexWeights::uniform(2),
                               SimplexWeights::uniform(2), tight_ipot(), &diag);
  CHECK(plan.m(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(plan.m(1, 1) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(ot_objective(cost, plan) < 1e-8);
  CHECK(diag.objectives.size() >= 1);  // trajectory recorded
  CHECK(plan.max_marginal_error() < 1e-6);
}

TEST_CASE("ipot errors") {
  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  CHECK_THROWS_AS(ipot_solve(cost, SimplexWeights::uniform(3),
                             SimplexWeights::uniform(2), IpotConfig{}),
                  std::invalid_argument);
  IpotConfig bad;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(ipot_solve(cost, SimplexWeights::uniform(2),
                             SimplexWeights::uniform(2), bad),
                  std::invalid_argument);
  Matrix nan_cost = cost;
  nan_cost(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(ipot_solve(nan_cost, SimplexWeights::uniform(2),
                             SimplexWeights::uniform(2), IpotConfig{}),
                  std::invalid_argument);
}

TEST_CASE("exact oracle trivial cases") {
  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  auto res = exact_ot_oracle(cost, SimplexWeights::uniform(2),
                             SimplexWeights::uniform(2));
  CHECK(res.value == doctest::Approx(0.0));
  CHECK(res.plan.m(0, 0) == doctest::Approx(0.5));
  CHECK(res.plan.m(1, 1) == doctest::Approx(0.5));

  Matrix ones = Matrix::Ones(3, 3);
  auto flat = exact_ot_oracle(ones, SimplexWeights::uniform(3),
                              SimplexWeights::uniform(3));
  CHECK(flat.value == doctest::Approx(1.0));
}

TEST_CASE("exact oracle equals exhaustive permutation minimum") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix cost = random_cost(5, 5, mix64(900, seed));
    const double expected = brute_force_uniform_value(cost);
    const auto res = exact_ot_oracle(cost, SimplexWeights::uniform(5),
                                     SimplexWeights::uniform(5));
    CHECK(res.value == doctest::Approx(expected).epsilon(1e-12));
    CHECK(res.plan.max_marginal_error() < 1e-9);
  }
}

TEST_CASE("simplex route agrees with assignment route") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix cost = random_cost(6, 6, mix64(901, seed));
    const auto a = exact_ot_assignment(cost);
    const auto b = exact_ot_simplex(cost, SimplexWeights::uniform(6),
                                    SimplexWeights::uniform(6));
    CHECK(b.value == doctest::Approx(a.value).epsilon(1e-10));
    CHECK(b.plan.max_marginal_error() < 1e-9);
    CHECK(b.plan.min_entry() >= -1e-12);
  }
}

TEST_CASE("simplex route handles rectangular non-uniform instances") {
  auto rng = make_rng(77);
  std::uniform_real_distribution<double> dist(0.1, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix cost = random_cost(4, 7, mix64(902, trial));
    Vector uw(4), pw(7);
    for (int i = 0; i < 4; ++i) uw[i] = dist(rng);
    for (int j = 0; j < 7; ++j) pw[j] = dist(rng);
    uw /= uw.sum();
    pw /= pw.sum();
    const SimplexWeights u(uw), p(pw);
    const auto res = exact_ot_simplex(cost, u, p);
    CHECK(res.plan.max_marginal_error() < 1e-9);

    // cross-check optimality against a tightly-converged solver run
    IpotConfig cfg = tight_ipot();
    const auto plan = ipot_solve(cost, u, p, cfg);
    CHECK(ot_objective(cost, plan) >= res.value - 1e-9);
    CHECK(ot_objective(cost, plan) == doctest::Approx(res.value).epsilon(1e-4));
  }
}

TEST_CASE("ipot matches the oracle on random instances") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Matrix cost = random_cost(6, 6, mix64(903, seed));
    const auto oracle = exact_ot_oracle(cost, SimplexWeights::uniform(6),
                                        SimplexWeights::uniform(6));
    const auto plan = ipot_solve(cost, SimplexWeights::uniform(6),
                                 SimplexWeights::uniform(6), tight_ipot());
    const double value = ot_objective(cost, plan);
    CHECK(std::abs(value - oracle.value) <= 1e-3);
    CHECK(value >= oracle.value - 1e-9);  // cannot beat the optimum
    CHECK(plan.max_marginal_error() < 1e-6);
    CHECK(plan.min_entry() >= -1e-12);
  }
}

TEST_CASE("ipot scale covariance") {
  const Matrix cost = random_cost(5, 5, 904);
  const double alpha = 3.7;
  IpotConfig base = tight_ipot();
  IpotConfig scaled = base;
  scaled.epsilon = base.epsilon * alpha;
  const auto p1 = ipot_solve(cost, SimplexWeights::uniform(5),
                             SimplexWeights::uniform(5), base);
  const auto p2 = ipot_solve(alpha * cost, SimplexWeights::uniform(5),
                             SimplexWeights::uniform(5), scaled);
  CHECK((p1.m - p2.m).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(ot_objective(alpha * cost, p1) ==
        doctest::Approx(alpha * ot_objective(cost, p1)));
}

TEST_CASE("ipot permutation equivariance") {
  const Matrix cost = random_cost(5, 5, 905);
  Vector uw(5);
  uw << 0.1, 0.3, 0.2, 0.25, 0.15;
  const SimplexWeights u(uw);
  const SimplexWeights p = SimplexWeights::uniform(5);

  std::vector<int> perm = {3, 0, 4, 1, 2};
  Matrix cost_p(5, 5);
  Vector uw_p(5);
  for (int i = 0; i < 5; ++i) {
    cost_p.row(i) = cost.row(perm[static_cast<size_t>(i)]);
    uw_p[i] = uw[perm[static_cast<size_t>(i)]];
  }

  const auto plan = ipot_solve(cost, u, p, tight_ipot());
  const auto plan_p = ipot_solve(cost_p, SimplexWeights(uw_p), p, tight_ipot());
  for (int i = 0; i < 5; ++i)
    CHECK((plan_p.m.row(i) - plan.m.row(perm[static_cast<size_t>(i)]))
              .cwiseAbs()
              .maxCoeff() < 1e-6);
}

TEST_CASE("constant cost shift moves the objective, not the plan set") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix cost = random_cost(4, 4, mix64(906, seed));
    const double shift = -0.75;  // negative costs allowed
    const Matrix shifted = cost.array() + shift;

    const auto base = exact_ot_oracle(cost, SimplexWeights::uniform(4),
                                      SimplexWeights::uniform(4));
    const auto moved = exact_ot_oracle(shifted, SimplexWeights::uniform(4),
                                       SimplexWeights::uniform(4));
    CHECK(moved.value == doctest::Approx(base.value + shift).epsilon(1e-10));

    const auto p1 = ipot_solve(cost, SimplexWeights::uniform(4),
                               SimplexWeights::uniform(4), tight_ipot());
    const auto p2 = ipot_solve(shifted, SimplexWeights::uniform(4),
                               SimplexWeights::uniform(4), tight_ipot());
    CHECK((p1.m - p2.m).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("sinkhorn trivial and symmetric cases") {
  Matrix one(1, 1);
  one << 0.4;
  const auto p1 = sinkhorn_solve(one, SimplexWeights::uniform(1),
                                 SimplexWeights::uniform(1), 1.0, 10);
  CHECK(p1.m(0, 0) == doctest::Approx(1.0));

  Matrix cost(2, 2);
  cost << 0, 1, 1, 0;
  const auto p2 = sinkhorn_solve(cost, SimplexWeights::uniform(2),
                                 SimplexWeights::uniform(2), 10.0, 500);
  CHECK(p2.m(0, 0) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(p2.m(0, 1) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(p2.max_marginal_error() < 1e-9);
}

TEST_CASE("sinkhorn approaches the oracle at small regularization") {
  const Matrix cost = random_cost(5, 5, 907);
  const auto oracle = exact_ot_oracle(cost, SimplexWeights::uniform(5),
                                      SimplexWeights::uniform(5));
  const auto plan = sinkhorn_solve(cost, SimplexWeights::uniform(5),
                                   SimplexWeights::uniform(5), 0.01, 20000);
  CHECK(std::abs(ot_objective(cost, plan) - oracle.value) < 5e-2);
}

TEST_CASE("sinkhorn signals kernel underflow") {
  Matrix cost(2, 2);
  cost << 0, 4000, 4000, 0;
  CHECK_THROWS_AS(sinkhorn_solve(cost, SimplexWeights::uniform(2),
                                 SimplexWeights::uniform(2), 1e-3, 100),
                  std::runtime_error);
}

TEST_CASE("expected position gap of a diagonal plan is zero") {
  Matrix plan = Matrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i) plan(i, i) = 0.25;
  CHECK(expected_position_gap(plan) == doctest::Approx(0.0));

  Matrix anti = Matrix::Zero(2, 2);
  anti(0, 1) = anti(1, 0) = 0.5;
  CHECK(expected_position_gap(anti) == doctest::Approx(0.5));
}
