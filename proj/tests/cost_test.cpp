#include <doctest.h>

#include <random>

#include "seqot/cost.hpp"

using namespace seqot;

namespace {

FeatureSequence features(std::initializer_list<std::initializer_list<double>> rows,
                         FeatureLayer layer = FeatureLayer::embedding) {
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = static_cast<Eigen::Index>(rows.begin()->size());
  Matrix m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return FeatureSequence{std::move(m), layer};
}

FeatureSequence random_features(Eigen::Index t, Eigen::Index d,
                                std::uint64_t seed, FeatureLayer layer) {
  auto rng = make_rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(t, d);
  for (Eigen::Index i = 0; i < t; ++i)
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = dist(rng);
  return FeatureSequence{std::move(m), layer};
}

}  // namespace

TEST_CASE("cosine cost unit cases") {
  CHECK(cosine_cost(features({{1, 0}}), features({{1, 0}}))(0, 0) ==
        doctest::Approx(0.0));
  CHECK(cosine_cost(features({{1, 0}}), features({{0, 1}}))(0, 0) ==
        doctest::Approx(1.0));
  CHECK(cosine_cost(features({{1, 0}}), features({{-1, 0}}))(0, 0) ==
        doctest::Approx(2.0));
}

TEST_CASE("cosine cost rejects bad input") {
  CHECK_THROWS_AS(cosine_cost(features({{0, 0}}), features({{1, 0}})),
                  std::invalid_argument);
  CHECK_THROWS_AS(cosine_cost(features({{1, 0}}), features({{1, 0, 0}})),
                  std::invalid_argument);
}

TEST_CASE("cosine cost symmetry is exact") {
  const auto a = random_features(4, 6, 11, FeatureLayer::embedding);
  const auto b = random_features(5, 6, 12, FeatureLayer::embedding);
  const Matrix ab = cosine_cost(a, b);
  const Matrix ba = cosine_cost(b, a);
  CHECK(ab.rows() == 4);
  CHECK(ab.cols() == 5);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 5; ++j) CHECK(ab(i, j) == ba(j, i));
}

TEST_CASE("cosine cost range and scale invariance") {
  const auto a = random_features(6, 5, 21, FeatureLayer::embedding);
  const auto b = random_features(7, 5, 22, FeatureLayer::embedding);
  const Matrix c = cosine_cost(a, b);
  CHECK(c.minCoeff() >= 0.0);
  CHECK(c.maxCoeff() <= 2.0);

  FeatureSequence scaled = a;
  scaled.rows.row(2) *= 17.5;
  const Matrix c2 = cosine_cost(scaled, b);
  CHECK((c - c2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("order penalty hand values") {
  // equal normalized positions peak at beta
  const Matrix p_eq = order_penalty_matrix(3, 3, 0.4);
  for (Eigen::Index i = 0; i < 3; ++i)
    CHECK(p_eq(i, i) == doctest::Approx(0.4));

  const Matrix p = order_penalty_matrix(2, 2, 0.1);
  CHECK(p(0, 1) == doctest::Approx(0.08));  // 0.1 / ((0.5-1)^2 + 1)

  const Matrix zero = order_penalty_matrix(4, 6, 0.0);
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("order penalty monotone in position gap") {
  const int t = 9, tp = 7;
  const Matrix p = order_penalty_matrix(t, tp, 0.3);
  for (int i = 0; i < t; ++i) {
    std::vector<std::pair<double, double>> by_gap;
    for (int j = 0; j < tp; ++j) {
      const double gap =
          std::abs((i + 1) / static_cast<double>(t) - (j + 1) / static_cast<double>(tp));
      by_gap.emplace_back(gap, p(i, j));
    }
    std::sort(by_gap.begin(), by_gap.end());
    for (size_t k = 1; k < by_gap.size(); ++k)
      if (by_gap[k].first > by_gap[k - 1].first + 1e-12)
        CHECK(by_gap[k].second < by_gap[k - 1].second);
  }
}

TEST_CASE("build_cost mode dispatch") {
  const auto emb_a = random_features(3, 4, 31, FeatureLayer::embedding);
  const auto emb_b = random_features(3, 4, 32, FeatureLayer::embedding);
  const auto ctx_a = random_features(3, 4, 33, FeatureLayer::contextual);
  const auto ctx_b = random_features(3, 4, 34, FeatureLayer::contextual);

  CHECK_NOTHROW(build_cost(emb_a, emb_b, CostMode{CostKind::vanilla, 0.0}));
  CHECK_THROWS_AS(build_cost(ctx_a, ctx_b, CostMode{CostKind::vanilla, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      build_cost(emb_a, emb_b, CostMode{CostKind::contextual, 0.0}),
      std::invalid_argument);

  // identical contextual features zero the diagonal
  const Matrix self = build_cost(ctx_a, ctx_a, CostMode{CostKind::contextual, 0.0});
  for (Eigen::Index i = 0; i < self.rows(); ++i)
    CHECK(self(i, i) == doctest::Approx(0.0).epsilon(1e-12));

  // beta = 0 ordered mode equals contextual exactly
  const Matrix plain = build_cost(ctx_a, ctx_b, CostMode{CostKind::contextual, 0.0});
  const Matrix ordered0 =
      build_cost(ctx_a, ctx_b, CostMode{CostKind::contextual_ordered, 0.0});
  CHECK((plain - ordered0).cwiseAbs().maxCoeff() == 0.0);

  const Matrix ordered =
      build_cost(ctx_a, ctx_b, CostMode{CostKind::contextual_ordered, 0.5});
  CHECK(ordered.minCoeff() >= -0.5);
  CHECK(ordered.maxCoeff() <= 2.0);
}

TEST_CASE("constant base cost, square case: row minima sit on the diagonal") {
  const int t = 6;
  Matrix rows = Matrix::Ones(t, 3);
  const FeatureSequence f{rows, FeatureLayer::contextual};
  const Matrix c = build_cost(f, f, CostMode{CostKind::contextual_ordered, 0.3});
  for (int i = 0; i < t; ++i) {
    Eigen::Index argmin = 0;
    c.row(i).minCoeff(&argmin);
    CHECK(argmin == i);
  }
}

TEST_CASE("constant base cost: ordered argmin tracks the diagonal") {
  // constant cosine part: all rows equal, so the penalty decides
  const int t = 5, tp = 8;
  Matrix rows = Matrix::Ones(t, 3);
  Matrix rows_b = Matrix::Ones(tp, 3);
  const FeatureSequence a{rows, FeatureLayer::contextual};
  const FeatureSequence b{rows_b, FeatureLayer::contextual};
  const Matrix c =
      build_cost(a, b, CostMode{CostKind::contextual_ordered, 0.2});
  for (int i = 0; i < t; ++i) {
    Eigen::Index argmin = 0;
    c.row(i).minCoeff(&argmin);
    // expected: the column with the smallest |(i+1)/t - (j+1)/tp|
    double best_gap = 1e9;
    Eigen::Index expect = 0;
    for (int j = 0; j < tp; ++j) {
      const double gap = std::abs((i + 1) / static_cast<double>(t) -
                                  (j + 1) / static_cast<double>(tp));
      if (gap < best_gap) {
        best_gap = gap;
        expect = j;
      }
    }
    CHECK(argmin == expect);
  }
}
