#include "seqot/cost.hpp"

#include <algorithm>
#include <cmath>

namespace seqot {

const char* cost_kind_name(CostKind kind) {
  switch (kind) {
    case CostKind::vanilla: return "vanilla";
    case CostKind::contextual: return "contextual";
    case CostKind::contextual_ordered: return "contextual_ordered";
  }
  return "?";
}

CostKind cost_kind_from_name(const std::string& name) {
  if (name == "vanilla") return CostKind::vanilla;
  if (name == "contextual") return CostKind::contextual;
  if (name == "contextual_ordered") return CostKind::contextual_ordered;
  throw std::invalid_argument("unknown cost kind: " + name);
}

namespace {

Matrix normalized_rows(const FeatureSequence& f, const char* which) {
  if (f.length() == 0) throw std::invalid_argument("cost: empty feature sequence");
  Matrix out(f.length(), f.dim());
  for (Eigen::Index i = 0; i < f.length(); ++i) {
    const double norm = f.rows.row(i).norm();
    if (!(norm > 0.0))
      throw std::invalid_argument(std::string("cost: zero-norm feature row in ") +
                                  which);
    out.row(i) = f.rows.row(i) / norm;
  }
  return out;
}

}  // namespace

Matrix cosine_cost(const FeatureSequence& a, const FeatureSequence& b) {
  if (a.dim() != b.dim())
    throw std::invalid_argument("cosine_cost: feature dimension mismatch");
  const Matrix an = normalized_rows(a, "first argument");
  const Matrix bn = normalized_rows(b, "second argument");
  Matrix cos = an * bn.transpose();
  // rounding can push |cos| past 1 by an ulp
  cos = cos.cwiseMax(-1.0).cwiseMin(1.0);
  return Matrix::Ones(cos.rows(), cos.cols()) - cos;
}

Matrix order_penalty_matrix(Eigen::Index t, Eigen::Index t_prime, double beta) {
  if (t < 1 || t_prime < 1)
    throw std::invalid_argument("order_penalty_matrix: lengths must be >= 1");
  if (beta < 0.0)
    throw std::invalid_argument("order_penalty_matrix: beta must be >= 0");
  Matrix p(t, t_prime);
  for (Eigen::Index i = 0; i < t; ++i) {
    const double pos_i = static_cast<double>(i + 1) / static_cast<double>(t);
    for (Eigen::Index j = 0; j < t_prime; ++j) {
      const double pos_j =
          static_cast<double>(j + 1) / static_cast<double>(t_prime);
      const double gap = pos_i - pos_j;
      p(i, j) = beta / (gap * gap + 1.0);
    }
  }
  return p;
}

Matrix build_cost(const FeatureSequence& ref_features,
                  const FeatureSequence& gen_features, const CostMode& mode) {
  mode.validate();
  const bool want_contextual = mode.kind != CostKind::vanilla;
  const FeatureLayer want =
      want_contextual ? FeatureLayer::contextual : FeatureLayer::embedding;
  if (ref_features.layer != want || gen_features.layer != want)
    throw std::invalid_argument(
        std::string("build_cost: feature layer does not match mode ") +
        cost_kind_name(mode.kind));

  Matrix c = cosine_cost(ref_features, gen_features);
  if (mode.kind == CostKind::contextual_ordered)
    c -= order_penalty_matrix(c.rows(), c.cols(), mode.beta);
  return c;
}

}  // namespace seqot
