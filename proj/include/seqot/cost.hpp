#ifndef SEQOT_COST_HPP
#define SEQOT_COST_HPP

#include "seqot/common.hpp"

namespace seqot {

enum class CostKind { vanilla, contextual, contextual_ordered };

struct CostMode {
  CostKind kind = CostKind::vanilla;
  double beta = 0.0;  // order-penalty weight, only read in contextual_ordered

  void validate() const {
    if (beta < 0.0) throw std::invalid_argument("cost: beta must be >= 0");
  }
};

const char* cost_kind_name(CostKind kind);
CostKind cost_kind_from_name(const std::string& name);

// C_ij = 1 - cos(a_i, b_j); entries land in [0, 2]. Rejects zero-norm rows.
Matrix cosine_cost(const FeatureSequence& a, const FeatureSequence& b);

// P_ij = beta / ((i/T - j/T')^2 + 1) with 1-based positions, each normalized
// by its own length. Subtracted from the base cost in ordered mode.
Matrix order_penalty_matrix(Eigen::Index t, Eigen::Index t_prime, double beta);

// Dispatch per mode; checks that the feature layers match the mode.
Matrix build_cost(const FeatureSequence& ref_features,
                  const FeatureSequence& gen_features, const CostMode& mode);

}  // namespace seqot

#endif  // SEQOT_COST_HPP
