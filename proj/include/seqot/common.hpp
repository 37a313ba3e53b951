#ifndef SEQOT_COMMON_HPP
#define SEQOT_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr const char* kVersion = "0.1.0";

// Token ids are plain ints; a sequence is the stream of vocabulary indices.
using TokenSeq = std::vector<int>;

// Reserved vocabulary slots, fixed across every model and corpus.
inline constexpr int kStartId = 0;
inline constexpr int kEosId = 1;
inline constexpr int kPadId = 2;
inline constexpr int kUnkId = 3;
inline constexpr int kNumReserved = 4;

enum class FeatureLayer { embedding, contextual };

// Per-token feature rows: row t holds the feature vector of token t.
struct FeatureSequence {
  Matrix rows;
  FeatureLayer layer = FeatureLayer::embedding;

  Eigen::Index length() const { return rows.rows(); }
  Eigen::Index dim() const { return rows.cols(); }
};

inline double log_sum_exp(const Vector& v) {
  if (v.size() == 0) throw std::invalid_argument("log_sum_exp: empty vector");
  const double c = v.maxCoeff();
  return c + std::log((v.array() - c).exp().sum());
}

inline Vector softmax(const Vector& v) {
  const double c = v.maxCoeff();
  Vector e = (v.array() - c).exp();
  return e / e.sum();
}

// splitmix64; used to derive independent named RNG streams from one seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename... Rest>
std::uint64_t mix64(std::uint64_t a, std::uint64_t b, Rest... rest) {
  const std::uint64_t combined = mix64(mix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
  if constexpr (sizeof...(rest) == 0)
    return combined;
  else
    return mix64(combined, static_cast<std::uint64_t>(rest)...);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(mix64(seed));
}

}  // namespace seqot

#endif  // SEQOT_COMMON_HPP
