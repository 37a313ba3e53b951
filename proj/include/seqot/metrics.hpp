#ifndef SEQOT_METRICS_HPP
#define SEQOT_METRICS_HPP

#include <optional>

#include "seqot/common.hpp"

namespace seqot {

struct BleuReport {
  int n = 4;
  double score = 0.0;
  double brevity_penalty = 1.0;
  std::vector<double> per_order_precisions;
};

// Corpus-level BLEU-n with clipped n-gram precision, geometric mean over
// orders and exponential brevity penalty. `smooth` adds 1 to numerator and
// denominator of orders >= 2 with zero matches; off by default so the exact
// zero/one cases hold.
BleuReport bleu(const std::vector<TokenSeq>& hypotheses,
                const std::vector<TokenSeq>& references, int n,
                bool smooth = false);

// Multi-reference variant: hypothesis i is scored against references[i]
// (clip counts take the per-ngram max across references; the brevity
// penalty uses the closest reference length, shorter on ties).
BleuReport bleu_multi(const std::vector<TokenSeq>& hypotheses,
                      const std::vector<std::vector<TokenSeq>>& references,
                      int n, bool smooth = false);

// Mean over sentences of BLEU-n against all other sentences as references.
// Higher means less diverse.
double self_bleu(const std::vector<TokenSeq>& corpus, int n);

// Harmonic mean of BLEU and (1 - Self-BLEU); 0 when the denominator is 0.
double bleu_f1(double bleu_score, double self_bleu_score);

struct LengthBucketReport {
  int lo = 0;            // inclusive
  int hi = 0;            // exclusive; INT_MAX on the overflow bucket
  int count = 0;
  std::optional<BleuReport> report;  // null for empty buckets
};

// Buckets keyed by reference length: [0,e1), [e1,e2), ..., [ek, inf).
std::vector<LengthBucketReport> bleu_by_length(
    const std::vector<TokenSeq>& hypotheses,
    const std::vector<TokenSeq>& references, const std::vector<int>& edges,
    int n, bool smooth = false);

// Fraction of reference positions whose hypothesis token matches exactly.
double token_accuracy(const TokenSeq& hypothesis, const TokenSeq& reference);

struct AccuracyBucket {
  int lo = 0;
  int hi = 0;
  int count = 0;
  double accuracy = 0.0;  // mean per-sentence token accuracy; 0 when empty
};

std::vector<AccuracyBucket> accuracy_by_length(
    const std::vector<TokenSeq>& hypotheses,
    const std::vector<TokenSeq>& references, const std::vector<int>& edges);

}  // namespace seqot

#endif  // SEQOT_METRICS_HPP
