#include "seqot/metrics.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <map>

namespace seqot {

namespace {

using NgramCounts = std::map<std::vector<int>, long long>;

NgramCounts count_ngrams(const TokenSeq& seq, int order) {
  NgramCounts counts;
  if (static_cast<int>(seq.size()) >= order) {
    for (size_t i = 0; i + static_cast<size_t>(order) <= seq.size(); ++i) {
      std::vector<int> key(seq.begin() + static_cast<long>(i),
                           seq.begin() + static_cast<long>(i) + order);
      ++counts[key];
    }
  }
  return counts;
}

long long closest_ref_length(const std::vector<TokenSeq>& refs,
                             long long hyp_len) {
  long long best = static_cast<long long>(refs.front().size());
  for (const auto& r : refs) {
    const long long len = static_cast<long long>(r.size());
    const long long d = std::llabs(len - hyp_len);
    const long long bd = std::llabs(best - hyp_len);
    if (d < bd || (d == bd && len < best)) best = len;
  }
  return best;
}

}  // namespace

BleuReport bleu_multi(const std::vector<TokenSeq>& hypotheses,
                      const std::vector<std::vector<TokenSeq>>& references,
                      int n, bool smooth) {
  if (n < 1) throw std::invalid_argument("bleu: order must be >= 1");
  if (hypotheses.empty()) throw std::invalid_argument("bleu: empty corpus");
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("bleu: hypothesis/reference count mismatch");
  for (const auto& refs : references)
    if (refs.empty())
      throw std::invalid_argument("bleu: hypothesis with no references");

  std::vector<long long> matched(static_cast<size_t>(n), 0);
  std::vector<long long> total(static_cast<size_t>(n), 0);
  long long hyp_len = 0, ref_len = 0;

  for (size_t s = 0; s < hypotheses.size(); ++s) {
    const TokenSeq& hyp = hypotheses[s];
    hyp_len += static_cast<long long>(hyp.size());
    ref_len += closest_ref_length(references[s],
                                  static_cast<long long>(hyp.size()));
    for (int k = 1; k <= n; ++k) {
      const NgramCounts hyp_counts = count_ngrams(hyp, k);
      NgramCounts clip;
      for (const auto& ref : references[s])
        for (const auto& [gram, c] : count_ngrams(ref, k)) {
          auto& slot = clip[gram];
          slot = std::max(slot, c);
        }
      for (const auto& [gram, c] : hyp_counts) {
        total[static_cast<size_t>(k - 1)] += c;
        const auto it = clip.find(gram);
        if (it != clip.end())
          matched[static_cast<size_t>(k - 1)] += std::min(c, it->second);
      }
    }
  }

  BleuReport report;
  report.n = n;
  report.per_order_precisions.resize(static_cast<size_t>(n), 0.0);

  double log_prec_sum = 0.0;
  bool zero = false;
  for (int k = 1; k <= n; ++k) {
    long long num = matched[static_cast<size_t>(k - 1)];
    long long den = total[static_cast<size_t>(k - 1)];
    if (smooth && k >= 2 && num == 0) {
      num += 1;
      den += 1;
    }
    const double p =
        den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
    report.per_order_precisions[static_cast<size_t>(k - 1)] = p;
    if (p <= 0.0)
      zero = true;
    else
      log_prec_sum += std::log(p);
  }

  report.brevity_penalty =
      (hyp_len == 0)
          ? 0.0
          : (hyp_len >= ref_len
                 ? 1.0
                 : std::exp(1.0 - static_cast<double>(ref_len) /
                                      static_cast<double>(hyp_len)));
  report.score = (zero || hyp_len == 0)
                     ? 0.0
                     : report.brevity_penalty *
                           std::exp(log_prec_sum / static_cast<double>(n));
  return report;
}

BleuReport bleu(const std::vector<TokenSeq>& hypotheses,
                const std::vector<TokenSeq>& references, int n, bool smooth) {
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("bleu: hypothesis/reference count mismatch");
  std::vector<std::vector<TokenSeq>> wrapped;
  wrapped.reserve(references.size());
  for (const auto& r : references) wrapped.push_back({r});
  return bleu_multi(hypotheses, wrapped, n, smooth);
}

double self_bleu(const std::vector<TokenSeq>& corpus, int n) {
  if (corpus.size() < 2)
    throw std::invalid_argument("self_bleu: corpus must have >= 2 sentences");
  double sum = 0.0;
  for (size_t i = 0; i < corpus.size(); ++i) {
    std::vector<TokenSeq> others;
    others.reserve(corpus.size() - 1);
    for (size_t j = 0; j < corpus.size(); ++j)
      if (j != i) others.push_back(corpus[j]);
    sum += bleu_multi({corpus[i]}, {others}, n).score;
  }
  return sum / static_cast<double>(corpus.size());
}

double bleu_f1(double bleu_score, double self_bleu_score) {
  if (bleu_score < 0.0 || bleu_score > 1.0 || self_bleu_score < 0.0 ||
      self_bleu_score > 1.0)
    throw std::invalid_argument("bleu_f1: inputs must lie in [0,1]");
  const double diversity = 1.0 - self_bleu_score;
  const double den = bleu_score + diversity;
  if (den == 0.0) return 0.0;
  return 2.0 * bleu_score * diversity / den;
}

namespace {

std::vector<std::pair<int, int>> bucket_ranges(const std::vector<int>& edges) {
  for (size_t i = 1; i < edges.size(); ++i)
    if (edges[i] <= edges[i - 1])
      throw std::invalid_argument("bucket edges must be strictly increasing");
  std::vector<std::pair<int, int>> ranges;
  int lo = 0;
  for (int e : edges) {
    ranges.emplace_back(lo, e);
    lo = e;
  }
  ranges.emplace_back(lo, INT_MAX);
  return ranges;
}

size_t bucket_of(const std::vector<std::pair<int, int>>& ranges, int len) {
  for (size_t b = 0; b < ranges.size(); ++b)
    if (len >= ranges[b].first && len < ranges[b].second) return b;
  return ranges.size() - 1;
}

}  // namespace

std::vector<LengthBucketReport> bleu_by_length(
    const std::vector<TokenSeq>& hypotheses,
    const std::vector<TokenSeq>& references, const std::vector<int>& edges,
    int n, bool smooth) {
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("bleu_by_length: list length mismatch");
  const auto ranges = bucket_ranges(edges);

  std::vector<std::vector<size_t>> members(ranges.size());
  for (size_t i = 0; i < references.size(); ++i)
    members[bucket_of(ranges, static_cast<int>(references[i].size()))]
        .push_back(i);

  std::vector<LengthBucketReport> out;
  for (size_t b = 0; b < ranges.size(); ++b) {
    LengthBucketReport row;
    row.lo = ranges[b].first;
    row.hi = ranges[b].second;
    row.count = static_cast<int>(members[b].size());
    if (!members[b].empty()) {
      std::vector<TokenSeq> h, r;
      for (size_t i : members[b]) {
        h.push_back(hypotheses[i]);
        r.push_back(references[i]);
      }
      row.report = bleu(h, r, n, smooth);
    }
    out.push_back(std::move(row));
  }
  return out;
}

double token_accuracy(const TokenSeq& hypothesis, const TokenSeq& reference) {
  if (reference.empty())
    throw std::invalid_argument("token_accuracy: empty reference");
  const size_t overlap = std::min(hypothesis.size(), reference.size());
  long long hits = 0;
  for (size_t t = 0; t < overlap; ++t)
    if (hypothesis[t] == reference[t]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(reference.size());
}

std::vector<AccuracyBucket> accuracy_by_length(
    const std::vector<TokenSeq>& hypotheses,
    const std::vector<TokenSeq>& references, const std::vector<int>& edges) {
  if (hypotheses.size() != references.size())
    throw std::invalid_argument("accuracy_by_length: list length mismatch");
  const auto ranges = bucket_ranges(edges);

  std::vector<AccuracyBucket> out(ranges.size());
  std::vector<double> sums(ranges.size(), 0.0);
  for (size_t b = 0; b < ranges.size(); ++b) {
    out[b].lo = ranges[b].first;
    out[b].hi = ranges[b].second;
  }
  for (size_t i = 0; i < references.size(); ++i) {
    const size_t b =
        bucket_of(ranges, static_cast<int>(references[i].size()));
    sums[b] += token_accuracy(hypotheses[i], references[i]);
    ++out[b].count;
  }
  for (size_t b = 0; b < ranges.size(); ++b)
    out[b].accuracy = out[b].count ? sums[b] / out[b].count : 0.0;
  return out;
}

}  // namespace seqot
