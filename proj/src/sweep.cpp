#include "seqot/sweep.hpp"

#include <algorithm>

namespace seqot {

namespace {

TokenSeq content_of(const DecodeTrace& trace) {
  const int len = trace.content_length();
  return TokenSeq(trace.tokens.begin(), trace.tokens.begin() + len);
}

}  // namespace

std::vector<TokenSeq> decode_corpus(const SeqModel& model, const Dataset& data,
                                    const SamplingPolicy& policy, int max_len,
                                    std::uint64_t seed) {
  std::vector<TokenSeq> out;
  out.reserve(data.pairs.size());
  Tape tape;
  for (size_t i = 0; i < data.pairs.size(); ++i) {
    tape.clear();
    const Pair& ex = data.pairs[i];
    const TokenSeq* src = ex.source ? &*ex.source : nullptr;
    const DecodeTrace trace = model.forward_student(
        tape, src, max_len, policy, mix64(seed, 0xDEC0, i));
    out.push_back(content_of(trace));
  }
  return out;
}

std::vector<TokenSeq> sample_corpus(const SeqModel& model, int n_samples,
                                    const SamplingPolicy& policy, int max_len,
                                    std::uint64_t seed) {
  if (model.config().conditional)
    throw std::invalid_argument("sample_corpus: model must be unconditional");
  if (n_samples < 1)
    throw std::invalid_argument("sample_corpus: n_samples must be >= 1");
  std::vector<TokenSeq> out;
  out.reserve(static_cast<size_t>(n_samples));
  Tape tape;
  for (int i = 0; i < n_samples; ++i) {
    tape.clear();
    const DecodeTrace trace =
        model.forward_student(tape, nullptr, max_len, policy,
                              mix64(seed, 0x5A4E, static_cast<std::uint64_t>(i)));
    out.push_back(content_of(trace));
  }
  return out;
}

SweepResult temperature_sweep(const SeqModel& model,
                              const std::vector<TokenSeq>& eval_corpus,
                              std::vector<double> alphas, int samples_per_alpha,
                              std::uint64_t seed, int max_len, int bleu_order) {
  if (alphas.empty()) throw std::invalid_argument("sweep: no alphas given");
  for (double a : alphas)
    if (!(a > 0.0)) throw std::invalid_argument("sweep: alphas must be > 0");
  if (eval_corpus.empty())
    throw std::invalid_argument("sweep: empty evaluation corpus");
  if (samples_per_alpha < 2)
    throw std::invalid_argument("sweep: need >= 2 samples per alpha");

  std::sort(alphas.begin(), alphas.end());

  SweepResult result;
  for (size_t k = 0; k < alphas.size(); ++k) {
    SamplingPolicy policy{SamplingPolicy::Kind::categorical, alphas[k]};
    const auto samples = sample_corpus(model, samples_per_alpha, policy,
                                       max_len, mix64(seed, 0x51EB, k));

    std::vector<std::vector<TokenSeq>> refs(samples.size(), eval_corpus);
    SweepPoint point;
    point.alpha = alphas[k];
    point.bleu = bleu_multi(samples, refs, bleu_order).score;
    point.self_bleu = self_bleu(samples, bleu_order);
    point.bleu_f1 = bleu_f1(point.bleu, point.self_bleu);
    result.points.push_back(point);
  }

  result.selected_index = 0;
  for (size_t k = 1; k < result.points.size(); ++k)
    if (result.points[k].bleu_f1 >
        result.points[static_cast<size_t>(result.selected_index)].bleu_f1)
      result.selected_index = static_cast<int>(k);
  return result;
}

}  // namespace seqot
