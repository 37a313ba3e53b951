#ifndef SEQOT_SWEEP_HPP
#define SEQOT_SWEEP_HPP

#include "seqot/corpus.hpp"
#include "seqot/metrics.hpp"
#include "seqot/model.hpp"

namespace seqot {

// Student-forcing decode of every example; pre-EOS content only.
std::vector<TokenSeq> decode_corpus(const SeqModel& model, const Dataset& data,
                                    const SamplingPolicy& policy, int max_len,
                                    std::uint64_t seed);

// Unconditional student-forcing samples.
std::vector<TokenSeq> sample_corpus(const SeqModel& model, int n_samples,
                                    const SamplingPolicy& policy, int max_len,
                                    std::uint64_t seed);

struct SweepPoint {
  double alpha = 1.0;
  double bleu = 0.0;
  double self_bleu = 0.0;
  double bleu_f1 = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // sorted by alpha ascending
  int selected_index = 0;          // argmax BLEU-F1, lower alpha on ties
};

// For each reverse temperature: sample, score BLEU against the evaluation
// corpus (every sentence of it as a reference), Self-BLEU, BLEU-F1. Each
// point draws from its own seeded generator.
SweepResult temperature_sweep(const SeqModel& model,
                              const std::vector<TokenSeq>& eval_corpus,
                              std::vector<double> alphas, int samples_per_alpha,
                              std::uint64_t seed, int max_len = 64,
                              int bleu_order = 4);

}  // namespace seqot

#endif  // SEQOT_SWEEP_HPP
