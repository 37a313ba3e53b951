#ifndef SEQOT_TESTS_FIXTURES_HPP
#define SEQOT_TESTS_FIXTURES_HPP

#include "seqot/cost.hpp"
#include "seqot/model.hpp"
#include "seqot/ot.hpp"
#include "seqot/train.hpp"

namespace seqot::testing {

inline SeqModel make_model(int vocab, int embed, int hidden, bool conditional,
                           std::uint64_t seed, int layers = 1) {
  ModelConfig cfg;
  cfg.vocab_size = vocab;
  cfg.embed_dim = embed;
  cfg.hidden_dim = hidden;
  cfg.num_layers = layers;
  cfg.conditional = conditional;
  SeqModel model(cfg);
  model.init_params(seed);
  return model;
}

// ---- MLE probe: value route and tape route over the same teacher pass ----

inline double mle_value(const SeqModel& model, const TokenSeq& targets,
                        const TokenSeq* src) {
  Tape tape;
  const DecodeTrace trace = model.forward_teacher(tape, targets, src);
  return mle_loss(trace, targets);
}

inline void mle_backward(SeqModel& model, const TokenSeq& targets,
                         const TokenSeq* src) {
  Tape tape;
  const DecodeTrace trace = model.forward_teacher(tape, targets, src);
  std::vector<Tape::Var> terms;
  for (size_t t = 0; t < targets.size(); ++t)
    terms.push_back(tape.log_softmax_pick(trace.logit_vars[t], targets[t]));
  const auto root = tape.scale(tape.sum_scalars(terms), -1.0);
  model.zero_grads();
  tape.backward(root);
}

// ---- frozen-plan OT probe ----
//
// The student trajectory is sampled once and its token sequence frozen; the
// transport plan is solved once at the initial parameters and frozen. The
// probed scalar <M*, C(theta)> is then a smooth function of theta alone:
// re-running the passes with the frozen tokens reproduces the feature
// computation of the original sample.

struct FrozenOtProbe {
  TokenSeq ref;         // reference tokens (no EOS)
  TokenSeq gen_tokens;  // frozen student emission (may end in EOS)
  int gen_rows = 0;
  CostMode mode;
  Matrix plan;
  Matrix penalty;  // zero outside ordered mode
};

struct OtFeatureVars {
  std::vector<Tape::Var> ref_vars;
  std::vector<Tape::Var> gen_vars;
  FeatureSequence ref_features;
  FeatureSequence gen_features;
};

inline OtFeatureVars frozen_ot_features(SeqModel& model, Tape& tape,
                                        const FrozenOtProbe& probe,
                                        const TokenSeq* src) {
  OtFeatureVars out;
  TokenSeq targets = probe.ref;
  targets.push_back(kEosId);
  const DecodeTrace teacher = model.forward_teacher(tape, targets, src);
  const DecodeTrace student =
      model.forward_student(tape, src, static_cast<int>(probe.gen_tokens.size()),
                            SamplingPolicy{}, 0, &probe.gen_tokens);

  const int ref_rows = static_cast<int>(probe.ref.size());
  if (probe.mode.kind == CostKind::vanilla) {
    out.ref_vars = model.embed_sequence(tape, probe.ref);
    out.ref_features = model.embedding_features(probe.ref);
    out.gen_vars = model.embed_sequence(tape, student.tokens, probe.gen_rows);
    out.gen_features = model.embedding_features(student.tokens, probe.gen_rows);
  } else {
    out.ref_vars.assign(teacher.hidden_vars.begin(),
                        teacher.hidden_vars.begin() + ref_rows);
    out.ref_features = FeatureSequence{teacher.hidden_values.topRows(ref_rows),
                                       FeatureLayer::contextual};
    out.gen_vars.assign(student.hidden_vars.begin(),
                        student.hidden_vars.begin() + probe.gen_rows);
    out.gen_features =
        FeatureSequence{student.hidden_values.topRows(probe.gen_rows),
                        FeatureLayer::contextual};
  }
  return out;
}

inline FrozenOtProbe make_frozen_probe(SeqModel& model, const TokenSeq& ref,
                                       const TokenSeq* src,
                                       const CostMode& mode,
                                       const IpotConfig& ipot, int max_len,
                                       std::uint64_t seed) {
  FrozenOtProbe probe;
  probe.ref = ref;
  probe.mode = mode;
  {
    Tape tape;
    const DecodeTrace student = model.forward_student(
        tape, src, max_len,
        SamplingPolicy{SamplingPolicy::Kind::categorical, 1.0}, seed);
    probe.gen_tokens = student.tokens;
    probe.gen_rows = std::max(1, student.content_length());
  }
  Tape tape;
  const OtFeatureVars vars = frozen_ot_features(model, tape, probe, src);
  const Matrix cost =
      build_cost(vars.ref_features, vars.gen_features, mode);
  probe.plan = ipot_solve(cost, SimplexWeights::uniform(cost.rows()),
                          SimplexWeights::uniform(cost.cols()), ipot)
                   .m;
  probe.penalty = mode.kind == CostKind::contextual_ordered
                      ? order_penalty_matrix(cost.rows(), cost.cols(), mode.beta)
                      : Matrix::Zero(cost.rows(), cost.cols());
  return probe;
}

inline double frozen_ot_value(SeqModel& model, const FrozenOtProbe& probe,
                              const TokenSeq* src) {
  Tape tape;
  const OtFeatureVars vars = frozen_ot_features(model, tape, probe, src);
  const Matrix cost =
      build_cost(vars.ref_features, vars.gen_features, probe.mode);
  return ot_objective(cost, probe.plan);
}

inline void frozen_ot_backward(SeqModel& model, const FrozenOtProbe& probe,
                               const TokenSeq* src) {
  Tape tape;
  const OtFeatureVars vars = frozen_ot_features(model, tape, probe, src);
  const bool ordered = probe.mode.kind == CostKind::contextual_ordered;
  const auto root = tape.transport_cosine_cost(
      vars.ref_vars, vars.gen_vars, probe.plan,
      ordered ? &probe.penalty : nullptr);
  model.zero_grads();
  tape.backward(root);
}

}  // namespace seqot::testing

#endif  // SEQOT_TESTS_FIXTURES_HPP
