#ifndef SEQOT_MODEL_HPP
#define SEQOT_MODEL_HPP

#include <memory>
#include <optional>

#include "seqot/tape.hpp"

namespace seqot {

struct ModelConfig {
  int vocab_size = 0;
  int embed_dim = 64;
  int hidden_dim = 64;
  int num_layers = 1;
  bool conditional = false;

  void validate() const;
};

struct SamplingPolicy {
  enum class Kind { greedy, categorical };
  Kind kind = Kind::greedy;
  double alpha = 1.0;  // reverse temperature: logits are multiplied by alpha

  void validate() const {
    if (!(alpha > 0.0))
      throw std::invalid_argument("sampling: alpha must be > 0");
  }
};

enum class TraceMode { teacher, student };

// One decoding pass: emitted tokens, the raw logits and top-layer hidden
// state per step, plus the tape handles needed to keep gradients alive.
struct DecodeTrace {
  TraceMode mode = TraceMode::teacher;
  TokenSeq tokens;      // emitted per step (student: includes a final EOS)
  TokenSeq fed_tokens;  // input consumed per step (starts with the start id)
  Matrix step_logits;   // T x V
  Matrix hidden_values; // T x H, top layer, the state each step predicts from
  std::vector<Tape::Var> logit_vars;
  std::vector<Tape::Var> hidden_vars;

  Eigen::Index length() const { return step_logits.rows(); }

  // tokens before the first EOS
  int content_length() const;

  FeatureSequence contextual_features() const {
    return FeatureSequence{hidden_values, FeatureLayer::contextual};
  }
};

// Gated recurrent stack with shared input embeddings, an optional encoder
// for conditional tasks, and a linear vocabulary projection.
class SeqModel {
 public:
  explicit SeqModel(ModelConfig config);

  const ModelConfig& config() const { return config_; }
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;
  Tensor& embedding() { return *embedding_; }

  void init_params(std::uint64_t seed);
  void zero_grads();

  // Teacher forcing: step t consumes the ground-truth token x[t-1] (start
  // token at t=0) and predicts x[t]. Trace tokens follow `policy`.
  DecodeTrace forward_teacher(Tape& tape, const TokenSeq& x,
                              const TokenSeq* source,
                              const SamplingPolicy& policy = {},
                              std::uint64_t seed = 0) const;

  // Student forcing: step t consumes the model's own previous emission.
  // Stops after emitting EOS or at max_len. `forced_tokens` overrides the
  // sampler (equivalence checks and frozen-trace re-evaluation).
  DecodeTrace forward_student(Tape& tape, const TokenSeq* source, int max_len,
                              const SamplingPolicy& policy, std::uint64_t seed,
                              const TokenSeq* forced_tokens = nullptr) const;

  // Teacher forcing where each step's input is, with probability ss_ratio,
  // the model's previous sampled token instead of ground truth.
  DecodeTrace forward_scheduled(Tape& tape, const TokenSeq& x,
                                const TokenSeq* source, double ss_ratio,
                                const SamplingPolicy& policy,
                                std::uint64_t seed) const;

  // sum_t log p(x_t | x_<t, source) under teacher forcing
  double log_prob(const TokenSeq& x, const TokenSeq* source) const;

  // Fresh embedding nodes for a token sequence (w0 features; gradients flow
  // into the table rows).
  std::vector<Tape::Var> embed_sequence(Tape& tape, const TokenSeq& tokens,
                                        int limit = -1) const;

  FeatureSequence embedding_features(const TokenSeq& tokens,
                                     int limit = -1) const;

 private:
  struct GruLayer {
    Tensor wz, uz, bz, wr, ur, br, wh, uh, bh;
    GruLayer(const std::string& prefix, int in_dim, int hidden_dim);
    void collect(std::vector<Tensor*>& out);
  };

  Tape::Var gru_step(Tape& tape, GruLayer& layer, Tape::Var input,
                     Tape::Var h_prev) const;
  std::vector<Tape::Var> initial_state(Tape& tape, const TokenSeq* source) const;
  std::vector<Tape::Var> encode(Tape& tape, const TokenSeq& source) const;

  static int sample_token(const Vector& logits, const SamplingPolicy& policy,
                          std::mt19937_64& rng);

  void check_tokens(const TokenSeq& tokens, const char* what) const;

  ModelConfig config_;
  std::unique_ptr<Tensor> embedding_;
  std::vector<std::unique_ptr<GruLayer>> decoder_;
  std::vector<std::unique_ptr<GruLayer>> encoder_;
  std::unique_ptr<Tensor> out_w_;
  std::unique_ptr<Tensor> out_b_;
};

}  // namespace seqot

#endif  // SEQOT_MODEL_HPP
