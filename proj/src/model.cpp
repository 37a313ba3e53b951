#include "seqot/model.hpp"

#include <cmath>

namespace seqot {

void ModelConfig::validate() const {
  if (vocab_size < kNumReserved)
    throw std::invalid_argument("model: vocab_size must cover reserved ids");
  if (embed_dim < 1 || hidden_dim < 1)
    throw std::invalid_argument("model: dims must be >= 1");
  if (num_layers < 1)
    throw std::invalid_argument("model: num_layers must be >= 1");
}

int DecodeTrace::content_length() const {
  for (size_t t = 0; t < tokens.size(); ++t)
    if (tokens[t] == kEosId) return static_cast<int>(t);
  return static_cast<int>(tokens.size());
}

SeqModel::GruLayer::GruLayer(const std::string& prefix, int in_dim,
                             int hidden_dim)
    : wz(prefix + ".wz", hidden_dim, in_dim),
      uz(prefix + ".uz", hidden_dim, hidden_dim),
      bz(prefix + ".bz", hidden_dim, 1),
      wr(prefix + ".wr", hidden_dim, in_dim),
      ur(prefix + ".ur", hidden_dim, hidden_dim),
      br(prefix + ".br", hidden_dim, 1),
      wh(prefix + ".wh", hidden_dim, in_dim),
      uh(prefix + ".uh", hidden_dim, hidden_dim),
      bh(prefix + ".bh", hidden_dim, 1) {}

void SeqModel::GruLayer::collect(std::vector<Tensor*>& out) {
  for (Tensor* t : {&wz, &uz, &bz, &wr, &ur, &br, &wh, &uh, &bh})
    out.push_back(t);
}

SeqModel::SeqModel(ModelConfig config) : config_(config) {
  config_.validate();
  embedding_ = std::make_unique<Tensor>("embedding", config_.vocab_size,
                                        config_.embed_dim);
  for (int l = 0; l < config_.num_layers; ++l) {
    const int in_dim = l == 0 ? config_.embed_dim : config_.hidden_dim;
    decoder_.push_back(std::make_unique<GruLayer>(
        "dec.l" + std::to_string(l), in_dim, config_.hidden_dim));
    if (config_.conditional)
      encoder_.push_back(std::make_unique<GruLayer>(
          "enc.l" + std::to_string(l), in_dim, config_.hidden_dim));
  }
  out_w_ = std::make_unique<Tensor>("out.w", config_.vocab_size,
                                    config_.hidden_dim);
  out_b_ = std::make_unique<Tensor>("out.b", config_.vocab_size, 1);
}

std::vector<Tensor*> SeqModel::tensors() {
  std::vector<Tensor*> out;
  out.push_back(embedding_.get());
  for (auto& l : encoder_) l->collect(out);
  for (auto& l : decoder_) l->collect(out);
  out.push_back(out_w_.get());
  out.push_back(out_b_.get());
  return out;
}

std::vector<const Tensor*> SeqModel::tensors() const {
  auto mut = const_cast<SeqModel*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

void SeqModel::init_params(std::uint64_t seed) {
  auto rng = make_rng(mix64(seed, 0xA111));
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  for (Tensor* t : tensors()) {
    for (Eigen::Index i = 0; i < t->value.rows(); ++i)
      for (Eigen::Index j = 0; j < t->value.cols(); ++j)
        t->value(i, j) = dist(rng);
    t->zero_grad();
  }
}

void SeqModel::zero_grads() {
  for (Tensor* t : tensors()) t->zero_grad();
}

void SeqModel::check_tokens(const TokenSeq& tokens, const char* what) const {
  for (int tok : tokens)
    if (tok < 0 || tok >= config_.vocab_size)
      throw std::invalid_argument(std::string(what) +
                                  ": token id out of vocabulary");
}

Tape::Var SeqModel::gru_step(Tape& tape, GruLayer& layer, Tape::Var input,
                             Tape::Var h_prev) const {
  const Tape::Var z = tape.sigmoid(
      tape.add(tape.affine(layer.wz, input, &layer.bz),
               tape.affine(layer.uz, h_prev, nullptr)));
  const Tape::Var r = tape.sigmoid(
      tape.add(tape.affine(layer.wr, input, &layer.br),
               tape.affine(layer.ur, h_prev, nullptr)));
  const Tape::Var cand = tape.tanh(
      tape.add(tape.affine(layer.wh, input, &layer.bh),
               tape.affine(layer.uh, tape.mul(r, h_prev), nullptr)));
  // h = (1 - z) (.) h_prev + z (.) cand
  return tape.add(h_prev, tape.mul(z, tape.sub(cand, h_prev)));
}

std::vector<Tape::Var> SeqModel::encode(Tape& tape,
                                        const TokenSeq& source) const {
  if (source.empty())
    throw std::invalid_argument("encode: empty source sequence");
  check_tokens(source, "encode");
  const Vector zero = Vector::Zero(config_.hidden_dim);
  std::vector<Tape::Var> h(encoder_.size());
  for (size_t l = 0; l < encoder_.size(); ++l) h[l] = tape.leaf(zero);
  for (int tok : source) {
    Tape::Var in = tape.embed(*embedding_, tok);
    for (size_t l = 0; l < encoder_.size(); ++l) {
      h[l] = gru_step(tape, *encoder_[l], in, h[l]);
      in = h[l];
    }
  }
  return h;
}

std::vector<Tape::Var> SeqModel::initial_state(Tape& tape,
                                               const TokenSeq* source) const {
  if (config_.conditional) {
    if (!source)
      throw std::invalid_argument("decode: conditional model needs a source");
    return encode(tape, *source);
  }
  if (source)
    throw std::invalid_argument("decode: unconditional model got a source");
  const Vector zero = Vector::Zero(config_.hidden_dim);
  std::vector<Tape::Var> h(decoder_.size());
  for (size_t l = 0; l < decoder_.size(); ++l) h[l] = tape.leaf(zero);
  return h;
}

int SeqModel::sample_token(const Vector& logits, const SamplingPolicy& policy,
                           std::mt19937_64& rng) {
  if (policy.kind == SamplingPolicy::Kind::greedy) {
    Eigen::Index best = 0;
    logits.maxCoeff(&best);
    return static_cast<int>(best);
  }
  const Vector probs = softmax(policy.alpha * logits);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const double u = dist(rng);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

DecodeTrace SeqModel::forward_teacher(Tape& tape, const TokenSeq& x,
                                      const TokenSeq* source,
                                      const SamplingPolicy& policy,
                                      std::uint64_t seed) const {
  if (x.empty()) throw std::invalid_argument("forward_teacher: empty target");
  check_tokens(x, "forward_teacher");
  policy.validate();

  auto rng = make_rng(mix64(seed, 0x7E4C));
  std::vector<Tape::Var> h = initial_state(tape, source);
  const int steps = static_cast<int>(x.size());

  DecodeTrace trace;
  trace.mode = TraceMode::teacher;
  trace.step_logits.resize(steps, config_.vocab_size);
  trace.hidden_values.resize(steps, config_.hidden_dim);

  for (int t = 0; t < steps; ++t) {
    const int fed = t == 0 ? kStartId : x[static_cast<size_t>(t - 1)];
    trace.fed_tokens.push_back(fed);
    Tape::Var in = tape.embed(*embedding_, fed);
    for (size_t l = 0; l < decoder_.size(); ++l) {
      h[l] = gru_step(tape, *decoder_[l], in, h[l]);
      in = h[l];
    }
    const Tape::Var logits = tape.affine(*out_w_, h.back(), out_b_.get());
    trace.logit_vars.push_back(logits);
    trace.hidden_vars.push_back(h.back());
    trace.step_logits.row(t) = tape.value(logits).transpose();
    trace.hidden_values.row(t) = tape.value(h.back()).transpose();
    trace.tokens.push_back(sample_token(tape.value(logits), policy, rng));
  }
  return trace;
}

DecodeTrace SeqModel::forward_student(Tape& tape, const TokenSeq* source,
                                      int max_len,
                                      const SamplingPolicy& policy,
                                      std::uint64_t seed,
                                      const TokenSeq* forced_tokens) const {
  if (max_len < 1) throw std::invalid_argument("forward_student: max_len < 1");
  policy.validate();
  if (forced_tokens) {
    if (forced_tokens->empty())
      throw std::invalid_argument("forward_student: empty forced script");
    check_tokens(*forced_tokens, "forward_student(forced)");
  }

  auto rng = make_rng(mix64(seed, 0x57D7));
  std::vector<Tape::Var> h = initial_state(tape, source);

  int limit = max_len;
  if (forced_tokens)
    limit = std::min(limit, static_cast<int>(forced_tokens->size()));

  DecodeTrace trace;
  trace.mode = TraceMode::student;
  std::vector<Vector> logits_rows;
  std::vector<Vector> hidden_rows;

  int prev = kStartId;
  for (int t = 0; t < limit; ++t) {
    trace.fed_tokens.push_back(prev);
    Tape::Var in = tape.embed(*embedding_, prev);
    for (size_t l = 0; l < decoder_.size(); ++l) {
      h[l] = gru_step(tape, *decoder_[l], in, h[l]);
      in = h[l];
    }
    const Tape::Var logits = tape.affine(*out_w_, h.back(), out_b_.get());
    trace.logit_vars.push_back(logits);
    trace.hidden_vars.push_back(h.back());
    logits_rows.push_back(tape.value(logits));
    hidden_rows.push_back(tape.value(h.back()));

    const int tok = forced_tokens
                        ? (*forced_tokens)[static_cast<size_t>(t)]
                        : sample_token(tape.value(logits), policy, rng);
    trace.tokens.push_back(tok);
    if (tok == kEosId) break;
    prev = tok;
  }

  const int steps = static_cast<int>(trace.tokens.size());
  trace.step_logits.resize(steps, config_.vocab_size);
  trace.hidden_values.resize(steps, config_.hidden_dim);
  for (int t = 0; t < steps; ++t) {
    trace.step_logits.row(t) = logits_rows[static_cast<size_t>(t)].transpose();
    trace.hidden_values.row(t) = hidden_rows[static_cast<size_t>(t)].transpose();
  }
  return trace;
}

DecodeTrace SeqModel::forward_scheduled(Tape& tape, const TokenSeq& x,
                                        const TokenSeq* source,
                                        double ss_ratio,
                                        const SamplingPolicy& policy,
                                        std::uint64_t seed) const {
  if (ss_ratio < 0.0 || ss_ratio > 1.0)
    throw std::invalid_argument("forward_scheduled: ss_ratio outside [0,1]");
  if (ss_ratio == 0.0) return forward_teacher(tape, x, source);
  if (x.empty()) throw std::invalid_argument("forward_scheduled: empty target");
  check_tokens(x, "forward_scheduled");
  policy.validate();

  auto rng = make_rng(mix64(seed, 0x5CED));
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<Tape::Var> h = initial_state(tape, source);
  const int steps = static_cast<int>(x.size());

  DecodeTrace trace;
  trace.mode = TraceMode::teacher;
  trace.step_logits.resize(steps, config_.vocab_size);
  trace.hidden_values.resize(steps, config_.hidden_dim);

  for (int t = 0; t < steps; ++t) {
    int fed;
    if (t == 0) {
      fed = kStartId;
    } else {
      const bool use_model = coin(rng) < ss_ratio;
      fed = use_model ? trace.tokens[static_cast<size_t>(t - 1)]
                      : x[static_cast<size_t>(t - 1)];
    }
    trace.fed_tokens.push_back(fed);
    Tape::Var in = tape.embed(*embedding_, fed);
    for (size_t l = 0; l < decoder_.size(); ++l) {
      h[l] = gru_step(tape, *decoder_[l], in, h[l]);
      in = h[l];
    }
    const Tape::Var logits = tape.affine(*out_w_, h.back(), out_b_.get());
    trace.logit_vars.push_back(logits);
    trace.hidden_vars.push_back(h.back());
    trace.step_logits.row(t) = tape.value(logits).transpose();
    trace.hidden_values.row(t) = tape.value(h.back()).transpose();
    trace.tokens.push_back(sample_token(tape.value(logits), policy, rng));
  }
  return trace;
}

double SeqModel::log_prob(const TokenSeq& x, const TokenSeq* source) const {
  Tape tape;
  const DecodeTrace trace = forward_teacher(tape, x, source);
  double total = 0.0;
  for (Eigen::Index t = 0; t < trace.length(); ++t) {
    const Vector row = trace.step_logits.row(t).transpose();
    total += row[x[static_cast<size_t>(t)]] - log_sum_exp(row);
  }
  return total;
}

std::vector<Tape::Var> SeqModel::embed_sequence(Tape& tape,
                                                const TokenSeq& tokens,
                                                int limit) const {
  check_tokens(tokens, "embed_sequence");
  const size_t n = limit < 0 ? tokens.size()
                             : std::min(tokens.size(), static_cast<size_t>(limit));
  std::vector<Tape::Var> vars;
  vars.reserve(n);
  for (size_t i = 0; i < n; ++i)
    vars.push_back(tape.embed(*embedding_, tokens[i]));
  return vars;
}

FeatureSequence SeqModel::embedding_features(const TokenSeq& tokens,
                                             int limit) const {
  check_tokens(tokens, "embedding_features");
  const size_t n = limit < 0 ? tokens.size()
                             : std::min(tokens.size(), static_cast<size_t>(limit));
  Matrix rows(static_cast<Eigen::Index>(n), config_.embed_dim);
  for (size_t i = 0; i < n; ++i)
    rows.row(static_cast<Eigen::Index>(i)) = embedding_->value.row(tokens[i]);
  return FeatureSequence{std::move(rows), FeatureLayer::embedding};
}

}  // namespace seqot
