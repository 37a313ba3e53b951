#include "seqot/train.hpp"

#include <chrono>
#include <cmath>

namespace seqot {

const char* objective_name(Objective o) {
  switch (o) {
    case Objective::mle: return "mle";
    case Objective::tfot: return "tfot";
    case Objective::sfot: return "sfot";
    case Objective::scheduled_sampling: return "ss";
  }
  return "?";
}

Objective objective_from_name(const std::string& name) {
  if (name == "mle") return Objective::mle;
  if (name == "tfot") return Objective::tfot;
  if (name == "sfot") return Objective::sfot;
  if (name == "ss" || name == "scheduled_sampling")
    return Objective::scheduled_sampling;
  throw std::invalid_argument("unknown objective: " + name);
}

void TrainConfig::validate() const {
  if (lambda < 0.0) throw std::invalid_argument("train: lambda must be >= 0");
  if (ss_ratio < 0.0 || ss_ratio > 1.0)
    throw std::invalid_argument("train: ss_ratio outside [0,1]");
  if (!(learning_rate > 0.0))
    throw std::invalid_argument("train: learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size < 1");
  if (epochs < 1 && max_steps < 1)
    throw std::invalid_argument("train: need epochs >= 1 or max_steps >= 1");
  if (max_gen_len < 1) throw std::invalid_argument("train: max_gen_len < 1");
  cost_mode.validate();
  ipot.validate();
  student_policy.validate();
}

double mle_loss(const DecodeTrace& trace, const TokenSeq& targets,
                bool per_token) {
  if (static_cast<size_t>(trace.length()) != targets.size())
    throw std::invalid_argument("mle_loss: trace/target length mismatch");
  double total = 0.0;
  for (Eigen::Index t = 0; t < trace.length(); ++t) {
    const Vector row = trace.step_logits.row(t).transpose();
    total += row[targets[static_cast<size_t>(t)]] - log_sum_exp(row);
  }
  double loss = -total;
  if (per_token) loss /= static_cast<double>(targets.size());
  return loss;
}

OtTermDetail ot_regularizer_detail(const FeatureSequence& ref_features,
                                   const FeatureSequence& gen_features,
                                   const CostMode& mode,
                                   const IpotConfig& ipot) {
  OtTermDetail detail;
  detail.cost = build_cost(ref_features, gen_features, mode);
  detail.base_cost = cosine_cost(ref_features, gen_features);
  detail.penalty =
      mode.kind == CostKind::contextual_ordered
          ? order_penalty_matrix(detail.cost.rows(), detail.cost.cols(),
                                 mode.beta)
          : Matrix::Zero(detail.cost.rows(), detail.cost.cols());
  detail.plan = ipot_solve(detail.cost,
                           SimplexWeights::uniform(detail.cost.rows()),
                           SimplexWeights::uniform(detail.cost.cols()), ipot);
  detail.value = ot_objective(detail.cost, detail.plan);
  return detail;
}

double ot_regularizer(const TokenSeq& ref_tokens,
                      const FeatureSequence& ref_features,
                      const FeatureSequence& gen_features, const CostMode& mode,
                      const IpotConfig& ipot) {
  if (ref_tokens.empty())
    throw std::invalid_argument("ot_regularizer: empty reference");
  if (ref_features.length() != static_cast<Eigen::Index>(ref_tokens.size()))
    throw std::invalid_argument(
        "ot_regularizer: reference feature rows do not match token count");
  return ot_regularizer_detail(ref_features, gen_features, mode, ipot).value;
}

Optimizer::Optimizer(TrainConfig::Opt kind, double learning_rate,
                     const std::vector<Tensor*>& tensors)
    : kind_(kind), lr_(learning_rate) {
  if (!(lr_ > 0.0)) throw std::invalid_argument("optimizer: lr must be > 0");
  if (kind_ == TrainConfig::Opt::adam) {
    for (const Tensor* t : tensors) {
      m_.push_back(Matrix::Zero(t->value.rows(), t->value.cols()));
      v_.push_back(Matrix::Zero(t->value.rows(), t->value.cols()));
    }
  }
}

void Optimizer::step(const std::vector<Tensor*>& tensors) {
  if (kind_ == TrainConfig::Opt::sgd) {
    for (Tensor* t : tensors) t->value -= lr_ * t->grad;
    return;
  }
  if (tensors.size() != m_.size())
    throw std::invalid_argument("optimizer: tensor list changed");
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < tensors.size(); ++i) {
    Tensor* t = tensors[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * t->grad;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * t->grad.cwiseProduct(t->grad);
    const Matrix mhat = m_[i] / bc1;
    const Matrix vhat = v_[i] / bc2;
    t->value.array() -=
        lr_ * mhat.array() / (vhat.array().sqrt() + eps_);
  }
}

namespace {

struct ExampleLoss {
  Tape::Var nll = -1;
  Tape::Var ot = -1;  // -1 when the OT term is off
};

TokenSeq with_eos(const TokenSeq& target) {
  TokenSeq t = target;
  t.push_back(kEosId);
  return t;
}

Tape::Var build_nll(Tape& tape, const DecodeTrace& trace,
                    const TokenSeq& targets, bool per_token) {
  std::vector<Tape::Var> terms;
  terms.reserve(targets.size());
  for (size_t t = 0; t < targets.size(); ++t)
    terms.push_back(
        tape.log_softmax_pick(trace.logit_vars[t], targets[t]));
  const double scale =
      per_token ? -1.0 / static_cast<double>(targets.size()) : -1.0;
  return tape.scale(tape.sum_scalars(terms), scale);
}

// OT term on the tape: features -> cost -> frozen IPOT plan -> fused node.
Tape::Var build_ot_term(Tape& tape, SeqModel& model, const TrainConfig& config,
                        const Pair& example, const DecodeTrace& teacher,
                        const DecodeTrace* student) {
  const int ref_rows = static_cast<int>(example.target.size());
  const CostMode& mode = config.cost_mode;
  const bool contextual = mode.kind != CostKind::vanilla;

  std::vector<Tape::Var> ref_vars;
  FeatureSequence ref_features;
  if (contextual) {
    ref_vars.assign(teacher.hidden_vars.begin(),
                    teacher.hidden_vars.begin() + ref_rows);
    ref_features = FeatureSequence{teacher.hidden_values.topRows(ref_rows),
                                   FeatureLayer::contextual};
  } else {
    ref_vars = model.embed_sequence(tape, example.target);
    ref_features = model.embedding_features(example.target);
  }

  std::vector<Tape::Var> gen_vars;
  FeatureSequence gen_features;
  if (student) {
    const int gen_rows = std::max(1, student->content_length());
    if (contextual) {
      gen_vars.assign(student->hidden_vars.begin(),
                      student->hidden_vars.begin() + gen_rows);
      gen_features = FeatureSequence{student->hidden_values.topRows(gen_rows),
                                     FeatureLayer::contextual};
    } else {
      gen_vars = model.embed_sequence(tape, student->tokens, gen_rows);
      gen_features = model.embedding_features(student->tokens, gen_rows);
    }
  } else {
    // teacher-trace matching: the generated side is the sampled trace
    if (contextual) {
      gen_vars = ref_vars;
      gen_features = ref_features;
    } else {
      gen_vars = model.embed_sequence(tape, teacher.tokens, ref_rows);
      gen_features = model.embedding_features(teacher.tokens, ref_rows);
    }
  }

  const Matrix cost = build_cost(ref_features, gen_features, mode);
  const TransportPlan plan =
      ipot_solve(cost, SimplexWeights::uniform(cost.rows()),
                 SimplexWeights::uniform(cost.cols()), config.ipot);

  if (mode.kind == CostKind::contextual_ordered) {
    const Matrix penalty =
        order_penalty_matrix(cost.rows(), cost.cols(), mode.beta);
    return tape.transport_cosine_cost(ref_vars, gen_vars, plan.m, &penalty);
  }
  return tape.transport_cosine_cost(ref_vars, gen_vars, plan.m, nullptr);
}

}  // namespace

LossBreakdown train_step(const std::vector<const Pair*>& batch, SeqModel& model,
                         Optimizer& opt, const TrainConfig& config,
                         int global_step) {
  config.validate();
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");

  const Objective obj = config.objective;
  const bool use_ot =
      (obj == Objective::sfot || obj == Objective::tfot) && config.lambda > 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  model.zero_grads();
  Tape tape;
  double mle_sum = 0.0;
  double ot_sum = 0.0;

  for (size_t b = 0; b < batch.size(); ++b) {
    const Pair& ex = *batch[b];
    const TokenSeq* src = ex.source ? &*ex.source : nullptr;
    const TokenSeq targets = with_eos(ex.target);
    tape.clear();

    DecodeTrace teacher;
    if (obj == Objective::scheduled_sampling && config.ss_ratio > 0.0) {
      teacher = model.forward_scheduled(
          tape, targets, src, config.ss_ratio, config.student_policy,
          mix64(config.seed, 0x55AA, static_cast<std::uint64_t>(global_step),
                b));
    } else if (obj == Objective::tfot && use_ot &&
               config.cost_mode.kind == CostKind::vanilla) {
      // the trace tokens feed the cost matrix, so they are sampled from the
      // per-step distributions rather than argmaxed
      teacher = model.forward_teacher(
          tape, targets, src, config.student_policy,
          mix64(config.seed, 0x7F07, static_cast<std::uint64_t>(global_step),
                b));
    } else {
      teacher = model.forward_teacher(tape, targets, src);
    }

    ExampleLoss loss;
    loss.nll = build_nll(tape, teacher, targets, config.per_token_mle);
    if (!std::isfinite(tape.scalar(loss.nll)))
      throw TrainingDiverged("non-finite loss at step " +
                             std::to_string(global_step));

    Tape::Var root = loss.nll;
    if (use_ot) {
      std::optional<DecodeTrace> student;
      if (obj == Objective::sfot) {
        student = model.forward_student(
            tape, src, config.max_gen_len, config.student_policy,
            mix64(config.seed, 0x5F07, static_cast<std::uint64_t>(global_step),
                  b));
      }
      loss.ot = build_ot_term(tape, model, config, ex, teacher,
                              student ? &*student : nullptr);
      root = tape.add_scaled(loss.nll, loss.ot, config.lambda);
    }

    const double root_val = tape.scalar(root);
    if (!std::isfinite(root_val))
      throw TrainingDiverged("non-finite loss at step " +
                             std::to_string(global_step));
    tape.backward(root, inv_b);

    mle_sum += tape.scalar(loss.nll);
    if (loss.ot >= 0) ot_sum += tape.scalar(loss.ot);
  }

  opt.step(model.tensors());

  LossBreakdown out;
  out.mle_term = mle_sum * inv_b;
  out.ot_term = ot_sum * inv_b;
  out.total = out.mle_term + config.lambda * out.ot_term;
  return out;
}

namespace {

LossBreakdown step_with_objective(const std::vector<const Pair*>& batch,
                                  SeqModel& model, Optimizer& opt,
                                  TrainConfig config, Objective obj,
                                  int global_step) {
  config.objective = obj;
  return train_step(batch, model, opt, config, global_step);
}

}  // namespace

LossBreakdown mle_step(const std::vector<const Pair*>& batch, SeqModel& model,
                       Optimizer& opt, const TrainConfig& config,
                       int global_step) {
  return step_with_objective(batch, model, opt, config, Objective::mle,
                             global_step);
}

LossBreakdown sfot_step(const std::vector<const Pair*>& batch, SeqModel& model,
                        Optimizer& opt, const TrainConfig& config,
                        int global_step) {
  return step_with_objective(batch, model, opt, config, Objective::sfot,
                             global_step);
}

LossBreakdown tfot_step(const std::vector<const Pair*>& batch, SeqModel& model,
                        Optimizer& opt, const TrainConfig& config,
                        int global_step) {
  return step_with_objective(batch, model, opt, config, Objective::tfot,
                             global_step);
}

LossBreakdown scheduled_sampling_step(const std::vector<const Pair*>& batch,
                                      SeqModel& model, Optimizer& opt,
                                      const TrainConfig& config,
                                      int global_step) {
  return step_with_objective(batch, model, opt, config,
                             Objective::scheduled_sampling, global_step);
}

std::vector<StepRecord> train(const Dataset& data, SeqModel& model,
                              const TrainConfig& config,
                              const std::function<void(int step)>& callback,
                              int callback_every) {
  config.validate();
  data.validate();
  if (data.pairs.empty()) throw std::invalid_argument("train: empty corpus");
  if (data.conditional != model.config().conditional)
    throw std::invalid_argument(
        "train: dataset conditionality does not match model");

  Optimizer opt(config.optimizer, config.learning_rate,
                model.tensors());
  std::vector<StepRecord> records;
  int global_step = 0;
  bool done = false;

  std::vector<size_t> order(data.pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  const int epochs = config.epochs < 1 ? 1 << 30 : config.epochs;
  for (int epoch = 0; epoch < epochs && !done; ++epoch) {
    auto rng = make_rng(mix64(config.seed, 0x0EF5,
                              static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);

    for (size_t start = 0; start < order.size() && !done;
         start += static_cast<size_t>(config.batch_size)) {
      const size_t end = std::min(
          order.size(), start + static_cast<size_t>(config.batch_size));
      std::vector<const Pair*> batch;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i)
        batch.push_back(&data.pairs[order[i]]);

      const auto t0 = std::chrono::steady_clock::now();
      const LossBreakdown loss =
          train_step(batch, model, opt, config, global_step);
      long long wall_ms = 0;
      if (config.log_wall_time) {
        wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
      }

      records.push_back(
          StepRecord{global_step, epoch, config.objective, loss, wall_ms});
      ++global_step;
      if (callback && callback_every > 0 && global_step % callback_every == 0)
        callback(global_step);
      if (config.max_steps > 0 && global_step >= config.max_steps) done = true;
    }
  }

  if (callback) callback(global_step);
  return records;
}

}  // namespace seqot
