#ifndef SEQOT_TRAIN_HPP
#define SEQOT_TRAIN_HPP

#include <functional>
#include <optional>

#include "seqot/corpus.hpp"
#include "seqot/cost.hpp"
#include "seqot/model.hpp"
#include "seqot/ot.hpp"

namespace seqot {

enum class Objective { mle, tfot, sfot, scheduled_sampling };

const char* objective_name(Objective o);
Objective objective_from_name(const std::string& name);

struct TrainConfig {
  Objective objective = Objective::mle;
  double lambda = 0.0;  // OT weight
  CostMode cost_mode{CostKind::contextual_ordered, 0.1};
  double ss_ratio = 0.3;
  enum class Opt { sgd, adam };
  Opt optimizer = Opt::adam;
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 1;
  int max_steps = 0;  // 0: bounded by epochs only
  std::uint64_t seed = 42;
  SamplingPolicy student_policy{SamplingPolicy::Kind::categorical, 1.0};
  int max_gen_len = 64;
  IpotConfig ipot{};
  bool per_token_mle = false;
  bool log_wall_time = false;

  void validate() const;
};

struct LossBreakdown {
  double mle_term = 0.0;
  double ot_term = 0.0;
  double total = 0.0;
};

struct StepRecord {
  int step = 0;
  int epoch = 0;
  Objective objective = Objective::mle;
  LossBreakdown loss;
  long long wall_ms = 0;
};

// Negated teacher-forcing log-likelihood of the targets, recomputed from the
// trace logits. Per sequence; batch averaging happens in the step.
double mle_loss(const DecodeTrace& trace, const TokenSeq& targets,
                bool per_token = false);

// <M*, C> for the cost built from the given features under uniform marginals.
double ot_regularizer(const TokenSeq& ref_tokens,
                      const FeatureSequence& ref_features,
                      const FeatureSequence& gen_features, const CostMode& mode,
                      const IpotConfig& ipot);

struct OtTermDetail {
  double value = 0.0;
  Matrix cost;       // effective cost (penalty already subtracted in ordered mode)
  Matrix base_cost;  // cosine part
  Matrix penalty;    // zero matrix outside ordered mode
  TransportPlan plan;
};

OtTermDetail ot_regularizer_detail(const FeatureSequence& ref_features,
                                   const FeatureSequence& gen_features,
                                   const CostMode& mode,
                                   const IpotConfig& ipot);

// First-moment/second-moment (adam) or plain sgd updates over a fixed tensor
// list. State is kept per tensor index.
class Optimizer {
 public:
  Optimizer(TrainConfig::Opt kind, double learning_rate,
            const std::vector<Tensor*>& tensors);
  void step(const std::vector<Tensor*>& tensors);

 private:
  TrainConfig::Opt kind_;
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  int t_ = 0;
  std::vector<Matrix> m_, v_;
};

struct TrainingDiverged : std::runtime_error {
  explicit TrainingDiverged(const std::string& what)
      : std::runtime_error(what) {}
};

// One optimizer update on a batch. `global_step` seeds the per-step sampling
// streams; RNG use is isolated per objective so that degenerate settings
// (lambda = 0, ss_ratio = 0) reduce to the plain MLE step bit-for-bit.
LossBreakdown train_step(const std::vector<const Pair*>& batch, SeqModel& model,
                         Optimizer& opt, const TrainConfig& config,
                         int global_step);

LossBreakdown mle_step(const std::vector<const Pair*>& batch, SeqModel& model,
                       Optimizer& opt, const TrainConfig& config,
                       int global_step);
LossBreakdown sfot_step(const std::vector<const Pair*>& batch, SeqModel& model,
                        Optimizer& opt, const TrainConfig& config,
                        int global_step);
LossBreakdown tfot_step(const std::vector<const Pair*>& batch, SeqModel& model,
                        Optimizer& opt, const TrainConfig& config,
                        int global_step);
LossBreakdown scheduled_sampling_step(const std::vector<const Pair*>& batch,
                                      SeqModel& model, Optimizer& opt,
                                      const TrainConfig& config,
                                      int global_step);

// Shuffled-minibatch loop over the dataset. Deterministic given
// (corpus, config, seed). The callback, when set, runs every
// `callback_every` steps (and once at the end).
std::vector<StepRecord> train(
    const Dataset& data, SeqModel& model, const TrainConfig& config,
    const std::function<void(int step)>& callback = nullptr,
    int callback_every = 0);

}  // namespace seqot

#endif  // SEQOT_TRAIN_HPP
