#ifndef SEQOT_CONFIG_HPP
#define SEQOT_CONFIG_HPP

#include <string>
#include <vector>

#include "seqot/train.hpp"

namespace seqot {

// Flat run configuration backing every CLI command. Loaded from a
// `key = value` text file; unknown keys are rejected. Command-line flags
// override file values, file values override the built-in defaults.
struct RunConfig {
  // model
  int embed_dim = 64;
  int hidden_dim = 64;
  int num_layers = 1;

  // data
  std::string task = "copy";  // copy | reverse | file
  std::string train_path, dev_path, test_path, vocab_path;
  int vocab_min_freq = 1;
  int max_len = 64;
  bool conditional = true;  // file task only; synth tasks are conditional
  int synth_vocab_size = 20;
  int synth_min_len = 5;
  int synth_max_len = 30;
  int synth_train = 2000;
  int synth_dev = 200;
  int synth_test = 200;

  // training
  std::string objective = "mle";  // mle | tfot | sfot | ss
  double lambda = -1.0;           // <0: default by task (0.1 cond, 1.0 uncond)
  double beta = 0.1;
  std::string cost = "contextual_ordered";
  double ss_ratio = 0.3;
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  int batch_size = 32;
  int epochs = 10;
  int max_steps = 0;
  std::uint64_t seed = 42;
  double sample_alpha = 1.0;
  bool student_greedy = false;
  int max_gen_len = 64;
  bool per_token_mle = false;
  bool log_wall_time = false;
  int checkpoint_every = 0;
  int eval_every = 0;
  bool eval_greedy = true;

  // ipot
  double ipot_epsilon = 1.0;
  int ipot_outer = 50;
  int ipot_inner = 1;
  double ipot_tol = 1e-6;

  // eval / sweep
  std::string alphas = "1.0";
  int samples_per_alpha = 64;
  std::string bucket_edges = "10,20,30";
  int bleu_order = 4;

  // io
  std::string out_dir = "out";
  std::string checkpoint;

  static RunConfig from_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  void validate() const;
  bool task_conditional() const;
  double effective_lambda() const;

  TrainConfig train_config() const;
  std::vector<double> alpha_list() const;
  std::vector<int> bucket_edge_list() const;

  // deterministic key=value dump; feeds the config hash and summary echo
  std::vector<std::pair<std::string, std::string>> items() const;
  std::string canonical() const;
  std::uint64_t hash() const;
};

std::vector<double> parse_double_list(const std::string& csv);
std::vector<int> parse_int_list(const std::string& csv);

}  // namespace seqot

#endif  // SEQOT_CONFIG_HPP
