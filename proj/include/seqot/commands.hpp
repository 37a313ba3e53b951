#ifndef SEQOT_COMMANDS_HPP
#define SEQOT_COMMANDS_HPP

#include "seqot/config.hpp"

namespace seqot {

// Training driver: runs the configured objective over the configured corpus
// and writes metrics.csv, checkpoint.bin and summary.json into out_dir.
int cmd_train(const RunConfig& config);

// Decodes the test split via student forcing and writes BLEU (plus
// Self-BLEU / BLEU-F1 for unconditional models) and per-length-bucket
// reports.
int cmd_eval(const RunConfig& config);

// Reverse-temperature sweep over an unconditional checkpoint; emits the
// per-alpha metric CSV and the (negative BLEU, Self-BLEU) plot data.
int cmd_sweep(const RunConfig& config);

struct OtCommandArgs {
  std::string file_a;
  std::string file_b;
  std::string cost = "vanilla";
  double beta = 0.1;
  int random_dim = 16;      // tied random embeddings when no checkpoint given
  std::uint64_t seed = 42;
  std::string checkpoint;
  std::string vocab_path;
  std::string dump_plan;    // optional plan CSV
  std::string dump_cost;    // optional cost-matrix CSV
  IpotConfig ipot{};
};

// Standalone transport distance between the two single-sequence files.
int cmd_ot(const OtCommandArgs& args);

int run_cli(int argc, char** argv);

}  // namespace seqot

#endif  // SEQOT_COMMANDS_HPP
