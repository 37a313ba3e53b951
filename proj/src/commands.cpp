#include "seqot/commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <climits>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "seqot/checkpoint.hpp"
#include "seqot/sweep.hpp"

namespace seqot {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hash_hex(std::uint64_t h) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << body;
  if (!out) throw std::runtime_error("write failed for " + path);
}

// every CSV gets a header row and the trailing provenance comment
std::string csv_footer(std::uint64_t config_hash) {
  return "# config_hash=" + hash_hex(config_hash) + " version=" + kVersion +
         "\n";
}

struct LoadedData {
  Vocabulary vocab;
  Dataset train, dev, test;
  bool conditional = false;
};

LoadedData load_data(const RunConfig& cfg) {
  LoadedData data;
  if (cfg.task == "copy" || cfg.task == "reverse") {
    const SynthKind kind =
        cfg.task == "copy" ? SynthKind::copy : SynthKind::reverse;
    data.vocab = synth_vocab(cfg.synth_vocab_size);
    data.train = synth_task(kind, cfg.synth_vocab_size, cfg.synth_min_len,
                            cfg.synth_max_len, cfg.synth_train,
                            mix64(cfg.seed, 1));
    data.dev = synth_task(kind, cfg.synth_vocab_size, cfg.synth_min_len,
                          cfg.synth_max_len, cfg.synth_dev,
                          mix64(cfg.seed, 2));
    data.test = synth_task(kind, cfg.synth_vocab_size, cfg.synth_min_len,
                           cfg.synth_max_len, cfg.synth_test,
                           mix64(cfg.seed, 3));
    data.dev.split = Split::dev;
    data.test.split = Split::test;
    data.conditional = true;
    return data;
  }

  if (!cfg.vocab_path.empty()) {
    data.vocab = Vocabulary::load(cfg.vocab_path);
  } else if (!cfg.train_path.empty()) {
    data.vocab = build_vocab(read_lines(cfg.train_path), cfg.vocab_min_freq);
  } else {
    throw std::invalid_argument("file task: need vocab_path or train_path");
  }
  data.conditional = cfg.conditional;
  if (!cfg.train_path.empty())
    data.train = load_parallel(cfg.train_path, data.vocab, cfg.conditional,
                               cfg.max_len, Split::train);
  if (!cfg.dev_path.empty())
    data.dev = load_parallel(cfg.dev_path, data.vocab, cfg.conditional,
                             cfg.max_len, Split::dev);
  if (!cfg.test_path.empty())
    data.test = load_parallel(cfg.test_path, data.vocab, cfg.conditional,
                              cfg.max_len, Split::test);
  data.dev.conditional = data.test.conditional = cfg.conditional;
  return data;
}

ModelConfig model_config_for(const RunConfig& cfg, int vocab_size,
                             bool conditional) {
  ModelConfig mc;
  mc.vocab_size = vocab_size;
  mc.embed_dim = cfg.embed_dim;
  mc.hidden_dim = cfg.hidden_dim;
  mc.num_layers = cfg.num_layers;
  mc.conditional = conditional;
  return mc;
}

std::vector<TokenSeq> targets_of(const Dataset& data) {
  std::vector<TokenSeq> out;
  out.reserve(data.pairs.size());
  for (const auto& p : data.pairs) out.push_back(p.target);
  return out;
}

double exact_match_rate(const SeqModel& model, const Dataset& data,
                        int max_gen_len, std::uint64_t seed, size_t cap) {
  const size_t n = std::min(cap, data.pairs.size());
  if (n == 0) return 0.0;
  Dataset subset;
  subset.conditional = data.conditional;
  subset.pairs.assign(data.pairs.begin(),
                      data.pairs.begin() + static_cast<long>(n));
  const auto hyps = decode_corpus(model, subset, SamplingPolicy{}, max_gen_len,
                                  seed);
  size_t hits = 0;
  for (size_t i = 0; i < n; ++i)
    if (hyps[i] == subset.pairs[i].target) ++hits;
  return static_cast<double>(hits) / static_cast<double>(n);
}

std::string metrics_csv_body(const std::vector<StepRecord>& records,
                             std::uint64_t config_hash) {
  std::string body = "step,epoch,objective,mle_term,ot_term,total,wall_ms\n";
  for (const auto& r : records) {
    body += std::to_string(r.step);
    body += ',';
    body += std::to_string(r.epoch);
    body += ',';
    body += objective_name(r.objective);
    body += ',';
    body += fmt(r.loss.mle_term);
    body += ',';
    body += fmt(r.loss.ot_term);
    body += ',';
    body += fmt(r.loss.total);
    body += ',';
    body += std::to_string(r.wall_ms);
    body += '\n';
  }
  body += csv_footer(config_hash);
  return body;
}

json config_echo(const RunConfig& cfg) {
  json j;
  for (const auto& [k, v] : cfg.items()) j[k] = v;
  return j;
}

}  // namespace

int cmd_train(const RunConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  LoadedData data = load_data(cfg);
  if (data.train.pairs.empty())
    throw std::invalid_argument("train: empty training corpus");

  const int vocab_size = data.vocab.size();
  SeqModel model(model_config_for(cfg, vocab_size, data.conditional));
  model.init_params(cfg.seed);

  TrainConfig tc = cfg.train_config();
  fs::create_directories(cfg.out_dir);

  double last_dev_accuracy = -1.0;
  auto callback = [&](int step) {
    if (cfg.eval_every > 0 && step % cfg.eval_every == 0 &&
        !data.dev.pairs.empty() && data.conditional) {
      const auto hyps = decode_corpus(model, data.dev, SamplingPolicy{},
                                      cfg.max_gen_len, mix64(cfg.seed, 0xDE7));
      double acc = 0.0;
      for (size_t i = 0; i < hyps.size(); ++i)
        acc += token_accuracy(hyps[i], data.dev.pairs[i].target);
      last_dev_accuracy = acc / static_cast<double>(hyps.size());
      std::cout << "step " << step << " dev token accuracy "
                << fmt(last_dev_accuracy) << "\n";
    }
    if (cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0)
      save_checkpoint(model, cfg.out_dir + "/checkpoint_step" +
                                 std::to_string(step) + ".bin");
  };

  const bool wants_callback = cfg.eval_every > 0 || cfg.checkpoint_every > 0;
  std::vector<StepRecord> records =
      train(data.train, model, tc,
            wants_callback ? callback : std::function<void(int)>{}, 1);

  const std::string ckpt_path = cfg.out_dir + "/checkpoint.bin";
  save_checkpoint(model, ckpt_path);

  const std::string metrics_path = cfg.out_dir + "/metrics.csv";
  write_text(metrics_path, metrics_csv_body(records, cfg.hash()));

  const double match = exact_match_rate(model, data.train, cfg.max_gen_len,
                                        mix64(cfg.seed, 0xE7A), 64);
  const auto wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();

  json summary;
  summary["version"] = kVersion;
  summary["config_hash"] = hash_hex(cfg.hash());
  summary["config"] = config_echo(cfg);
  summary["steps"] = records.size();
  if (!records.empty()) {
    summary["final_loss"] = {{"mle_term", records.back().loss.mle_term},
                             {"ot_term", records.back().loss.ot_term},
                             {"total", records.back().loss.total}};
  }
  summary["student_exact_match"] = match;
  if (last_dev_accuracy >= 0.0)
    summary["dev_token_accuracy"] = last_dev_accuracy;
  summary["wall_time_ms"] = wall_ms;
  summary["outputs"] = {{"metrics", metrics_path}, {"checkpoint", ckpt_path}};
  write_text(cfg.out_dir + "/summary.json", summary.dump(2) + "\n");

  std::cout << "wrote " << metrics_path << ", " << ckpt_path << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.checkpoint.empty())
    throw std::invalid_argument("eval: checkpoint path required");

  SeqModel model = load_checkpoint(cfg.checkpoint);
  LoadedData data = load_data(cfg);
  if (data.test.pairs.empty())
    throw std::invalid_argument("eval: empty test split");
  if (model.config().conditional != data.conditional)
    throw std::invalid_argument(
        "eval: checkpoint conditionality does not match data");

  fs::create_directories(cfg.out_dir);
  const SamplingPolicy policy =
      cfg.eval_greedy
          ? SamplingPolicy{}
          : SamplingPolicy{SamplingPolicy::Kind::categorical, cfg.sample_alpha};

  const auto refs = targets_of(data.test);
  std::vector<TokenSeq> hyps;
  if (data.conditional) {
    hyps = decode_corpus(model, data.test, policy, cfg.max_gen_len,
                         mix64(cfg.seed, 0xE7A1));
  } else {
    hyps = sample_corpus(model, static_cast<int>(refs.size()), policy,
                         cfg.max_gen_len, mix64(cfg.seed, 0xE7A1));
  }

  json summary;
  summary["version"] = kVersion;
  summary["config_hash"] = hash_hex(cfg.hash());
  summary["checkpoint"] = cfg.checkpoint;
  summary["examples"] = refs.size();

  double bleu_score;
  if (data.conditional) {
    bleu_score = bleu(hyps, refs, cfg.bleu_order).score;
    double acc = 0.0;
    for (size_t i = 0; i < hyps.size(); ++i)
      acc += token_accuracy(hyps[i], refs[i]);
    summary["token_accuracy"] = acc / static_cast<double>(hyps.size());
  } else {
    std::vector<std::vector<TokenSeq>> multi(hyps.size(), refs);
    bleu_score = bleu_multi(hyps, multi, cfg.bleu_order).score;
    const double sb = self_bleu(hyps, cfg.bleu_order);
    summary["self_bleu"] = sb;
    summary["bleu_f1"] = bleu_f1(bleu_score, sb);
  }
  summary["bleu"] = bleu_score;
  summary["bleu_order"] = cfg.bleu_order;

  const auto edges = cfg.bucket_edge_list();
  const auto buckets = bleu_by_length(hyps, refs, edges, cfg.bleu_order);
  const auto acc_buckets = accuracy_by_length(hyps, refs, edges);

  std::string csv = "bucket_lo,bucket_hi,count,bleu,token_accuracy\n";
  for (size_t b = 0; b < buckets.size(); ++b) {
    csv += std::to_string(buckets[b].lo);
    csv += ',';
    csv += buckets[b].hi == INT_MAX ? "inf" : std::to_string(buckets[b].hi);
    csv += ',';
    csv += std::to_string(buckets[b].count);
    csv += ',';
    csv += buckets[b].report ? fmt(buckets[b].report->score) : "";
    csv += ',';
    csv += buckets[b].count ? fmt(acc_buckets[b].accuracy) : "";
    csv += '\n';
  }
  csv += csv_footer(cfg.hash());
  const std::string bucket_path = cfg.out_dir + "/bleu_by_length.csv";
  write_text(bucket_path, csv);

  summary["outputs"] = {{"buckets", bucket_path}};
  const std::string summary_path = cfg.out_dir + "/eval_summary.json";
  write_text(summary_path, summary.dump(2) + "\n");
  std::cout << "bleu " << fmt(bleu_score) << "; wrote " << summary_path
            << "\n";
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.checkpoint.empty())
    throw std::invalid_argument("sweep: checkpoint path required");
  SeqModel model = load_checkpoint(cfg.checkpoint);
  if (model.config().conditional)
    throw std::invalid_argument("sweep: needs an unconditional checkpoint");

  LoadedData data = load_data(cfg);
  if (data.test.pairs.empty())
    throw std::invalid_argument("sweep: empty evaluation corpus");

  fs::create_directories(cfg.out_dir);
  const SweepResult result = temperature_sweep(
      model, targets_of(data.test), cfg.alpha_list(), cfg.samples_per_alpha,
      cfg.seed, cfg.max_gen_len, cfg.bleu_order);

  std::string csv = "alpha,bleu,self_bleu,bleu_f1\n";
  for (const auto& p : result.points) {
    csv += fmt(p.alpha);
    csv += ',';
    csv += fmt(p.bleu);
    csv += ',';
    csv += fmt(p.self_bleu);
    csv += ',';
    csv += fmt(p.bleu_f1);
    csv += '\n';
  }
  csv += csv_footer(cfg.hash());
  const std::string sweep_path = cfg.out_dir + "/sweep.csv";
  write_text(sweep_path, csv);

  // quality-diversity plot data: lower is better on both axes
  std::string qd = "alpha,neg_bleu,self_bleu\n";
  for (const auto& p : result.points) {
    qd += fmt(p.alpha);
    qd += ',';
    qd += fmt(-p.bleu);
    qd += ',';
    qd += fmt(p.self_bleu);
    qd += '\n';
  }
  qd += csv_footer(cfg.hash());
  const std::string qd_path = cfg.out_dir + "/quality_diversity.csv";
  write_text(qd_path, qd);

  const SweepPoint& sel =
      result.points[static_cast<size_t>(result.selected_index)];
  json summary;
  summary["version"] = kVersion;
  summary["config_hash"] = hash_hex(cfg.hash());
  summary["selected_alpha"] = sel.alpha;
  summary["selected_bleu_f1"] = sel.bleu_f1;
  summary["points"] = json::array();
  for (const auto& p : result.points)
    summary["points"].push_back({{"alpha", p.alpha},
                                 {"bleu", p.bleu},
                                 {"self_bleu", p.self_bleu},
                                 {"bleu_f1", p.bleu_f1}});
  summary["outputs"] = {{"sweep", sweep_path}, {"quality_diversity", qd_path}};
  write_text(cfg.out_dir + "/sweep_summary.json", summary.dump(2) + "\n");

  std::cout << "selected alpha " << fmt(sel.alpha) << " (bleu_f1 "
            << fmt(sel.bleu_f1) << "); wrote " << sweep_path << "\n";
  return 0;
}

namespace {

std::vector<std::string> read_token_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> tokens;
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  if (tokens.empty()) throw std::runtime_error(path + ": no tokens");
  return tokens;
}

FeatureSequence tied_random_features(const std::vector<std::string>& tokens,
                                     int dim, std::uint64_t seed,
                                     FeatureLayer layer) {
  Matrix rows(static_cast<Eigen::Index>(tokens.size()), dim);
  for (size_t i = 0; i < tokens.size(); ++i) {
    auto rng = make_rng(mix64(seed, fnv1a(tokens[i])));
    std::normal_distribution<double> dist(0.0, 1.0);
    for (int d = 0; d < dim; ++d) rows(static_cast<Eigen::Index>(i), d) = dist(rng);
  }
  return FeatureSequence{std::move(rows), layer};
}

std::string ot_args_canonical(const OtCommandArgs& a) {
  std::string s = a.file_a + "|" + a.file_b + "|" + a.cost + "|" +
                  fmt(a.beta) + "|" + std::to_string(a.random_dim) + "|" +
                  std::to_string(a.seed) + "|" + a.checkpoint + "|" +
                  a.vocab_path;
  return s;
}

}  // namespace

int cmd_ot(const OtCommandArgs& args) {
  args.ipot.validate();
  const CostKind kind = cost_kind_from_name(args.cost);
  const FeatureLayer want_layer = kind == CostKind::vanilla
                                      ? FeatureLayer::embedding
                                      : FeatureLayer::contextual;

  const auto tokens_a = read_token_file(args.file_a);
  const auto tokens_b = read_token_file(args.file_b);

  FeatureSequence feat_a, feat_b;
  if (args.checkpoint.empty()) {
    feat_a = tied_random_features(tokens_a, args.random_dim, args.seed,
                                  want_layer);
    feat_b = tied_random_features(tokens_b, args.random_dim, args.seed,
                                  want_layer);
  } else {
    if (args.vocab_path.empty())
      throw std::invalid_argument("ot: --vocab required with --checkpoint");
    SeqModel model = load_checkpoint(args.checkpoint);
    const Vocabulary vocab = Vocabulary::load(args.vocab_path);
    auto encode = [&vocab](const std::vector<std::string>& toks) {
      TokenSeq ids;
      for (const auto& t : toks) ids.push_back(vocab.id_of(t));
      return ids;
    };
    const TokenSeq ids_a = encode(tokens_a);
    const TokenSeq ids_b = encode(tokens_b);
    if (kind == CostKind::vanilla) {
      feat_a = model.embedding_features(ids_a);
      feat_b = model.embedding_features(ids_b);
    } else {
      if (model.config().conditional)
        throw std::invalid_argument(
            "ot: contextual features need an unconditional checkpoint");
      Tape tape;
      feat_a = model.forward_teacher(tape, ids_a, nullptr).contextual_features();
      tape.clear();
      feat_b = model.forward_teacher(tape, ids_b, nullptr).contextual_features();
    }
  }

  const CostMode mode{kind, args.beta};
  const Matrix cost = build_cost(feat_a, feat_b, mode);
  const TransportPlan plan =
      ipot_solve(cost, SimplexWeights::uniform(cost.rows()),
                 SimplexWeights::uniform(cost.cols()), args.ipot);

  std::cout << "ot_distance " << fmt(ot_objective(cost, plan)) << "\n";
  std::cout << "marginal_error " << fmt(plan.max_marginal_error()) << "\n";
  std::cout << "expected_position_gap " << fmt(expected_position_gap(plan.m))
            << "\n";

  auto dump_matrix = [&](const Matrix& m, const std::string& path) {
    std::string csv;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) csv += ',';
      csv += "g" + std::to_string(j);
    }
    csv += '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (j) csv += ',';
        csv += fmt(m(i, j));
      }
      csv += '\n';
    }
    csv += csv_footer(fnv1a(ot_args_canonical(args)));
    write_text(path, csv);
    std::cout << "wrote " << path << "\n";
  };
  if (!args.dump_plan.empty()) dump_matrix(plan.m, args.dump_plan);
  if (!args.dump_cost.empty()) dump_matrix(cost, args.dump_cost);
  return 0;
}

namespace {

struct CliOverrides {
  std::vector<std::pair<std::string, std::string>> kv;
  std::string config_path;

  void apply(RunConfig& cfg) const {
    for (const auto& [k, v] : kv) cfg.set(k, v);
  }
};

void add_common_options(CLI::App* cmd, CliOverrides& ov) {
  cmd->add_option_function<std::string>(
      "--config", [&ov](const std::string& v) { ov.config_path = v; },
      "key = value configuration file");
  auto bind = [cmd, &ov](const std::string& flag, const std::string& key,
                         const std::string& desc) {
    cmd->add_option_function<std::string>(
        flag, [&ov, key](const std::string& v) { ov.kv.emplace_back(key, v); },
        desc);
  };
  bind("--seed", "seed", "random seed");
  bind("--objective", "objective", "mle | tfot | sfot | ss");
  bind("--lambda", "lambda", "OT loss weight");
  bind("--beta", "beta", "order-penalty weight");
  bind("--cost", "cost", "vanilla | contextual | contextual_ordered");
  bind("--out", "out_dir", "output directory");
  bind("--checkpoint", "checkpoint", "checkpoint path");
  bind("--alphas", "alphas", "comma-separated reverse temperatures");
  bind("--task", "task", "copy | reverse | file");
  bind("--epochs", "epochs", "training epochs");
  bind("--max-steps", "max_steps", "step cap (0 = epochs only)");
  bind("--batch-size", "batch_size", "minibatch size");
  bind("--learning-rate", "learning_rate", "optimizer step size");
  bind("--hidden-dim", "hidden_dim", "recurrent state size");
  bind("--embed-dim", "embed_dim", "embedding size");
  bind("--ss-ratio", "ss_ratio", "scheduled-sampling ratio");
  bind("--samples-per-alpha", "samples_per_alpha", "sweep sample count");
  bind("--bleu-order", "bleu_order", "max n-gram order");
  bind("--max-gen-len", "max_gen_len", "student-forcing length cap");
  bind("--eval-every", "eval_every", "validation interval in steps");
  bind("--train-path", "train_path", "training corpus (file task)");
  bind("--dev-path", "dev_path", "dev corpus (file task)");
  bind("--test-path", "test_path", "test corpus (file task)");
  bind("--vocab", "vocab_path", "vocabulary file");
}

RunConfig resolve_config(const CliOverrides& ov) {
  RunConfig cfg = ov.config_path.empty() ? RunConfig{}
                                         : RunConfig::from_file(ov.config_path);
  ov.apply(cfg);
  return cfg;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"optimal-transport sequence training and evaluation"};
  app.require_subcommand(1);

  CliOverrides train_ov, eval_ov, sweep_ov;
  CLI::App* train_cmd =
      app.add_subcommand("train", "train a sequence model");
  add_common_options(train_cmd, train_ov);
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "score a checkpoint on the test split");
  add_common_options(eval_cmd, eval_ov);
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "reverse-temperature sweep");
  add_common_options(sweep_cmd, sweep_ov);

  OtCommandArgs ot_args;
  CLI::App* ot_cmd =
      app.add_subcommand("ot", "transport distance between two token files");
  ot_cmd->add_option("file_a", ot_args.file_a, "reference token file")
      ->required();
  ot_cmd->add_option("file_b", ot_args.file_b, "generated token file")
      ->required();
  ot_cmd->add_option("--cost", ot_args.cost,
                     "vanilla | contextual | contextual_ordered");
  ot_cmd->add_option("--beta", ot_args.beta, "order-penalty weight");
  ot_cmd->add_option("--random-dim", ot_args.random_dim,
                     "tied random embedding size (no checkpoint)");
  ot_cmd->add_option("--seed", ot_args.seed, "random-embedding seed");
  ot_cmd->add_option("--checkpoint", ot_args.checkpoint,
                     "model checkpoint for features");
  ot_cmd->add_option("--vocab", ot_args.vocab_path, "vocabulary file");
  ot_cmd->add_option("--dump-plan", ot_args.dump_plan,
                     "write the transport plan CSV here");
  ot_cmd->add_option("--dump-cost", ot_args.dump_cost,
                     "write the cost matrix CSV here");
  ot_cmd->add_option("--ipot-epsilon", ot_args.ipot.epsilon,
                     "proximal parameter");
  ot_cmd->add_option("--ipot-outer", ot_args.ipot.outer_iters,
                     "outer iterations");
  ot_cmd->add_option("--ipot-tol", ot_args.ipot.convergence_tol,
                     "plan-change stopping tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (train_cmd->parsed()) return cmd_train(resolve_config(train_ov));
    if (eval_cmd->parsed()) return cmd_eval(resolve_config(eval_ov));
    if (sweep_cmd->parsed()) return cmd_sweep(resolve_config(sweep_ov));
    if (ot_cmd->parsed()) return cmd_ot(ot_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace seqot
