#include "seqot/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace seqot {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int x = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": " + v);
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": " + v);
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad integer for " + key + ": " + v);
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

std::vector<double> parse_double_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(to_double("list", item));
  }
  if (out.empty()) throw std::invalid_argument("empty numeric list: " + csv);
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  for (double v : parse_double_list(csv)) out.push_back(static_cast<int>(v));
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "embed_dim") embed_dim = to_int(key, v);
  else if (key == "hidden_dim") hidden_dim = to_int(key, v);
  else if (key == "num_layers") num_layers = to_int(key, v);
  else if (key == "task") task = v;
  else if (key == "train_path") train_path = v;
  else if (key == "dev_path") dev_path = v;
  else if (key == "test_path") test_path = v;
  else if (key == "vocab_path") vocab_path = v;
  else if (key == "vocab_min_freq") vocab_min_freq = to_int(key, v);
  else if (key == "max_len") max_len = to_int(key, v);
  else if (key == "conditional") conditional = to_bool(key, v);
  else if (key == "synth_vocab_size") synth_vocab_size = to_int(key, v);
  else if (key == "synth_min_len") synth_min_len = to_int(key, v);
  else if (key == "synth_max_len") synth_max_len = to_int(key, v);
  else if (key == "synth_train") synth_train = to_int(key, v);
  else if (key == "synth_dev") synth_dev = to_int(key, v);
  else if (key == "synth_test") synth_test = to_int(key, v);
  else if (key == "objective") objective = v;
  else if (key == "lambda") lambda = to_double(key, v);
  else if (key == "beta") beta = to_double(key, v);
  else if (key == "cost") cost = v;
  else if (key == "ss_ratio") ss_ratio = to_double(key, v);
  else if (key == "optimizer") optimizer = v;
  else if (key == "learning_rate") learning_rate = to_double(key, v);
  else if (key == "batch_size") batch_size = to_int(key, v);
  else if (key == "epochs") epochs = to_int(key, v);
  else if (key == "max_steps") max_steps = to_int(key, v);
  else if (key == "seed") seed = to_u64(key, v);
  else if (key == "sample_alpha") sample_alpha = to_double(key, v);
  else if (key == "student_greedy") student_greedy = to_bool(key, v);
  else if (key == "max_gen_len") max_gen_len = to_int(key, v);
  else if (key == "per_token_mle") per_token_mle = to_bool(key, v);
  else if (key == "log_wall_time") log_wall_time = to_bool(key, v);
  else if (key == "checkpoint_every") checkpoint_every = to_int(key, v);
  else if (key == "eval_every") eval_every = to_int(key, v);
  else if (key == "eval_greedy") eval_greedy = to_bool(key, v);
  else if (key == "ipot_epsilon") ipot_epsilon = to_double(key, v);
  else if (key == "ipot_outer") ipot_outer = to_int(key, v);
  else if (key == "ipot_inner") ipot_inner = to_int(key, v);
  else if (key == "ipot_tol") ipot_tol = to_double(key, v);
  else if (key == "alphas") alphas = v;
  else if (key == "samples_per_alpha") samples_per_alpha = to_int(key, v);
  else if (key == "bucket_edges") bucket_edges = v;
  else if (key == "bleu_order") bleu_order = to_int(key, v);
  else if (key == "out_dir") out_dir = v;
  else if (key == "checkpoint") checkpoint = v;
  else
    throw std::invalid_argument("config: unknown key: " + key);
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    cfg.set(key, value);
  }
  return cfg;
}

bool RunConfig::task_conditional() const {
  if (task == "copy" || task == "reverse") return true;
  return conditional;
}

double RunConfig::effective_lambda() const {
  if (lambda >= 0.0) return lambda;
  return task_conditional() ? 0.1 : 1.0;
}

void RunConfig::validate() const {
  if (task != "copy" && task != "reverse" && task != "file")
    throw std::invalid_argument("config: task must be copy, reverse or file");
  if (task == "file" && train_path.empty() && checkpoint.empty())
    throw std::invalid_argument("config: file task needs train_path");
  objective_from_name(objective);
  cost_kind_from_name(cost);
  if (optimizer != "adam" && optimizer != "sgd")
    throw std::invalid_argument("config: optimizer must be adam or sgd");
  train_config();  // runs the numeric invariants
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.objective = objective_from_name(objective);
  t.lambda = effective_lambda();
  t.cost_mode = CostMode{cost_kind_from_name(cost), beta};
  t.ss_ratio = ss_ratio;
  t.optimizer =
      optimizer == "sgd" ? TrainConfig::Opt::sgd : TrainConfig::Opt::adam;
  t.learning_rate = learning_rate;
  t.batch_size = batch_size;
  t.epochs = epochs;
  t.max_steps = max_steps;
  t.seed = seed;
  t.student_policy =
      SamplingPolicy{student_greedy ? SamplingPolicy::Kind::greedy
                                    : SamplingPolicy::Kind::categorical,
                     sample_alpha};
  t.max_gen_len = max_gen_len;
  t.ipot = IpotConfig{ipot_epsilon, ipot_outer, ipot_inner, ipot_tol};
  t.per_token_mle = per_token_mle;
  t.log_wall_time = log_wall_time;
  t.validate();
  return t;
}

std::vector<double> RunConfig::alpha_list() const {
  return parse_double_list(alphas);
}

std::vector<int> RunConfig::bucket_edge_list() const {
  return parse_int_list(bucket_edges);
}

std::vector<std::pair<std::string, std::string>> RunConfig::items() const {
  std::vector<std::pair<std::string, std::string>> kv;
  auto add = [&kv](const std::string& k, const std::string& v) {
    kv.emplace_back(k, v);
  };
  add("embed_dim", std::to_string(embed_dim));
  add("hidden_dim", std::to_string(hidden_dim));
  add("num_layers", std::to_string(num_layers));
  add("task", task);
  add("train_path", train_path);
  add("dev_path", dev_path);
  add("test_path", test_path);
  add("vocab_path", vocab_path);
  add("vocab_min_freq", std::to_string(vocab_min_freq));
  add("max_len", std::to_string(max_len));
  add("conditional", conditional ? "true" : "false");
  add("synth_vocab_size", std::to_string(synth_vocab_size));
  add("synth_min_len", std::to_string(synth_min_len));
  add("synth_max_len", std::to_string(synth_max_len));
  add("synth_train", std::to_string(synth_train));
  add("synth_dev", std::to_string(synth_dev));
  add("synth_test", std::to_string(synth_test));
  add("objective", objective);
  add("lambda", fmt_double(lambda));
  add("beta", fmt_double(beta));
  add("cost", cost);
  add("ss_ratio", fmt_double(ss_ratio));
  add("optimizer", optimizer);
  add("learning_rate", fmt_double(learning_rate));
  add("batch_size", std::to_string(batch_size));
  add("epochs", std::to_string(epochs));
  add("max_steps", std::to_string(max_steps));
  add("seed", std::to_string(seed));
  add("sample_alpha", fmt_double(sample_alpha));
  add("student_greedy", student_greedy ? "true" : "false");
  add("max_gen_len", std::to_string(max_gen_len));
  add("per_token_mle", per_token_mle ? "true" : "false");
  add("log_wall_time", log_wall_time ? "true" : "false");
  add("checkpoint_every", std::to_string(checkpoint_every));
  add("eval_every", std::to_string(eval_every));
  add("eval_greedy", eval_greedy ? "true" : "false");
  add("ipot_epsilon", fmt_double(ipot_epsilon));
  add("ipot_outer", std::to_string(ipot_outer));
  add("ipot_inner", std::to_string(ipot_inner));
  add("ipot_tol", fmt_double(ipot_tol));
  add("alphas", alphas);
  add("samples_per_alpha", std::to_string(samples_per_alpha));
  add("bucket_edges", bucket_edges);
  add("bleu_order", std::to_string(bleu_order));
  add("out_dir", out_dir);
  add("checkpoint", checkpoint);
  return kv;
}

std::string RunConfig::canonical() const {
  std::string out;
  for (const auto& [k, v] : items()) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

std::uint64_t RunConfig::hash() const {
  // FNV-1a over the canonical dump
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace seqot
