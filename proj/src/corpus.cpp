#include "seqot/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace seqot {

namespace {

const char* kReservedTokens[kNumReserved] = {"<s>", "</s>", "<pad>", "<unk>"};

bool utf8_valid(const std::string& s) {
  size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    size_t extra;
    if (c < 0x80)
      extra = 0;
    else if ((c >> 5) == 0x6)
      extra = 1;
    else if ((c >> 4) == 0xE)
      extra = 2;
    else if ((c >> 3) == 0x1E)
      extra = 3;
    else
      return false;
    if (extra > 0 && i + extra >= s.size()) return false;
    for (size_t k = 1; k <= extra; ++k)
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    i += extra + 1;
  }
  return true;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

}  // namespace

Vocabulary::Vocabulary() {
  for (int i = 0; i < kNumReserved; ++i) {
    id_to_token_.emplace_back(kReservedTokens[i]);
    token_to_id_[kReservedTokens[i]] = i;
  }
}

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  const int id = size();
  id_to_token_.push_back(token);
  token_to_id_[token] = id;
  return id;
}

int Vocabulary::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
  if (id < 0 || id >= size())
    throw std::invalid_argument("vocab: id out of range");
  return id_to_token_[static_cast<size_t>(id)];
}

TokenSeq Vocabulary::encode(const std::string& line) const {
  TokenSeq out;
  for (const auto& tok : split_ws(line)) out.push_back(id_of(tok));
  return out;
}

std::string Vocabulary::decode(const TokenSeq& ids) const {
  std::string out;
  for (size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += token_of(ids[i]);
  }
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("vocab: cannot open " + path);
  for (const auto& tok : id_to_token_) out << tok << '\n';
  if (!out) throw std::runtime_error("vocab: write failed for " + path);
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("vocab: cannot open " + path);
  Vocabulary v;
  std::string line;
  int id = 0;
  while (std::getline(in, line)) {
    if (id < kNumReserved) {
      if (line != kReservedTokens[id])
        throw std::runtime_error("vocab: bad reserved-token header in " + path);
    } else {
      if (line.empty()) throw std::runtime_error("vocab: empty token line");
      v.add(line);
    }
    ++id;
  }
  if (id < kNumReserved)
    throw std::runtime_error("vocab: missing reserved-token header");
  return v;
}

Vocabulary build_vocab(const std::vector<std::string>& lines, int min_freq) {
  if (lines.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::map<std::string, long long> freq;
  for (const auto& line : lines)
    for (const auto& tok : split_ws(line)) ++freq[tok];

  std::vector<std::pair<std::string, long long>> kept;
  for (const auto& [tok, count] : freq)
    if (count >= min_freq) kept.emplace_back(tok, count);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  for (const auto& [tok, count] : kept) v.add(tok);
  return v;
}

void Dataset::validate() const {
  for (const auto& p : pairs) {
    if (conditional != p.source.has_value())
      throw std::invalid_argument(
          "dataset: source presence inconsistent with conditional flag");
    if (p.target.empty())
      throw std::invalid_argument("dataset: empty target sequence");
  }
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

Dataset load_parallel(const std::string& path, const Vocabulary& vocab,
                      bool conditional, int max_len, Split split) {
  if (max_len < 1) throw std::invalid_argument("load_parallel: max_len < 1");
  Dataset ds;
  ds.split = split;
  ds.conditional = conditional;

  const auto lines = read_lines(path);
  int line_no = 0;
  for (const auto& line : lines) {
    ++line_no;
    if (!utf8_valid(line))
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": undecodable bytes");
    Pair pair;
    std::string target_text;
    if (conditional) {
      const auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": missing TAB in conditional corpus");
      pair.source = vocab.encode(line.substr(0, tab));
      target_text = line.substr(tab + 1);
    } else {
      target_text = line;
    }
    pair.target = vocab.encode(target_text);
    if (pair.target.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": empty target");
    if (conditional && pair.source->empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": empty source");

    const auto cap = static_cast<size_t>(max_len);
    bool truncated = false;
    if (pair.target.size() > cap) {
      pair.target.resize(cap);
      truncated = true;
    }
    if (pair.source && pair.source->size() > cap) {
      pair.source->resize(cap);
      truncated = true;
    }
    if (truncated) ++ds.truncated_count;
    ds.pairs.push_back(std::move(pair));
  }
  ds.validate();
  return ds;
}

Dataset synth_task(SynthKind kind, int vocab_size, int min_len, int max_len,
                   int n_examples, std::uint64_t seed) {
  if (vocab_size <= kNumReserved)
    throw std::invalid_argument("synth_task: vocab_size must exceed reserved count");
  if (min_len < 1 || min_len > max_len)
    throw std::invalid_argument("synth_task: invalid length bounds");
  if (n_examples < 1)
    throw std::invalid_argument("synth_task: n_examples must be >= 1");

  auto rng = make_rng(mix64(seed, 0x5A17));
  std::uniform_int_distribution<int> len_dist(min_len, max_len);
  std::uniform_int_distribution<int> tok_dist(kNumReserved, vocab_size - 1);

  Dataset ds;
  ds.conditional = true;
  for (int n = 0; n < n_examples; ++n) {
    const int len = len_dist(rng);
    TokenSeq src(static_cast<size_t>(len));
    for (auto& t : src) t = tok_dist(rng);
    TokenSeq tgt = src;
    if (kind == SynthKind::reverse) std::reverse(tgt.begin(), tgt.end());
    ds.pairs.push_back(Pair{std::move(src), std::move(tgt)});
  }
  return ds;
}

Vocabulary synth_vocab(int vocab_size) {
  if (vocab_size <= kNumReserved)
    throw std::invalid_argument("synth_vocab: vocab_size must exceed reserved count");
  Vocabulary v;
  for (int i = kNumReserved; i < vocab_size; ++i)
    v.add("w" + std::to_string(i));
  return v;
}

}  // namespace seqot
