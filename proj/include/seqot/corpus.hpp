#ifndef SEQOT_CORPUS_HPP
#define SEQOT_CORPUS_HPP

#include <map>
#include <optional>
#include <string>

#include "seqot/common.hpp"

namespace seqot {

// Whitespace-token vocabulary with fixed reserved slots at the front.
class Vocabulary {
 public:
  Vocabulary();

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int add(const std::string& token);  // returns existing id if present
  int id_of(const std::string& token) const;  // unk fallback
  const std::string& token_of(int id) const;

  TokenSeq encode(const std::string& line) const;
  std::string decode(const TokenSeq& ids) const;

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> id_to_token_;
  std::map<std::string, int> token_to_id_;
};

Vocabulary build_vocab(const std::vector<std::string>& lines, int min_freq);

struct Pair {
  std::optional<TokenSeq> source;
  TokenSeq target;
};

enum class Split { train, dev, test };

struct Dataset {
  std::vector<Pair> pairs;
  Split split = Split::train;
  bool conditional = false;
  int truncated_count = 0;

  size_t size() const { return pairs.size(); }
  void validate() const;
};

// One example per line; conditional lines are "source<TAB>target". Lines
// longer than max_len are truncated and counted, never dropped silently.
Dataset load_parallel(const std::string& path, const Vocabulary& vocab,
                      bool conditional, int max_len = 64,
                      Split split = Split::train);

enum class SynthKind { copy, reverse };

// Random source sequences over the non-reserved ids; target is the source
// itself or its reversal.
Dataset synth_task(SynthKind kind, int vocab_size, int min_len, int max_len,
                   int n_examples, std::uint64_t seed);

// Token names for a synthetic id space, so decode works on synth datasets.
Vocabulary synth_vocab(int vocab_size);

std::vector<std::string> read_lines(const std::string& path);

}  // namespace seqot

#endif  // SEQOT_CORPUS_HPP
