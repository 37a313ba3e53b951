#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "seqot/corpus.hpp"

using namespace seqot;
namespace fs = std::filesystem;

namespace {

std::string scratch_dir() {
  const fs::path p = fs::temp_directory_path() / "seqot_corpus_tests";
  fs::create_directories(p);
  return p.string();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << body;
}

}  // namespace

TEST_CASE("build_vocab honors the frequency threshold") {
  const auto v2 = build_vocab({"a a b"}, 2);
  CHECK(v2.id_of("a") >= kNumReserved);
  CHECK(v2.id_of("b") == kUnkId);

  const auto v1 = build_vocab({"a a b"}, 1);
  CHECK(v1.id_of("a") >= kNumReserved);
  CHECK(v1.id_of("b") >= kNumReserved);
  CHECK(v1.size() == kNumReserved + 2);

  CHECK_THROWS_AS(build_vocab({}, 1), std::invalid_argument);
}

TEST_CASE("reserved ids are fixed and collision-free") {
  const auto v = build_vocab({"x y z x"}, 1);
  CHECK(v.token_of(kStartId) == "<s>");
  CHECK(v.token_of(kEosId) == "</s>");
  CHECK(v.token_of(kPadId) == "<pad>");
  CHECK(v.token_of(kUnkId) == "<unk>");
  for (int id = kNumReserved; id < v.size(); ++id) {
    const auto& tok = v.token_of(id);
    CHECK(v.id_of(tok) == id);
  }
}

TEST_CASE("encode/decode round trip on random corpora") {
  auto rng = make_rng(17);
  std::uniform_int_distribution<int> word(0, 25);
  std::uniform_int_distribution<int> len(1, 12);
  std::vector<std::string> lines;
  for (int i = 0; i < 40; ++i) {
    std::string line;
    const int n = len(rng);
    for (int k = 0; k < n; ++k) {
      if (k) line += ' ';
      line += "w" + std::to_string(word(rng));
    }
    lines.push_back(line);
  }
  const auto vocab = build_vocab(lines, 1);
  for (const auto& line : lines) {
    const TokenSeq ids = vocab.encode(line);
    CHECK(vocab.encode(vocab.decode(ids)) == ids);
  }
}

TEST_CASE("vocabulary persists with the reserved header") {
  const auto vocab = build_vocab({"gamma alpha beta alpha"}, 1);
  const std::string path = scratch_dir() + "/vocab.txt";
  vocab.save(path);

  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  CHECK(first == "<s>");

  const auto loaded = Vocabulary::load(path);
  CHECK(loaded.size() == vocab.size());
  for (int id = 0; id < vocab.size(); ++id)
    CHECK(loaded.token_of(id) == vocab.token_of(id));

  write_file(scratch_dir() + "/broken_vocab.txt", "<s>\n</s>\n");
  CHECK_THROWS_AS(Vocabulary::load(scratch_dir() + "/broken_vocab.txt"),
                  std::runtime_error);
}

TEST_CASE("load_parallel: conditional format") {
  const std::string path = scratch_dir() + "/pairs.tsv";
  write_file(path, "a b\tc d\ne f\tg h\n");
  const auto vocab = build_vocab({"a b c d e f g h"}, 1);
  const auto ds = load_parallel(path, vocab, true);
  REQUIRE(ds.size() == 2);
  CHECK(ds.conditional);
  CHECK(*ds.pairs[0].source == vocab.encode("a b"));
  CHECK(ds.pairs[0].target == vocab.encode("c d"));

  write_file(scratch_dir() + "/notab.tsv", "a b c\n");
  CHECK_THROWS_AS(load_parallel(scratch_dir() + "/notab.tsv", vocab, true),
                  std::runtime_error);
}

TEST_CASE("load_parallel: round trip through decode") {
  const std::string path = scratch_dir() + "/uncond.txt";
  write_file(path, "a b c\nb c\nc a a\n");
  const auto vocab = build_vocab({"a b c"}, 1);
  const auto ds = load_parallel(path, vocab, false);
  REQUIRE(ds.size() == 3);

  std::string rewritten;
  for (const auto& p : ds.pairs) rewritten += vocab.decode(p.target) + "\n";
  const std::string path2 = scratch_dir() + "/uncond2.txt";
  write_file(path2, rewritten);
  const auto ds2 = load_parallel(path2, vocab, false);
  REQUIRE(ds2.size() == ds.size());
  for (size_t i = 0; i < ds.size(); ++i)
    CHECK(ds2.pairs[i].target == ds.pairs[i].target);
}

TEST_CASE("load_parallel: truncation is counted, bad bytes rejected") {
  const std::string path = scratch_dir() + "/long.txt";
  write_file(path, "a a a a a a a a\nb b\n");
  const auto vocab = build_vocab({"a b"}, 1);
  const auto ds = load_parallel(path, vocab, false, 4);
  CHECK(ds.truncated_count == 1);
  CHECK(ds.pairs[0].target.size() == 4);

  const std::string bad = scratch_dir() + "/bad.txt";
  write_file(bad, std::string("a ") + char(0xFF) + char(0xFE) + "\n");
  CHECK_THROWS_AS(load_parallel(bad, vocab, false), std::runtime_error);
}

TEST_CASE("synth_task definitional properties") {
  const auto copy = synth_task(SynthKind::copy, 20, 3, 9, 50, 5);
  CHECK(copy.conditional);
  for (const auto& p : copy.pairs) {
    CHECK(*p.source == p.target);
    for (int t : p.target) {
      CHECK(t >= kNumReserved);
      CHECK(t < 20);
    }
    CHECK(p.target.size() >= 3);
    CHECK(p.target.size() <= 9);
  }

  const auto rev = synth_task(SynthKind::reverse, 20, 3, 9, 50, 5);
  for (const auto& p : rev.pairs) {
    TokenSeq r = *p.source;
    std::reverse(r.begin(), r.end());
    CHECK(r == p.target);
  }

  // palindromic source maps to itself under reverse
  TokenSeq pal = {4, 5, 4};
  TokenSeq rpal = pal;
  std::reverse(rpal.begin(), rpal.end());
  CHECK(pal == rpal);

  CHECK_THROWS_AS(synth_task(SynthKind::copy, 4, 3, 9, 5, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(synth_task(SynthKind::copy, 20, 9, 3, 5, 1),
                  std::invalid_argument);
}

TEST_CASE("synth_task determinism") {
  const auto a = synth_task(SynthKind::copy, 16, 2, 6, 30, 99);
  const auto b = synth_task(SynthKind::copy, 16, 2, 6, 30, 99);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a.pairs[i].target == b.pairs[i].target);
    CHECK(*a.pairs[i].source == *b.pairs[i].source);
  }
  const auto c = synth_task(SynthKind::copy, 16, 2, 6, 30, 100);
  bool all_equal = true;
  for (size_t i = 0; i < a.size(); ++i)
    if (a.pairs[i].target != c.pairs[i].target) all_equal = false;
  CHECK(!all_equal);
}

TEST_CASE("synth_task length histogram is uniform within 3 sigma") {
  const int n = 10000, lo = 5, hi = 15;
  const auto ds = synth_task(SynthKind::copy, 20, lo, hi, n, 1234);
  std::vector<int> counts(hi - lo + 1, 0);
  for (const auto& p : ds.pairs) ++counts[p.target.size() - lo];

  const double bins = hi - lo + 1;
  const double expect = n / bins;
  const double sigma = std::sqrt(n * (1.0 / bins) * (1.0 - 1.0 / bins));
  for (int c : counts) CHECK(std::abs(c - expect) <= 3.0 * sigma);
}

TEST_CASE("dataset validation") {
  Dataset ds;
  ds.conditional = true;
  ds.pairs.push_back(Pair{std::nullopt, TokenSeq{4}});
  CHECK_THROWS_AS(ds.validate(), std::invalid_argument);

  Dataset empty_target;
  empty_target.conditional = false;
  empty_target.pairs.push_back(Pair{std::nullopt, TokenSeq{}});
  CHECK_THROWS_AS(empty_target.validate(), std::invalid_argument);
}
