#include "seqot/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace seqot {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', 'Q', 'O', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint32_t len = read_u32(in);
  if (len > 4096) throw std::runtime_error("checkpoint: implausible name length");
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

}  // namespace

void save_checkpoint(const SeqModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path);

  out.write(kMagic, 4);
  write_u32(out, kFormatVersion);
  const ModelConfig& cfg = model.config();
  write_u32(out, static_cast<std::uint32_t>(cfg.vocab_size));
  write_u32(out, static_cast<std::uint32_t>(cfg.embed_dim));
  write_u32(out, static_cast<std::uint32_t>(cfg.hidden_dim));
  write_u32(out, static_cast<std::uint32_t>(cfg.num_layers));
  write_u32(out, cfg.conditional ? 1u : 0u);

  const auto tensors = model.tensors();
  write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor* t : tensors) {
    write_string(out, t->name);
    write_u32(out, static_cast<std::uint32_t>(t->value.rows()));
    write_u32(out, static_cast<std::uint32_t>(t->value.cols()));
    // row-major payload
    for (Eigen::Index i = 0; i < t->value.rows(); ++i)
      for (Eigen::Index j = 0; j < t->value.cols(); ++j) {
        const double v = t->value(i, j);
        out.write(reinterpret_cast<const char*>(&v), sizeof(v));
      }
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

SeqModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const std::uint32_t version = read_u32(in);
  if (version != kFormatVersion)
    throw std::runtime_error("checkpoint: unsupported format version");

  ModelConfig cfg;
  cfg.vocab_size = static_cast<int>(read_u32(in));
  cfg.embed_dim = static_cast<int>(read_u32(in));
  cfg.hidden_dim = static_cast<int>(read_u32(in));
  cfg.num_layers = static_cast<int>(read_u32(in));
  cfg.conditional = read_u32(in) != 0;

  SeqModel model(cfg);
  auto tensors = model.tensors();
  const std::uint32_t count = read_u32(in);
  if (count != tensors.size())
    throw std::runtime_error("checkpoint: tensor manifest size mismatch");

  for (Tensor* t : tensors) {
    const std::string name = read_string(in);
    if (name != t->name)
      throw std::runtime_error("checkpoint: unexpected tensor " + name);
    const std::uint32_t rows = read_u32(in);
    const std::uint32_t cols = read_u32(in);
    if (rows != static_cast<std::uint32_t>(t->value.rows()) ||
        cols != static_cast<std::uint32_t>(t->value.cols()))
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) {
        double v = 0.0;
        in.read(reinterpret_cast<char*>(&v), sizeof(v));
        if (!in) throw std::runtime_error("checkpoint: truncated payload");
        t->value(i, j) = v;
      }
  }
  return model;
}

void load_checkpoint_into(SeqModel& model, const std::string& path) {
  SeqModel loaded = load_checkpoint(path);
  const ModelConfig& a = model.config();
  const ModelConfig& b = loaded.config();
  if (a.vocab_size != b.vocab_size || a.embed_dim != b.embed_dim ||
      a.hidden_dim != b.hidden_dim || a.num_layers != b.num_layers ||
      a.conditional != b.conditional)
    throw std::runtime_error("checkpoint: config mismatch with model");
  auto dst = model.tensors();
  auto src = loaded.tensors();
  for (size_t i = 0; i < dst.size(); ++i) dst[i]->value = src[i]->value;
}

}  // namespace seqot
