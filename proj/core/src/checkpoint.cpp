#include "encdec/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "encdec/errors.hpp"

namespace encdec {

namespace {

constexpr char kMagic[8] = {'E', 'N', 'C', 'D', 'E', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms unsupported");

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    T out;
    auto* src = reinterpret_cast<const unsigned char*>(&v);
    auto* dst = reinterpret_cast<unsigned char*>(&out);
    for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
    return out;
  }
  return v;
}

template <typename T>
T from_little(T v) {
  return to_little(v);  // involution
}

void write_u32(std::ostream& out, std::uint32_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_u64(std::ostream& out, std::uint64_t v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw FormatError("checkpoint truncated while reading u32");
  return from_little(v);
}

std::uint64_t read_u64(std::istream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw FormatError("checkpoint truncated while reading u64");
  return from_little(v);
}

void write_f64_block(std::ostream& out, const std::vector<double>& data) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  } else {
    for (double d : data) {
      std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(d));
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
}

void read_f64_block(std::istream& in, std::vector<double>& data) {
  if constexpr (std::endian::native == std::endian::little) {
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw FormatError("checkpoint truncated inside a parameter record");
  } else {
    for (double& d : data) {
      std::uint64_t bits = 0;
      in.read(reinterpret_cast<char*>(&bits), sizeof(bits));
      if (!in) throw FormatError("checkpoint truncated inside a parameter record");
      d = std::bit_cast<double>(from_little(bits));
    }
  }
}

}  // namespace

void checkpoint_save(const ModelParams& p, const ModelConfig& cfg,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);

  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_u64(out, cfg.vocab_src);
  write_u64(out, cfg.vocab_tgt);
  write_u64(out, cfg.hidden);
  write_u64(out, cfg.embed);
  write_u64(out, cfg.maxout);
  write_u64(out, cfg.output_rank);
  write_u32(out, cfg.cell == CellKind::Gated ? 0u : 1u);
  write_u32(out, cfg.bias ? 1u : 0u);

  const auto entries = p.entries();
  std::uint32_t records = 0;
  for (const auto& [name, m] : entries) {
    if (!m->empty()) ++records;
  }
  write_u32(out, records);
  for (const auto& [name, m] : entries) {
    if (m->empty()) continue;
    write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u64(out, m->rows());
    write_u64(out, m->cols());
    write_f64_block(out, m->data());
  }
  out.flush();
  if (!out) throw IoError("write failed for checkpoint: " + path);
}

std::pair<ModelParams, ModelConfig> checkpoint_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint for reading: " + path);

  char magic[sizeof(kMagic)] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a checkpoint file (bad magic): " + path);
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                      " (expected " + std::to_string(kVersion) + ")");
  }

  ModelConfig cfg;
  cfg.vocab_src = read_u64(in);
  cfg.vocab_tgt = read_u64(in);
  cfg.hidden = read_u64(in);
  cfg.embed = read_u64(in);
  cfg.maxout = read_u64(in);
  cfg.output_rank = read_u64(in);
  const std::uint32_t cell = read_u32(in);
  if (cell > 1) throw FormatError("checkpoint declares unknown cell kind");
  cfg.cell = cell == 0 ? CellKind::Gated : CellKind::Tanh;
  cfg.bias = read_u32(in) != 0;
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config invalid: ") + e.what());
  }

  ModelParams p = ModelParams::zeros(cfg);
  auto entries = p.entries();

  const std::uint32_t records = read_u32(in);
  std::uint32_t expected = 0;
  for (const auto& [name, m] : entries) {
    if (!m->empty()) ++expected;
  }
  if (records != expected) {
    throw FormatError("checkpoint declares " + std::to_string(records) +
                      " records, config implies " + std::to_string(expected));
  }

  std::size_t next = 0;
  for (std::uint32_t rec = 0; rec < records; ++rec) {
    const std::uint32_t name_len = read_u32(in);
    if (name_len > 256) throw FormatError("unreasonable record name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw FormatError("checkpoint truncated inside a record name");
    const std::uint64_t rows = read_u64(in);
    const std::uint64_t cols = read_u64(in);

    // Records must appear in canonical order over the non-empty blocks.
    while (next < entries.size() && entries[next].second->empty()) ++next;
    if (next >= entries.size() || entries[next].first != name) {
      throw FormatError("unexpected checkpoint record '" + name + "'");
    }
    Matrix* m = entries[next].second;
    ++next;
    if (rows != m->rows() || cols != m->cols()) {
      throw FormatError("record '" + name + "' has shape " + shape_str(rows, cols) +
                        ", config implies " + shape_str(m->rows(), m->cols()));
    }
    read_f64_block(in, m->data());
  }
  // No trailing bytes allowed: file size must equal the declared payload.
  in.peek();
  if (!in.eof()) {
    throw FormatError("trailing bytes after final checkpoint record");
  }
  for (const auto& [name, m] : p.entries()) {
    if (!all_finite(*m)) {
      throw FormatError("record '" + name + "' contains non-finite values");
    }
  }
  return {std::move(p), cfg};
}

}  // namespace encdec
