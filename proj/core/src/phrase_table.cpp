#include "encdec/phrase_table.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <unordered_set>

#include "encdec/errors.hpp"

namespace encdec {

namespace {

constexpr const char* kDelim = " ||| ";
constexpr std::size_t kDelimLen = 5;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(kDelim, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + kDelimLen;
  }
}

std::vector<double> parse_features(std::string_view field, std::size_t line_no) {
  std::vector<double> features;
  std::size_t i = 0;
  while (i < field.size()) {
    while (i < field.size() && field[i] == ' ') ++i;
    std::size_t start = i;
    while (i < field.size() && field[i] != ' ') ++i;
    if (i == start) break;
    const std::string_view tok = field.substr(start, i - start);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw ParseError(line_no, "non-numeric feature '" + std::string(tok) + "'");
    }
    features.push_back(value);
  }
  return features;
}

}  // namespace

void parse_phrase_table(std::istream& in,
                        const std::function<void(const PhraseTableEntry&)>& sink) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.front() == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() < 2) {
      throw ParseError(line_no, "expected 'src ||| tgt [ ||| features]', got " +
                                    std::to_string(fields.size()) + " field(s)");
    }
    if (fields.size() > 3) {
      throw ParseError(line_no, "too many ' ||| ' fields (" +
                                    std::to_string(fields.size()) + ")");
    }
    PhraseTableEntry entry;
    entry.raw_line = line;
    entry.line_no = line_no;
    entry.src_text = std::string(fields[0]);
    entry.tgt_text = std::string(fields[1]);
    entry.has_feature_field = fields.size() == 3;
    if (entry.has_feature_field) {
      entry.features = parse_features(fields[2], line_no);
    }
    sink(entry);
  }
}

std::vector<PhraseTableEntry> parse_phrase_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open phrase table: " + path);
  std::vector<PhraseTableEntry> entries;
  parse_phrase_table(in, [&](const PhraseTableEntry& e) { entries.push_back(e); });
  return entries;
}

std::vector<PhrasePair> load_pairs_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open bilingual corpus: " + path);
  std::vector<PhrasePair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(line_no, "expected 'src<TAB>tgt'");
    }
    PhrasePair pair;
    pair.src_text = line.substr(0, tab);
    pair.tgt_text = line.substr(tab + 1);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

namespace {

// Separator that cannot appear inside whitespace-tokenized text.
std::string dedup_key(const std::string& src, const std::string& tgt) {
  std::string key;
  key.reserve(src.size() + tgt.size() + 1);
  key += src;
  key += '\x1f';
  key += tgt;
  return key;
}

}  // namespace

std::vector<PhrasePair> dedup_pairs(const std::vector<PhraseTableEntry>& entries) {
  std::vector<PhrasePair> out;
  std::unordered_set<std::string> seen;
  for (const auto& entry : entries) {
    if (!seen.insert(dedup_key(entry.src_text, entry.tgt_text)).second) continue;
    PhrasePair pair;
    pair.src_text = entry.src_text;
    pair.tgt_text = entry.tgt_text;
    pair.features = entry.features;
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<PhrasePair> dedup_pairs(const std::vector<PhrasePair>& pairs) {
  std::vector<PhrasePair> out;
  std::unordered_set<std::string> seen;
  for (const auto& pair : pairs) {
    if (!seen.insert(dedup_key(pair.src_text, pair.tgt_text)).second) continue;
    out.push_back(pair);
  }
  return out;
}

void encode_pairs(std::vector<PhrasePair>& pairs, const Vocabulary& src,
                  const Vocabulary& tgt) {
  for (auto& pair : pairs) {
    pair.src_ids = encode_phrase(pair.src_text, src);
    pair.tgt_ids = encode_phrase(pair.tgt_text, tgt);
  }
}

std::vector<std::size_t> sample_batch_indices(std::size_t pool_size,
                                              std::size_t batch_size, RngState& rng) {
  if (pool_size == 0) throw ParameterError("sample_batch: empty pair pool");
  std::vector<std::size_t> indices(batch_size);
  for (auto& idx : indices) idx = rng.next_below(pool_size);
  return indices;
}

std::vector<PhrasePair> sample_batch(const std::vector<PhrasePair>& pairs,
                                     std::size_t batch_size, RngState& rng) {
  std::vector<PhrasePair> batch;
  batch.reserve(batch_size);
  for (std::size_t idx : sample_batch_indices(pairs.size(), batch_size, rng)) {
    batch.push_back(pairs[idx]);
  }
  return batch;
}

}  // namespace encdec
