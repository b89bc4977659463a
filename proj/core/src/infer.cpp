#include "encdec/infer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "encdec/errors.hpp"

namespace encdec {

double score_pair(const ModelParams& p, const ModelConfig& cfg,
                  const PhrasePair& pair) {
  return log_prob(pair.src_ids, pair.tgt_ids, p, cfg);
}

namespace {

std::size_t draw_from(const Vector& probs, RngState& rng) {
  const double u = rng.next_uniform();
  double cum = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    cum += probs[j];
    if (u < cum) return j;
  }
  return probs.size() - 1;  // rounding fell past the last bucket
}

}  // namespace

ScoredSample sample(const ModelParams& p, const ModelConfig& cfg,
                    const TokenIds& src_ids, std::size_t max_len, RngState& rng,
                    const Vocabulary& tgt_vocab) {
  if (max_len < 1) throw ParameterError("sample: max_len must be >= 1");

  const EncoderOutput enc = encode(src_ids, p, cfg);
  const Vector& c = enc.c;
  Vector h = decoder_init(c, p);

  ScoredSample out;
  std::int32_t y_prev = kBeginMarker;
  for (std::size_t t = 0; t < max_len; ++t) {
    h = decoder_step(h, y_prev, c, p, cfg);
    const Vector probs = output_distribution(h, y_prev, c, p, cfg);
    const std::int32_t y = static_cast<std::int32_t>(draw_from(probs, rng));
    out.score += std::log(probs[static_cast<std::size_t>(y)]);
    out.tgt_ids.push_back(y);
    if (y == kEosId) break;
    y_prev = y;
  }
  if (out.tgt_ids.back() != kEosId) {
    // Cap reached: close the sequence without charging for the forced EOS.
    out.tgt_ids.push_back(kEosId);
    out.truncated = true;
  }
  out.tgt_text = decode_ids(out.tgt_ids, tgt_vocab);
  return out;
}

std::vector<ScoredSample> top_samples(const ModelParams& p, const ModelConfig& cfg,
                                      const TokenIds& src_ids, std::size_t n,
                                      std::size_t k, RngState& rng,
                                      const Vocabulary& tgt_vocab,
                                      std::size_t max_len) {
  if (k < 1 || n < k) throw ParameterError("top_samples: need n >= k >= 1");

  std::vector<ScoredSample> distinct;
  std::map<TokenIds, std::size_t> seen;  // tgt_ids -> index into distinct
  for (std::size_t i = 0; i < n; ++i) {
    ScoredSample s = sample(p, cfg, src_ids, max_len, rng, tgt_vocab);
    auto [it, inserted] = seen.try_emplace(s.tgt_ids, distinct.size());
    if (inserted) {
      distinct.push_back(std::move(s));
    } else {
      ++distinct[it->second].multiplicity;
    }
  }
  std::stable_sort(distinct.begin(), distinct.end(),
                   [](const ScoredSample& a, const ScoredSample& b) {
                     return a.score > b.score;
                   });
  if (distinct.size() > k) distinct.resize(k);
  return distinct;
}

namespace {

std::string format_score(double score) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", score);
  return buf;
}

}  // namespace

RescoreSummary rescore_table(const ModelParams& p, const ModelConfig& cfg,
                             const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                             const std::string& in_path, const std::string& out_path,
                             bool write_header) {
  std::ifstream in(in_path);
  if (!in) throw IoError("cannot open phrase table: " + in_path);
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot open output: " + out_path);

  RescoreSummary summary;
  bool header_written = false;
  try {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!header_written && write_header) {
        out << "# rescored: appended feature is the encoder-decoder "
               "log-probability (natural log)\n";
        header_written = true;
      }
      if (!line.empty() && line.front() == '#') {
        out << line << '\n';
        continue;
      }
      std::istringstream one(line);
      PhraseTableEntry entry;
      bool got = false;
      parse_phrase_table(one, [&](const PhraseTableEntry& e) {
        entry = e;
        got = true;
      });
      if (!got) {
        throw ParseError(line_no, "blank line in phrase table");
      }
      entry.line_no = line_no;

      PhrasePair pair;
      pair.src_text = entry.src_text;
      pair.tgt_text = entry.tgt_text;
      pair.src_ids = encode_phrase(entry.src_text, src_vocab);
      pair.tgt_ids = encode_phrase(entry.tgt_text, tgt_vocab);
      const double score = score_pair(p, cfg, pair);

      out << line;
      out << (entry.has_feature_field ? " " : " ||| ");
      out << format_score(score) << '\n';
      ++summary.lines;
    }
    out.flush();
    if (!out) throw IoError("write failed for output: " + out_path);
  } catch (...) {
    out.close();
    std::remove(out_path.c_str());
    throw;
  }
  return summary;
}

std::size_t unk_penalty(const PhrasePair& pair, const Vocabulary& src_vocab,
                        const Vocabulary& tgt_vocab, UnkSide side) {
  std::size_t count = 0;
  if (side != UnkSide::Target) {
    for (const auto& token : tokenize(pair.src_text)) {
      if (src_vocab.lookup(token) == kUnkId) ++count;
    }
  }
  if (side != UnkSide::Source) {
    for (const auto& token : tokenize(pair.tgt_text)) {
      if (tgt_vocab.lookup(token) == kUnkId) ++count;
    }
  }
  return count;
}

namespace {

void write_vector_line(std::ofstream& out, const std::string& label,
                       const double* values, std::size_t n) {
  out << label << '\t';
  char buf[64];
  for (std::size_t j = 0; j < n; ++j) {
    std::snprintf(buf, sizeof(buf), "%.9g", values[j]);
    if (j > 0) out << ' ';
    out << buf;
  }
  out << '\n';
}

}  // namespace

void export_word_embeddings(const ModelParams& p, const Vocabulary& vocab,
                            EmbeddingSide side, const std::string& out_path) {
  const Matrix& table = side == EmbeddingSide::Source ? p.E_src : p.E_tgt;
  if (table.rows() != vocab.size()) {
    throw VocabError("embedding table has " + std::to_string(table.rows()) +
                     " rows but vocabulary has " + std::to_string(vocab.size()) +
                     " entries");
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot open output: " + out_path);
  for (std::size_t id = 0; id < table.rows(); ++id) {
    write_vector_line(out, vocab.token(static_cast<std::int32_t>(id)),
                      table.row_data(id), table.cols());
  }
  if (!out.flush()) throw IoError("write failed for output: " + out_path);
}

void export_phrase_vectors(const ModelParams& p, const ModelConfig& cfg,
                           const std::vector<std::string>& phrases,
                           const Vocabulary& src_vocab, const std::string& out_path) {
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw IoError("cannot open output: " + out_path);
  for (const auto& phrase : phrases) {
    const TokenIds ids = encode_phrase(phrase, src_vocab);
    const EncoderOutput enc = encode(ids, p, cfg);
    write_vector_line(out, phrase, enc.c.data(), enc.c.size());
  }
  if (!out.flush()) throw IoError("write failed for output: " + out_path);
}

}  // namespace encdec
