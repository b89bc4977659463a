#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "encdec/rng.hpp"
#include "encdec/types.hpp"
#include "encdec/vocab.hpp"

namespace encdec {

struct PhrasePair {
  std::string src_text, tgt_text;
  TokenIds src_ids, tgt_ids;          // EOS-terminated once encoded
  std::vector<double> features;       // existing phrase-table scores
};

// One parsed phrase-table line; `raw_line` re-emits byte-for-byte.
struct PhraseTableEntry {
  std::string raw_line;
  std::string src_text, tgt_text;
  std::vector<double> features;
  bool has_feature_field = false;     // distinguishes "a ||| b" from "a ||| b ||| "
  std::size_t line_no = 0;
};

// Phrase-table wire format: fields separated by the literal " ||| ", giving
// "src ||| tgt" or "src ||| tgt ||| feature floats". Lines starting with '#'
// are comments. Malformed lines raise ParseError carrying the line number.
std::vector<PhraseTableEntry> parse_phrase_table(const std::string& path);
void parse_phrase_table(std::istream& in,
                        const std::function<void(const PhraseTableEntry&)>& sink);

// Bilingual corpus: one pair per line as "src<TAB>tgt".
std::vector<PhrasePair> load_pairs_tsv(const std::string& path);

// Unique (src_text, tgt_text) pairs, first occurrence kept, order preserved.
// Training ignores phrase-pair frequencies, so duplicates carry no signal.
std::vector<PhrasePair> dedup_pairs(const std::vector<PhraseTableEntry>& entries);
std::vector<PhrasePair> dedup_pairs(const std::vector<PhrasePair>& pairs);

// Fills src_ids/tgt_ids for every pair.
void encode_pairs(std::vector<PhrasePair>& pairs, const Vocabulary& src,
                  const Vocabulary& tgt);

// batch_size uniform draws with replacement; deterministic per rng state.
std::vector<PhrasePair> sample_batch(const std::vector<PhrasePair>& pairs,
                                     std::size_t batch_size, RngState& rng);
std::vector<std::size_t> sample_batch_indices(std::size_t pool_size,
                                              std::size_t batch_size, RngState& rng);

}  // namespace encdec
