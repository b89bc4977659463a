#pragma once

#include <string>
#include <vector>

#include "encdec/model.hpp"
#include "encdec/phrase_table.hpp"
#include "encdec/rng.hpp"
#include "encdec/vocab.hpp"

namespace encdec {

// Log-probability of the pair under the model; identical to log_prob.
double score_pair(const ModelParams& p, const ModelConfig& cfg,
                  const PhrasePair& pair);

struct ScoredSample {
  TokenIds tgt_ids;      // EOS-terminated
  std::string tgt_text;
  double score = 0.0;    // log-probability of the emitted ids
  bool truncated = false;
  std::size_t multiplicity = 1;  // distinct-draw count in top_samples
};

// Ancestral sampling from the decoder. Stops at EOS; at max_len the sample
// is EOS-appended, flagged truncated, and scored only on the emitted prefix.
ScoredSample sample(const ModelParams& p, const ModelConfig& cfg,
                    const TokenIds& src_ids, std::size_t max_len, RngState& rng,
                    const Vocabulary& tgt_vocab);

// n draws, deduplicated by tgt_ids, top k by score (descending). Fewer than
// k entries come back when the draws produce fewer distinct sequences.
std::vector<ScoredSample> top_samples(const ModelParams& p, const ModelConfig& cfg,
                                      const TokenIds& src_ids, std::size_t n,
                                      std::size_t k, RngState& rng,
                                      const Vocabulary& tgt_vocab,
                                      std::size_t max_len = 50);

struct RescoreSummary {
  std::size_t lines = 0;   // data lines rescored
  std::size_t errors = 0;  // always 0 on return; parse errors propagate
};

// Appends the model score (natural-log probability, 6 fractional digits) to
// each line's feature field, creating the field when absent. Everything
// before the appended score is byte-identical to the input. A '#' header
// documenting the appended feature precedes a nonempty output; comment lines
// pass through verbatim. Partial output is removed on failure.
RescoreSummary rescore_table(const ModelParams& p, const ModelConfig& cfg,
                             const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                             const std::string& in_path, const std::string& out_path,
                             bool write_header = true);

enum class UnkSide { Both, Source, Target };

// Number of tokens mapped to UNK by the shortlists; the word-penalty feature.
std::size_t unk_penalty(const PhrasePair& pair, const Vocabulary& src_vocab,
                        const Vocabulary& tgt_vocab, UnkSide side = UnkSide::Both);

enum class EmbeddingSide { Source, Target };

// One line per vocabulary entry (reserved rows included):
// "token<TAB>v_1 ... v_d" with 9 significant digits.
void export_word_embeddings(const ModelParams& p, const Vocabulary& vocab,
                            EmbeddingSide side, const std::string& out_path);

// One line per phrase: "phrase<TAB>c_1 ... c_n" where c is the encoder's
// context vector for the phrase.
void export_phrase_vectors(const ModelParams& p, const ModelConfig& cfg,
                           const std::vector<std::string>& phrases,
                           const Vocabulary& src_vocab, const std::string& out_path);

}  // namespace encdec
