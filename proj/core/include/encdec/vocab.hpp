#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "encdec/types.hpp"

namespace encdec {

// Whitespace tokenization; input corpora are assumed pre-tokenized.
std::vector<std::string> tokenize(std::string_view text);

// Frequency-ranked shortlist of at most K tokens plus the reserved EOS and
// UNK entries at ids 0 and 1. Lookups outside the shortlist map to UNK.
class Vocabulary {
 public:
  static constexpr const char* kEosToken = "</s>";
  static constexpr const char* kUnkToken = "[UNK]";

  Vocabulary();  // reserved tokens only

  std::int32_t lookup(std::string_view token) const;  // UNK fallback
  const std::string& token(std::int32_t id) const;    // throws VocabError

  std::size_t size() const { return id_to_token_.size(); }
  std::size_t shortlist_size() const { return id_to_token_.size() - 2; }

  // Appends a token to the shortlist; used by the builder and by the
  // vocabulary-file loader. Rejects duplicates and reserved surface forms.
  std::int32_t add(const std::string& token);

  bool contains(std::string_view token) const;

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, std::int32_t> token_to_id_;
};

// Top-K tokens of the corpus by frequency; ties broken by first occurrence,
// then lexicographically. Tokens colliding with the reserved surface forms
// are excluded (they would break the id<->token bijection) and fall back to
// UNK at lookup time. An empty corpus yields the reserved-only vocabulary.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                       std::size_t k);

// Convenience: tokenizes each line first.
Vocabulary build_vocab_from_lines(const std::vector<std::string>& lines,
                                  std::size_t k);

// Whitespace-tokenize, shortlist-lookup with UNK fallback, append EOS.
TokenIds encode_phrase(std::string_view text, const Vocabulary& v);

// Inverse surface form: tokens joined by single spaces, stopping before the
// terminal EOS. UNK ids render as the UNK surface form.
std::string decode_ids(const TokenIds& ids, const Vocabulary& v);

// One token per line, line number = id; includes the two reserved rows.
void save_vocab(const Vocabulary& v, const std::string& path);
Vocabulary load_vocab(const std::string& path);

}  // namespace encdec
