#include "encdec/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "encdec/errors.hpp"

namespace encdec {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

Vocabulary::Vocabulary() {
  id_to_token_ = {kEosToken, kUnkToken};
  token_to_id_ = {{kEosToken, kEosId}, {kUnkToken, kUnkId}};
}

std::int32_t Vocabulary::lookup(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return kUnkId;
  // Reserved surface forms in running text are out-of-vocabulary by fiat.
  if (it->second == kEosId || it->second == kUnkId) return kUnkId;
  return it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw VocabError("token id " + std::to_string(id) + " outside vocabulary of size " +
                     std::to_string(id_to_token_.size()));
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it != token_to_id_.end() && it->second != kEosId && it->second != kUnkId;
}

std::int32_t Vocabulary::add(const std::string& token) {
  if (token == kEosToken || token == kUnkToken) {
    throw VocabError("cannot add reserved token '" + token + "' to the shortlist");
  }
  if (token_to_id_.count(token) != 0) {
    throw VocabError("duplicate token '" + token + "'");
  }
  const std::int32_t id = static_cast<std::int32_t>(id_to_token_.size());
  id_to_token_.push_back(token);
  token_to_id_.emplace(token, id);
  return id;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus,
                       std::size_t k) {
  if (k < 1) throw ParameterError("build_vocab: shortlist size must be >= 1");

  struct Stat {
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Stat> stats;
  std::size_t position = 0;
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence) {
      if (token == Vocabulary::kEosToken || token == Vocabulary::kUnkToken) {
        ++position;
        continue;
      }
      auto [it, inserted] = stats.try_emplace(token);
      if (inserted) it->second.first_seen = position;
      ++it->second.count;
      ++position;
    }
  }

  std::vector<std::pair<std::string, Stat>> ranked(stats.begin(), stats.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    if (a.second.first_seen != b.second.first_seen) {
      return a.second.first_seen < b.second.first_seen;
    }
    return a.first < b.first;
  });

  Vocabulary v;
  const std::size_t take = std::min(k, ranked.size());
  for (std::size_t i = 0; i < take; ++i) v.add(ranked[i].first);
  return v;
}

Vocabulary build_vocab_from_lines(const std::vector<std::string>& lines,
                                  std::size_t k) {
  std::vector<std::vector<std::string>> corpus;
  corpus.reserve(lines.size());
  for (const auto& line : lines) corpus.push_back(tokenize(line));
  return build_vocab(corpus, k);
}

TokenIds encode_phrase(std::string_view text, const Vocabulary& v) {
  TokenIds ids;
  for (const auto& token : tokenize(text)) ids.push_back(v.lookup(token));
  ids.push_back(kEosId);
  return ids;
}

std::string decode_ids(const TokenIds& ids, const Vocabulary& v) {
  std::string out;
  for (std::int32_t id : ids) {
    if (id == kEosId) break;
    if (!out.empty()) out += ' ';
    out += v.token(id);
  }
  return out;
}

void save_vocab(const Vocabulary& v, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open vocabulary for writing: " + path);
  for (std::size_t id = 0; id < v.size(); ++id) {
    out << v.token(static_cast<std::int32_t>(id)) << '\n';
  }
  if (!out.flush()) throw IoError("write failed for vocabulary: " + path);
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary for reading: " + path);
  Vocabulary v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != Vocabulary::kEosToken) {
        throw ParseError(line_no, "vocabulary must start with the EOS row '" +
                                      std::string(Vocabulary::kEosToken) + "'");
      }
      continue;
    }
    if (line_no == 2) {
      if (line != Vocabulary::kUnkToken) {
        throw ParseError(line_no, "second vocabulary row must be the UNK row '" +
                                      std::string(Vocabulary::kUnkToken) + "'");
      }
      continue;
    }
    if (line.empty()) throw ParseError(line_no, "empty vocabulary row");
    try {
      v.add(line);
    } catch (const VocabError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return v;
}

}  // namespace encdec
