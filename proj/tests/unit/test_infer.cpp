#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "encdec/errors.hpp"
#include "encdec/infer.hpp"
#include "test_util.hpp"

using namespace encdec;
using namespace testutil;

TEST_SUITE_BEGIN("infer");

namespace {

Vocabulary letters_vocab(int n) {
  std::string line;
  for (int i = 0; i < n; ++i) {
    if (!line.empty()) line += ' ';
    line += 'a' + i;
    line += " ";
    line += 'a' + i;  // repeat so frequency ranking is stable
  }
  return build_vocab_from_lines({line}, std::size_t(n));
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("score_pair equals log_prob and is repeatable") {
  const ModelConfig cfg = tiny_config();
  const ModelParams p = random_params(cfg, 501);
  PhrasePair pair;
  pair.src_ids = {2, 4, kEosId};
  pair.tgt_ids = {3, kEosId};
  const double s1 = score_pair(p, cfg, pair);
  const double s2 = score_pair(p, cfg, pair);
  CHECK(s1 == s2);
  CHECK(s1 == log_prob(pair.src_ids, pair.tgt_ids, p, cfg));
}

TEST_CASE("score_pair of the zero-weight model") {
  const ModelConfig cfg = tiny_config(4, 4);
  const ModelParams p = ModelParams::zeros(cfg);
  PhrasePair pair;
  pair.src_ids = {2, kEosId};
  pair.tgt_ids = {3, 2, kEosId};  // T = 3
  CHECK(score_pair(p, cfg, pair) ==
        doctest::Approx(3.0 * std::log(0.25)).epsilon(1e-14));
}

TEST_CASE("score_pair matches the enumeration oracle") {
  const ModelConfig cfg = tiny_config(3, 3, 3, 2, 2, 2);
  const ModelParams p = random_params(cfg, 502);
  const TokenIds src{1, kEosId};
  const auto seqs = enumerate_targets(p, cfg, src, 6);
  for (const auto& seq : seqs) {
    PhrasePair pair;
    pair.src_ids = src;
    pair.tgt_ids = seq.ids;
    CHECK(std::exp(score_pair(p, cfg, pair)) == doctest::Approx(seq.prob).epsilon(1e-10));
  }
}

TEST_CASE("per-step distribution product matches score_pair") {
  const ModelConfig cfg = tiny_config();
  const ModelParams p = random_params(cfg, 503);
  const TokenIds src{2, 5, kEosId};
  const TokenIds tgt{4, 1, kEosId};

  const EncoderOutput enc = encode(src, p, cfg);
  Vector h = decoder_init(enc.c, p);
  double sum_logs = 0.0;
  std::int32_t y_prev = kBeginMarker;
  for (std::int32_t y : tgt) {
    h = decoder_step(h, y_prev, enc.c, p, cfg);
    const Vector dist = output_distribution(h, y_prev, enc.c, p, cfg);
    sum_logs += std::log(dist[std::size_t(y)]);
    y_prev = y;
  }
  PhrasePair pair;
  pair.src_ids = src;
  pair.tgt_ids = tgt;
  CHECK(std::abs(sum_logs - score_pair(p, cfg, pair)) <= 1e-10);
}

TEST_CASE("sampling the zero-weight model is uniform on the first token") {
  const ModelConfig cfg = tiny_config(4, 4, 4, 3, 2, 3);
  const ModelParams p = ModelParams::zeros(cfg);
  const Vocabulary v = letters_vocab(2);
  const TokenIds src{2, kEosId};
  RngState rng(504);
  std::vector<int> counts(4, 0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const ScoredSample s = sample(p, cfg, src, 30, rng, v);
    ++counts[std::size_t(s.tgt_ids[0])];
  }
  // Each of the 4 ids has p = 1/4; 3 sigma on 1e5 draws.
  const double sigma = std::sqrt(draws * 0.25 * 0.75);
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(counts[k] - draws * 0.25) <= 3.0 * sigma);
  }
}

TEST_CASE("sample respects max_len and flags truncation") {
  const ModelConfig cfg = tiny_config(4, 4, 4, 3, 2, 3);
  const ModelParams p = ModelParams::zeros(cfg);
  const Vocabulary v = letters_vocab(2);
  RngState rng(505);
  const ScoredSample s = sample(p, cfg, {2, kEosId}, 1, rng, v);
  CHECK(s.tgt_ids.back() == kEosId);
  CHECK(s.tgt_ids.size() <= 2);
  if (s.tgt_ids.size() == 2) CHECK(s.truncated);

  RngState r1(506), r2(506);
  const ScoredSample a = sample(p, cfg, {2, kEosId}, 10, r1, v);
  const ScoredSample b = sample(p, cfg, {2, kEosId}, 10, r2, v);
  CHECK(a.tgt_ids == b.tgt_ids);
  CHECK(a.score == b.score);
}

TEST_CASE("truncated samples are scored on the emitted prefix only") {
  const ModelConfig cfg = tiny_config(4, 4, 4, 3, 2, 3);
  const ModelParams p = ModelParams::zeros(cfg);
  const Vocabulary v = letters_vocab(2);
  // Find a truncated draw; its score must be max_len * log(1/4) for the
  // uniform model (the appended EOS is not charged).
  RngState rng(507);
  for (int i = 0; i < 200; ++i) {
    const ScoredSample s = sample(p, cfg, {2, kEosId}, 3, rng, v);
    if (s.truncated) {
      CHECK(s.score == doctest::Approx(3.0 * std::log(0.25)).epsilon(1e-12));
      return;
    }
  }
  FAIL("no truncated sample in 200 draws of a uniform model with max_len=3");
}

TEST_CASE("sampling matches enumerated sequence probabilities") {
  const ModelConfig cfg = tiny_config(3, 3, 3, 2, 2, 2);
  const ModelParams p = ModelParams::zeros(cfg);  // geometric EOS, K=3
  const Vocabulary v = letters_vocab(1);
  const TokenIds src{2, kEosId};
  const auto seqs = enumerate_targets(p, cfg, src, 6);

  RngState rng(508);
  const int draws = 100000;
  std::map<TokenIds, int> counts;
  for (int i = 0; i < draws; ++i) {
    const ScoredSample s = sample(p, cfg, src, 20, rng, v);
    ++counts[s.tgt_ids];
  }
  for (const auto& seq : seqs) {
    if (seq.prob * draws < 50) continue;  // skip tiny-count bins
    const double expect = seq.prob * draws;
    const double sigma = std::sqrt(draws * seq.prob * (1.0 - seq.prob));
    const auto it = counts.find(seq.ids);
    const double got = it == counts.end() ? 0.0 : double(it->second);
    CHECK(std::abs(got - expect) <= 4.0 * sigma);
  }
}

TEST_CASE("top_samples dedups, sorts, and bounds k") {
  const ModelConfig cfg = tiny_config(4, 4, 4, 3, 2, 3);
  const ModelParams p = ModelParams::zeros(cfg);
  const Vocabulary v = letters_vocab(2);
  RngState rng(509);

  const auto one = top_samples(p, cfg, {2, kEosId}, 1, 1, rng, v);
  CHECK(one.size() == 1);

  const auto top = top_samples(p, cfg, {2, kEosId}, 40, 5, rng, v);
  CHECK(top.size() <= 5);
  for (std::size_t i = 0; i + 1 < top.size(); ++i) {
    CHECK(top[i].score >= top[i + 1].score);
  }
  std::set<TokenIds> distinct;
  std::size_t multiplicity_total = 0;
  for (const auto& s : top) {
    CHECK(distinct.insert(s.tgt_ids).second);
    multiplicity_total += s.multiplicity;
  }
  CHECK(multiplicity_total <= 40);
  CHECK_THROWS_AS(top_samples(p, cfg, {2, kEosId}, 1, 2, rng, v), ParameterError);
}

TEST_CASE("a dominant target ranks first under top_samples") {
  // Saturated output wiring: step 1 emits id 2, step 2 emits EOS, both with
  // probability ~ 1 - 1e-4.
  ModelConfig cfg;
  cfg.vocab_src = 2;
  cfg.vocab_tgt = 3;
  cfg.hidden = 2;
  cfg.embed = 2;
  cfg.maxout = 2;
  cfg.output_rank = 2;
  ModelParams p = ModelParams::zeros(cfg);
  // Encoder bias drives h_N, V amplifies it into c ~ [1, 1].
  for (double& b : p.enc.b.data()) b = 3.0;
  for (std::size_t i = 0; i < 2; ++i) p.V(i, i) = 10.0;
  // Step 1: s = [5, 0] via O_c; step 2 flips to [0, 5] via the O_y column.
  p.O_c(0, 0) = 5.0;
  p.O_c(2, 0) = -5.0;
  p.O_y(0, 2) = -10.0;
  p.O_y(2, 2) = 10.0;
  p.G_r(0, 0) = 1.0;
  p.G_r(1, 1) = 1.0;
  p.G_l(0, 1) = 2.0;   // EOS favored when u = [0, 5]
  p.G_l(1, 0) = -2.0;  // UNK suppressed always
  p.G_l(1, 1) = -2.0;
  p.G_l(2, 0) = 2.0;   // id 2 favored when u = [5, 0]

  const Vocabulary v = letters_vocab(1);
  const TokenIds want{2, kEosId};
  int first = 0;
  RngState rng(510);
  for (int trial = 0; trial < 100; ++trial) {
    const auto top = top_samples(p, cfg, {kEosId}, 50, 1, rng, v);
    if (!top.empty() && top[0].tgt_ids == want) ++first;
  }
  CHECK(first >= 99);
}

TEST_CASE("rescore_table appends exactly one feature per line") {
  const ModelConfig cfg = tiny_config(4, 4);
  const ModelParams p = ModelParams::zeros(cfg);
  const Vocabulary v = letters_vocab(2);

  const std::string in_path = "rescore_in.txt";
  const std::string out_path = "rescore_out.txt";
  {
    std::ofstream out(in_path, std::ios::trunc);
    out << "a ||| b ||| 0.5\n";   // T=2 -> 2 log(1/4)
    out << "a b ||| a\n";         // no feature field yet
  }
  const RescoreSummary summary = rescore_table(p, cfg, v, v, in_path, out_path,
                                               /*write_header=*/false);
  CHECK(summary.lines == 2);
  CHECK(summary.errors == 0);

  std::ifstream out(out_path);
  std::string line1, line2;
  std::getline(out, line1);
  std::getline(out, line2);
  CHECK(line1 == "a ||| b ||| 0.5 -2.772589");
  CHECK(line2 == "a b ||| a ||| -2.772589");

  std::remove(in_path.c_str());
  std::remove(out_path.c_str());
}

TEST_CASE("rescore_table empty input gives empty output") {
  const ModelConfig cfg = tiny_config(4, 4);
  const ModelParams p = ModelParams::zeros(cfg);
  const Vocabulary v = letters_vocab(2);
  const std::string in_path = "rescore_empty_in.txt";
  const std::string out_path = "rescore_empty_out.txt";
  {
    std::ofstream out(in_path, std::ios::trunc);
  }
  const RescoreSummary summary = rescore_table(p, cfg, v, v, in_path, out_path);
  CHECK(summary.lines == 0);
  CHECK(slurp(out_path).empty());
  std::remove(in_path.c_str());
  std::remove(out_path.c_str());
}

TEST_CASE("rescore_table output lines are longer and re-parse with one more feature") {
  const ModelConfig cfg = tiny_config(4, 4);
  const ModelParams p = random_params(cfg, 511, 0.1);
  const Vocabulary v = letters_vocab(2);
  const std::string in_path = "rescore_100_in.txt";
  const std::string out_path = "rescore_100_out.txt";
  std::vector<std::string> in_lines;
  {
    std::ofstream out(in_path, std::ios::trunc);
    RngState rng(512);
    for (int i = 0; i < 100; ++i) {
      std::string src = rng.next_below(2) ? "a" : "b a";
      std::string tgt = rng.next_below(2) ? "b" : "a b";
      std::string line = src + " ||| " + tgt;
      if (rng.next_below(2)) line += " ||| 0.25 0.5";
      in_lines.push_back(line);
      out << line << '\n';
    }
  }
  const RescoreSummary summary = rescore_table(p, cfg, v, v, in_path, out_path);
  CHECK(summary.lines == 100);

  const auto in_entries = parse_phrase_table(in_path);
  const auto out_entries = parse_phrase_table(out_path);
  REQUIRE(out_entries.size() == 100);
  std::ifstream out_file(out_path);
  std::string header;
  std::getline(out_file, header);
  CHECK(header.front() == '#');
  for (std::size_t i = 0; i < 100; ++i) {
    std::string line;
    std::getline(out_file, line);
    CHECK(line.size() > in_lines[i].size());
    CHECK(line.compare(0, in_lines[i].size(), in_lines[i]) == 0);
    CHECK(out_entries[i].features.size() == in_entries[i].features.size() + 1);
    // The appended feature equals score_pair.
    PhrasePair pair;
    pair.src_ids = encode_phrase(in_entries[i].src_text, v);
    pair.tgt_ids = encode_phrase(in_entries[i].tgt_text, v);
    CHECK(out_entries[i].features.back() ==
          doctest::Approx(score_pair(p, cfg, pair)).epsilon(1e-6));
  }
  std::remove(in_path.c_str());
  std::remove(out_path.c_str());
}

TEST_CASE("rescore_table removes partial output on failure") {
  const ModelConfig cfg = tiny_config(4, 4);
  const ModelParams p = ModelParams::zeros(cfg);
  const Vocabulary v = letters_vocab(2);
  const std::string in_path = "rescore_fail_in.txt";
  const std::string out_path = "rescore_fail_out.txt";
  {
    std::ofstream out(in_path, std::ios::trunc);
    out << "a ||| b\n";
    out << "malformed line without delimiter\n";
  }
  try {
    rescore_table(p, cfg, v, v, in_path, out_path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }
  CHECK(!std::ifstream(out_path).good());
  std::remove(in_path.c_str());
}

TEST_CASE("unk_penalty counts OOV tokens per side") {
  const Vocabulary v = build_vocab_from_lines({"a b c"}, 10);
  PhrasePair pair;
  pair.src_text = "a b";
  pair.tgt_text = "c a";
  CHECK(unk_penalty(pair, v, v) == 0);
  pair.src_text = "a zzz";
  pair.tgt_text = "qqq b";
  CHECK(unk_penalty(pair, v, v) == 2);
  CHECK(unk_penalty(pair, v, v, UnkSide::Source) == 1);
  CHECK(unk_penalty(pair, v, v, UnkSide::Target) == 1);
}

TEST_CASE("unk_penalty equals an independent recount on random text") {
  const Vocabulary v = build_vocab_from_lines({"a b c d"}, 10);
  RngState rng(513);
  const std::vector<std::string> words = {"a", "b", "c", "d", "x", "y", "z"};
  for (int trial = 0; trial < 20; ++trial) {
    PhrasePair pair;
    std::size_t expected = 0;
    auto make_side = [&](std::string& text) {
      const std::size_t len = 1 + rng.next_below(6);
      for (std::size_t i = 0; i < len; ++i) {
        const auto& w = words[rng.next_below(words.size())];
        if (!text.empty()) text += ' ';
        text += w;
        if (w == "x" || w == "y" || w == "z") ++expected;
      }
    };
    make_side(pair.src_text);
    make_side(pair.tgt_text);
    CHECK(unk_penalty(pair, v, v) == expected);
  }
}

TEST_CASE("export_word_embeddings writes one labeled row per id") {
  const ModelConfig cfg = tiny_config(4, 4, 4, 3, 2, 3);
  const Vocabulary v = letters_vocab(2);  // size 4 matches vocab_src
  const ModelParams p = random_params(cfg, 514);
  const std::string path = "words_export.tsv";
  export_word_embeddings(p, v, EmbeddingSide::Source, path);

  std::ifstream in(path);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const std::size_t tab = line.find('\t');
    REQUIRE(tab != std::string::npos);
    CHECK(line.substr(0, tab) == v.token(std::int32_t(rows)));
    // Re-parse the vector and compare at print precision.
    std::istringstream values(line.substr(tab + 1));
    double value;
    std::size_t j = 0;
    while (values >> value) {
      CHECK(value == doctest::Approx(p.E_src(rows, j)).epsilon(1e-8));
      ++j;
    }
    CHECK(j == cfg.embed);
    ++rows;
  }
  CHECK(rows == v.size());
  std::remove(path.c_str());

  // Zero embeddings export as all-zero rows.
  const ModelParams zero = ModelParams::zeros(cfg);
  export_word_embeddings(zero, v, EmbeddingSide::Target, path);
  std::ifstream zin(path);
  while (std::getline(zin, line)) {
    std::istringstream values(line.substr(line.find('\t') + 1));
    double value;
    while (values >> value) CHECK(value == 0.0);
  }
  std::remove(path.c_str());
}

TEST_CASE("export_word_embeddings validates table size") {
  const ModelConfig cfg = tiny_config(7, 7);
  const Vocabulary v = letters_vocab(2);  // size 4 != 7
  const ModelParams p = ModelParams::zeros(cfg);
  CHECK_THROWS_AS(export_word_embeddings(p, v, EmbeddingSide::Source, "x.tsv"),
                  VocabError);
}

TEST_CASE("export_phrase_vectors emits the encoder context per phrase") {
  const ModelConfig cfg = tiny_config(4, 4, 5, 3, 2, 3);
  const Vocabulary v = letters_vocab(2);
  const ModelParams p = random_params(cfg, 515);
  const std::string path = "phrases_export.tsv";
  export_phrase_vectors(p, cfg, {"a b", "", "a b"}, v, path);

  std::ifstream in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0].substr(lines[0].find('\t')) == lines[2].substr(lines[2].find('\t')));

  // The empty phrase encodes as EOS only.
  const EncoderOutput eos_only = encode({kEosId}, p, cfg);
  std::istringstream values(lines[1].substr(lines[1].find('\t') + 1));
  double value;
  std::size_t j = 0;
  while (values >> value) {
    CHECK(value == doctest::Approx(eos_only.c[j]).epsilon(1e-8));
    ++j;
  }
  CHECK(j == cfg.hidden);
  std::remove(path.c_str());
}

TEST_SUITE_END();
