#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "encdec/model.hpp"
#include "encdec/phrase_table.hpp"
#include "encdec/rng.hpp"

namespace testutil {

using namespace encdec;

inline ModelConfig tiny_config(std::size_t vocab_src = 7, std::size_t vocab_tgt = 7,
                               std::size_t hidden = 8, std::size_t embed = 5,
                               std::size_t maxout = 4, std::size_t rank = 6,
                               CellKind cell = CellKind::Gated, bool bias = true) {
  ModelConfig cfg;
  cfg.vocab_src = vocab_src;
  cfg.vocab_tgt = vocab_tgt;
  cfg.hidden = hidden;
  cfg.embed = embed;
  cfg.maxout = maxout;
  cfg.output_rank = rank;
  cfg.cell = cell;
  cfg.bias = bias;
  return cfg;
}

// Random weights with a larger spread than the training init, so the
// nonlinearities are exercised away from their linear region.
inline ModelParams random_params(const ModelConfig& cfg, std::uint64_t seed,
                                 double stddev = 0.4) {
  ModelParams p = ModelParams::zeros(cfg);
  RngState rng(seed);
  for (auto& [name, m] : p.entries()) {
    if (m->empty()) continue;
    for (double& v : m->data()) v = stddev * rng.next_gaussian();
  }
  return p;
}

// Random EOS-terminated id sequence with 1..max_body non-EOS tokens.
inline TokenIds random_ids(std::size_t vocab, std::size_t max_body, RngState& rng) {
  const std::size_t body = 1 + rng.next_below(max_body);
  TokenIds ids;
  for (std::size_t i = 0; i < body; ++i) {
    ids.push_back(static_cast<std::int32_t>(rng.next_below(vocab)));
  }
  ids.push_back(kEosId);
  return ids;
}

inline PhrasePair random_pair(const ModelConfig& cfg, std::size_t max_body,
                              RngState& rng) {
  PhrasePair pair;
  pair.src_ids = random_ids(cfg.vocab_src, max_body, rng);
  pair.tgt_ids = random_ids(cfg.vocab_tgt, max_body, rng);
  return pair;
}

// --- brute-force enumeration of the decoder distribution tree ---------------
//
// Walks every EOS-terminated target sequence up to max_len, carrying the
// decoder state incrementally and multiplying per-step distribution entries.
// Independent of log_prob's log-sum-exp path.

struct EnumeratedSeq {
  TokenIds ids;
  double prob = 0.0;
};

inline void enumerate_rec(const ModelParams& p, const ModelConfig& cfg,
                          const Vector& c, const Vector& h, std::int32_t y_prev,
                          TokenIds& prefix, double prob, std::size_t max_len,
                          std::vector<EnumeratedSeq>& out) {
  const Vector h_next = decoder_step(h, y_prev, c, p, cfg);
  const Vector dist = output_distribution(h_next, y_prev, c, p, cfg);
  for (std::size_t y = 0; y < dist.size(); ++y) {
    const double p_step = dist[y];
    if (y == static_cast<std::size_t>(kEosId)) {
      TokenIds ids = prefix;
      ids.push_back(kEosId);
      out.push_back({std::move(ids), prob * p_step});
      continue;
    }
    if (prefix.size() + 1 >= max_len) continue;  // room needed for EOS
    prefix.push_back(static_cast<std::int32_t>(y));
    enumerate_rec(p, cfg, c, h_next, static_cast<std::int32_t>(y), prefix,
                  prob * p_step, max_len, out);
    prefix.pop_back();
  }
}

// All EOS-terminated sequences of total length <= max_len with their exact
// chain-rule probabilities.
inline std::vector<EnumeratedSeq> enumerate_targets(const ModelParams& p,
                                                    const ModelConfig& cfg,
                                                    const TokenIds& src,
                                                    std::size_t max_len) {
  const EncoderOutput enc = encode(src, p, cfg);
  Vector h0 = decoder_init(enc.c, p);
  std::vector<EnumeratedSeq> out;
  TokenIds prefix;
  enumerate_rec(p, cfg, enc.c, h0, kBeginMarker, prefix, 1.0, max_len, out);
  return out;
}

inline double enumerate_mass(const std::vector<EnumeratedSeq>& seqs,
                             std::size_t max_len) {
  double mass = 0.0;
  for (const auto& s : seqs) {
    if (s.ids.size() <= max_len) mass += s.prob;
  }
  return mass;
}

}  // namespace testutil
