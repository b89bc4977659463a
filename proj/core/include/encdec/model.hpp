#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "encdec/gru.hpp"
#include "encdec/matrix.hpp"
#include "encdec/rng.hpp"
#include "encdec/types.hpp"

namespace encdec {

enum class CellKind { Gated, Tanh };

const char* cell_kind_name(CellKind kind);
CellKind cell_kind_from_name(const std::string& name);

struct ModelConfig {
  std::size_t vocab_src = 0;   // K_s, including EOS/UNK
  std::size_t vocab_tgt = 0;   // K_t, including EOS/UNK
  std::size_t hidden = 1000;   // n_h
  std::size_t embed = 100;     // d_e
  std::size_t maxout = 500;    // m units, each pooling 2 pre-activations
  std::size_t output_rank = 500;
  CellKind cell = CellKind::Gated;
  bool bias = true;

  void validate() const;  // throws ConfigError
  bool operator==(const ModelConfig&) const = default;
};

// Every learned weight of the encoder-decoder. Also reused as the gradient
// carrier (same shapes). In Tanh cell mode the gate matrices inside enc/dec
// are absent.
struct ModelParams {
  Matrix E_src, E_tgt;   // embeddings, vocab x embed; row i embeds token i
  GruParams enc;         // context-free cell
  GruParams dec;         // context-conditioned cell (C* present when gated)
  Matrix V;              // hidden x hidden, context projection c = tanh(V h_N)
  Matrix V_init;         // hidden x hidden, decoder init h'_0 = tanh(V_init c)
  Matrix O_h, O_c;       // 2m x hidden, output pre-activation terms
  Matrix O_y;            // 2m x vocab_tgt, column per previous target id
  Matrix G_l;            // vocab_tgt x output_rank  (output factorization
  Matrix G_r;            // output_rank x maxout      G = G_l G_r)

  static ModelParams zeros(const ModelConfig& cfg);

  // Named views over every parameter block, in a fixed order. Empty matrices
  // (absent blocks) are included so zipped traversals stay aligned.
  std::vector<std::pair<std::string, Matrix*>> entries();
  std::vector<std::pair<std::string, const Matrix*>> entries() const;

  std::size_t parameter_count() const;
  bool operator==(const ModelParams&) const = default;
};

// Gaussian(0, 0.01) for every weight except the recurrent U matrices, which
// are the left-singular-vector matrices of white Gaussian samples. Biases
// start at zero.
ModelParams init_params(const ModelConfig& cfg, RngState& rng);

// Row `id` of an embedding table.
Vector embed_row(const Matrix& table, std::int32_t id);

struct EncoderOutput {
  std::vector<GruCache> steps;
  Vector h_final;
  Vector c;  // tanh(V h_final), elementwise in (-1, 1)
};

// Runs the encoder over an EOS-terminated id sequence from h_0 = 0.
EncoderOutput encode(const TokenIds& src_ids, const ModelParams& p,
                     const ModelConfig& cfg);

// h'_0 = tanh(V_init c)
Vector decoder_init(const Vector& c, const ModelParams& p);

// P(y_t | .) from the decoder state: maxout over pairs of
// s' = O_h h' + O_y y_prev + O_c c, then softmax of G_l (G_r s).
// y_prev_id = kBeginMarker selects no O_y column (first step).
Vector output_distribution(const Vector& h, std::int32_t y_prev_id,
                           const Vector& c, const ModelParams& p,
                           const ModelConfig& cfg);

// Advances the decoder state by one step; x is e(y_prev) or zeros at t=1.
// Exposed for incremental sampling and enumeration.
Vector decoder_step(const Vector& h, std::int32_t y_prev_id, const Vector& c,
                    const ModelParams& p, const ModelConfig& cfg);

// Sum over target steps (EOS step included) of log P(y_t | y_<t, c).
double log_prob(const TokenIds& src_ids, const TokenIds& tgt_ids,
                const ModelParams& p, const ModelConfig& cfg);

struct BackwardResult {
  double nll = 0.0;        // -log p(tgt | src)
  ModelParams grads;       // d nll / d params
};

BackwardResult model_backward(const TokenIds& src_ids, const TokenIds& tgt_ids,
                              const ModelParams& p, const ModelConfig& cfg);

// Accumulating flavor used by the batch driver; returns the pair's nll.
double model_backward_accum(const TokenIds& src_ids, const TokenIds& tgt_ids,
                            const ModelParams& p, const ModelConfig& cfg,
                            ModelParams& grads);

}  // namespace encdec
