#pragma once

#include "encdec/matrix.hpp"
#include "encdec/types.hpp"

namespace encdec {

// Weights of one gated hidden unit. W* act on the input, U* on the previous
// hidden state. C* condition on a fixed context vector and exist only for
// decoder cells; b* are optional bias vectors (hidden x 1, zero-initialized).
// Gate matrices are absent (0x0) when the cell is used as the plain-tanh
// ablation in the model module.
struct GruParams {
  Matrix W, W_z, W_r;  // hidden x input
  Matrix U, U_z, U_r;  // hidden x hidden
  Matrix C, C_z, C_r;  // hidden x context
  Matrix b, b_z, b_r;  // hidden x 1

  bool has_context() const { return !C.empty(); }
  bool has_bias() const { return !b.empty(); }
  std::size_t hidden() const { return W.rows(); }
  std::size_t input() const { return W.cols(); }
};

GruParams zeros_like(const GruParams& p);

// Everything the exact backward pass needs, captured during the forward pass.
// `bracket` is the context-form recurrent term U h_prev + C ctx that the
// reset gate scales elementwise; empty for context-free cells.
struct GruCache {
  Vector x, h_prev, ctx;
  Vector r, z, h_tilde, h;
  Vector bracket;
};

// h_j = z_j * h_prev_j + (1 - z_j) * h_tilde_j
Vector gru_compose(const Vector& z, const Vector& h_prev, const Vector& h_tilde);

// Forward activation of the gated unit.
//
// Context-free form (encoder):
//   r = sigmoid(W_r x + U_r h_prev + b_r)
//   z = sigmoid(W_z x + U_z h_prev + b_z)
//   h_tilde = tanh(W x + U (r . h_prev) + b)
//
// Context form (decoder): C_r ctx and C_z ctx enter the gate sigmoids, and
// the reset gate scales the combined recurrent+context term instead:
//   h_tilde_j = tanh([W x]_j + r_j * [U h_prev + C ctx]_j + b_j)
//
// ctx must be supplied exactly when the C* matrices are present.
GruCache gru_forward(const Vector& x, const Vector& h_prev, const Vector* ctx,
                     const GruParams& p);

struct GruInputGrads {
  Vector dx, dh_prev, dctx;  // dctx empty for context-free cells
};

// Exact partials of a scalar loss given dh = dL/dh. Parameter gradients are
// accumulated into `grad` (same structure as p); input gradients returned.
GruInputGrads gru_backward(const GruCache& cache, const Vector& dh,
                           const GruParams& p, GruParams& grad);

struct GruBackwardResult {
  Vector dx, dh_prev, dctx;
  GruParams dparams;
};

GruBackwardResult gru_backward(const GruCache& cache, const Vector& dh,
                               const GruParams& p);

}  // namespace encdec
