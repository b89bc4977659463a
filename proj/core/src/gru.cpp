#include "encdec/gru.hpp"

#include <cmath>

#include "encdec/errors.hpp"

namespace encdec {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

void check_cell_shapes(const Vector& x, const Vector& h_prev, const Vector* ctx,
                       const GruParams& p) {
  const std::size_t n = p.hidden();
  require(!p.W.empty() && !p.W_z.empty() && !p.W_r.empty(),
          "gru_forward: gate matrices missing");
  require(p.W.same_shape(p.W_z) && p.W.same_shape(p.W_r),
          "gru_forward: W matrices disagree in shape");
  require(p.U.rows() == n && p.U.cols() == n && p.U.same_shape(p.U_z) &&
              p.U.same_shape(p.U_r),
          "gru_forward: U matrices must be hidden x hidden");
  require(x.size() == p.input(), "gru_forward: input length mismatch");
  require(h_prev.size() == n, "gru_forward: hidden length mismatch");
  if (p.has_context()) {
    if (ctx == nullptr) throw ShapeError("gru_forward: cell has C matrices but no ctx supplied");
    require(p.C.rows() == n && p.C.same_shape(p.C_z) && p.C.same_shape(p.C_r),
            "gru_forward: C matrices disagree in shape");
    require(ctx->size() == p.C.cols(), "gru_forward: ctx length mismatch");
  } else if (ctx != nullptr) {
    throw ShapeError("gru_forward: ctx supplied but cell has no C matrices");
  }
  if (p.has_bias()) {
    require(p.b.rows() == n && p.b.same_shape(p.b_z) && p.b.same_shape(p.b_r) &&
                p.b.cols() == 1,
            "gru_forward: bias vectors must be hidden x 1");
  }
}

void add_bias(Vector& v, const Matrix& b) {
  if (b.empty()) return;
  const auto& bd = b.data();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += bd[i];
}

void sigmoid_inplace(Vector& v) {
  for (double& x : v) x = sigmoid(x);
}

}  // namespace

GruParams zeros_like(const GruParams& p) {
  GruParams z;
  z.W = Matrix(p.W.rows(), p.W.cols());
  z.W_z = Matrix(p.W_z.rows(), p.W_z.cols());
  z.W_r = Matrix(p.W_r.rows(), p.W_r.cols());
  z.U = Matrix(p.U.rows(), p.U.cols());
  z.U_z = Matrix(p.U_z.rows(), p.U_z.cols());
  z.U_r = Matrix(p.U_r.rows(), p.U_r.cols());
  z.C = Matrix(p.C.rows(), p.C.cols());
  z.C_z = Matrix(p.C_z.rows(), p.C_z.cols());
  z.C_r = Matrix(p.C_r.rows(), p.C_r.cols());
  z.b = Matrix(p.b.rows(), p.b.cols());
  z.b_z = Matrix(p.b_z.rows(), p.b_z.cols());
  z.b_r = Matrix(p.b_r.rows(), p.b_r.cols());
  return z;
}

Vector gru_compose(const Vector& z, const Vector& h_prev, const Vector& h_tilde) {
  if (z.size() != h_prev.size() || z.size() != h_tilde.size()) {
    throw ShapeError("gru_compose: lengths disagree (" + std::to_string(z.size()) +
                     ", " + std::to_string(h_prev.size()) + ", " +
                     std::to_string(h_tilde.size()) + ")");
  }
  Vector h(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    h[j] = z[j] * h_prev[j] + (1.0 - z[j]) * h_tilde[j];
  }
  return h;
}

GruCache gru_forward(const Vector& x, const Vector& h_prev, const Vector* ctx,
                     const GruParams& p) {
  check_cell_shapes(x, h_prev, ctx, p);
  const std::size_t n = p.hidden();

  GruCache cache;
  cache.x = x;
  cache.h_prev = h_prev;
  if (ctx != nullptr) cache.ctx = *ctx;

  Vector ar(n, 0.0), az(n, 0.0);
  matvec_add(ar, p.W_r, x);
  matvec_add(ar, p.U_r, h_prev);
  matvec_add(az, p.W_z, x);
  matvec_add(az, p.U_z, h_prev);
  if (p.has_context()) {
    matvec_add(ar, p.C_r, *ctx);
    matvec_add(az, p.C_z, *ctx);
  }
  add_bias(ar, p.b_r);
  add_bias(az, p.b_z);
  sigmoid_inplace(ar);
  sigmoid_inplace(az);
  cache.r = std::move(ar);
  cache.z = std::move(az);

  Vector ah(n, 0.0);
  matvec_add(ah, p.W, x);
  if (p.has_context()) {
    // Reset gate scales the combined recurrent+context term.
    Vector bracket(n, 0.0);
    matvec_add(bracket, p.U, h_prev);
    matvec_add(bracket, p.C, *ctx);
    for (std::size_t j = 0; j < n; ++j) ah[j] += cache.r[j] * bracket[j];
    cache.bracket = std::move(bracket);
  } else {
    Vector reset_h(n);
    for (std::size_t j = 0; j < n; ++j) reset_h[j] = cache.r[j] * h_prev[j];
    matvec_add(ah, p.U, reset_h);
  }
  add_bias(ah, p.b);
  for (double& v : ah) v = std::tanh(v);
  cache.h_tilde = std::move(ah);

  cache.h = gru_compose(cache.z, h_prev, cache.h_tilde);
  return cache;
}

GruInputGrads gru_backward(const GruCache& cache, const Vector& dh,
                           const GruParams& p, GruParams& grad) {
  const std::size_t n = p.hidden();
  if (dh.size() != n || cache.h.size() != n) {
    throw ShapeError("gru_backward: dh length " + std::to_string(dh.size()) +
                     " does not match hidden " + std::to_string(n));
  }

  GruInputGrads out;
  out.dx.assign(p.input(), 0.0);
  out.dh_prev.assign(n, 0.0);
  const bool has_ctx = p.has_context();
  if (has_ctx) out.dctx.assign(p.C.cols(), 0.0);

  // h = z.h_prev + (1-z).h_tilde
  Vector dz(n), dht(n);
  for (std::size_t j = 0; j < n; ++j) {
    dz[j] = dh[j] * (cache.h_prev[j] - cache.h_tilde[j]);
    dht[j] = dh[j] * (1.0 - cache.z[j]);
    out.dh_prev[j] += dh[j] * cache.z[j];
  }

  // Through tanh of the candidate pre-activation.
  Vector dah(n);
  for (std::size_t j = 0; j < n; ++j) {
    dah[j] = dht[j] * (1.0 - cache.h_tilde[j] * cache.h_tilde[j]);
  }

  add_outer(grad.W, dah, cache.x);
  matvec_transpose_add(out.dx, p.W, dah);
  if (p.has_bias()) {
    auto& bd = grad.b.data();
    for (std::size_t j = 0; j < n; ++j) bd[j] += dah[j];
  }

  Vector dr(n);
  if (has_ctx) {
    // Candidate used r_j * bracket_j with bracket = U h_prev + C ctx.
    Vector dbracket(n);
    for (std::size_t j = 0; j < n; ++j) {
      dr[j] = dah[j] * cache.bracket[j];
      dbracket[j] = dah[j] * cache.r[j];
    }
    add_outer(grad.U, dbracket, cache.h_prev);
    matvec_transpose_add(out.dh_prev, p.U, dbracket);
    add_outer(grad.C, dbracket, cache.ctx);
    matvec_transpose_add(out.dctx, p.C, dbracket);
  } else {
    // Candidate used U (r . h_prev).
    Vector reset_h(n), dreset_h(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) reset_h[j] = cache.r[j] * cache.h_prev[j];
    add_outer(grad.U, dah, reset_h);
    matvec_transpose_add(dreset_h, p.U, dah);
    for (std::size_t j = 0; j < n; ++j) {
      dr[j] = dreset_h[j] * cache.h_prev[j];
      out.dh_prev[j] += dreset_h[j] * cache.r[j];
    }
  }

  // Gate pre-activations through the sigmoid derivative.
  Vector daz(n), dar(n);
  for (std::size_t j = 0; j < n; ++j) {
    daz[j] = dz[j] * cache.z[j] * (1.0 - cache.z[j]);
    dar[j] = dr[j] * cache.r[j] * (1.0 - cache.r[j]);
  }

  add_outer(grad.W_z, daz, cache.x);
  add_outer(grad.U_z, daz, cache.h_prev);
  matvec_transpose_add(out.dx, p.W_z, daz);
  matvec_transpose_add(out.dh_prev, p.U_z, daz);

  add_outer(grad.W_r, dar, cache.x);
  add_outer(grad.U_r, dar, cache.h_prev);
  matvec_transpose_add(out.dx, p.W_r, dar);
  matvec_transpose_add(out.dh_prev, p.U_r, dar);

  if (has_ctx) {
    add_outer(grad.C_z, daz, cache.ctx);
    add_outer(grad.C_r, dar, cache.ctx);
    matvec_transpose_add(out.dctx, p.C_z, daz);
    matvec_transpose_add(out.dctx, p.C_r, dar);
  }
  if (p.has_bias()) {
    auto& bz = grad.b_z.data();
    auto& br = grad.b_r.data();
    for (std::size_t j = 0; j < n; ++j) {
      bz[j] += daz[j];
      br[j] += dar[j];
    }
  }
  return out;
}

GruBackwardResult gru_backward(const GruCache& cache, const Vector& dh,
                               const GruParams& p) {
  GruBackwardResult result;
  result.dparams = zeros_like(p);
  GruInputGrads in = gru_backward(cache, dh, p, result.dparams);
  result.dx = std::move(in.dx);
  result.dh_prev = std::move(in.dh_prev);
  result.dctx = std::move(in.dctx);
  return result;
}

}  // namespace encdec
