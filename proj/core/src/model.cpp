#include "encdec/model.hpp"

#include <cmath>
#include <cstdint>

#include "encdec/errors.hpp"

namespace encdec {

const char* cell_kind_name(CellKind kind) {
  return kind == CellKind::Gated ? "gated" : "tanh";
}

CellKind cell_kind_from_name(const std::string& name) {
  if (name == "gated") return CellKind::Gated;
  if (name == "tanh") return CellKind::Tanh;
  throw ConfigError("unknown cell kind '" + name + "' (expected gated|tanh)");
}

void ModelConfig::validate() const {
  if (vocab_src < 2 || vocab_tgt < 2) {
    throw ConfigError("vocab sizes must be >= 2 (EOS and UNK are reserved)");
  }
  if (hidden == 0 || embed == 0 || maxout == 0 || output_rank == 0) {
    throw ConfigError("hidden, embed, maxout and output_rank must be positive");
  }
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t nh = cfg.hidden, de = cfg.embed;
  const bool gated = cfg.cell == CellKind::Gated;

  ModelParams p;
  p.E_src = Matrix(cfg.vocab_src, de);
  p.E_tgt = Matrix(cfg.vocab_tgt, de);

  auto make_cell = [&](bool with_context) {
    GruParams g;
    g.W = Matrix(nh, de);
    g.U = Matrix(nh, nh);
    if (gated) {
      g.W_z = Matrix(nh, de);
      g.W_r = Matrix(nh, de);
      g.U_z = Matrix(nh, nh);
      g.U_r = Matrix(nh, nh);
    }
    if (with_context) {
      g.C = Matrix(nh, nh);
      if (gated) {
        g.C_z = Matrix(nh, nh);
        g.C_r = Matrix(nh, nh);
      }
    }
    if (cfg.bias) {
      g.b = Matrix(nh, 1);
      if (gated) {
        g.b_z = Matrix(nh, 1);
        g.b_r = Matrix(nh, 1);
      }
    }
    return g;
  };
  p.enc = make_cell(false);
  p.dec = make_cell(true);

  p.V = Matrix(nh, nh);
  p.V_init = Matrix(nh, nh);
  p.O_h = Matrix(2 * cfg.maxout, nh);
  p.O_c = Matrix(2 * cfg.maxout, nh);
  p.O_y = Matrix(2 * cfg.maxout, cfg.vocab_tgt);
  p.G_l = Matrix(cfg.vocab_tgt, cfg.output_rank);
  p.G_r = Matrix(cfg.output_rank, cfg.maxout);
  return p;
}

namespace {

template <typename Params, typename MatrixPtr>
std::vector<std::pair<std::string, MatrixPtr>> entries_impl(Params& p) {
  std::vector<std::pair<std::string, MatrixPtr>> out;
  out.reserve(32);
  auto add = [&](const char* name, MatrixPtr m) { out.emplace_back(name, m); };
  add("E_src", &p.E_src);
  add("E_tgt", &p.E_tgt);
  auto add_cell = [&](const char* prefix, auto& cell) {
    const std::string pre = prefix;
    out.emplace_back(pre + ".W", &cell.W);
    out.emplace_back(pre + ".W_z", &cell.W_z);
    out.emplace_back(pre + ".W_r", &cell.W_r);
    out.emplace_back(pre + ".U", &cell.U);
    out.emplace_back(pre + ".U_z", &cell.U_z);
    out.emplace_back(pre + ".U_r", &cell.U_r);
    out.emplace_back(pre + ".C", &cell.C);
    out.emplace_back(pre + ".C_z", &cell.C_z);
    out.emplace_back(pre + ".C_r", &cell.C_r);
    out.emplace_back(pre + ".b", &cell.b);
    out.emplace_back(pre + ".b_z", &cell.b_z);
    out.emplace_back(pre + ".b_r", &cell.b_r);
  };
  add_cell("enc", p.enc);
  add_cell("dec", p.dec);
  add("V", &p.V);
  add("V_init", &p.V_init);
  add("O_h", &p.O_h);
  add("O_c", &p.O_c);
  add("O_y", &p.O_y);
  add("G_l", &p.G_l);
  add("G_r", &p.G_r);
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Matrix*>> ModelParams::entries() {
  return entries_impl<ModelParams, Matrix*>(*this);
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::entries() const {
  return entries_impl<const ModelParams, const Matrix*>(*this);
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, m] : entries()) n += m->size();
  return n;
}

ModelParams init_params(const ModelConfig& cfg, RngState& rng) {
  constexpr double kStd = 0.01;
  ModelParams p = ModelParams::zeros(cfg);
  // Fixed fill order keeps initialization reproducible per seed. Recurrent
  // U matrices get left singular vectors of a Gaussian sample; biases stay 0.
  for (auto& [name, m] : p.entries()) {
    if (m->empty()) continue;
    const bool recurrent = name.size() >= 2 && name.find(".U") != std::string::npos;
    const bool bias_block = name.find(".b") != std::string::npos;
    if (bias_block) continue;
    if (recurrent) {
      *m = orthogonal_init(m->rows(), m->cols(), rng);
    } else {
      *m = gaussian_init(m->rows(), m->cols(), kStd, rng);
    }
  }
  return p;
}

Vector embed_row(const Matrix& table, std::int32_t id) {
  if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
    throw VocabError("token id " + std::to_string(id) + " outside table of " +
                     std::to_string(table.rows()) + " rows");
  }
  const double* row = table.row_data(static_cast<std::size_t>(id));
  return Vector(row, row + table.cols());
}

namespace {

void check_sequence(const TokenIds& ids, std::size_t vocab, const char* which) {
  if (ids.empty()) {
    throw InputError(std::string(which) + " sequence is empty");
  }
  if (ids.back() != kEosId) {
    throw InputError(std::string(which) + " sequence does not end in EOS");
  }
  for (std::int32_t id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw VocabError(std::string(which) + " token id " + std::to_string(id) +
                       " outside vocabulary of size " + std::to_string(vocab));
    }
  }
}

// --- cell dispatch: gated unit or the plain-tanh ablation -------------------

GruCache tanh_cell_forward(const Vector& x, const Vector& h_prev,
                           const Vector* ctx, const GruParams& p) {
  const std::size_t n = p.hidden();
  if (x.size() != p.input() || h_prev.size() != n) {
    throw ShapeError("tanh cell: input/hidden length mismatch");
  }
  if (p.has_context() != (ctx != nullptr)) {
    throw ShapeError("tanh cell: ctx must be supplied iff C is present");
  }
  GruCache cache;
  cache.x = x;
  cache.h_prev = h_prev;
  Vector a(n, 0.0);
  matvec_add(a, p.W, x);
  matvec_add(a, p.U, h_prev);
  if (ctx != nullptr) {
    cache.ctx = *ctx;
    matvec_add(a, p.C, *ctx);
  }
  if (p.has_bias()) {
    const auto& bd = p.b.data();
    for (std::size_t j = 0; j < n; ++j) a[j] += bd[j];
  }
  for (double& v : a) v = std::tanh(v);
  cache.h = std::move(a);
  return cache;
}

GruInputGrads tanh_cell_backward(const GruCache& cache, const Vector& dh,
                                 const GruParams& p, GruParams& grad) {
  const std::size_t n = p.hidden();
  GruInputGrads out;
  out.dx.assign(p.input(), 0.0);
  out.dh_prev.assign(n, 0.0);
  Vector da(n);
  for (std::size_t j = 0; j < n; ++j) {
    da[j] = dh[j] * (1.0 - cache.h[j] * cache.h[j]);
  }
  add_outer(grad.W, da, cache.x);
  add_outer(grad.U, da, cache.h_prev);
  matvec_transpose_add(out.dx, p.W, da);
  matvec_transpose_add(out.dh_prev, p.U, da);
  if (p.has_context()) {
    out.dctx.assign(p.C.cols(), 0.0);
    add_outer(grad.C, da, cache.ctx);
    matvec_transpose_add(out.dctx, p.C, da);
  }
  if (p.has_bias()) {
    auto& bd = grad.b.data();
    for (std::size_t j = 0; j < n; ++j) bd[j] += da[j];
  }
  return out;
}

GruCache cell_forward(CellKind kind, const Vector& x, const Vector& h_prev,
                      const Vector* ctx, const GruParams& p) {
  return kind == CellKind::Gated ? gru_forward(x, h_prev, ctx, p)
                                 : tanh_cell_forward(x, h_prev, ctx, p);
}

GruInputGrads cell_backward(CellKind kind, const GruCache& cache, const Vector& dh,
                            const GruParams& p, GruParams& grad) {
  return kind == CellKind::Gated ? gru_backward(cache, dh, p, grad)
                                 : tanh_cell_backward(cache, dh, p, grad);
}

// --- output layer ------------------------------------------------------------

struct OutputCache {
  Vector s_pre, s, u;               // 2m, m, output_rank
  std::vector<std::uint32_t> pick;  // which of each adjacent pair won
  Vector probs;                     // vocab_tgt
};

void check_y_prev(std::int32_t y_prev_id, const ModelConfig& cfg) {
  if (y_prev_id == kBeginMarker) return;
  if (y_prev_id < 0 || static_cast<std::size_t>(y_prev_id) >= cfg.vocab_tgt) {
    throw VocabError("previous target id " + std::to_string(y_prev_id) +
                     " outside vocabulary of size " + std::to_string(cfg.vocab_tgt));
  }
}

Vector output_logits(const Vector& h, std::int32_t y_prev_id, const Vector& c,
                     const ModelParams& p, const ModelConfig& cfg,
                     OutputCache* cache) {
  check_y_prev(y_prev_id, cfg);
  const std::size_t two_m = p.O_h.rows();
  Vector s_pre(two_m, 0.0);
  matvec_add(s_pre, p.O_h, h);
  matvec_add(s_pre, p.O_c, c);
  if (y_prev_id != kBeginMarker) {
    const std::size_t col = static_cast<std::size_t>(y_prev_id);
    for (std::size_t i = 0; i < two_m; ++i) s_pre[i] += p.O_y(i, col);
  }

  const std::size_t m = cfg.maxout;
  Vector s(m);
  std::vector<std::uint32_t> pick(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double a = s_pre[2 * i], b = s_pre[2 * i + 1];
    pick[i] = (a >= b) ? 0 : 1;  // ties route to the first element
    s[i] = pick[i] == 0 ? a : b;
  }

  Vector u(cfg.output_rank, 0.0);
  matvec_add(u, p.G_r, s);
  Vector logits(cfg.vocab_tgt, 0.0);
  matvec_add(logits, p.G_l, u);

  if (cache != nullptr) {
    cache->s_pre = std::move(s_pre);
    cache->s = std::move(s);
    cache->u = std::move(u);
    cache->pick = std::move(pick);
  }
  return logits;
}

// dlogits -> gradients of the output stack; dh and dc are accumulated.
void output_backward(const Vector& dlogits, const Vector& h, std::int32_t y_prev_id,
                     const Vector& c, const OutputCache& cache,
                     const ModelParams& p, ModelParams& grads, Vector& dh,
                     Vector& dc) {
  add_outer(grads.G_l, dlogits, cache.u);
  Vector du(cache.u.size(), 0.0);
  matvec_transpose_add(du, p.G_l, dlogits);

  add_outer(grads.G_r, du, cache.s);
  Vector ds(cache.s.size(), 0.0);
  matvec_transpose_add(ds, p.G_r, du);

  Vector ds_pre(cache.s_pre.size(), 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ds_pre[2 * i + cache.pick[i]] = ds[i];
  }

  add_outer(grads.O_h, ds_pre, h);
  matvec_transpose_add(dh, p.O_h, ds_pre);
  add_outer(grads.O_c, ds_pre, c);
  matvec_transpose_add(dc, p.O_c, ds_pre);
  if (y_prev_id != kBeginMarker) {
    const std::size_t col = static_cast<std::size_t>(y_prev_id);
    for (std::size_t i = 0; i < ds_pre.size(); ++i) {
      grads.O_y(i, col) += ds_pre[i];
    }
  }
}

struct PairTrace {
  EncoderOutput enc;
  Vector h0;
  std::vector<GruCache> dec_steps;
  std::vector<OutputCache> outs;
};

double forward_pair(const TokenIds& src_ids, const TokenIds& tgt_ids,
                    const ModelParams& p, const ModelConfig& cfg,
                    PairTrace* trace) {
  check_sequence(tgt_ids, cfg.vocab_tgt, "target");

  EncoderOutput enc = encode(src_ids, p, cfg);
  const Vector& c = enc.c;
  Vector h = decoder_init(c, p);
  if (trace != nullptr) {
    trace->h0 = h;
    trace->dec_steps.reserve(tgt_ids.size());
    trace->outs.reserve(tgt_ids.size());
  }

  double nll = 0.0;
  std::int32_t y_prev = kBeginMarker;
  const Vector zero_embed(cfg.embed, 0.0);
  for (std::int32_t y : tgt_ids) {
    const Vector x = (y_prev == kBeginMarker) ? zero_embed : embed_row(p.E_tgt, y_prev);
    GruCache step = cell_forward(cfg.cell, x, h, &c, p.dec);
    h = step.h;

    OutputCache out;
    Vector logits = output_logits(h, y_prev, c, p, cfg, trace ? &out : nullptr);
    const double lse = log_sum_exp(logits);
    nll -= logits[static_cast<std::size_t>(y)] - lse;
    if (trace != nullptr) {
      out.probs.resize(logits.size());
      for (std::size_t j = 0; j < logits.size(); ++j) {
        out.probs[j] = std::exp(logits[j] - lse);
      }
      trace->dec_steps.push_back(std::move(step));
      trace->outs.push_back(std::move(out));
    }
    y_prev = y;
  }
  if (trace != nullptr) trace->enc = std::move(enc);
  return nll;
}

}  // namespace

EncoderOutput encode(const TokenIds& src_ids, const ModelParams& p,
                     const ModelConfig& cfg) {
  check_sequence(src_ids, cfg.vocab_src, "source");

  EncoderOutput out;
  out.steps.reserve(src_ids.size());
  Vector h(cfg.hidden, 0.0);  // h_0 fixed to 0
  for (std::int32_t id : src_ids) {
    GruCache step = cell_forward(cfg.cell, embed_row(p.E_src, id), h, nullptr, p.enc);
    h = step.h;
    out.steps.push_back(std::move(step));
  }
  out.h_final = h;
  out.c = matvec(p.V, h);
  for (double& v : out.c) v = std::tanh(v);
  return out;
}

Vector decoder_init(const Vector& c, const ModelParams& p) {
  if (c.size() != p.V_init.cols()) {
    throw ShapeError("decoder_init: context length " + std::to_string(c.size()) +
                     " does not match V_init " +
                     shape_str(p.V_init.rows(), p.V_init.cols()));
  }
  Vector h = matvec(p.V_init, c);
  for (double& v : h) v = std::tanh(v);
  return h;
}

Vector output_distribution(const Vector& h, std::int32_t y_prev_id,
                           const Vector& c, const ModelParams& p,
                           const ModelConfig& cfg) {
  Vector logits = output_logits(h, y_prev_id, c, p, cfg, nullptr);
  softmax_inplace(logits);
  return logits;
}

Vector decoder_step(const Vector& h, std::int32_t y_prev_id, const Vector& c,
                    const ModelParams& p, const ModelConfig& cfg) {
  check_y_prev(y_prev_id, cfg);
  const Vector x = (y_prev_id == kBeginMarker) ? Vector(cfg.embed, 0.0)
                                               : embed_row(p.E_tgt, y_prev_id);
  return cell_forward(cfg.cell, x, h, &c, p.dec).h;
}

double log_prob(const TokenIds& src_ids, const TokenIds& tgt_ids,
                const ModelParams& p, const ModelConfig& cfg) {
  return -forward_pair(src_ids, tgt_ids, p, cfg, nullptr);
}

double model_backward_accum(const TokenIds& src_ids, const TokenIds& tgt_ids,
                            const ModelParams& p, const ModelConfig& cfg,
                            ModelParams& grads) {
  PairTrace trace;
  const double nll = forward_pair(src_ids, tgt_ids, p, cfg, &trace);

  const Vector& c = trace.enc.c;
  const std::size_t steps = tgt_ids.size();
  Vector dc(c.size(), 0.0);
  Vector dh_carry(cfg.hidden, 0.0);

  for (std::size_t t = steps; t-- > 0;) {
    const std::int32_t y = tgt_ids[t];
    const std::int32_t y_prev = (t == 0) ? kBeginMarker : tgt_ids[t - 1];
    const GruCache& step = trace.dec_steps[t];
    const OutputCache& out = trace.outs[t];

    // d nll / d logits = probs - onehot(y)
    Vector dlogits = out.probs;
    dlogits[static_cast<std::size_t>(y)] -= 1.0;

    Vector dh = std::move(dh_carry);
    output_backward(dlogits, step.h, y_prev, c, out, p, grads, dh, dc);

    GruInputGrads in = cell_backward(cfg.cell, step, dh, p.dec, grads.dec);
    if (t > 0) {
      // x at this step embedded tgt_ids[t-1]; the t=0 input is a constant zero.
      double* row = grads.E_tgt.row_data(static_cast<std::size_t>(tgt_ids[t - 1]));
      for (std::size_t j = 0; j < in.dx.size(); ++j) row[j] += in.dx[j];
    }
    for (std::size_t j = 0; j < dc.size(); ++j) dc[j] += in.dctx[j];
    dh_carry = std::move(in.dh_prev);
  }

  // h'_0 = tanh(V_init c)
  {
    Vector dpre(cfg.hidden);
    for (std::size_t j = 0; j < cfg.hidden; ++j) {
      dpre[j] = dh_carry[j] * (1.0 - trace.h0[j] * trace.h0[j]);
    }
    add_outer(grads.V_init, dpre, c);
    matvec_transpose_add(dc, p.V_init, dpre);
  }

  // c = tanh(V h_N)
  Vector dh_enc(cfg.hidden, 0.0);
  {
    Vector dpre(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) {
      dpre[j] = dc[j] * (1.0 - c[j] * c[j]);
    }
    add_outer(grads.V, dpre, trace.enc.h_final);
    matvec_transpose_add(dh_enc, p.V, dpre);
  }

  for (std::size_t t = src_ids.size(); t-- > 0;) {
    GruInputGrads in = cell_backward(cfg.cell, trace.enc.steps[t], dh_enc,
                                     p.enc, grads.enc);
    double* row = grads.E_src.row_data(static_cast<std::size_t>(src_ids[t]));
    for (std::size_t j = 0; j < in.dx.size(); ++j) row[j] += in.dx[j];
    dh_enc = std::move(in.dh_prev);
  }
  return nll;
}

BackwardResult model_backward(const TokenIds& src_ids, const TokenIds& tgt_ids,
                              const ModelParams& p, const ModelConfig& cfg) {
  BackwardResult result;
  result.grads = ModelParams::zeros(cfg);
  result.nll = model_backward_accum(src_ids, tgt_ids, p, cfg, result.grads);
  return result;
}

}  // namespace encdec
