#include "encdec/optim.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <thread>

#include "encdec/errors.hpp"

namespace encdec {

const char* optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::Adadelta ? "adadelta" : "sgd";
}

OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "adadelta") return OptimizerKind::Adadelta;
  if (name == "sgd") return OptimizerKind::Sgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected adadelta|sgd)");
}

AdadeltaState AdadeltaState::zeros(const ModelConfig& cfg, double rho, double eps) {
  AdadeltaState state;
  state.acc_grad_sq = ModelParams::zeros(cfg);
  state.acc_update_sq = ModelParams::zeros(cfg);
  state.rho = rho;
  state.eps = eps;
  return state;
}

void adadelta_step(ModelParams& params, const ModelParams& grads, AdadeltaState& state) {
  auto p_entries = params.entries();
  const auto g_entries = grads.entries();
  auto eg_entries = state.acc_grad_sq.entries();
  auto ed_entries = state.acc_update_sq.entries();
  const double rho = state.rho, eps = state.eps;
  for (std::size_t k = 0; k < p_entries.size(); ++k) {
    Matrix& p = *p_entries[k].second;
    const Matrix& g = *g_entries[k].second;
    if (!p.same_shape(g)) {
      throw ShapeError("adadelta_step: block '" + p_entries[k].first +
                       "' shape mismatch");
    }
    auto& pd = p.data();
    const auto& gd = g.data();
    auto& eg = eg_entries[k].second->data();
    auto& ed = ed_entries[k].second->data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      const double gi = gd[i];
      eg[i] = rho * eg[i] + (1.0 - rho) * gi * gi;
      const double delta = -std::sqrt(ed[i] + eps) / std::sqrt(eg[i] + eps) * gi;
      ed[i] = rho * ed[i] + (1.0 - rho) * delta * delta;
      pd[i] += delta;
    }
  }
}

void sgd_step(ModelParams& params, const ModelParams& grads, double learning_rate) {
  if (!(learning_rate > 0.0)) {
    throw ParameterError("sgd_step: learning rate must be > 0");
  }
  auto p_entries = params.entries();
  const auto g_entries = grads.entries();
  for (std::size_t k = 0; k < p_entries.size(); ++k) {
    Matrix& p = *p_entries[k].second;
    const Matrix& g = *g_entries[k].second;
    if (!p.same_shape(g)) {
      throw ShapeError("sgd_step: block '" + p_entries[k].first + "' shape mismatch");
    }
    auto& pd = p.data();
    const auto& gd = g.data();
    for (std::size_t i = 0; i < pd.size(); ++i) pd[i] -= learning_rate * gd[i];
  }
}

namespace {

void add_scaled(ModelParams& dst, const ModelParams& src, double scale) {
  auto d = dst.entries();
  const auto s = src.entries();
  for (std::size_t k = 0; k < d.size(); ++k) {
    auto& dd = d[k].second->data();
    const auto& sd = s[k].second->data();
    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += scale * sd[i];
  }
}

void scale_params(ModelParams& p, double scale) {
  for (auto& [name, m] : p.entries()) {
    for (double& v : m->data()) v *= scale;
  }
}

double global_norm(const ModelParams& p) {
  double sum = 0.0;
  for (const auto& [name, m] : p.entries()) {
    for (double v : m->data()) sum += v * v;
  }
  return std::sqrt(sum);
}

}  // namespace

BatchResult batch_nll(const std::vector<PhrasePair>& batch, const ModelParams& p,
                      const ModelConfig& cfg, int threads) {
  if (batch.empty()) throw ParameterError("batch_nll: empty batch");
  for (const auto& pair : batch) {
    if (pair.src_ids.empty() || pair.tgt_ids.empty()) {
      throw InputError("batch_nll: pair '" + pair.src_text + "' has no encoded ids");
    }
  }

  BatchResult result;
  result.grads = ModelParams::zeros(cfg);
  for (const auto& pair : batch) result.tokens += pair.tgt_ids.size();

  const std::size_t n = batch.size();
  const std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), n);
  if (workers <= 1) {
    double loss = 0.0;
    for (const auto& pair : batch) {
      loss += model_backward_accum(pair.src_ids, pair.tgt_ids, p, cfg, result.grads);
    }
    result.loss = loss / static_cast<double>(n);
  } else {
    // Contiguous chunks, each summed locally, then reduced in chunk order.
    std::vector<ModelParams> chunk_grads;
    std::vector<double> chunk_loss(workers, 0.0);
    std::vector<std::exception_ptr> chunk_error(workers);
    chunk_grads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      chunk_grads.push_back(ModelParams::zeros(cfg));
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t per = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        try {
          const std::size_t begin = w * per;
          const std::size_t end = std::min(n, begin + per);
          for (std::size_t i = begin; i < end; ++i) {
            chunk_loss[w] += model_backward_accum(batch[i].src_ids, batch[i].tgt_ids,
                                                  p, cfg, chunk_grads[w]);
          }
        } catch (...) {
          chunk_error[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& err : chunk_error) {
      if (err) std::rethrow_exception(err);
    }
    double loss = 0.0;
    for (std::size_t w = 0; w < workers; ++w) {
      loss += chunk_loss[w];
      add_scaled(result.grads, chunk_grads[w], 1.0);
    }
    result.loss = loss / static_cast<double>(n);
  }
  scale_params(result.grads, 1.0 / static_cast<double>(n));
  return result;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (optimizer == OptimizerKind::Sgd && !(learning_rate > 0.0)) {
    throw ConfigError("sgd requires learning_rate > 0");
  }
  if (!(rho > 0.0 && rho < 1.0)) throw ConfigError("rho must be in (0,1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
  if (grad_clip < 0.0) throw ConfigError("grad_clip must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

TrainResult train(const std::vector<PhrasePair>& pairs, const ModelConfig& mcfg,
                  const TrainConfig& tcfg, const ModelParams* resume,
                  std::ostream* log_stream,
                  const std::function<void(std::size_t, const ModelParams&)>&
                      checkpoint_hook) {
  mcfg.validate();
  tcfg.validate();
  if (pairs.empty()) throw ParameterError("train: empty dataset");

  // Streams: parameter init and batch sampling draw from separate
  // substreams of the master seed.
  RngState init_rng = RngState::derive(tcfg.seed, 0);
  RngState batch_rng = RngState::derive(tcfg.seed, 1);

  TrainResult result;
  result.params = resume != nullptr ? *resume : init_params(mcfg, init_rng);

  AdadeltaState state = AdadeltaState::zeros(mcfg, tcfg.rho, tcfg.eps);
  const auto start = std::chrono::steady_clock::now();

  for (std::size_t update = 1; update <= tcfg.max_updates; ++update) {
    const auto indices =
        sample_batch_indices(pairs.size(), tcfg.batch_size, batch_rng);
    std::vector<PhrasePair> batch;
    batch.reserve(indices.size());
    for (std::size_t idx : indices) batch.push_back(pairs[idx]);

    BatchResult batch_result = batch_nll(batch, result.params, mcfg, tcfg.threads);
    if (!std::isfinite(batch_result.loss)) {
      throw NumericError("non-finite loss at update " + std::to_string(update));
    }

    if (tcfg.grad_clip > 0.0) {
      const double norm = global_norm(batch_result.grads);
      if (norm > tcfg.grad_clip) {
        scale_params(batch_result.grads, tcfg.grad_clip / norm);
      }
    }

    if (tcfg.optimizer == OptimizerKind::Adadelta) {
      adadelta_step(result.params, batch_result.grads, state);
    } else {
      sgd_step(result.params, batch_result.grads, tcfg.learning_rate);
    }

    const bool log_now = (tcfg.log_every > 0 && update % tcfg.log_every == 0) ||
                         update == tcfg.max_updates;
    if (log_now) {
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
              .count();
      result.log.push_back({update, batch_result.loss, seconds});
      if (log_stream != nullptr) {
        (*log_stream) << update << '\t' << batch_result.loss << '\t' << seconds
                      << '\n';
        log_stream->flush();
      }
    }
    if (checkpoint_hook && tcfg.checkpoint_every > 0 &&
        update % tcfg.checkpoint_every == 0) {
      checkpoint_hook(update, result.params);
    }
  }
  return result;
}

namespace {

double loss_over_pairs(const ModelParams& p, const ModelConfig& cfg,
                       const std::vector<PhrasePair>& pairs) {
  double loss = 0.0;
  for (const auto& pair : pairs) {
    loss -= log_prob(pair.src_ids, pair.tgt_ids, p, cfg);
  }
  return loss;
}

}  // namespace

double grad_check_against(const ModelParams& analytic, const ModelParams& p,
                          const ModelConfig& cfg,
                          const std::vector<PhrasePair>& pairs, double step) {
  if (!(step > 0.0)) throw ParameterError("grad_check: step must be > 0");
  if (pairs.empty()) throw ParameterError("grad_check: no pairs given");
  if (p.parameter_count() > 100000) {
    throw ParameterError("grad_check: model has " +
                         std::to_string(p.parameter_count()) +
                         " parameters; the sweep is meant for <= 1e5");
  }

  ModelParams work = p;
  auto work_entries = work.entries();
  const auto analytic_entries = analytic.entries();

  double max_rel_err = 0.0;
  for (std::size_t k = 0; k < work_entries.size(); ++k) {
    auto& wd = work_entries[k].second->data();
    const auto& ad = analytic_entries[k].second->data();
    for (std::size_t i = 0; i < wd.size(); ++i) {
      const double saved = wd[i];
      wd[i] = saved + step;
      const double plus = loss_over_pairs(work, cfg, pairs);
      wd[i] = saved - step;
      const double minus = loss_over_pairs(work, cfg, pairs);
      wd[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double denom = std::max({std::abs(ad[i]), std::abs(numeric), 1e-8});
      max_rel_err = std::max(max_rel_err, std::abs(ad[i] - numeric) / denom);
    }
  }
  return max_rel_err;
}

double grad_check(const ModelParams& p, const ModelConfig& cfg,
                  const std::vector<PhrasePair>& pairs, double step) {
  ModelParams analytic = ModelParams::zeros(cfg);
  for (const auto& pair : pairs) {
    model_backward_accum(pair.src_ids, pair.tgt_ids, p, cfg, analytic);
  }
  return grad_check_against(analytic, p, cfg, pairs, step);
}

double grad_check(const ModelParams& p, const ModelConfig& cfg,
                  const PhrasePair& pair, double step) {
  return grad_check(p, cfg, std::vector<PhrasePair>{pair}, step);
}

}  // namespace encdec
