#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "encdec/model.hpp"
#include "encdec/phrase_table.hpp"

namespace encdec {

enum class OptimizerKind { Adadelta, Sgd };

const char* optimizer_name(OptimizerKind kind);
OptimizerKind optimizer_from_name(const std::string& name);

// Decayed accumulators of squared gradients and squared updates, one entry
// per parameter, all starting at zero.
struct AdadeltaState {
  ModelParams acc_grad_sq;
  ModelParams acc_update_sq;
  double rho = 0.95;
  double eps = 1e-6;

  static AdadeltaState zeros(const ModelConfig& cfg, double rho = 0.95,
                             double eps = 1e-6);
};

// Elementwise: Eg <- rho Eg + (1-rho) g^2
//              delta = -sqrt(Ed + eps) / sqrt(Eg + eps) * g
//              Ed <- rho Ed + (1-rho) delta^2
//              p <- p + delta
void adadelta_step(ModelParams& params, const ModelParams& grads, AdadeltaState& state);

// p <- p - lr g; lr must be > 0.
void sgd_step(ModelParams& params, const ModelParams& grads, double learning_rate);

struct BatchResult {
  double loss = 0.0;   // mean per-pair negative log-likelihood
  ModelParams grads;   // mean per-pair gradients
  std::size_t tokens = 0;  // total target tokens scored (EOS steps included)
};

// Mean NLL and mean gradients over the batch. With threads > 1 the pairs are
// processed in contiguous chunks whose partial sums are reduced in chunk
// order, so the result is deterministic for a fixed thread count.
BatchResult batch_nll(const std::vector<PhrasePair>& batch, const ModelParams& p,
                      const ModelConfig& cfg, int threads = 1);

struct TrainConfig {
  std::size_t batch_size = 64;
  std::size_t max_updates = 0;
  std::uint64_t seed = 1;
  OptimizerKind optimizer = OptimizerKind::Adadelta;
  double learning_rate = 0.1;  // sgd only
  double rho = 0.95;
  double eps = 1e-6;
  std::size_t log_every = 100;
  std::size_t checkpoint_every = 0;  // 0 = final checkpoint only
  double grad_clip = 0.0;            // global max-norm; 0 disables
  int threads = 1;

  void validate() const;
};

struct LossLogEntry {
  std::size_t update = 0;
  double mean_nll = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  ModelParams params;
  std::vector<LossLogEntry> log;
};

// Runs max_updates updates of uniform-with-replacement batches over the
// deduplicated pair pool. Loss log lines "update<TAB>mean_nll<TAB>seconds"
// go to log_stream when given. checkpoint_hook fires every checkpoint_every
// updates. Deterministic per (seed, config, thread count), timestamps aside.
TrainResult train(const std::vector<PhrasePair>& pairs, const ModelConfig& mcfg,
                  const TrainConfig& tcfg,
                  const ModelParams* resume = nullptr,
                  std::ostream* log_stream = nullptr,
                  const std::function<void(std::size_t, const ModelParams&)>&
                      checkpoint_hook = {});

// Central-difference sweep over every parameter entry against the analytic
// gradients; returns the max relative error with denominator
// max(|analytic|, |numeric|, 1e-8). Guarded to models of <= 1e5 parameters.
double grad_check(const ModelParams& p, const ModelConfig& cfg,
                  const std::vector<PhrasePair>& pairs, double step);
double grad_check(const ModelParams& p, const ModelConfig& cfg,
                  const PhrasePair& pair, double step);

// Detector flavor: compares supplied analytic gradients against the
// numeric sweep (lets tests inject corrupted gradients).
double grad_check_against(const ModelParams& analytic, const ModelParams& p,
                          const ModelConfig& cfg,
                          const std::vector<PhrasePair>& pairs, double step);

}  // namespace encdec
