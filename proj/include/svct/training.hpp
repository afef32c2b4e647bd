#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "svct/common.hpp"
#include "svct/degrade.hpp"
#include "svct/image.hpp"
#include "svct/restorer.hpp"

namespace svct {

struct TrainConfig {
  double gamma = 0.995;  // EMA decay
  int ema_period = 10;   // EMA update period p, iterations
  double learning_rate = 0.05;
  double momentum = 0.9;
  int batch_size = 4;
  int epochs = 2;
  std::uint64_t seed = 1;
  bool use_epct = true;

  // Recorded for alternate implementations; the built-in SGD ignores them.
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_learning_rate = 4e-5;

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0))
      throw ConfigError("train: gamma must be in (0, 1)");
    if (ema_period < 1)
      throw ConfigError("train: ema_period must be >= 1");
    // learning_rate == 0 is allowed as an explicit no-op optimizer.
    if (!(learning_rate >= 0.0))
      throw ConfigError("train: learning rate must be non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw ConfigError("train: momentum must be in [0, 1)");
    if (batch_size < 1 || epochs < 1)
      throw ConfigError("train: batch_size and epochs must be >= 1");
  }
};

/// EMA shadow of the restorer parameters.
struct EmaState {
  Eigen::VectorXd theta_ema;
  long iteration = 0;

  void validate(const RestorerState& state) const {
    if (theta_ema.size() != state.theta.size())
      throw ConfigError("ema: length does not match parameters");
    if (!theta_ema.allFinite())
      throw NumericError("ema: non-finite values");
  }
};

/// Gated EMA step: only iterations divisible by `period` blend; all others
/// leave the shadow bit-identical.
inline void ema_update(EmaState& ema, const Eigen::VectorXd& theta,
                       long iteration, double gamma, int period) {
  if (ema.theta_ema.size() != theta.size())
    throw ConfigError("ema: length does not match parameters");
  if (period < 1)
    throw ConfigError("ema: period must be >= 1");
  if (iteration % period == 0)
    ema.theta_ema = gamma * ema.theta_ema + (1.0 - gamma) * theta;
  ema.iteration = iteration;
}

inline void ema_update(EmaState& ema, const Eigen::VectorXd& theta,
                       long iteration, const TrainConfig& cfg) {
  ema_update(ema, theta, iteration, cfg.gamma, cfg.ema_period);
}

struct LossResult {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// MSE in normalized units between the network output for `x_in` at level t
/// and the clean target, with the full parameter gradient.
inline LossResult network_loss(const RestorerState& state, const Image& x_in,
                               const Image& x0, int t) {
  require_same_grid(x_in, x0, "loss");
  NetCache cache;
  const Eigen::ArrayXXd y =
      reference_forward(state, normalize_hu_plane(x_in), t, &cache);
  const Eigen::ArrayXXd diff = y - normalize_hu_plane(x0);
  const double n = static_cast<double>(diff.size());
  LossResult out;
  out.loss = (diff * diff).sum() / n;
  if (!std::isfinite(out.loss))
    throw NumericError("loss: non-finite value");
  out.grad = Eigen::VectorXd::Zero(state.arch.param_count());
  reference_backward(state, cache, t, (2.0 / n) * diff, out.grad);
  return out;
}

/// Base restoration objective: degrade the clean image to level t, restore,
/// and penalize the normalized MSE against the clean image.
inline LossResult restore_loss(const RestorerState& state, const Image& x0,
                               int t, const DegradeConfig& dcfg) {
  if (t < 1 || t > dcfg.severity.t_max())
    throw ConfigError("restore_loss: level must be in [1, t_max]");
  return network_loss(state, degrade(x0, t, dcfg), x0, t);
}

/// Same objective evaluated on an externally built composite input.
inline LossResult epct_loss(const RestorerState& state, const Image& x_t,
                            const Image& x0, int t) {
  if (t < 1 || t >= state.arch.levels)
    throw ConfigError("epct_loss: level out of range");
  return network_loss(state, x_t, x0, t);
}

struct ComposeResult {
  Image x_t;     // composite level-t input carrying propagated error
  Image x0_hat;  // the frozen restorer's estimate at level T
};

namespace detail {

inline ComposeResult epct_compose_from(const Image& x_T, int T, int t,
                                       const Restorer& ema_restorer,
                                       const DegradeConfig& dcfg) {
  ComposeResult out;
  out.x0_hat = ema_restorer.restore(x_T, T);
  // Grouped so that a perfect estimate cancels the first two terms exactly.
  Image residual = x_T;
  residual.data -= degrade(out.x0_hat, T, dcfg).data;
  out.x_t = degrade(out.x0_hat, t, dcfg);
  out.x_t.data += residual.data;
  return out;
}

}  // namespace detail

/// Builds the composite training input x_t = x_T - D(x0_hat, T) + D(x0_hat, t)
/// with x0_hat produced by the (frozen) EMA restorer. No gradient flows through
/// the EMA network; x_t is a constant input for the subsequent loss.
inline ComposeResult epct_compose(const Image& x0, int T, int t,
                                  const Restorer& ema_restorer,
                                  const DegradeConfig& dcfg) {
  if (t < 1 || T > dcfg.severity.t_max() || t >= T)
    throw ConfigError("epct_compose: need 1 <= t < T <= t_max");
  return detail::epct_compose_from(degrade(x0, T, dcfg), T, t, ema_restorer,
                                   dcfg);
}

struct TrainHistoryRow {
  long iteration = 0;
  double loss_restore = 0.0;
  // NaN when the iteration had no composite step (T == 1 or EPCT disabled).
  double loss_compose = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  RestorerState state;
  EmaState ema;
  std::vector<TrainHistoryRow> history;
  bool diverged = false;
};

/// Seed-reproducible training loop. Each iteration draws a target level T,
/// takes an SGD step on restore_loss over a random batch, then (when EPCT is
/// enabled and T > 1) draws an intermediate level t and takes a second step
/// on the composite loss. The EMA shadow updates every `ema_period`
/// iterations. A non-finite loss stops training, preserving the history.
inline TrainResult train(const std::vector<Image>& dataset,
                         const TrainConfig& cfg, const DegradeConfig& dcfg,
                         RestorerState init) {
  cfg.validate();
  dcfg.validate();
  init.validate();
  if (dataset.empty())
    throw ConfigError("train: empty dataset");
  if (dcfg.severity.t_max() + 1 > init.arch.levels)
    throw ConfigError("train: restorer has fewer levels than the severity map");

  TrainResult res;
  res.state = std::move(init);
  res.ema.theta_ema = res.state.theta;
  res.ema.iteration = 0;

  RandomStream rng(cfg.seed);
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(res.state.theta.size());
  const int n = static_cast<int>(dataset.size());
  const int t_max = dcfg.severity.t_max();
  const long iters_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
  const long total_iters = iters_per_epoch * cfg.epochs;

  auto sgd_step = [&](const Eigen::VectorXd& grad) {
    velocity = cfg.momentum * velocity + grad;
    res.state.theta -= cfg.learning_rate * velocity;
  };

  for (long iter = 1; iter <= total_iters; ++iter) {
    const int T = rng.uniform_int(1, t_max);
    std::vector<int> batch(static_cast<std::size_t>(cfg.batch_size));
    for (int& idx : batch)
      idx = rng.uniform_int(0, n - 1);

    TrainHistoryRow row;
    row.iteration = iter;
    try {
      std::vector<Image> degraded;
      degraded.reserve(batch.size());
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(res.state.theta.size());
      double loss_sum = 0.0;
      for (int idx : batch) {
        degraded.push_back(degrade(dataset[static_cast<std::size_t>(idx)], T, dcfg));
        const LossResult l = network_loss(
            res.state, degraded.back(), dataset[static_cast<std::size_t>(idx)], T);
        grad += l.grad;
        loss_sum += l.loss;
      }
      row.loss_restore = loss_sum / cfg.batch_size;
      sgd_step(grad / cfg.batch_size);

      if (cfg.use_epct && T > 1) {
        const int t = rng.uniform_int(1, T - 1);
        RestorerState ema_state{res.state.arch, res.ema.theta_ema};
        const ReferenceRestorer ema_restorer(std::move(ema_state));
        grad.setZero();
        loss_sum = 0.0;
        for (std::size_t b = 0; b < batch.size(); ++b) {
          const Image& x0 = dataset[static_cast<std::size_t>(batch[b])];
          const ComposeResult comp =
              detail::epct_compose_from(degraded[b], T, t, ema_restorer, dcfg);
          const LossResult l = epct_loss(res.state, comp.x_t, x0, t);
          grad += l.grad;
          loss_sum += l.loss;
        }
        row.loss_compose = loss_sum / cfg.batch_size;
        sgd_step(grad / cfg.batch_size);
      }
    } catch (const NumericError&) {
      res.diverged = true;
      res.history.push_back(row);
      break;
    }

    ema_update(res.ema, res.state.theta, iter, cfg);
    res.history.push_back(row);
  }
  return res;
}

inline TrainResult train(const std::vector<Image>& dataset,
                         const TrainConfig& cfg, const DegradeConfig& dcfg) {
  RestorerArch arch;
  arch.levels = dcfg.severity.t_max() + 1;
  return train(dataset, cfg, dcfg, init_reference_restorer(cfg.seed, arch));
}

}  // namespace svct
