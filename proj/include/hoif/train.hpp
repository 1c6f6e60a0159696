#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoif/data.hpp"
#include "hoif/metrics.hpp"
#include "hoif/model.hpp"

namespace hoif {

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double lr = 0.001;
  double decay_factor = 0.96;
  std::size_t decay_every_steps = 100000;
  std::uint64_t seed = 0;
  std::size_t checkpoint_every = 0;  // epochs; 0 disables periodic checkpoints
  double eval_fraction = 0.2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainState {
  NetworkParams m;  // Adam first moments, shaped like the parameters
  NetworkParams v;  // Adam second moments
  std::size_t step = 0;
  double current_lr = 0.0;
  double best_eval = 0.0;
  std::uint64_t rng_seed = 0;

  static TrainState create(const NetworkParams& params, const TrainConfig& cfg);
};

struct LossResult {
  double loss = 0.0;
  Matrix grad;
};

/// (1/B) Σ_samples Σ_joints ||y - ŷ||² for a stack of B n-joint poses, and its
/// gradient with respect to pred.
LossResult mse_loss(const Matrix& pred, const Matrix& target, std::size_t joints_per_sample);

/// Bias-corrected Adam update of every learnable tensor, then the step counter
/// advances and the learning rate follows lr * decay^floor(step / decay_every).
void adam_step(TrainState& state, NetworkParams& params, const NetworkParams& grads, const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double eval_mpjpe = 0.0;
  double eval_pa_mpjpe = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  NetworkParams initial_params;
  NetworkParams final_params;
  NetworkParams best_params;
  std::size_t best_epoch = 0;
  NormStats stats;
  DataSplit split;
  EvalReport initial_eval;  // before any update ("epoch 0")
  std::vector<EpochRecord> history;
  TrainState state;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t step, double lr, double loss);
  std::size_t step() const { return step_; }
  double lr() const { return lr_; }
  double loss() const { return loss_; }

 private:
  std::size_t step_;
  double lr_;
  double loss_;
};

/// Called after each epoch with the record and the current parameters.
using EpochCallback = std::function<void(const EpochRecord&, const NetworkParams&, const TrainState&)>;

/// Predictions in millimetres (root-relative) for the given samples of a raw dataset.
std::vector<Matrix> predict_mm(const Network& net, const NetworkParams& params, const Dataset& raw,
                               const NormStats& stats, std::span<const std::size_t> indices,
                               std::size_t batch_size = 256);

EvalReport evaluate_split(const Network& net, const NetworkParams& params, const Dataset& raw, const NormStats& stats,
                          std::span<const std::size_t> indices, const EvalOptions& options = {});

/// Full training run on a raw (millimetre) dataset. Deterministic given cfg.seed.
/// With lr == 0 the model is frozen: neither weights nor batch-norm running
/// statistics change.
TrainResult train(const NetworkConfig& model_cfg, const TrainConfig& train_cfg, const Dataset& dataset,
                  const EpochCallback& on_epoch = {});

std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace hoif
