#include "hoif/train.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace hoif {

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("TrainConfig: lr must be finite and >= 0");
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw std::invalid_argument("TrainConfig: decay_factor must lie in (0, 1]");
  if (decay_every_steps < 1) throw std::invalid_argument("TrainConfig: decay_every_steps must be >= 1");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) throw std::invalid_argument("TrainConfig: eval_fraction must lie in (0, 1)");
}

TrainState TrainState::create(const NetworkParams& params, const TrainConfig& cfg) {
  TrainState s;
  s.m = zeros_like(params);
  s.v = zeros_like(params);
  s.current_lr = cfg.lr;
  s.rng_seed = cfg.seed;
  s.best_eval = std::numeric_limits<double>::infinity();
  return s;
}

TrainingDiverged::TrainingDiverged(std::size_t step, double lr, double loss)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "training diverged: non-finite loss " << loss << " at step " << step << " (lr " << lr << ")";
        return msg.str();
      }()),
      step_(step),
      lr_(lr),
      loss_(loss) {}

LossResult mse_loss(const Matrix& pred, const Matrix& target, std::size_t joints_per_sample) {
  if (!pred.same_shape(target)) {
    throw DimensionError("mse_loss: prediction " + pred.shape_string() + " vs target " + target.shape_string());
  }
  if (joints_per_sample == 0 || pred.rows() % joints_per_sample != 0) {
    throw DimensionError("mse_loss: rows are not a whole number of poses");
  }
  const double batch = static_cast<double>(pred.rows() / joints_per_sample);
  LossResult r{0.0, Matrix(pred.rows(), pred.cols())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred.data()[i] - target.data()[i];
    r.loss += d * d;
    r.grad.data()[i] = 2.0 * d / batch;
  }
  r.loss /= batch;
  return r;
}

void adam_step(TrainState& state, NetworkParams& params, const NetworkParams& grads, const TrainConfig& cfg) {
  auto p = tensors(params);
  const auto g = tensors(grads);
  auto m = tensors(state.m);
  auto v = tensors(state.v);
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
    throw DimensionError("adam_step: parameter, gradient and moment structures differ");
  }
  const double t = static_cast<double>(state.step + 1);
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
  const double lr = state.current_lr;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!p[i].learnable) continue;
    auto pd = p[i].tensor->data();
    const auto gd = g[i].tensor->data();
    auto md = m[i].tensor->data();
    auto vd = v[i].tensor->data();
    if (pd.size() != gd.size() || pd.size() != md.size() || pd.size() != vd.size()) {
      throw DimensionError("adam_step: shape mismatch in tensor " + p[i].name);
    }
    for (std::size_t k = 0; k < pd.size(); ++k) {
      md[k] = b1 * md[k] + (1.0 - b1) * gd[k];
      vd[k] = b2 * vd[k] + (1.0 - b2) * gd[k] * gd[k];
      const double mhat = md[k] / c1, vhat = vd[k] / c2;
      pd[k] -= lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
    }
  }
  ++state.step;
  state.current_lr = cfg.lr * std::pow(cfg.decay_factor, static_cast<double>(state.step / cfg.decay_every_steps));
}

std::vector<Matrix> predict_mm(const Network& net, const NetworkParams& params, const Dataset& raw,
                               const NormStats& stats, std::span<const std::size_t> indices, std::size_t batch_size) {
  const std::size_t n = raw.skeleton.num_joints();
  std::vector<Matrix> out;
  out.reserve(indices.size());
  for (std::size_t start = 0; start < indices.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, indices.size() - start);
    Matrix inputs(count * n, 2);
    for (std::size_t b = 0; b < count; ++b) {
      const Matrix x = normalize_2d(raw.samples.at(indices[start + b]).joints2d, stats);
      std::copy(x.data().begin(), x.data().end(), inputs.data().begin() + static_cast<std::ptrdiff_t>(b * n * 2));
    }
    const Matrix y = net.forward(params, inputs, Mode::eval).y;
    for (std::size_t b = 0; b < count; ++b) out.push_back(denormalize_3d(y.row_block(b * n, n), stats));
  }
  return out;
}

EvalReport evaluate_split(const Network& net, const NetworkParams& params, const Dataset& raw, const NormStats& stats,
                          std::span<const std::size_t> indices, const EvalOptions& options) {
  const auto preds = predict_mm(net, params, raw, stats, indices);
  std::vector<Matrix> gts;
  gts.reserve(indices.size());
  for (std::size_t idx : indices) gts.push_back(root_relative(raw.samples.at(idx).joints3d, raw.skeleton.root()));
  return evaluate(preds, gts, raw.skeleton.root(), options);
}

TrainResult train(const NetworkConfig& model_cfg, const TrainConfig& cfg, const Dataset& dataset,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (dataset.size() < 2) throw std::invalid_argument("train: need at least two samples");
  const Network net(model_cfg, dataset.skeleton);
  const std::size_t n = dataset.skeleton.num_joints();

  TrainResult res;
  res.split = split_indices(dataset.size(), cfg.eval_fraction, cfg.seed);
  res.stats = compute_stats(dataset, res.split.train);
  const Dataset normalized = normalize(dataset, res.stats);

  NetworkParams params = params_init(model_cfg, cfg.seed);
  res.initial_params = params;
  res.state = TrainState::create(params, cfg);
  res.initial_eval = evaluate_split(net, params, dataset, res.stats, res.split.eval);
  res.best_params = params;
  const bool frozen = cfg.lr == 0.0;

  std::mt19937_64 shuffle_rng(cfg.seed + 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order = res.split.train;
  Matrix inputs, targets;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(order[i - 1], order[pick(shuffle_rng)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      stack_batch(normalized, std::span(order).subspan(start, count), inputs, targets);
      ForwardResult fwd;
      NetworkParams grads;
      LossResult loss;
      try {
        fwd = net.forward(params, inputs, Mode::train);
        loss = mse_loss(fwd.y, targets, n);
        if (!std::isfinite(loss.loss)) throw NumericalError("non-finite loss");
        grads = net.backward(params, fwd.cache, loss.grad);
      } catch (const NumericalError&) {
        throw TrainingDiverged(res.state.step, res.state.current_lr,
                               std::isfinite(loss.loss) ? std::numeric_limits<double>::quiet_NaN() : loss.loss);
      }
      loss_sum += loss.loss * static_cast<double>(count);
      if (!frozen) {
        adam_step(res.state, params, grads, cfg);
        net.apply_batchnorm_updates(params, fwd.cache.bn_updates);
      } else {
        ++res.state.step;
      }
    }
    const auto report = evaluate_split(net, params, dataset, res.stats, res.split.eval);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()), *report.mpjpe_mm, *report.pa_mpjpe_mm,
                    res.state.current_lr};
    res.history.push_back(rec);
    if (rec.eval_mpjpe < res.state.best_eval) {
      res.state.best_eval = rec.eval_mpjpe;
      res.best_params = params;
      res.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(rec, params, res.state);
  }
  res.final_params = std::move(params);
  return res;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,eval_mpjpe,eval_pa_mpjpe,lr\n";
  for (const auto& r : history)
    out << r.epoch << ',' << r.train_loss << ',' << r.eval_mpjpe << ',' << r.eval_pa_mpjpe << ',' << r.lr << '\n';
  return out.str();
}

}  // namespace hoif
