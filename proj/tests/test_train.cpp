#include <doctest.h>

#include <utility>

#include "hoif/train.hpp"
#include "support/oracles.hpp"

using hoif::Matrix;

namespace {

hoif::NetworkConfig tiny_model() {
  hoif::NetworkConfig c;
  c.num_layers = 3;
  c.hidden_width = 12;
  c.hops = 3;
  return c;
}

hoif::TrainConfig tiny_train(std::size_t epochs) {
  hoif::TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 16;
  t.seed = 3;
  return t;
}

bool same_params(const hoif::NetworkParams& a, const hoif::NetworkParams& b) {
  const auto ta = hoif::tensors(a), tb = hoif::tensors(b);
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (!(*ta[i].tensor == *tb[i].tensor)) return false;
  return true;
}

}  // namespace

TEST_CASE("mse loss hand cases") {
  const Matrix y(17, 3, 2.0);
  const auto zero = hoif::mse_loss(y, y, 17);
  CHECK(zero.loss == 0.0);
  CHECK(zero.grad.max_abs() == 0.0);
  Matrix pred(1, 3), target(1, 3);
  pred(0, 0) = 3.0;
  pred(0, 1) = 4.0;
  CHECK(hoif::mse_loss(pred, target, 1).loss == 25.0);
  CHECK_THROWS_AS(hoif::mse_loss(Matrix(17, 3), Matrix(16, 3), 17), hoif::DimensionError);
}

TEST_CASE("mse gradient matches finite differences") {
  std::mt19937_64 rng(1);
  Matrix pred = oracle::random_matrix(17 * 4, 3, rng);
  const Matrix target = oracle::random_matrix(17 * 4, 3, rng);
  const auto lr = hoif::mse_loss(pred, target, 17);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double orig = pred.data()[i];
    pred.data()[i] = orig + h;
    const double up = hoif::mse_loss(pred, target, 17).loss;
    pred.data()[i] = orig - h;
    const double down = hoif::mse_loss(pred, target, 17).loss;
    pred.data()[i] = orig;
    worst = std::max(worst, std::abs((up - down) / (2 * h) - lr.grad.data()[i]));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  const auto cfg = tiny_model();
  auto p = hoif::params_init(cfg, 1);
  const auto before = p;
  hoif::TrainConfig tc;
  auto state = hoif::TrainState::create(p, tc);
  hoif::adam_step(state, p, hoif::zeros_like(p), tc);
  CHECK(same_params(p, before));
  CHECK(state.step == 1);
}

TEST_CASE("adam: first step moves each coordinate by about lr") {
  const auto cfg = tiny_model();
  auto p = hoif::params_init(cfg, 2);
  const auto before = p;
  hoif::TrainConfig tc;
  auto state = hoif::TrainState::create(p, tc);
  for (double scale : {1e-3, 1.0, 1e3}) {
    auto q = before;
    auto st = hoif::TrainState::create(q, tc);
    auto g = hoif::zeros_like(q);
    for (auto& t : hoif::tensors(g)) t.tensor->fill(scale);
    hoif::adam_step(st, q, g, tc);
    const auto tq = hoif::tensors(std::as_const(q));
    const auto tb = hoif::tensors(before);
    for (std::size_t i = 0; i < tq.size(); ++i) {
      if (!tq[i].learnable) {
        CHECK(*tq[i].tensor == *tb[i].tensor);
        continue;
      }
      for (std::size_t k = 0; k < tq[i].tensor->size(); ++k) {
        const double step = tb[i].tensor->data()[k] - tq[i].tensor->data()[k];
        CHECK(step == doctest::Approx(tc.lr).epsilon(1e-4));
      }
    }
  }
  (void)state;
}

TEST_CASE("learning rate schedule is exact") {
  const auto cfg = tiny_model();
  auto p = hoif::params_init(cfg, 3);
  hoif::TrainConfig tc;
  tc.decay_every_steps = 10;
  auto state = hoif::TrainState::create(p, tc);
  const auto zero = hoif::zeros_like(p);
  for (std::size_t s = 1; s <= 35; ++s) {
    hoif::adam_step(state, p, zero, tc);
    CHECK(state.current_lr == tc.lr * std::pow(tc.decay_factor, static_cast<double>(s / 10)));
  }
  CHECK(state.current_lr == doctest::Approx(0.001 * 0.96 * 0.96 * 0.96));

  hoif::TrainConfig defaults;
  auto st2 = hoif::TrainState::create(p, defaults);
  st2.step = defaults.decay_every_steps - 1;
  hoif::adam_step(st2, p, zero, defaults);
  CHECK(st2.current_lr == doctest::Approx(0.00096).epsilon(1e-12));
}

TEST_CASE("train config validation") {
  hoif::TrainConfig t;
  CHECK_NOTHROW(t.validate());
  t.batch_size = 0;
  CHECK_THROWS(t.validate());
  t = {};
  t.decay_factor = 1.5;
  CHECK_THROWS(t.validate());
  t = {};
  t.lr = -1.0;
  CHECK_THROWS(t.validate());
}

TEST_CASE("training is deterministic and lr = 0 freezes the model") {
  const auto g = hoif::default_human36m_skeleton();
  const auto ds = hoif::synth_generate(g, {}, 120, 0.0, 4);
  const auto a = hoif::train(tiny_model(), tiny_train(3), ds);
  const auto b = hoif::train(tiny_model(), tiny_train(3), ds);
  REQUIRE(a.history.size() == 3);
  CHECK(same_params(a.final_params, b.final_params));
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(a.history[e].train_loss == b.history[e].train_loss);
    CHECK(a.history[e].eval_mpjpe == b.history[e].eval_mpjpe);
  }
  CHECK_FALSE(same_params(a.final_params, a.initial_params));

  auto frozen_cfg = tiny_train(3);
  frozen_cfg.lr = 0.0;
  const auto frozen = hoif::train(tiny_model(), frozen_cfg, ds);
  CHECK(same_params(frozen.final_params, frozen.initial_params));
  for (const auto& r : frozen.history) CHECK(r.eval_mpjpe == *frozen.initial_eval.mpjpe_mm);
}

TEST_CASE("training reduces loss and the callback sees every epoch") {
  const auto g = hoif::default_human36m_skeleton();
  const auto ds = hoif::synth_generate(g, {}, 200, 0.0, 5);
  std::size_t calls = 0;
  const auto res = hoif::train(tiny_model(), tiny_train(6), ds,
                               [&](const hoif::EpochRecord& r, const hoif::NetworkParams&, const hoif::TrainState&) {
                                 CHECK(r.epoch == ++calls);
                               });
  CHECK(calls == 6);
  CHECK(res.history.back().train_loss < res.history.front().train_loss);
  CHECK(res.history.back().eval_mpjpe < *res.initial_eval.mpjpe_mm);
  CHECK(res.best_epoch >= 1);
}

TEST_CASE("divergence is reported with its diagnostics") {
  const auto g = hoif::default_human36m_skeleton();
  const auto ds = hoif::synth_generate(g, {}, 60, 0.0, 6);
  auto tc = tiny_train(20);
  tc.lr = 1e200;
  try {
    hoif::train(tiny_model(), tc, ds);
    FAIL("expected TrainingDiverged");
  } catch (const hoif::TrainingDiverged& e) {
    CHECK(e.lr() == 1e200);
    CHECK(e.step() >= 1);
  }
}

TEST_CASE("history csv layout") {
  std::vector<hoif::EpochRecord> h = {{1, 2.5, 100.0, 80.0, 0.001}, {2, 2.0, 90.0, 70.0, 0.001}};
  const std::string csv = hoif::history_csv(h);
  CHECK(csv.rfind("epoch,train_loss,eval_mpjpe,eval_pa_mpjpe,lr\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
