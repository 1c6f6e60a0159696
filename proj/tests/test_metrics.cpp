#include <doctest.h>

#include <json.hpp>

#include "hoif/metrics.hpp"
#include "support/oracles.hpp"

using hoif::Matrix;

namespace {

Matrix random_pose(std::mt19937_64& rng) { return oracle::random_matrix(17, 3, rng, -500, 500); }

// Integer coordinates keep hand-constructed distances exact.
Matrix integer_pose(std::mt19937_64& rng) {
  Matrix p = random_pose(rng);
  for (double& v : p.data()) v = std::round(v);
  return p;
}

Matrix offset_joints(Matrix p, const std::vector<double>& d, bool include_root) {
  for (std::size_t j = include_root ? 0 : 1; j < p.rows(); ++j)
    for (std::size_t c = 0; c < 3; ++c) p(j, c) += d[c];
  return p;
}

}  // namespace

TEST_CASE("mpjpe hand cases") {
  std::mt19937_64 rng(1);
  const Matrix gt = random_pose(rng);
  CHECK(hoif::mpjpe(gt, gt, 0) == 0.0);
  CHECK(hoif::mpjpe(offset_joints(gt, {10, -20, 30}, true), gt, 0) == doctest::Approx(0.0).epsilon(1e-12));
  Matrix one = gt;
  one(5, 1) += 17.0;
  CHECK(hoif::mpjpe(one, gt, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(hoif::mpjpe(Matrix(17, 3), Matrix(16, 3), 0), hoif::DimensionError);
}

TEST_CASE("mpjpe agrees with an independent computation and is rigid invariant") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const Matrix gt = random_pose(rng), pred = random_pose(rng);
    CHECK(hoif::mpjpe(pred, gt, 3) == doctest::Approx(oracle::root_aligned_mean_distance(pred, gt, 3)).epsilon(1e-12));
    const Matrix r = oracle::random_rotation(rng);
    const std::vector<double> tr = {100, 200, -50};
    CHECK(hoif::mpjpe(oracle::transform_rows(pred, r, 1.0, tr), oracle::transform_rows(gt, r, 1.0, tr), 3) ==
          doctest::Approx(hoif::mpjpe(pred, gt, 3)).epsilon(1e-9));
  }
}

TEST_CASE("pa_mpjpe is zero under similarity transforms") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const Matrix gt = random_pose(rng);
    const Matrix pred = oracle::transform_rows(gt, oracle::random_rotation(rng), 0.5 + t * 0.1, {5, -7, 11});
    CHECK(hoif::pa_mpjpe(pred, gt) < 1e-9);
  }
  const Matrix gt = random_pose(rng);
  CHECK(hoif::pa_mpjpe(gt * 0.5, gt) < 1e-9);
  CHECK_THROWS(hoif::pa_mpjpe(Matrix(2, 3), Matrix(2, 3)));
}

TEST_CASE("pa_mpjpe never beats the best alignment and is similarity invariant in pred") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 20.0);
  for (int t = 0; t < 200; ++t) {
    const Matrix gt = random_pose(rng);
    Matrix pred = gt;
    for (double& v : pred.data()) v += noise(rng);
    const Matrix gt_rel = offset_joints(gt, {-gt(0, 0), -gt(0, 1), -gt(0, 2)}, true);
    const Matrix pr_rel = offset_joints(pred, {-pred(0, 0), -pred(0, 1), -pred(0, 2)}, true);
    const double pa = hoif::pa_mpjpe(pr_rel, gt_rel);
    // the fitted alignment's squared error is no worse than the identity alignment's
    const auto fit = hoif::kabsch_align(pr_rel, gt_rel, true);
    const Matrix aligned = fit.apply(pr_rel);
    double sse_fit = 0.0, sse_id = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      sse_fit += std::pow(aligned.data()[i] - gt_rel.data()[i], 2);
      sse_id += std::pow(pr_rel.data()[i] - gt_rel.data()[i], 2);
    }
    CHECK(sse_fit <= sse_id + 1e-9);
    const Matrix moved = oracle::transform_rows(pr_rel, oracle::random_rotation(rng), 1.7, {30, 0, -9});
    CHECK(hoif::pa_mpjpe(moved, gt_rel) == doctest::Approx(pa).epsilon(1e-9));
  }
}

TEST_CASE("pck and auc hand cases") {
  std::mt19937_64 rng(5);
  std::vector<Matrix> gts, perfect, off100, off200;
  for (int t = 0; t < 5; ++t) {
    gts.push_back(integer_pose(rng));
    perfect.push_back(gts.back());
    off100.push_back(offset_joints(gts.back(), {60, 80, 0}, false));
    off200.push_back(offset_joints(gts.back(), {0, 0, 200}, false));
  }
  const auto p = hoif::pck_auc(perfect, gts, 0);
  CHECK(p.pck == 1.0);
  CHECK(p.auc == 1.0);
  CHECK(hoif::pck_auc(off200, gts, 0).pck == 0.0);
  const auto h = hoif::pck_auc(off100, gts, 0);
  CHECK(h.pck == 1.0);
  CHECK(h.auc == 11.0 / 31.0);
  CHECK_THROWS(hoif::pck_auc({}, {}, 0));
  CHECK(hoif::PckGrid{}.thresholds().size() == 31);
}

TEST_CASE("pck is monotone in the threshold") {
  std::mt19937_64 rng(6);
  std::vector<Matrix> gts, preds;
  for (int t = 0; t < 10; ++t) {
    gts.push_back(random_pose(rng));
    preds.push_back(gts.back() + oracle::random_matrix(17, 3, rng, -120, 120));
  }
  double prev = -1.0;
  for (double th = 0.0; th <= 300.0; th += 10.0) {
    hoif::PckGrid grid;
    grid.threshold = th;
    const double pck = hoif::pck_auc(preds, gts, 0, grid).pck;
    CHECK(pck >= prev);
    prev = pck;
  }
}

TEST_CASE("evaluate and report serialization") {
  std::mt19937_64 rng(7);
  std::vector<Matrix> gts, preds;
  for (int t = 0; t < 4; ++t) {
    gts.push_back(random_pose(rng));
    preds.push_back(gts.back() + oracle::random_matrix(17, 3, rng, -30, 30));
  }
  const auto rep = hoif::evaluate(preds, gts, 0);
  REQUIRE(rep.mpjpe_mm.has_value());
  REQUIRE(rep.pa_mpjpe_mm.has_value());
  CHECK(*rep.pa_mpjpe_mm <= *rep.mpjpe_mm + 1e-9);
  CHECK(rep.per_sample.size() == 4);
  const auto j = nlohmann::json::parse(rep.to_json_text(true));
  CHECK(j.contains("mpjpe_mm"));
  CHECK(j.contains("pck150"));
  CHECK(j.contains("auc"));
  CHECK(j["per_sample"].size() == 4);

  hoif::EvalOptions p1;
  p1.protocol2 = false;
  const auto only1 = nlohmann::json::parse(hoif::evaluate(preds, gts, 0, p1).to_json_text(false));
  CHECK_FALSE(only1.contains("pa_mpjpe_mm"));
  CHECK(hoif::EvalReport::csv_header() == "label,num_samples,mpjpe_mm,pa_mpjpe_mm,pck150,auc");
  CHECK(rep.csv_row("x").rfind("x,4,", 0) == 0);
}
