#pragma once
// Closed-form linear lifting baselines, fitted by ridge-stabilized least squares
// on the training split in normalized coordinates.
//   per_joint: each joint's 3D from its own 2D (two values plus a bias).
//   full_pose: the whole 3D pose from the whole 2D pose (2N values plus a bias).
// Both are stored as one (2N + 1) x 3N map; per_joint leaves off-block entries zero.

#include <span>
#include <vector>

#include "hoif/data.hpp"
#include "support/oracles.hpp"

namespace oracle {

struct LinearBaseline {
  hoif::Matrix coef;  // (2N + 1) x 3N
};

inline hoif::Matrix pose_row(const hoif::Matrix& normalized2d) {
  hoif::Matrix r(1, normalized2d.size() + 1);
  for (std::size_t i = 0; i < normalized2d.size(); ++i) r(0, i) = normalized2d.data()[i];
  r(0, normalized2d.size()) = 1.0;
  return r;
}

enum class BaselineKind { per_joint, full_pose };

inline LinearBaseline fit_linear_baseline(const hoif::Dataset& raw, const hoif::NormStats& stats,
                                          std::span<const std::size_t> train,
                                          BaselineKind kind = BaselineKind::full_pose, double ridge = 1e-8) {
  const std::size_t n = raw.skeleton.num_joints();
  const std::size_t in = 2 * n + 1, out = 3 * n;
  if (kind == BaselineKind::per_joint) {
    LinearBaseline model{hoif::Matrix(in, out)};
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t rows[3] = {2 * j, 2 * j + 1, 2 * n};
      hoif::Matrix xtx(3, 3), xty(3, 3);
      for (std::size_t idx : train) {
        const hoif::Matrix x = pose_row(hoif::normalize_2d(raw.samples[idx].joints2d, stats));
        const hoif::Matrix y = hoif::normalize_3d(raw.samples[idx].joints3d, stats);
        for (std::size_t a = 0; a < 3; ++a) {
          for (std::size_t b = 0; b < 3; ++b) xtx(a, b) += x(0, rows[a]) * x(0, rows[b]);
          for (std::size_t c = 0; c < 3; ++c) xty(a, c) += x(0, rows[a]) * y(j, c);
        }
      }
      for (std::size_t a = 0; a < 3; ++a) xtx(a, a) += ridge * static_cast<double>(train.size());
      const hoif::Matrix w = naive_matmul(gauss_jordan_inverse(xtx), xty);
      for (std::size_t a = 0; a < 3; ++a)
        for (std::size_t c = 0; c < 3; ++c) model.coef(rows[a], 3 * j + c) = w(a, c);
    }
    return model;
  }
  hoif::Matrix xtx(in, in), xty(in, out);
  for (std::size_t idx : train) {
    const hoif::Matrix x = pose_row(hoif::normalize_2d(raw.samples[idx].joints2d, stats));
    const hoif::Matrix y = hoif::normalize_3d(raw.samples[idx].joints3d, stats);
    for (std::size_t a = 0; a < in; ++a) {
      for (std::size_t b = 0; b < in; ++b) xtx(a, b) += x(0, a) * x(0, b);
      for (std::size_t b = 0; b < out; ++b) xty(a, b) += x(0, a) * y.data()[b];
    }
  }
  for (std::size_t a = 0; a < in; ++a) xtx(a, a) += ridge * static_cast<double>(train.size());
  return {naive_matmul(gauss_jordan_inverse(xtx), xty)};
}

/// Mean root-aligned joint error (mm) of the baseline on the given samples.
inline double linear_baseline_mpjpe(const LinearBaseline& model, const hoif::Dataset& raw,
                                    const hoif::NormStats& stats, std::span<const std::size_t> indices) {
  const std::size_t n = raw.skeleton.num_joints();
  double total = 0.0;
  for (std::size_t idx : indices) {
    const hoif::Matrix y = naive_matmul(pose_row(hoif::normalize_2d(raw.samples[idx].joints2d, stats)), model.coef);
    hoif::Matrix pose(n, 3);
    for (std::size_t i = 0; i < 3 * n; ++i) pose.data()[i] = y(0, i);
    const hoif::Matrix mm = hoif::denormalize_3d(pose, stats);
    total += root_aligned_mean_distance(mm, raw.samples[idx].joints3d, raw.skeleton.root());
  }
  return total / static_cast<double>(indices.size());
}

}  // namespace oracle
