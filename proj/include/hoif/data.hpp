#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hoif/graph.hpp"
#include "hoif/linalg.hpp"

namespace hoif {

struct PoseSample {
  Matrix joints2d;  // N x 2, image plane
  Matrix joints3d;  // N x 3, millimetres, camera frame

  friend bool operator==(const PoseSample&, const PoseSample&) = default;
};

struct Dataset {
  SkeletonGraph skeleton;
  std::vector<PoseSample> samples;

  std::size_t size() const { return samples.size(); }
};

struct CameraModel {
  double focal = 1000.0;
  std::array<double, 2> principal_point{500.0, 500.0};
  double subject_distance = 5000.0;

  /// Pinhole projection of a camera-frame point; z must be positive.
  std::array<double, 2> project(double x, double y, double z) const;
};

struct SynthOptions {
  double joint_angle_limit_deg = 60.0;
  double global_tilt_limit_deg = 20.0;  // pitch and roll; yaw is unrestricted
  std::size_t max_retries = 100;
};

/// Canonical T-pose (N x 3, mm, y pointing down) used by the generator. The
/// 17-joint default skeleton gets a human template; other skeletons get a
/// generic fan-out template with 200 mm bones.
Matrix template_pose(const SkeletonGraph& skeleton);

/// Random posed skeletons seen by a pinhole camera. Bone lengths match the
/// template exactly; noise is added to the 2D projections only.
Dataset synth_generate(const SkeletonGraph& skeleton, const CameraModel& camera, std::size_t n,
                       double noise_std_2d, std::uint64_t seed, const SynthOptions& options = {});

struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> eval;
};

/// Seeded permutation split; eval receives round(n * eval_fraction) samples,
/// at least one of each side when n >= 2.
DataSplit split_indices(std::size_t n, double eval_fraction, std::uint64_t seed);

/// Per-coordinate z-score statistics. 3D statistics are over root-relative poses.
struct NormStats {
  std::size_t num_joints = 0;
  std::size_t root = 0;
  std::vector<double> mean2d, std2d;  // N*2, row-major joint/coordinate
  std::vector<double> mean3d, std3d;  // N*3
  std::vector<std::string> warnings;

  friend bool operator==(const NormStats& a, const NormStats& b) {
    return a.num_joints == b.num_joints && a.root == b.root && a.mean2d == b.mean2d && a.std2d == b.std2d &&
           a.mean3d == b.mean3d && a.std3d == b.std3d;
  }
};

constexpr double kStdFloor = 1e-8;

/// Subtracts the root joint from every joint.
Matrix root_relative(const Matrix& joints3d, std::size_t root);

NormStats compute_stats(const Dataset& dataset, std::span<const std::size_t> train_indices);

Matrix normalize_2d(const Matrix& joints2d, const NormStats& stats);
Matrix normalize_3d(const Matrix& joints3d, const NormStats& stats);  // root-relative, then z-scored
Matrix denormalize_2d(const Matrix& normalized, const NormStats& stats);
Matrix denormalize_3d(const Matrix& normalized, const NormStats& stats);

/// Dataset with every sample normalized by `stats`.
Dataset normalize(const Dataset& dataset, const NormStats& stats);

std::string stats_to_json_text(const NormStats& stats);
NormStats stats_from_json_text(const std::string& text);

/// CSV: header `sample_id,<joint>_u,<joint>_v,...,<joint>_x,<joint>_y,<joint>_z`,
/// then one sample per row.
void save_poses(const Dataset& dataset, const std::string& path);
Dataset load_poses(const std::string& path, const SkeletonGraph& skeleton);

/// Thrown for malformed pose files; carries the 1-based line number.
class PoseFileError : public std::runtime_error {
 public:
  PoseFileError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Stacks samples[indices] into a (B*N) x 2 input and a (B*N) x 3 target.
void stack_batch(const Dataset& normalized, std::span<const std::size_t> indices, Matrix& inputs, Matrix& targets);

}  // namespace hoif
