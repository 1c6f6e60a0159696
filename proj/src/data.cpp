#include "hoif/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

namespace hoif {

using nlohmann::json;

std::array<double, 2> CameraModel::project(double x, double y, double z) const {
  return {focal * x / z + principal_point[0], focal * y / z + principal_point[1]};
}

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

Vec3 mul(const Mat3& a, const Vec3& v) {
  Vec3 out{};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) out[i] += a[i][k] * v[k];
  return out;
}

Mat3 rot_x(double t) { return {{{1, 0, 0}, {0, std::cos(t), -std::sin(t)}, {0, std::sin(t), std::cos(t)}}}; }
Mat3 rot_y(double t) { return {{{std::cos(t), 0, std::sin(t)}, {0, 1, 0}, {-std::sin(t), 0, std::cos(t)}}}; }
Mat3 rot_z(double t) { return {{{std::cos(t), -std::sin(t), 0}, {std::sin(t), std::cos(t), 0}, {0, 0, 1}}}; }

Mat3 euler(double x, double y, double z) { return mul(rot_z(z), mul(rot_y(y), rot_x(x))); }

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

Matrix template_pose(const SkeletonGraph& skeleton) {
  if (skeleton == default_human36m_skeleton()) {
    return Matrix{{0, 0, 0},         {-130, 0, 0},    {-130, 450, 0},  {-130, 900, 0},  {130, 0, 0},
                  {130, 450, 0},     {130, 900, 0},   {0, -230, 0},    {0, -480, 0},    {0, -580, 0},
                  {0, -700, 0},      {150, -480, 0},  {430, -480, 0},  {680, -480, 0},  {-150, -480, 0},
                  {-430, -480, 0},   {-680, -480, 0}};
  }
  // Children fan out from their parent's direction.
  const std::size_t n = skeleton.num_joints();
  const auto parent = skeleton.bfs_parents();
  std::vector<std::size_t> order;
  std::vector<bool> placed(n, false);
  order.push_back(skeleton.root());
  placed[skeleton.root()] = true;
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!placed[j] && parent[j] == order[i]) {
        placed[j] = true;
        order.push_back(j);
      }
  Matrix pose(n, 3);
  std::vector<std::size_t> child_count(n, 0);
  for (std::size_t i = 1; i < order.size(); ++i) {
    const std::size_t j = order[i], p = parent[j];
    const double angle = 2.0 * std::numbers::pi * 0.37 * static_cast<double>(child_count[p]++) +
                         0.5 * static_cast<double>(j);
    pose(j, 0) = pose(p, 0) + 200.0 * std::cos(angle);
    pose(j, 1) = pose(p, 1) + 200.0 * std::sin(angle);
    pose(j, 2) = pose(p, 2);
  }
  return pose;
}

Dataset synth_generate(const SkeletonGraph& skeleton, const CameraModel& camera, std::size_t n, double noise_std_2d,
                       std::uint64_t seed, const SynthOptions& options) {
  if (n < 1) throw std::invalid_argument("synth_generate: n must be >= 1");
  if (!(camera.focal > 0.0)) throw std::invalid_argument("synth_generate: focal length must be positive");
  if (!(noise_std_2d >= 0.0)) throw std::invalid_argument("synth_generate: noise std must be >= 0");
  const Matrix tmpl = template_pose(skeleton);
  const std::size_t joints = skeleton.num_joints();
  const std::size_t root = skeleton.root();
  double extent = 0.0;
  for (std::size_t j = 0; j < joints; ++j) {
    double d2 = 0.0;
    for (std::size_t c = 0; c < 3; ++c) d2 += std::pow(tmpl(j, c) - tmpl(root, c), 2);
    extent = std::max(extent, std::sqrt(d2));
  }
  if (!(camera.subject_distance > extent)) {
    throw std::invalid_argument("synth_generate: subject distance must exceed the skeleton extent (" +
                                std::to_string(extent) + " mm)");
  }

  // Joints in parent-before-child order.
  const auto parent = skeleton.bfs_parents();
  std::vector<std::size_t> order{root};
  std::vector<bool> seen(joints, false);
  seen[root] = true;
  for (std::size_t i = 0; i < order.size(); ++i)
    for (std::size_t j = 0; j < joints; ++j)
      if (!seen[j] && parent[j] == order[i]) {
        seen[j] = true;
        order.push_back(j);
      }

  std::mt19937_64 rng(seed);
  const double lim = options.joint_angle_limit_deg * kDeg;
  const double tilt = options.global_tilt_limit_deg * kDeg;
  std::uniform_real_distribution<double> joint_angle(-lim, lim);
  std::uniform_real_distribution<double> tilt_angle(-tilt, tilt);
  std::uniform_real_distribution<double> yaw_angle(-std::numbers::pi, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, 1.0);
  // Separate stream, so the 3D poses for a seed do not depend on the noise level.
  std::mt19937_64 noise_rng(seed ^ 0x6e6f697365ULL);

  Dataset out{skeleton, {}};
  out.samples.reserve(n);
  while (out.samples.size() < n) {
    PoseSample sample{Matrix(joints, 2), Matrix(joints, 3)};
    bool ok = false;
    for (std::size_t attempt = 0; attempt <= options.max_retries && !ok; ++attempt) {
      // frame[j] orients the segments leaving joint j. A joint's rotation turns its
      // whole subtree, so segments sharing a parent (pelvis, shoulder girdle) stay rigid.
      std::vector<Mat3> frame(joints);
      // Global rotation: yaw about the vertical (y) axis, small pitch and roll.
      const double pitch = tilt_angle(rng), yaw = yaw_angle(rng), roll = tilt_angle(rng);
      frame[root] = mul(rot_y(yaw), mul(rot_x(pitch), rot_z(roll)));
      for (std::size_t c = 0; c < 3; ++c) sample.joints3d(root, c) = 0.0;
      for (std::size_t i = 1; i < order.size(); ++i) {
        const std::size_t j = order[i], p = parent[j];
        const Vec3 offset{tmpl(j, 0) - tmpl(p, 0), tmpl(j, 1) - tmpl(p, 1), tmpl(j, 2) - tmpl(p, 2)};
        const Vec3 world = mul(frame[p], offset);
        for (std::size_t c = 0; c < 3; ++c) sample.joints3d(j, c) = sample.joints3d(p, c) + world[c];
        const double ax = joint_angle(rng), ay = joint_angle(rng), az = joint_angle(rng);
        frame[j] = mul(frame[p], euler(ax, ay, az));
      }
      for (std::size_t j = 0; j < joints; ++j) sample.joints3d(j, 2) += camera.subject_distance;
      ok = true;
      for (std::size_t j = 0; j < joints; ++j) ok = ok && sample.joints3d(j, 2) > 0.0;
    }
    if (!ok) throw std::runtime_error("synth_generate: could not place a pose in front of the camera");
    for (std::size_t j = 0; j < joints; ++j) {
      const auto uv = camera.project(sample.joints3d(j, 0), sample.joints3d(j, 1), sample.joints3d(j, 2));
      sample.joints2d(j, 0) = uv[0];
      sample.joints2d(j, 1) = uv[1];
    }
    if (noise_std_2d > 0.0)
      for (double& v : sample.joints2d.data()) v += noise_std_2d * noise(noise_rng);
    out.samples.push_back(std::move(sample));
  }
  return out;
}

DataSplit split_indices(std::size_t n, double eval_fraction, std::uint64_t seed) {
  if (!(eval_fraction >= 0.0 && eval_fraction < 1.0)) {
    throw std::invalid_argument("split_indices: eval fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  for (std::size_t i = n; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(perm[i - 1], perm[pick(rng)]);
  }
  std::size_t n_eval = static_cast<std::size_t>(std::llround(static_cast<double>(n) * eval_fraction));
  if (n >= 2 && eval_fraction > 0.0) n_eval = std::clamp<std::size_t>(n_eval, 1, n - 1);
  DataSplit split;
  split.eval.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_eval));
  split.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_eval), perm.end());
  std::sort(split.eval.begin(), split.eval.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

Matrix root_relative(const Matrix& joints3d, std::size_t root) {
  if (joints3d.cols() != 3 || root >= joints3d.rows()) {
    throw DimensionError("root_relative: bad pose " + joints3d.shape_string());
  }
  Matrix out = joints3d;
  for (std::size_t j = 0; j < out.rows(); ++j)
    for (std::size_t c = 0; c < 3; ++c) out(j, c) -= joints3d(root, c);
  return out;
}

NormStats compute_stats(const Dataset& dataset, std::span<const std::size_t> train_indices) {
  if (train_indices.empty()) throw std::invalid_argument("compute_stats: empty training split");
  const std::size_t n = dataset.skeleton.num_joints();
  NormStats st;
  st.num_joints = n;
  st.root = dataset.skeleton.root();
  auto accumulate = [&](std::size_t dims, auto&& get, std::vector<double>& mean, std::vector<double>& sd,
                        const char* what) {
    mean.assign(n * dims, 0.0);
    sd.assign(n * dims, 0.0);
    const double count = static_cast<double>(train_indices.size());
    for (std::size_t idx : train_indices) {
      const Matrix m = get(dataset.samples.at(idx));
      for (std::size_t i = 0; i < n * dims; ++i) mean[i] += m.data()[i];
    }
    for (double& v : mean) v /= count;
    for (std::size_t idx : train_indices) {
      const Matrix m = get(dataset.samples.at(idx));
      for (std::size_t i = 0; i < n * dims; ++i) sd[i] += std::pow(m.data()[i] - mean[i], 2);
    }
    for (std::size_t i = 0; i < n * dims; ++i) {
      sd[i] = std::sqrt(sd[i] / count);
      if (sd[i] < kStdFloor) {
        // A constant root is expected: zero for root-relative 3D, and the synthetic
        // camera keeps the root on the optical axis.
        if (i / dims != st.root) {
          st.warnings.push_back(std::string(what) + " coordinate " + std::to_string(i) +
                                " has zero variance; std floored at 1e-8");
        }
        sd[i] = kStdFloor;
      }
    }
  };
  accumulate(2, [](const PoseSample& s) { return s.joints2d; }, st.mean2d, st.std2d, "2D");
  accumulate(3, [&](const PoseSample& s) { return root_relative(s.joints3d, st.root); }, st.mean3d, st.std3d, "3D");
  return st;
}

namespace {

Matrix zscore(const Matrix& m, const std::vector<double>& mean, const std::vector<double>& sd) {
  if (m.size() != mean.size()) throw DimensionError("normalize: pose " + m.shape_string() + " does not match stats");
  Matrix out = m;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = (m.data()[i] - mean[i]) / sd[i];
  return out;
}

Matrix unscore(const Matrix& m, const std::vector<double>& mean, const std::vector<double>& sd) {
  if (m.size() != mean.size()) throw DimensionError("denormalize: pose " + m.shape_string() + " does not match stats");
  Matrix out = m;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = m.data()[i] * sd[i] + mean[i];
  return out;
}

}  // namespace

Matrix normalize_2d(const Matrix& joints2d, const NormStats& stats) { return zscore(joints2d, stats.mean2d, stats.std2d); }

Matrix normalize_3d(const Matrix& joints3d, const NormStats& stats) {
  return zscore(root_relative(joints3d, stats.root), stats.mean3d, stats.std3d);
}

Matrix denormalize_2d(const Matrix& normalized, const NormStats& stats) {
  return unscore(normalized, stats.mean2d, stats.std2d);
}

Matrix denormalize_3d(const Matrix& normalized, const NormStats& stats) {
  return unscore(normalized, stats.mean3d, stats.std3d);
}

Dataset normalize(const Dataset& dataset, const NormStats& stats) {
  Dataset out{dataset.skeleton, {}};
  out.samples.reserve(dataset.size());
  for (const auto& s : dataset.samples) out.samples.push_back({normalize_2d(s.joints2d, stats), normalize_3d(s.joints3d, stats)});
  return out;
}

std::string stats_to_json_text(const NormStats& stats) {
  json j;
  j["num_joints"] = stats.num_joints;
  j["root"] = stats.root;
  j["mean2d"] = stats.mean2d;
  j["std2d"] = stats.std2d;
  j["mean3d"] = stats.mean3d;
  j["std3d"] = stats.std3d;
  return j.dump(2);
}

NormStats stats_from_json_text(const std::string& text) {
  const json j = json::parse(text);
  NormStats st;
  st.num_joints = j.at("num_joints").get<std::size_t>();
  st.root = j.at("root").get<std::size_t>();
  st.mean2d = j.at("mean2d").get<std::vector<double>>();
  st.std2d = j.at("std2d").get<std::vector<double>>();
  st.mean3d = j.at("mean3d").get<std::vector<double>>();
  st.std3d = j.at("std3d").get<std::vector<double>>();
  if (st.mean2d.size() != 2 * st.num_joints || st.std2d.size() != 2 * st.num_joints ||
      st.mean3d.size() != 3 * st.num_joints || st.std3d.size() != 3 * st.num_joints) {
    throw std::invalid_argument("normalization stats: vector lengths do not match num_joints");
  }
  return st;
}

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

void save_poses(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write pose file '" + path + "'");
  const auto& names = dataset.skeleton.joint_names();
  std::string line = "sample_id";
  for (const auto& name : names) line += "," + name + "_u," + name + "_v";
  for (const auto& name : names) line += "," + name + "_x," + name + "_y," + name + "_z";
  out << line << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& s = dataset.samples[i];
    line = std::to_string(i);
    for (double v : s.joints2d.data()) {
      line += ',';
      append_number(line, v);
    }
    for (double v : s.joints3d.data()) {
      line += ',';
      append_number(line, v);
    }
    out << line << '\n';
  }
  if (!out) throw std::runtime_error("failed writing pose file '" + path + "'");
}

Dataset load_poses(const std::string& path, const SkeletonGraph& skeleton) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open pose file '" + path + "'");
  const std::size_t n = skeleton.num_joints();
  const std::size_t expected = 1 + 5 * n;
  std::string line;
  if (!std::getline(in, line)) throw PoseFileError(path, 1, "missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.empty() || header[0] != "sample_id") throw PoseFileError(path, 1, "header must start with sample_id");
  if (header.size() != expected) {
    throw PoseFileError(path, 1,
                        "header has " + std::to_string(header.size()) + " columns; skeleton with " +
                            std::to_string(n) + " joints needs " + std::to_string(expected) +
                            " (shape mismatch)");
  }
  Dataset ds{skeleton, {}};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != expected) {
      throw PoseFileError(path, line_no,
                          "expected " + std::to_string(expected) + " fields, found " + std::to_string(fields.size()));
    }
    PoseSample s{Matrix(n, 2), Matrix(n, 3)};
    for (std::size_t f = 1; f < fields.size(); ++f) {
      double v = 0.0;
      const auto sv = fields[f];
      const auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v);
      if (res.ec != std::errc() || res.ptr != sv.data() + sv.size() || !std::isfinite(v)) {
        throw PoseFileError(path, line_no, "field " + std::to_string(f + 1) + " is not a finite number");
      }
      if (f <= 2 * n) {
        s.joints2d.data()[f - 1] = v;
      } else {
        s.joints3d.data()[f - 1 - 2 * n] = v;
      }
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void stack_batch(const Dataset& normalized, std::span<const std::size_t> indices, Matrix& inputs, Matrix& targets) {
  const std::size_t n = normalized.skeleton.num_joints();
  inputs = Matrix(indices.size() * n, 2);
  targets = Matrix(indices.size() * n, 3);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& s = normalized.samples.at(indices[b]);
    std::copy(s.joints2d.data().begin(), s.joints2d.data().end(), inputs.data().begin() + static_cast<std::ptrdiff_t>(b * n * 2));
    std::copy(s.joints3d.data().begin(), s.joints3d.data().end(), targets.data().begin() + static_cast<std::ptrdiff_t>(b * n * 3));
  }
}

}  // namespace hoif
