#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hoif/linalg.hpp"

namespace hoif {

/// Protocol #1: mean joint distance after subtracting each pose's root joint.
double mpjpe(const Matrix& pred, const Matrix& gt, std::size_t root);

/// Protocol #2: mean joint distance after least-squares alignment of pred onto gt
/// (similarity when with_scale, rigid otherwise).
double pa_mpjpe(const Matrix& pred, const Matrix& gt, bool with_scale = true);

struct PckGrid {
  double threshold = 150.0;
  double grid_max = 150.0;
  double grid_step = 5.0;

  std::vector<double> thresholds() const;
};

struct PckResult {
  double pck = 0.0;
  double auc = 0.0;
};

/// Fraction of non-root joints (after root alignment) within the threshold, and
/// the mean of that fraction over the threshold grid. A joint counts as correct
/// when its distance is <= the threshold.
PckResult pck_auc(const std::vector<Matrix>& preds, const std::vector<Matrix>& gts, std::size_t root,
                  const PckGrid& grid = {});

struct EvalOptions {
  bool protocol1 = true;
  bool protocol2 = true;
  bool pa_with_scale = true;
  PckGrid pck;
};

struct SampleMetrics {
  double mpjpe_mm = 0.0;
  std::optional<double> pa_mpjpe_mm;
};

struct EvalReport {
  std::size_t num_samples = 0;
  std::optional<double> mpjpe_mm;
  std::optional<double> pa_mpjpe_mm;
  double pck150 = 0.0;
  double auc = 0.0;
  PckGrid grid;
  bool pa_with_scale = true;
  std::vector<SampleMetrics> per_sample;

  std::string to_json_text(bool include_per_sample = true) const;
  static std::string csv_header();
  std::string csv_row(const std::string& label) const;
};

/// Predictions and ground truth in millimetres.
EvalReport evaluate(const std::vector<Matrix>& preds, const std::vector<Matrix>& gts, std::size_t root,
                    const EvalOptions& options = {});

}  // namespace hoif
