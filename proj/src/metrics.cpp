#include "hoif/metrics.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

namespace hoif {

namespace {

void check_pair(const Matrix& pred, const Matrix& gt, const char* who) {
  if (!pred.same_shape(gt) || pred.cols() != 3 || pred.rows() == 0) {
    throw DimensionError(std::string(who) + ": prediction " + pred.shape_string() + " vs ground truth " +
                         gt.shape_string());
  }
}

double joint_distance(const Matrix& a, const Matrix& b, std::size_t j) {
  double d2 = 0.0;
  for (std::size_t c = 0; c < 3; ++c) d2 += (a(j, c) - b(j, c)) * (a(j, c) - b(j, c));
  return std::sqrt(d2);
}

double mean_distance(const Matrix& a, const Matrix& b) {
  double total = 0.0;
  for (std::size_t j = 0; j < a.rows(); ++j) total += joint_distance(a, b, j);
  return total / static_cast<double>(a.rows());
}

Matrix subtract_root(const Matrix& m, std::size_t root) {
  Matrix out = m;
  for (std::size_t j = 0; j < m.rows(); ++j)
    for (std::size_t c = 0; c < 3; ++c) out(j, c) -= m(root, c);
  return out;
}

}  // namespace

double mpjpe(const Matrix& pred, const Matrix& gt, std::size_t root) {
  check_pair(pred, gt, "mpjpe");
  if (root >= pred.rows()) throw DimensionError("mpjpe: root index out of range");
  return mean_distance(subtract_root(pred, root), subtract_root(gt, root));
}

double pa_mpjpe(const Matrix& pred, const Matrix& gt, bool with_scale) {
  check_pair(pred, gt, "pa_mpjpe");
  const auto tf = kabsch_align(pred, gt, with_scale);
  return mean_distance(tf.apply(pred), gt);
}

std::vector<double> PckGrid::thresholds() const {
  if (!(grid_step > 0.0) || !(grid_max >= 0.0)) throw std::invalid_argument("PckGrid: invalid grid");
  std::vector<double> out;
  const auto steps = static_cast<std::size_t>(std::floor(grid_max / grid_step + 1e-9));
  for (std::size_t i = 0; i <= steps; ++i) out.push_back(grid_step * static_cast<double>(i));
  return out;
}

PckResult pck_auc(const std::vector<Matrix>& preds, const std::vector<Matrix>& gts, std::size_t root,
                  const PckGrid& grid) {
  if (preds.empty()) throw std::invalid_argument("pck_auc: empty prediction set");
  if (preds.size() != gts.size()) throw DimensionError("pck_auc: prediction and ground-truth counts differ");
  std::vector<double> distances;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    check_pair(preds[i], gts[i], "pck_auc");
    if (root >= preds[i].rows()) throw DimensionError("pck_auc: root index out of range");
    const Matrix p = subtract_root(preds[i], root), g = subtract_root(gts[i], root);
    for (std::size_t j = 0; j < p.rows(); ++j)
      if (j != root) distances.push_back(joint_distance(p, g, j));
  }
  if (distances.empty()) throw std::invalid_argument("pck_auc: poses have no non-root joints");
  auto fraction_within = [&](double t) {
    std::size_t hits = 0;
    for (double d : distances) hits += d <= t ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(distances.size());
  };
  PckResult r;
  r.pck = fraction_within(grid.threshold);
  const auto ts = grid.thresholds();
  for (double t : ts) r.auc += fraction_within(t);
  r.auc /= static_cast<double>(ts.size());
  return r;
}

EvalReport evaluate(const std::vector<Matrix>& preds, const std::vector<Matrix>& gts, std::size_t root,
                    const EvalOptions& options) {
  if (preds.empty()) throw std::invalid_argument("evaluate: empty prediction set");
  if (preds.size() != gts.size()) throw DimensionError("evaluate: prediction and ground-truth counts differ");
  EvalReport rep;
  rep.num_samples = preds.size();
  rep.grid = options.pck;
  rep.pa_with_scale = options.pa_with_scale;
  double sum1 = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    SampleMetrics m;
    m.mpjpe_mm = mpjpe(preds[i], gts[i], root);
    sum1 += m.mpjpe_mm;
    if (options.protocol2) {
      m.pa_mpjpe_mm = pa_mpjpe(preds[i], gts[i], options.pa_with_scale);
      sum2 += *m.pa_mpjpe_mm;
    }
    rep.per_sample.push_back(m);
  }
  const double count = static_cast<double>(preds.size());
  if (options.protocol1) rep.mpjpe_mm = sum1 / count;
  if (options.protocol2) rep.pa_mpjpe_mm = sum2 / count;
  const auto pck = pck_auc(preds, gts, root, options.pck);
  rep.pck150 = pck.pck;
  rep.auc = pck.auc;
  return rep;
}

std::string EvalReport::to_json_text(bool include_per_sample) const {
  nlohmann::ordered_json j;
  j["num_samples"] = num_samples;
  if (mpjpe_mm) j["mpjpe_mm"] = *mpjpe_mm;
  if (pa_mpjpe_mm) {
    j["pa_mpjpe_mm"] = *pa_mpjpe_mm;
    j["pa_with_scale"] = pa_with_scale;
  }
  j["pck150"] = pck150;
  j["auc"] = auc;
  j["pck_threshold_mm"] = grid.threshold;
  j["auc_grid"] = grid.thresholds();
  if (include_per_sample) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : per_sample) {
      nlohmann::ordered_json e;
      if (mpjpe_mm) e["mpjpe_mm"] = s.mpjpe_mm;
      if (s.pa_mpjpe_mm && pa_mpjpe_mm) e["pa_mpjpe_mm"] = *s.pa_mpjpe_mm;
      arr.push_back(e);
    }
    j["per_sample"] = arr;
  }
  return j.dump(2);
}

std::string EvalReport::csv_header() { return "label,num_samples,mpjpe_mm,pa_mpjpe_mm,pck150,auc"; }

std::string EvalReport::csv_row(const std::string& label) const {
  std::ostringstream out;
  out.precision(17);
  out << label << ',' << num_samples << ',';
  if (mpjpe_mm) out << *mpjpe_mm;
  out << ',';
  if (pa_mpjpe_mm) out << *pa_mpjpe_mm;
  out << ',' << pck150 << ',' << auc;
  return out.str();
}

}  // namespace hoif
