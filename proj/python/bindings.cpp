#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numeric>
#include <sstream>

#include "hoif/cli.hpp"
#include "hoif/fairing.hpp"
#include "hoif/metrics.hpp"
#include "hoif/serialize.hpp"
#include "hoif/train.hpp"

namespace py = pybind11;
using hoif::Matrix;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw hoif::DimensionError("expected a 2-D array");
  const auto* p = a.data();
  return Matrix(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                std::vector<double>(p, p + a.size()));
}

Array to_array(const Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

/// (B, N, C) array -> B matrices of N x C.
std::vector<Matrix> to_stack(const Array& a, std::size_t cols) {
  if (a.ndim() != 3 || static_cast<std::size_t>(a.shape(2)) != cols)
    throw hoif::DimensionError("expected an array of shape (B, N, " + std::to_string(cols) + ")");
  const std::size_t b = static_cast<std::size_t>(a.shape(0)), n = static_cast<std::size_t>(a.shape(1));
  std::vector<Matrix> out;
  out.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    const double* p = a.data() + i * n * cols;
    out.emplace_back(n, cols, std::vector<double>(p, p + n * cols));
  }
  return out;
}

Array from_stack(const std::vector<Matrix>& ms, std::size_t n, std::size_t cols) {
  Array out({ms.size(), n, cols});
  double* p = out.mutable_data();
  for (const auto& m : ms) p = std::copy(m.data().begin(), m.data().end(), p);
  return out;
}

hoif::SkeletonGraph skeleton_from(const std::string& json_text) {
  return json_text.empty() ? hoif::default_human36m_skeleton() : hoif::SkeletonGraph::from_json_text(json_text);
}

hoif::Dataset dataset_from(const hoif::SkeletonGraph& g, const Array& joints2d, const Array* joints3d) {
  const auto in = to_stack(joints2d, 2);
  hoif::Dataset ds{g, {}};
  std::vector<Matrix> out;
  if (joints3d) {
    out = to_stack(*joints3d, 3);
    if (out.size() != in.size()) throw hoif::DimensionError("2D and 3D arrays hold different sample counts");
  }
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i].rows() != g.num_joints()) throw hoif::DimensionError("joint count does not match the skeleton");
    ds.samples.push_back({in[i], joints3d ? out[i] : Matrix(g.num_joints(), 3)});
  }
  return ds;
}

py::list history_list(const std::vector<hoif::EpochRecord>& history) {
  py::list out;
  for (const auto& r : history) {
    py::dict d;
    d["epoch"] = r.epoch;
    d["train_loss"] = r.train_loss;
    d["eval_mpjpe"] = r.eval_mpjpe;
    d["eval_pa_mpjpe"] = r.eval_pa_mpjpe;
    d["lr"] = r.lr;
    out.append(d);
  }
  return out;
}

/// A trained network with its normalization statistics, ready to lift poses.
struct Model {
  hoif::NetworkConfig config;
  hoif::SkeletonGraph skeleton;
  hoif::NormStats stats;
  hoif::NetworkParams params;
  std::vector<hoif::EpochRecord> history;

  Array predict(const Array& joints2d) const {
    const hoif::Network net(config, skeleton);
    const auto ds = dataset_from(skeleton, joints2d, nullptr);
    std::vector<std::size_t> idx(ds.size());
    std::iota(idx.begin(), idx.end(), 0);
    return from_stack(hoif::predict_mm(net, params, ds, stats, idx), skeleton.num_joints(), 3);
  }
};

}  // namespace

PYBIND11_MODULE(_hoifnet, m) {
  m.doc() = "Higher-order implicit fairing networks for 2D-to-3D pose lifting";

  py::register_exception<hoif::DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<hoif::ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<hoif::CheckpointError>(m, "CheckpointError", PyExc_RuntimeError);

  m.def("default_skeleton_json", [] { return hoif::default_human36m_skeleton().to_json_text(); });
  m.def("random_graph_json",
        [](std::size_t n, double extra_edge_prob, unsigned long long seed) {
          return hoif::random_connected_graph(n, extra_edge_prob, seed).to_json_text();
        },
        py::arg("n"), py::arg("extra_edge_prob") = 0.2, py::arg("seed") = 0);

  m.def("operators",
        [](const std::string& skeleton_json, std::size_t hops) {
          const auto ops = hoif::build_operators(skeleton_from(skeleton_json), hops);
          py::dict d;
          d["s"] = to_array(ops.s_norm);
          d["laplacian"] = to_array(ops.laplacian);
          py::list powers;
          for (const auto& p : ops.s_powers) powers.append(to_array(p));
          d["powers"] = powers;
          return d;
        },
        py::arg("skeleton_json") = "", py::arg("hops") = 3);

  m.def("fair",
        [](const Array& signal, double s, const std::string& method, const std::string& skeleton_json, double tol,
           std::size_t max_iter) {
          const auto ops = hoif::build_operators(skeleton_from(skeleton_json), 1);
          const Matrix x = to_matrix(signal);
          if (method == "spectral") return to_array(hoif::fair_spectral(ops, s, x));
          if (method == "direct") return to_array(hoif::fair_direct(ops, s, x));
          if (method == "jacobi")
            return to_array(hoif::fair_jacobi(ops, hoif::FairingConfig::from_s(s, tol, max_iter), x).result);
          throw std::invalid_argument("method must be spectral, direct or jacobi");
        },
        py::arg("signal"), py::arg("s"), py::arg("method") = "direct", py::arg("skeleton_json") = "",
        py::arg("tol") = 1e-10, py::arg("max_iter") = 10000);
  m.def("s_from_alpha", [](double alpha) { return hoif::FairingConfig::from_alpha(alpha).s(); });

  m.def("synth",
        [](std::size_t n, std::uint64_t seed, double noise, const std::string& skeleton_json) {
          const auto ds = hoif::synth_generate(skeleton_from(skeleton_json), {}, n, noise, seed);
          std::vector<Matrix> a, b;
          for (const auto& s : ds.samples) {
            a.push_back(s.joints2d);
            b.push_back(s.joints3d);
          }
          const std::size_t joints = ds.skeleton.num_joints();
          return py::make_tuple(from_stack(a, joints, 2), from_stack(b, joints, 3));
        },
        py::arg("n"), py::arg("seed") = 0, py::arg("noise") = 0.0, py::arg("skeleton_json") = "");

  m.def("mpjpe", [](const Array& pred, const Array& gt, std::size_t root) {
    return hoif::mpjpe(to_matrix(pred), to_matrix(gt), root);
  }, py::arg("pred"), py::arg("gt"), py::arg("root") = 0);
  m.def("pa_mpjpe", [](const Array& pred, const Array& gt, bool with_scale) {
    return hoif::pa_mpjpe(to_matrix(pred), to_matrix(gt), with_scale);
  }, py::arg("pred"), py::arg("gt"), py::arg("with_scale") = true);
  m.def("pck_auc", [](const Array& preds, const Array& gts, std::size_t root, double threshold) {
    hoif::PckGrid grid;
    grid.threshold = threshold;
    const auto r = hoif::pck_auc(to_stack(preds, 3), to_stack(gts, 3), root, grid);
    return py::make_tuple(r.pck, r.auc);
  }, py::arg("preds"), py::arg("gts"), py::arg("root") = 0, py::arg("threshold") = 150.0);

  py::class_<Model>(m, "Model")
      .def("predict", &Model::predict, py::arg("joints2d"), "Root-relative 3D poses (mm) for (B, N, 2) inputs.")
      .def_property_readonly("config_json", [](const Model& md) { return hoif::to_json(md.config).dump(); })
      .def_property_readonly("params_count", [](const Model& md) { return hoif::params_count(md.params); })
      .def_property_readonly("history", [](const Model& md) { return history_list(md.history); });

  m.def("load_model", [](const std::string& manifest_path) {
    auto ck = hoif::load_checkpoint(manifest_path);
    return Model{ck.model, hoif::SkeletonGraph::from_json_text(ck.skeleton_json), ck.stats, std::move(ck.params),
                 ck.history};
  }, py::arg("manifest_path"));

  m.def("train",
        [](const Array& joints2d, const Array& joints3d, const std::string& model_json, const std::string& train_json,
           const std::string& skeleton_json) {
          hoif::NetworkConfig mc;
          hoif::TrainConfig tc;
          if (!model_json.empty()) hoif::merge_json(mc, hoif::Json::parse(model_json));
          if (!train_json.empty()) hoif::merge_json(tc, hoif::Json::parse(train_json));
          const auto g = skeleton_from(skeleton_json);
          const auto ds = dataset_from(g, joints2d, &joints3d);
          hoif::TrainResult res;
          {
            py::gil_scoped_release release;
            res = hoif::train(mc, tc, ds);
          }
          py::dict out;
          out["initial_mpjpe"] = res.initial_eval.mpjpe_mm.value_or(0.0);
          out["history"] = history_list(res.history);
          out["best_epoch"] = res.best_epoch;
          out["model"] = Model{mc, g, res.stats, res.final_params, res.history};
          return out;
        },
        py::arg("joints2d"), py::arg("joints3d"), py::arg("model_json") = "", py::arg("train_json") = "",
        py::arg("skeleton_json") = "");

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = hoif::run_cli(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs a hoifnet subcommand in-process; returns (exit_code, stdout, stderr).");
}
