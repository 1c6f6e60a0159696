#include "hoif/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <future>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "hoif/data.hpp"
#include "hoif/fairing.hpp"
#include "hoif/metrics.hpp"
#include "hoif/serialize.hpp"
#include "hoif/svg.hpp"
#include "hoif/train.hpp"

namespace hoif {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Loads a JSON config; a run manifest is accepted too (its "config" object is used).
Json load_config_file(const std::string& path) {
  Json j = Json::parse(read_text_file(path));
  if (j.contains("config") && j.at("config").is_object()) j = j.at("config");
  return j;
}

struct ModelFlags {
  std::optional<std::size_t> layers, width, hops;
  std::optional<double> alpha, beta;
  std::optional<std::string> layer_kind;
  bool no_batchnorm = false;

  void add(CLI::App* app) {
    app->add_option("--layers", layers, "Number of graph layers")->check(CLI::PositiveNumber);
    app->add_option("--width", width, "Hidden width F")->check(CLI::PositiveNumber);
    app->add_option("--hops", hops, "Hop count K")->check(CLI::PositiveNumber);
    app->add_option("--alpha", alpha, "Initial-residual weight alpha");
    app->add_option("--beta", beta, "Weight scale parameter beta");
    app->add_option("--layer-kind", layer_kind, "gcn_baseline | ifnet | hoifnet");
    app->add_flag("--no-batchnorm", no_batchnorm, "Disable batch normalization");
  }

  bool any() const { return layers || width || hops || alpha || beta || layer_kind || no_batchnorm; }

  void apply(NetworkConfig& c) const {
    if (layers) c.num_layers = *layers;
    if (width) c.hidden_width = *width;
    if (hops) c.hops = *hops;
    if (alpha) c.alpha = *alpha;
    if (beta) c.beta = *beta;
    if (layer_kind) c.layer_kind = parse_layer_kind(*layer_kind);
    if (no_batchnorm) c.use_batchnorm = false;
  }
};

struct TrainFlags {
  std::optional<std::size_t> epochs, batch_size, decay_every, checkpoint_every;
  std::optional<double> lr, decay_factor, eval_fraction;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);
    app->add_option("--batch-size", batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--decay-factor", decay_factor, "Learning-rate decay factor");
    app->add_option("--decay-every", decay_every, "Steps between learning-rate decays")->check(CLI::PositiveNumber);
    app->add_option("--checkpoint-every", checkpoint_every, "Epochs between periodic checkpoints (0 = off)");
    app->add_option("--eval-fraction", eval_fraction, "Fraction of samples held out for evaluation");
    app->add_option("--seed", seed, "Random seed");
  }

  void apply(TrainConfig& c) const {
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (lr) c.lr = *lr;
    if (decay_factor) c.decay_factor = *decay_factor;
    if (decay_every) c.decay_every_steps = *decay_every;
    if (checkpoint_every) c.checkpoint_every = *checkpoint_every;
    if (eval_fraction) c.eval_fraction = *eval_fraction;
    if (seed) c.seed = *seed;
  }
};

SkeletonGraph resolve_skeleton(const std::optional<std::string>& skeleton_path, const std::string& data_dir) {
  if (skeleton_path) return SkeletonGraph::load_json(*skeleton_path);
  if (!data_dir.empty() && fs::exists(fs::path(data_dir) / "skeleton.json")) {
    return SkeletonGraph::load_json((fs::path(data_dir) / "skeleton.json").string());
  }
  return default_human36m_skeleton();
}

struct DataLocation {
  std::string csv;
  std::string dir;
};

DataLocation resolve_data(const std::string& data) {
  if (fs::is_directory(data)) return {(fs::path(data) / "poses.csv").string(), data};
  return {data, fs::path(data).parent_path().string()};
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory '" + dir + "'");
}

Json base_manifest(const std::string& command) {
  Json m;
  m["tool"] = "hoifnet";
  m["version"] = kToolVersion;
  m["command"] = command;
  return m;
}

// ---------------------------------------------------------------- gen

struct GenOptions {
  std::string out;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise, focal, subject_distance, eval_fraction;
  std::optional<std::string> skeleton, config;
};

int cmd_gen(const GenOptions& o, std::ostream& out) {
  std::size_t n = 2000;
  std::uint64_t seed = 0;
  double noise = 0.0, eval_fraction = 0.2;
  CameraModel camera;
  std::optional<std::string> skeleton_path = o.skeleton;
  if (o.config) {
    const Json cfg = load_config_file(*o.config);
    const Json data = cfg.contains("data") ? cfg.at("data") : cfg;
    for (auto it = data.begin(); it != data.end(); ++it) {
      const auto& k = it.key();
      if (k == "n") n = it.value().get<std::size_t>();
      else if (k == "seed") seed = it.value().get<std::uint64_t>();
      else if (k == "noise") noise = it.value().get<double>();
      else if (k == "eval_fraction") eval_fraction = it.value().get<double>();
      else if (k == "camera") merge_json(camera, it.value());
      else if (k == "skeleton") {
        if (!skeleton_path) skeleton_path = it.value().get<std::string>();
      } else throw UsageError("unknown data config key '" + k + "'");
    }
  }
  if (o.n) n = *o.n;
  if (o.seed) seed = *o.seed;
  if (o.noise) noise = *o.noise;
  if (o.eval_fraction) eval_fraction = *o.eval_fraction;
  if (o.focal) camera.focal = *o.focal;
  if (o.subject_distance) camera.subject_distance = *o.subject_distance;
  if (n < 1) throw UsageError("--n must be at least 1");
  if (noise < 0.0) throw UsageError("--noise must be >= 0");

  const SkeletonGraph skeleton = resolve_skeleton(skeleton_path, "");
  const Dataset ds = synth_generate(skeleton, camera, n, noise, seed);
  ensure_dir(o.out);
  const fs::path dir(o.out);
  save_poses(ds, (dir / "poses.csv").string());
  write_text_file((dir / "skeleton.json").string(), skeleton.to_json_text() + "\n");
  const auto split = split_indices(n, eval_fraction, seed);
  const NormStats stats = compute_stats(ds, split.train.empty() ? split.eval : split.train);
  write_text_file((dir / "stats.json").string(), stats_to_json_text(stats) + "\n");

  Json m = base_manifest("gen");
  Json data;
  data["n"] = n;
  data["seed"] = seed;
  data["noise"] = noise;
  data["eval_fraction"] = eval_fraction;
  data["camera"] = to_json(camera);
  if (skeleton_path) data["skeleton"] = *skeleton_path;
  m["config"] = {{"data", data}};
  m["seed"] = seed;
  m["artifacts"] = {"poses.csv", "skeleton.json", "stats.json"};
  write_text_file((dir / "manifest.json").string(), m.dump(2) + "\n");
  out << "wrote " << n << " samples to " << (dir / "poses.csv").string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct RunConfig {
  NetworkConfig model;
  TrainConfig train;
  std::string data;
  std::optional<std::string> skeleton;
};

RunConfig resolve_run_config(const std::optional<std::string>& config_path, const ModelFlags& mf, const TrainFlags& tf,
                             const std::optional<std::string>& data, const std::optional<std::string>& skeleton) {
  RunConfig rc;
  if (config_path) {
    const Json cfg = load_config_file(*config_path);
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
      if (it.key() == "model") merge_json(rc.model, it.value());
      else if (it.key() == "train") merge_json(rc.train, it.value());
      else if (it.key() == "data") {
        const Json& d = it.value();
        if (d.contains("path")) rc.data = d.at("path").get<std::string>();
        if (d.contains("skeleton")) rc.skeleton = d.at("skeleton").get<std::string>();
      } else if (it.key() != "sweep") {
        throw UsageError("unknown config section '" + it.key() + "'");
      }
    }
  }
  mf.apply(rc.model);
  tf.apply(rc.train);
  if (data) rc.data = *data;
  if (skeleton) rc.skeleton = *skeleton;
  if (rc.data.empty()) throw UsageError("--data is required (flag or config data.path)");
  try {
    rc.model.validate();
    rc.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return rc;
}

Json run_config_json(const RunConfig& rc) {
  Json data;
  data["path"] = rc.data;
  if (rc.skeleton) data["skeleton"] = *rc.skeleton;
  return {{"model", to_json(rc.model)}, {"train", to_json(rc.train)}, {"data", data}};
}

Dataset load_dataset(const RunConfig& rc) {
  const auto loc = resolve_data(rc.data);
  const SkeletonGraph skeleton = resolve_skeleton(rc.skeleton, loc.dir);
  return load_poses(loc.csv, skeleton);
}

Checkpoint make_checkpoint(const RunConfig& rc, const TrainResult& res, const NetworkParams& params,
                           std::size_t step, std::size_t epoch, const std::vector<EpochRecord>& history,
                           const SkeletonGraph& skeleton) {
  Checkpoint ck;
  ck.model = rc.model;
  ck.train = rc.train;
  ck.seed = rc.train.seed;
  ck.step = step;
  ck.epoch = epoch;
  ck.history = history;
  ck.stats = res.stats;
  ck.skeleton_json = skeleton.to_json_text();
  ck.params = params;
  return ck;
}

struct TrainOptions {
  ModelFlags model;
  TrainFlags train;
  std::optional<std::string> data, skeleton, config;
  std::string out;
};

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  const RunConfig rc = resolve_run_config(o.config, o.model, o.train, o.data, o.skeleton);
  const Dataset ds = load_dataset(rc);
  ensure_dir(o.out);
  const fs::path dir(o.out);

  std::vector<EpochRecord> so_far;
  TrainResult partial;
  auto on_epoch = [&](const EpochRecord& rec, const NetworkParams& params, const TrainState& state) {
    so_far.push_back(rec);
    out << "epoch " << rec.epoch << "/" << rc.train.epochs << " loss=" << std::setprecision(6) << rec.train_loss
        << " mpjpe=" << rec.eval_mpjpe << " pa_mpjpe=" << rec.eval_pa_mpjpe << " lr=" << rec.lr << "\n";
    if (rc.train.checkpoint_every > 0 && rec.epoch % rc.train.checkpoint_every == 0) {
      partial.stats = compute_stats(ds, split_indices(ds.size(), rc.train.eval_fraction, rc.train.seed).train);
      save_checkpoint(make_checkpoint(rc, partial, params, state.step, rec.epoch, so_far, ds.skeleton),
                      (dir / ("epoch" + std::to_string(rec.epoch))).string());
    }
  };
  TrainResult res = train(rc.model, rc.train, ds, on_epoch);
  for (const auto& w : res.stats.warnings) err << "warning: " << w << "\n";

  save_checkpoint(make_checkpoint(rc, res, res.initial_params, 0, 0, {}, ds.skeleton), (dir / "initial").string());
  save_checkpoint(make_checkpoint(rc, res, res.final_params, res.state.step, rc.train.epochs, res.history, ds.skeleton),
                  (dir / "final").string());
  save_checkpoint(make_checkpoint(rc, res, res.best_params, res.state.step, res.best_epoch, res.history, ds.skeleton),
                  (dir / "best").string());
  write_text_file((dir / "history.csv").string(), history_csv(res.history));

  PlotSpec plot;
  plot.title = "Training curve";
  plot.x_label = "epoch";
  plot.y_label = "value";
  PlotSeries loss{"train loss", {}, {}}, err_mm{"eval MPJPE (mm)", {}, {}};
  for (const auto& r : res.history) {
    loss.x.push_back(static_cast<double>(r.epoch));
    loss.y.push_back(r.train_loss);
    err_mm.x.push_back(static_cast<double>(r.epoch));
    err_mm.y.push_back(r.eval_mpjpe);
  }
  plot.series = {loss, err_mm};
  write_text_file((dir / "loss_curve.svg").string(), line_plot_svg(plot));

  Json m = base_manifest("train");
  m["config"] = run_config_json(rc);
  m["seed"] = rc.train.seed;
  m["initial_eval_mpjpe"] = *res.initial_eval.mpjpe_mm;
  m["params_count"] = params_count(res.final_params);
  m["artifacts"] = {"initial.json", "final.json", "best.json", "history.csv", "loss_curve.svg"};
  write_text_file((dir / "manifest.json").string(), m.dump(2) + "\n");
  out << "params " << params_count(res.final_params) << ", final eval MPJPE " << res.history.back().eval_mpjpe
      << " mm, artifacts in " << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalCliOptions {
  std::string checkpoint;
  std::optional<std::string> data, skeleton, config, out, csv_append, label;
  std::string split = "eval";
  std::string protocol = "all";
  bool no_scale = false;
  ModelFlags model;
};

int cmd_eval(const EvalCliOptions& o, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  NetworkConfig requested = ck.model;
  if (o.config) {
    const Json cfg = load_config_file(*o.config);
    if (cfg.contains("model")) merge_json(requested, cfg.at("model"));
  }
  o.model.apply(requested);
  const auto differing = diff_fields(requested, ck.model);
  if (!differing.empty()) {
    std::string fields;
    for (const auto& f : differing) fields += (fields.empty() ? "" : ", ") + f;
    throw std::runtime_error("configuration does not match checkpoint; differing fields: " + fields);
  }

  std::string data_path = o.data.value_or("");
  if (data_path.empty() && o.config) {
    const Json cfg = load_config_file(*o.config);
    if (cfg.contains("data") && cfg.at("data").contains("path")) data_path = cfg.at("data").at("path");
  }
  if (data_path.empty()) throw UsageError("--data is required");
  const auto loc = resolve_data(data_path);
  const SkeletonGraph ck_skeleton = SkeletonGraph::from_json_text(ck.skeleton_json);
  const SkeletonGraph skeleton = o.skeleton ? SkeletonGraph::load_json(*o.skeleton) : ck_skeleton;
  if (!(skeleton == ck_skeleton)) throw std::runtime_error("skeleton does not match the checkpoint's skeleton");
  const Dataset ds = load_poses(loc.csv, skeleton);

  std::vector<std::size_t> indices;
  const auto split = split_indices(ds.size(), ck.train.eval_fraction, ck.train.seed);
  if (o.split == "eval") indices = split.eval;
  else if (o.split == "train") indices = split.train;
  else if (o.split == "all") {
    indices.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) indices[i] = i;
  } else throw UsageError("--split must be eval, train or all");
  if (indices.empty()) throw std::runtime_error("selected split is empty");

  EvalOptions opts;
  opts.protocol1 = o.protocol == "1" || o.protocol == "all";
  opts.protocol2 = o.protocol == "2" || o.protocol == "all";
  opts.pa_with_scale = !o.no_scale;
  const Network net(ck.model, skeleton);
  const EvalReport rep = evaluate_split(net, ck.params, ds, ck.stats, indices, opts);
  const std::string text = rep.to_json_text(true);
  if (o.out) write_text_file(*o.out, text + "\n");
  if (o.csv_append) {
    const bool fresh = !fs::exists(*o.csv_append) || fs::file_size(*o.csv_append) == 0;
    std::ofstream csv(*o.csv_append, std::ios::app | std::ios::binary);
    if (!csv) throw std::runtime_error("cannot append to '" + *o.csv_append + "'");
    if (fresh) csv << EvalReport::csv_header() << "\n";
    csv << rep.csv_row(o.label.value_or(o.checkpoint)) << "\n";
  }
  out << rep.to_json_text(false) << "\n";
  return 0;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  ModelFlags model;
  TrainFlags train;
  std::optional<std::string> data, skeleton, config;
  std::string axis;
  std::string values;
  std::string out;
  std::size_t jobs = 1;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw UsageError("sweep value '" + s + "' is not a number");
  }
  return v;
}

int cmd_sweep(const SweepOptions& o, std::ostream& out) {
  static const std::vector<std::string> kAxes = {"alpha", "beta", "depth", "hops", "layer_kind"};
  if (std::find(kAxes.begin(), kAxes.end(), o.axis) == kAxes.end()) {
    throw UsageError("--axis must be one of alpha, beta, depth, hops, layer_kind");
  }
  auto values = split_list(o.values);
  if (values.empty()) throw UsageError("--values must list at least one value");
  const bool categorical = o.axis == "layer_kind";
  if (!categorical) {
    std::vector<std::pair<double, std::string>> num;
    for (const auto& v : values) num.emplace_back(parse_double(v), v);
    std::stable_sort(num.begin(), num.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    values.clear();
    for (const auto& [d, s] : num) values.push_back(s);
  }

  const RunConfig base = resolve_run_config(o.config, o.model, o.train, o.data, o.skeleton);
  std::vector<RunConfig> runs;
  for (const auto& v : values) {
    RunConfig rc = base;
    if (o.axis == "alpha") rc.model.alpha = parse_double(v);
    else if (o.axis == "beta") rc.model.beta = parse_double(v);
    else if (o.axis == "depth") {
      const double d = parse_double(v);
      if (d < 2 || d != std::floor(d)) throw UsageError("depth values must be integers >= 2");
      rc.model.num_layers = static_cast<std::size_t>(d);
    } else if (o.axis == "hops") {
      const double k = parse_double(v);
      if (k < 1 || k != std::floor(k)) throw UsageError("hop values must be integers >= 1");
      rc.model.hops = static_cast<std::size_t>(k);
    } else {
      try {
        rc.model.layer_kind = parse_layer_kind(v);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    try {
      rc.model.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError("sweep value '" + v + "': " + e.what());
    }
    runs.push_back(rc);
  }

  const Dataset ds = load_dataset(base);
  ensure_dir(o.out);
  const fs::path dir(o.out);

  auto run_one = [&ds](const RunConfig& rc) {
    const TrainResult res = train(rc.model, rc.train, ds);
    return res.history.back();
  };
  std::vector<EpochRecord> results(runs.size());
  const std::size_t jobs = std::max<std::size_t>(1, o.jobs);
  for (std::size_t start = 0; start < runs.size(); start += jobs) {
    std::vector<std::future<EpochRecord>> wave;
    for (std::size_t i = start; i < std::min(runs.size(), start + jobs); ++i)
      wave.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run_one, std::cref(runs[i])));
    for (std::size_t i = 0; i < wave.size(); ++i) {
      results[start + i] = wave[i].get();
      out << o.axis << "=" << values[start + i] << " mpjpe=" << results[start + i].eval_mpjpe
          << " pa_mpjpe=" << results[start + i].eval_pa_mpjpe << "\n";
    }
  }

  std::ostringstream csv;
  csv.precision(17);
  csv << "axis,value,mpjpe,pa_mpjpe\n";
  for (std::size_t i = 0; i < runs.size(); ++i)
    csv << o.axis << ',' << values[i] << ',' << results[i].eval_mpjpe << ',' << results[i].eval_pa_mpjpe << "\n";
  write_text_file((dir / "sweep.csv").string(), csv.str());

  PlotSpec plot;
  plot.title = "Error vs " + o.axis;
  plot.x_label = o.axis;
  plot.y_label = "error (mm)";
  PlotSeries p1{"MPJPE", {}, {}}, p2{"PA-MPJPE", {}, {}};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const double x = categorical ? static_cast<double>(i) : parse_double(values[i]);
    p1.x.push_back(x);
    p1.y.push_back(results[i].eval_mpjpe);
    p2.x.push_back(x);
    p2.y.push_back(results[i].eval_pa_mpjpe);
  }
  plot.series = {p1, p2};
  if (categorical) plot.x_categories = values;
  write_text_file((dir / "sweep.svg").string(), line_plot_svg(plot));

  Json m = base_manifest("sweep");
  Json cfg = run_config_json(base);
  cfg["sweep"] = {{"axis", o.axis}, {"values", values}};
  m["config"] = cfg;
  m["seed"] = base.train.seed;
  m["artifacts"] = {"sweep.csv", "sweep.svg"};
  write_text_file((dir / "manifest.json").string(), m.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------- fair

struct FairOptions {
  std::optional<std::string> graph;
  std::string signal;
  std::optional<double> s, alpha;
  std::string method = "direct";
  std::string out;
  std::optional<std::string> report;
  double tol = 1e-10;
  std::size_t max_iter = 10000;
};

Matrix load_signal_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    bool numeric = true;
    for (const auto& f : split_list(line)) {
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size() || !std::isfinite(v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": non-numeric signal value");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": ragged signal row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw std::runtime_error("signal file '" + path + "' is empty");
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

std::string matrices_csv(const std::vector<std::pair<std::string, Matrix>>& blocks) {
  std::ostringstream o;
  o.precision(17);
  bool first = true;
  for (const auto& [name, m] : blocks)
    for (std::size_t c = 0; c < m.cols(); ++c) {
      o << (first ? "" : ",") << (name.empty() ? "" : name + "_") << "c" << c;
      first = false;
    }
  o << "\n";
  const std::size_t rows = blocks.front().second.rows();
  for (std::size_t r = 0; r < rows; ++r) {
    first = true;
    for (const auto& [name, m] : blocks)
      for (std::size_t c = 0; c < m.cols(); ++c) {
        o << (first ? "" : ",") << m(r, c);
        first = false;
      }
    o << "\n";
  }
  return o.str();
}

int cmd_fair(const FairOptions& o, std::ostream& out) {
  if (o.s.has_value() == o.alpha.has_value()) throw UsageError("give exactly one of --s or --alpha");
  const FairingConfig cfg = o.s ? FairingConfig::from_s(*o.s, o.tol, o.max_iter)
                                : FairingConfig::from_alpha(*o.alpha, o.tol, o.max_iter);
  const SkeletonGraph g = o.graph ? SkeletonGraph::load_json(*o.graph) : default_human36m_skeleton();
  const Matrix x = load_signal_csv(o.signal);
  const GraphOperators ops = build_operators(g, 1);

  Json report;
  report["s"] = cfg.s();
  report["alpha"] = cfg.alpha();
  report["method"] = o.method;
  std::vector<std::pair<std::string, Matrix>> blocks;
  if (o.method == "spectral") {
    blocks.emplace_back("", fair_spectral(ops, cfg.s(), x));
  } else if (o.method == "direct") {
    blocks.emplace_back("", fair_direct(ops, cfg.s(), x));
  } else if (o.method == "jacobi") {
    const auto jr = fair_jacobi(ops, cfg, x);
    report["iterations"] = jr.iterations;
    report["final_residual"] = jr.final_residual;
    blocks.emplace_back("", jr.result);
  } else if (o.method == "all") {
    const Matrix hs = fair_spectral(ops, cfg.s(), x);
    const Matrix hd = fair_direct(ops, cfg.s(), x);
    const auto jr = fair_jacobi(ops, cfg, x);
    const double dev = std::max({max_abs_diff(hs, hd), max_abs_diff(hs, jr.result), max_abs_diff(hd, jr.result)});
    report["iterations"] = jr.iterations;
    report["final_residual"] = jr.final_residual;
    report["max_pairwise_deviation"] = dev;
    blocks.emplace_back("spectral", hs);
    blocks.emplace_back("direct", hd);
    blocks.emplace_back("jacobi", jr.result);
    out << "max_pairwise_deviation=" << std::setprecision(6) << dev << "\n";
  } else {
    throw UsageError("--method must be spectral, direct, jacobi or all");
  }
  write_text_file(o.out, matrices_csv(blocks));
  if (o.report) write_text_file(*o.report, report.dump(2) + "\n");
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hoifnet: higher-order implicit fairing networks for 2D-to-3D pose lifting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic pose dataset");
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--n", gen.n, "Number of samples");
  gen_cmd->add_option("--seed", gen.seed, "Random seed");
  gen_cmd->add_option("--noise", gen.noise, "2D noise standard deviation (pixels)");
  gen_cmd->add_option("--skeleton", gen.skeleton, "Skeleton JSON (default: 17-joint Human3.6M)");
  gen_cmd->add_option("--focal", gen.focal, "Camera focal length (pixels)");
  gen_cmd->add_option("--subject-distance", gen.subject_distance, "Subject distance from camera (mm)");
  gen_cmd->add_option("--eval-fraction", gen.eval_fraction, "Eval fraction used for the stats file");
  gen_cmd->add_option("--config", gen.config, "JSON config (flags override)");

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train a lifting network");
  tr.model.add(train_cmd);
  tr.train.add(train_cmd);
  train_cmd->add_option("--data", tr.data, "Pose CSV or dataset directory");
  train_cmd->add_option("--skeleton", tr.skeleton, "Skeleton JSON");
  train_cmd->add_option("--config", tr.config, "JSON config or run manifest (flags override)");
  train_cmd->add_option("--out", tr.out, "Output directory")->required();

  EvalCliOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint manifest (.json)")->required();
  eval_cmd->add_option("--data", ev.data, "Pose CSV or dataset directory");
  eval_cmd->add_option("--skeleton", ev.skeleton, "Skeleton JSON");
  eval_cmd->add_option("--config", ev.config, "Config that must agree with the checkpoint");
  eval_cmd->add_option("--split", ev.split, "eval | train | all");
  eval_cmd->add_option("--protocol", ev.protocol, "1 | 2 | all")->check(CLI::IsMember({"1", "2", "all"}));
  eval_cmd->add_flag("--no-scale", ev.no_scale, "Rigid (scale-free) Procrustes alignment");
  eval_cmd->add_option("--out", ev.out, "Write the report JSON here");
  eval_cmd->add_option("--csv-append", ev.csv_append, "Append a one-row CSV summary");
  eval_cmd->add_option("--label", ev.label, "Row label for --csv-append");
  ev.model.add(eval_cmd);

  SweepOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train and evaluate along one hyperparameter axis");
  sw.model.add(sweep_cmd);
  sw.train.add(sweep_cmd);
  sweep_cmd->add_option("--data", sw.data, "Pose CSV or dataset directory");
  sweep_cmd->add_option("--skeleton", sw.skeleton, "Skeleton JSON");
  sweep_cmd->add_option("--config", sw.config, "JSON config (flags override)");
  sweep_cmd->add_option("--axis", sw.axis, "alpha | beta | depth | hops | layer_kind")->required();
  sweep_cmd->add_option("--values", sw.values, "Comma-separated values")->required();
  sweep_cmd->add_option("--out", sw.out, "Output directory")->required();
  sweep_cmd->add_option("--jobs", sw.jobs, "Configurations trained concurrently")->check(CLI::PositiveNumber);

  FairOptions fa;
  auto* fair_cmd = app.add_subcommand("fair", "Implicit fairing of a graph signal");
  fair_cmd->add_option("--graph", fa.graph, "Graph JSON (default: 17-joint skeleton)");
  fair_cmd->add_option("--signal", fa.signal, "Signal CSV, one row per node")->required();
  fair_cmd->add_option("--s", fa.s, "Fairing strength s >= 0");
  fair_cmd->add_option("--alpha", fa.alpha, "Equivalent alpha = 1/(1+s)");
  fair_cmd->add_option("--method", fa.method, "spectral | direct | jacobi | all");
  fair_cmd->add_option("--out", fa.out, "Output CSV")->required();
  fair_cmd->add_option("--report", fa.report, "Optional JSON summary");
  fair_cmd->add_option("--tol", fa.tol, "Jacobi tolerance");
  fair_cmd->add_option("--max-iter", fa.max_iter, "Jacobi iteration cap");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return 2;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen(gen, out);
    if (train_cmd->parsed()) return cmd_train(tr, out, err);
    if (eval_cmd->parsed()) return cmd_eval(ev, out);
    if (sweep_cmd->parsed()) return cmd_sweep(sw, out);
    if (fair_cmd->parsed()) return cmd_fair(fa, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace hoif
