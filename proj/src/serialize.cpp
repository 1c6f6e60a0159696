#include "hoif/serialize.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace hoif {

namespace fs = std::filesystem;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Json to_json(const NetworkConfig& c) {
  Json j;
  j["num_layers"] = c.num_layers;
  j["hidden_width"] = c.hidden_width;
  j["hops"] = c.hops;
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["input_dim"] = c.input_dim;
  j["output_dim"] = c.output_dim;
  j["use_batchnorm"] = c.use_batchnorm;
  j["layer_kind"] = to_string(c.layer_kind);
  j["bn_eps"] = c.bn_eps;
  j["bn_momentum"] = c.bn_momentum;
  return j;
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["decay_factor"] = c.decay_factor;
  j["decay_every_steps"] = c.decay_every_steps;
  j["seed"] = c.seed;
  j["checkpoint_every"] = c.checkpoint_every;
  j["eval_fraction"] = c.eval_fraction;
  j["adam_beta1"] = c.adam_beta1;
  j["adam_beta2"] = c.adam_beta2;
  j["adam_eps"] = c.adam_eps;
  return j;
}

Json to_json(const CameraModel& c) {
  Json j;
  j["focal"] = c.focal;
  j["principal_point"] = c.principal_point;
  j["subject_distance"] = c.subject_distance;
  return j;
}

Json to_json(const NormStats& s) {
  Json j;
  j["num_joints"] = s.num_joints;
  j["root"] = s.root;
  j["mean2d"] = s.mean2d;
  j["std2d"] = s.std2d;
  j["mean3d"] = s.mean3d;
  j["std3d"] = s.std3d;
  return j;
}

Json to_json(const EpochRecord& r) {
  Json j;
  j["epoch"] = r.epoch;
  j["train_loss"] = r.train_loss;
  j["eval_mpjpe"] = r.eval_mpjpe;
  j["eval_pa_mpjpe"] = r.eval_pa_mpjpe;
  j["lr"] = r.lr;
  return j;
}

namespace {

template <typename Handler>
void for_each_key(const Json& j, const char* what, Handler&& handle) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!handle(it.key(), it.value())) {
      throw std::invalid_argument(std::string("unknown ") + what + " config key '" + it.key() + "'");
    }
  }
}

}  // namespace

void merge_json(NetworkConfig& c, const Json& j) {
  for_each_key(j, "model", [&](const std::string& k, const Json& v) {
    if (k == "num_layers") c.num_layers = v.get<std::size_t>();
    else if (k == "hidden_width") c.hidden_width = v.get<std::size_t>();
    else if (k == "hops") c.hops = v.get<std::size_t>();
    else if (k == "alpha") c.alpha = v.get<double>();
    else if (k == "beta") c.beta = v.get<double>();
    else if (k == "input_dim") c.input_dim = v.get<std::size_t>();
    else if (k == "output_dim") c.output_dim = v.get<std::size_t>();
    else if (k == "use_batchnorm") c.use_batchnorm = v.get<bool>();
    else if (k == "layer_kind") c.layer_kind = parse_layer_kind(v.get<std::string>());
    else if (k == "bn_eps") c.bn_eps = v.get<double>();
    else if (k == "bn_momentum") c.bn_momentum = v.get<double>();
    else return false;
    return true;
  });
}

void merge_json(TrainConfig& c, const Json& j) {
  for_each_key(j, "train", [&](const std::string& k, const Json& v) {
    if (k == "epochs") c.epochs = v.get<std::size_t>();
    else if (k == "batch_size") c.batch_size = v.get<std::size_t>();
    else if (k == "lr") c.lr = v.get<double>();
    else if (k == "decay_factor") c.decay_factor = v.get<double>();
    else if (k == "decay_every_steps") c.decay_every_steps = v.get<std::size_t>();
    else if (k == "seed") c.seed = v.get<std::uint64_t>();
    else if (k == "checkpoint_every") c.checkpoint_every = v.get<std::size_t>();
    else if (k == "eval_fraction") c.eval_fraction = v.get<double>();
    else if (k == "adam_beta1") c.adam_beta1 = v.get<double>();
    else if (k == "adam_beta2") c.adam_beta2 = v.get<double>();
    else if (k == "adam_eps") c.adam_eps = v.get<double>();
    else return false;
    return true;
  });
}

void merge_json(CameraModel& c, const Json& j) {
  for_each_key(j, "camera", [&](const std::string& k, const Json& v) {
    if (k == "focal") c.focal = v.get<double>();
    else if (k == "principal_point") c.principal_point = v.get<std::array<double, 2>>();
    else if (k == "subject_distance") c.subject_distance = v.get<double>();
    else return false;
    return true;
  });
}

NormStats stats_from_json(const Json& j) { return stats_from_json_text(j.dump()); }

std::vector<std::string> diff_fields(const NetworkConfig& a, const NetworkConfig& b) {
  std::vector<std::string> out;
  const Json ja = to_json(a), jb = to_json(b);
  for (auto it = ja.begin(); it != ja.end(); ++it)
    if (jb.at(it.key()) != it.value()) out.push_back(it.key());
  return out;
}

namespace {

void write_le_double(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  unsigned char bytes[8];
  std::memcpy(bytes, &bits, 8);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_le_double(const unsigned char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, p, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& stem) {
  const fs::path stem_path(stem);
  const std::string blob_name = stem_path.filename().string() + ".bin";
  const fs::path blob_path = stem_path.parent_path() / blob_name;

  Json manifest;
  manifest["format"] = "hoifnet-checkpoint";
  manifest["version"] = 1;
  manifest["config"] = {{"model", to_json(ckpt.model)}, {"train", to_json(ckpt.train)}};
  manifest["seed"] = ckpt.seed;
  manifest["step"] = ckpt.step;
  manifest["epoch"] = ckpt.epoch;
  Json hist = Json::array();
  for (const auto& r : ckpt.history) hist.push_back(to_json(r));
  manifest["history"] = hist;
  manifest["stats"] = to_json(ckpt.stats);
  manifest["skeleton"] = Json::parse(ckpt.skeleton_json);
  manifest["blob"] = blob_name;
  manifest["dtype"] = "float64-le";

  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw std::runtime_error("cannot write checkpoint blob '" + blob_path.string() + "'");
  Json entries = Json::array();
  std::size_t offset = 0;
  for (const auto& t : tensors(ckpt.params)) {
    const std::size_t bytes = t.tensor->size() * 8;
    entries.push_back({{"name", t.name},
                       {"shape", {t.tensor->rows(), t.tensor->cols()}},
                       {"offset", offset},
                       {"bytes", bytes},
                       {"learnable", t.learnable}});
    for (double v : t.tensor->data()) write_le_double(blob, v);
    offset += bytes;
  }
  if (!blob) throw std::runtime_error("failed writing checkpoint blob '" + blob_path.string() + "'");
  manifest["blob_bytes"] = offset;
  manifest["tensors"] = entries;
  write_text_file(stem_path.string() + ".json", manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::string& manifest_path) {
  Json m;
  try {
    m = Json::parse(read_text_file(manifest_path));
  } catch (const Json::parse_error& e) {
    throw CheckpointError("checkpoint manifest '" + manifest_path + "' is not valid JSON: " + e.what());
  }
  if (m.value("format", "") != "hoifnet-checkpoint") {
    throw CheckpointError("'" + manifest_path + "' is not a hoifnet checkpoint manifest");
  }
  Checkpoint ck;
  merge_json(ck.model, m.at("config").at("model"));
  merge_json(ck.train, m.at("config").at("train"));
  ck.seed = m.at("seed").get<std::uint64_t>();
  ck.step = m.at("step").get<std::size_t>();
  ck.epoch = m.value("epoch", std::size_t{0});
  for (const auto& r : m.at("history")) {
    ck.history.push_back({r.at("epoch").get<std::size_t>(), r.at("train_loss").get<double>(),
                          r.at("eval_mpjpe").get<double>(), r.at("eval_pa_mpjpe").get<double>(),
                          r.at("lr").get<double>()});
  }
  ck.stats = stats_from_json(m.at("stats"));
  ck.skeleton_json = m.at("skeleton").dump();

  const fs::path blob_path = fs::path(manifest_path).parent_path() / m.at("blob").get<std::string>();
  const std::string blob = read_text_file(blob_path.string());
  const auto declared = m.at("blob_bytes").get<std::size_t>();
  if (blob.size() != declared) {
    throw CheckpointError("checkpoint integrity error: blob '" + blob_path.string() + "' has " +
                          std::to_string(blob.size()) + " bytes, manifest declares " + std::to_string(declared));
  }

  ck.params = params_init(ck.model, 0);
  auto views = tensors(ck.params);
  const auto& entries = m.at("tensors");
  if (entries.size() != views.size()) {
    throw CheckpointError("checkpoint integrity error: manifest lists " + std::to_string(entries.size()) +
                          " tensors, configuration implies " + std::to_string(views.size()));
  }
  std::size_t expected_offset = 0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& e = entries[i];
    Matrix& t = *views[i].tensor;
    const auto shape = e.at("shape").get<std::vector<std::size_t>>();
    const auto offset = e.at("offset").get<std::size_t>();
    const auto bytes = e.at("bytes").get<std::size_t>();
    if (e.at("name").get<std::string>() != views[i].name || shape.size() != 2 || shape[0] != t.rows() ||
        shape[1] != t.cols() || offset != expected_offset || bytes != t.size() * 8 || offset + bytes > blob.size()) {
      throw CheckpointError("checkpoint integrity error: tensor entry " + std::to_string(i) + " ('" +
                            e.at("name").get<std::string>() + "') does not match the configuration layout");
    }
    const auto* base = reinterpret_cast<const unsigned char*>(blob.data()) + offset;
    for (std::size_t k = 0; k < t.size(); ++k) t.data()[k] = read_le_double(base + 8 * k);
    expected_offset += bytes;
  }
  if (expected_offset != blob.size()) throw CheckpointError("checkpoint integrity error: trailing bytes in blob");
  for (const auto& v : views) require_finite(*v.tensor, "checkpoint tensor " + v.name);
  return ck;
}

}  // namespace hoif
