#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "hoif/data.hpp"
#include "hoif/graph.hpp"
#include "hoif/model.hpp"
#include "hoif/train.hpp"

namespace hoif {

using Json = nlohmann::ordered_json;

Json to_json(const NetworkConfig& cfg);
Json to_json(const TrainConfig& cfg);
Json to_json(const CameraModel& camera);
Json to_json(const NormStats& stats);
Json to_json(const EpochRecord& rec);

/// Overwrite the fields present in `j`; unknown keys are rejected.
void merge_json(NetworkConfig& cfg, const Json& j);
void merge_json(TrainConfig& cfg, const Json& j);
void merge_json(CameraModel& camera, const Json& j);
NormStats stats_from_json(const Json& j);

/// Field names whose values differ between two configurations.
std::vector<std::string> diff_fields(const NetworkConfig& a, const NetworkConfig& b);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  NetworkConfig model;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::vector<EpochRecord> history;
  NormStats stats;
  std::string skeleton_json;
  NetworkParams params;
};

/// Writes `<stem>.json` (manifest with config, history, per-tensor shapes and byte
/// offsets) and `<stem>.bin` (little-endian float64 tensors in declaration order).
void save_checkpoint(const Checkpoint& ckpt, const std::string& stem);

/// Loads from a manifest path (`<stem>.json`); verifies blob length and layout.
Checkpoint load_checkpoint(const std::string& manifest_path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace hoif
