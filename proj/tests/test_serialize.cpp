#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hoif/serialize.hpp"

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "hoif_test_serialize";
  fs::create_directories(dir);
  return dir;
}

hoif::Checkpoint sample_checkpoint() {
  hoif::Checkpoint ck;
  ck.model.num_layers = 3;
  ck.model.hidden_width = 12;
  ck.train.epochs = 2;
  ck.seed = 42;
  ck.step = 17;
  ck.epoch = 2;
  ck.history = {{1, 3.0, 200.0, 150.0, 0.001}, {2, 2.5, 190.0, 140.0, 0.001}};
  const auto g = hoif::default_human36m_skeleton();
  const auto ds = hoif::synth_generate(g, {}, 10, 0.0, 1);
  const std::vector<std::size_t> idx = {0, 1, 2, 3, 4, 5};
  ck.stats = hoif::compute_stats(ds, idx);
  ck.skeleton_json = g.to_json_text();
  ck.params = hoif::params_init(ck.model, 9);
  ck.params.layers[0].bn_running_var(0, 3) = 0.123456789012345678;
  return ck;
}

bool same_params(const hoif::NetworkParams& a, const hoif::NetworkParams& b) {
  const auto ta = hoif::tensors(a), tb = hoif::tensors(b);
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i)
    if (!(*ta[i].tensor == *tb[i].tensor)) return false;
  return true;
}

}  // namespace

TEST_CASE("config json round trip and unknown keys") {
  hoif::NetworkConfig m;
  m.alpha = 0.13;
  m.layer_kind = hoif::LayerKind::ifnet;
  hoif::NetworkConfig back;
  hoif::merge_json(back, hoif::to_json(m));
  CHECK(back == m);
  CHECK_THROWS(hoif::merge_json(back, hoif::Json{{"alpah", 0.3}}));

  hoif::TrainConfig t;
  t.decay_every_steps = 123;
  hoif::TrainConfig tb;
  hoif::merge_json(tb, hoif::to_json(t));
  CHECK(tb == t);

  hoif::CameraModel c;
  c.focal = 1234.5;
  hoif::CameraModel cb;
  hoif::merge_json(cb, hoif::to_json(c));
  CHECK(cb.focal == 1234.5);
}

TEST_CASE("diff_fields names the differing fields") {
  hoif::NetworkConfig a, b;
  CHECK(hoif::diff_fields(a, b).empty());
  b.hops = 2;
  b.beta = 0.7;
  const auto d = hoif::diff_fields(a, b);
  REQUIRE(d.size() == 2);
  CHECK(d[0] == "hops");
  CHECK(d[1] == "beta");
}

TEST_CASE("checkpoint round trip is exact") {
  const auto ck = sample_checkpoint();
  const auto stem = (scratch_dir() / "ck").string();
  hoif::save_checkpoint(ck, stem);
  // learnable scalars plus running mean/var of the two batch-normalized layers
  CHECK(fs::file_size(stem + ".bin") == 8 * (hoif::params_count(ck.params) + 2 * 2 * 12));
  const auto back = hoif::load_checkpoint(stem + ".json");
  CHECK(back.model == ck.model);
  CHECK(back.train == ck.train);
  CHECK(back.seed == 42);
  CHECK(back.step == 17);
  CHECK(back.epoch == 2);
  CHECK(back.history.size() == 2);
  CHECK(back.history[1].eval_pa_mpjpe == 140.0);
  CHECK(back.stats == ck.stats);
  CHECK(hoif::SkeletonGraph::from_json_text(back.skeleton_json) ==
        hoif::SkeletonGraph::from_json_text(ck.skeleton_json));
  CHECK(same_params(back.params, ck.params));
}

TEST_CASE("saving twice produces identical bytes") {
  const auto ck = sample_checkpoint();
  const auto a = (scratch_dir() / "a").string(), b = (scratch_dir() / "b").string();
  hoif::save_checkpoint(ck, a);
  hoif::save_checkpoint(ck, b);
  CHECK(hoif::read_text_file(a + ".bin") == hoif::read_text_file(b + ".bin"));
  auto ja = hoif::Json::parse(hoif::read_text_file(a + ".json"));
  auto jb = hoif::Json::parse(hoif::read_text_file(b + ".json"));
  ja.erase("blob");
  jb.erase("blob");
  CHECK(ja == jb);
}

TEST_CASE("tampered blobs and manifests are rejected") {
  const auto ck = sample_checkpoint();
  const auto stem = (scratch_dir() / "tamper").string();
  hoif::save_checkpoint(ck, stem);
  {
    std::ofstream out(stem + ".bin", std::ios::app | std::ios::binary);
    out << "x";
  }
  try {
    hoif::load_checkpoint(stem + ".json");
    FAIL("expected CheckpointError");
  } catch (const hoif::CheckpointError& e) {
    CHECK(std::string(e.what()).find("integrity") != std::string::npos);
  }

  hoif::save_checkpoint(ck, stem);
  auto j = hoif::Json::parse(hoif::read_text_file(stem + ".json"));
  j["config"]["model"]["hidden_width"] = 24;
  hoif::write_text_file(stem + ".json", j.dump(2));
  CHECK_THROWS_AS(hoif::load_checkpoint(stem + ".json"), hoif::CheckpointError);

  CHECK_THROWS(hoif::load_checkpoint((scratch_dir() / "nope.json").string()));
}
