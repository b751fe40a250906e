// Copyright 2026 The FutureNet-LOF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "futurenet/synth/generator.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "futurenet/scene/dataset.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace fn = futurenet;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path & p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string & tag) {
  const fs::path dir = fs::temp_directory_path() / ("futurenet_synth_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

TEST(Generator, ScenesAreValidAcrossLayoutsAndSeeds) {
  for (const fn::Layout layout :
       {fn::Layout::kStraight, fn::Layout::kCurve, fn::Layout::kTIntersection,
        fn::Layout::kCrossroad}) {
    fn::GenConfig cfg;
    cfg.layout = layout;
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
      const fn::Scene scene = fn::generate_scene(cfg, seed, "case");
      ASSERT_NO_THROW(fn::require_valid(scene));
      const auto na = static_cast<std::int64_t>(scene.agents.size());
      EXPECT_GE(na, cfg.n_agents_min);
      EXPECT_LE(na, cfg.n_agents_max);
      EXPECT_EQ(scene.history_len(), cfg.t_history);
      EXPECT_EQ(scene.future_len(), cfg.t_future);
      EXPECT_EQ(scene.dt, cfg.dt);
      EXPECT_FALSE(scene.polygons.empty());
    }
  }
}

TEST(Generator, SameSeedReproducesTheSceneExactly) {
  fn::GenConfig cfg;
  const fn::Scene a = fn::generate_scene(cfg, 99, "twin");
  const fn::Scene b = fn::generate_scene(cfg, 99, "twin");
  EXPECT_EQ(fn::scene_to_json(a).dump(), fn::scene_to_json(b).dump());
  const fn::Scene c = fn::generate_scene(cfg, 100, "twin");
  EXPECT_NE(fn::scene_to_json(a).dump(), fn::scene_to_json(c).dump());
}

TEST(Generator, DatasetRewritesIdenticalBytes) {
  fn::GenConfig cfg;
  cfg.seed = 7;
  const fs::path dir_a = fresh_dir("bytes_a");
  const fs::path dir_b = fresh_dir("bytes_b");
  const nlohmann::json ma = fn::generate_dataset(cfg, 3, dir_a.string());
  const nlohmann::json mb = fn::generate_dataset(cfg, 3, dir_b.string());
  EXPECT_EQ(ma.dump(), mb.dump());

  EXPECT_EQ(slurp(dir_a / "manifest.json"), slurp(dir_b / "manifest.json"));
  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scene_%06d.json", i);
    const std::string file_a = slurp(dir_a / name);
    EXPECT_FALSE(file_a.empty());
    EXPECT_EQ(file_a, slurp(dir_b / name));
  }
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST(Generator, ManifestDrivesTheSceneOrder) {
  fn::GenConfig cfg;
  cfg.seed = 3;
  const fs::path dir = fresh_dir("order");
  const nlohmann::json manifest = fn::generate_dataset(cfg, 4, dir.string());
  EXPECT_EQ(manifest.at("version").get<int>(), 1);
  EXPECT_EQ(manifest.at("n_scenes").get<std::int64_t>(), 4);
  ASSERT_EQ(manifest.at("scenes").size(), 4u);

  const std::vector<std::string> files = fn::dataset_scene_files(dir.string());
  ASSERT_EQ(files.size(), 4u);
  for (std::size_t i = 0; i < files.size(); ++i) {
    EXPECT_EQ(
      fs::path(files[i]).filename().string(),
      manifest.at("scenes")[i].at("file").get<std::string>());
  }
  EXPECT_EQ(fn::list_scene_files(dir.string()), files);
  fs::remove_all(dir);
}

TEST(Generator, StoredLabelsMatchTheSceneGeometry) {
  fn::GenConfig cfg;
  cfg.seed = 21;
  const fs::path dir = fresh_dir("labels");
  fn::generate_dataset(cfg, 2, dir.string());

  for (const auto & rec : fn::load_dataset(dir.string())) {
    ASSERT_TRUE(rec.labels.has_value());
    EXPECT_EQ(rec.labels->threshold, fn::kLofLabelThreshold);
    EXPECT_EQ(rec.labels->keyframe_steps, (std::vector<std::int64_t>{10, 20, 30}));

    const auto expected = oracle::lof_labels(
      testutil::point_positions(rec.scene), testutil::future_tracks(rec.scene),
      fn::kLofLabelThreshold, {10, 20, 30});
    ASSERT_EQ(rec.labels->values.size(), expected.size());
    for (std::size_t kf = 0; kf < expected.size(); ++kf) {
      EXPECT_EQ(rec.labels->values[kf], expected[kf]);
    }
  }
  fs::remove_all(dir);
}

TEST(Generator, ConfigValidationRejectsBadRanges) {
  fn::GenConfig cfg;
  cfg.n_agents_min = 0;
  EXPECT_THROW(fn::generate_scene(cfg, 1, "bad"), fn::ConfigError);
  cfg = fn::GenConfig{};
  cfg.n_agents_max = fn::kMaxAgents + 1;
  EXPECT_THROW(cfg.validate(), fn::ConfigError);
  cfg = fn::GenConfig{};
  cfg.t_future = 31;  // not divisible by n_keyframes
  EXPECT_THROW(cfg.validate(), fn::ConfigError);
  cfg = fn::GenConfig{};
  cfg.speed_min = 8.0;
  cfg.speed_max = 4.0;
  EXPECT_THROW(cfg.validate(), fn::ConfigError);
}

TEST(Generator, LayoutNamesRoundTrip) {
  for (const fn::Layout layout :
       {fn::Layout::kStraight, fn::Layout::kCurve, fn::Layout::kTIntersection,
        fn::Layout::kCrossroad}) {
    EXPECT_EQ(fn::layout_from_string(fn::to_string(layout)), layout);
  }
  EXPECT_THROW(fn::layout_from_string("roundabout"), fn::ConfigError);
}

}  // namespace
