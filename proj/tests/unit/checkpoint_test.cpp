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

#include "futurenet/train/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace fn = futurenet;
namespace fs = std::filesystem;

namespace {

fn::ModelConfig tiny_config() {
  fn::ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.n_modes = 2;
  return cfg;
}

std::string slurp(const fs::path & p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path temp_file(const std::string & name) {
  return fs::temp_directory_path() / name;
}

template <typename Fn>
void expect_checkpoint_error_containing(Fn && fn, const std::string & phrase) {
  try {
    fn();
    FAIL() << "expected a checkpoint error mentioning '" << phrase << "'";
  } catch (const fn::CheckpointError & e) {
    EXPECT_NE(std::string(e.what()).find(phrase), std::string::npos) << e.what();
  }
}

/// A store with stepped optimizer state so every serialized section is
/// exercised with nonzero bytes.
struct TrainedFixture {
  fn::ModelConfig cfg = tiny_config();
  fn::ParamStore ps{42};
  fn::AdamW opt;

  TrainedFixture() : opt(make_opt()) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist(0.0, 0.1);
    for (int step = 0; step < 2; ++step) {
      for (std::size_t i = 0; i < ps.size(); ++i) {
        fn::Tensor<double> & g = ps.grad(i);
        for (std::int64_t j = 0; j < g.numel(); ++j) g.data()[j] = dist(rng);
      }
      opt.step(3e-4);
    }
  }

 private:
  fn::AdamW make_opt() {
    fn::register_model(ps, cfg);
    return fn::AdamW(ps, 1e-4);
  }
};

TEST(Checkpoint, RoundTripIsBitwiseIncludingOptimizerState) {
  TrainedFixture fx;
  const fs::path path = temp_file("futurenet_ckpt_roundtrip.fnlof");
  fn::save_checkpoint(path.string(), fx.cfg, fx.ps, 17, &fx.opt);

  const fn::Checkpoint ck = fn::load_checkpoint(path.string());
  EXPECT_EQ(ck.header.step, 17);
  EXPECT_EQ(ck.header.n_tensors, static_cast<std::int64_t>(fx.ps.size()));
  EXPECT_EQ(ck.header.numel, fx.ps.numel());
  EXPECT_TRUE(ck.header.has_optimizer);
  EXPECT_EQ(nlohmann::json(ck.header.model), nlohmann::json(fx.cfg));

  ASSERT_EQ(ck.params.size(), fx.ps.size());
  for (std::size_t i = 0; i < fx.ps.size(); ++i) {
    EXPECT_EQ(ck.params.names()[i], fx.ps.names()[i]);
    const auto & a = fx.ps.tensor(i);
    const auto & b = ck.params.tensor(i);
    ASSERT_EQ(a.shape(), b.shape());
    for (std::int64_t j = 0; j < a.numel(); ++j) EXPECT_EQ(a.data()[j], b.data()[j]);
  }

  EXPECT_EQ(ck.adam_step, fx.opt.step_count());
  ASSERT_EQ(ck.adam_m.size(), fx.ps.size());
  ASSERT_EQ(ck.adam_v.size(), fx.ps.size());
  for (std::size_t i = 0; i < fx.ps.size(); ++i) {
    for (std::int64_t j = 0; j < ck.adam_m[i].numel(); ++j) {
      EXPECT_EQ(ck.adam_m[i].data()[j], fx.opt.first_moments()[i].data()[j]);
      EXPECT_EQ(ck.adam_v[i].data()[j], fx.opt.second_moments()[i].data()[j]);
    }
  }
  fs::remove(path);
}

TEST(Checkpoint, HeaderCanBeReadWithoutTheTensorPayload) {
  TrainedFixture fx;
  const fs::path path = temp_file("futurenet_ckpt_header.fnlof");
  fn::save_checkpoint(path.string(), fx.cfg, fx.ps, 5, nullptr);

  const fn::CheckpointHeader h = fn::read_checkpoint_header(path.string());
  EXPECT_EQ(h.step, 5);
  EXPECT_FALSE(h.has_optimizer);
  EXPECT_EQ(nlohmann::json(h.model), nlohmann::json(fx.cfg));
  fs::remove(path);
}

TEST(Checkpoint, TruncationIsReportedAtAnyCutPoint) {
  TrainedFixture fx;
  const fs::path path = temp_file("futurenet_ckpt_full.fnlof");
  fn::save_checkpoint(path.string(), fx.cfg, fx.ps, 1, &fx.opt);
  const std::string bytes = slurp(path);
  ASSERT_GT(bytes.size(), 64u);

  const fs::path cut_path = temp_file("futurenet_ckpt_cut.fnlof");
  for (const std::size_t cut :
       {std::size_t{3}, std::size_t{8}, std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
    std::ofstream(cut_path, std::ios::binary).write(bytes.data(), static_cast<long>(cut));
    expect_checkpoint_error_containing(
      [&] { (void)fn::load_checkpoint(cut_path.string()); }, "truncated checkpoint");
  }
  fs::remove(path);
  fs::remove(cut_path);
}

TEST(Checkpoint, ForeignBytesAndFutureVersionsAreRejected) {
  TrainedFixture fx;
  const fs::path path = temp_file("futurenet_ckpt_tamper.fnlof");
  fn::save_checkpoint(path.string(), fx.cfg, fx.ps, 1, nullptr);
  std::string bytes = slurp(path);

  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  std::ofstream(path, std::ios::binary).write(wrong_magic.data(), static_cast<long>(wrong_magic.size()));
  expect_checkpoint_error_containing(
    [&] { (void)fn::load_checkpoint(path.string()); }, "not a checkpoint file");

  std::string wrong_version = bytes;
  wrong_version[5] = 9;  // little-endian u32 right after the magic
  std::ofstream(path, std::ios::binary)
    .write(wrong_version.data(), static_cast<long>(wrong_version.size()));
  expect_checkpoint_error_containing(
    [&] { (void)fn::load_checkpoint(path.string()); }, "not supported");

  fs::remove(path);
  EXPECT_THROW((void)fn::load_checkpoint(path.string()), fn::IoError);
}

TEST(Checkpoint, PayloadMustMatchTheDeclaredModel) {
  fn::ModelConfig other = tiny_config();
  other.d_model = 32;
  fn::ParamStore ps_other(1);
  fn::register_model(ps_other, other);

  // Header claims the tiny model, payload carries the larger one.
  const fs::path path = temp_file("futurenet_ckpt_mismatch.fnlof");
  fn::save_checkpoint(path.string(), tiny_config(), ps_other, 1, nullptr);
  expect_checkpoint_error_containing(
    [&] { (void)fn::load_checkpoint(path.string()); }, "does not match");
  fs::remove(path);
}

}  // namespace
