// Copyright 2026 The bwe-lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "bwe/train.h"
#include "fixtures.h"

namespace {

namespace fs = std::filesystem;

bwe::LabeledClip Labeled(int midi, std::uint64_t seed, double seconds = 0.5) {
  const auto c = fixtures::MakeShortClip(midi, seed, seconds);
  bwe::LabeledClip l;
  l.id = "n" + std::to_string(midi);
  l.wb = c.wb;
  l.lb = c.lb;
  l.truth = c.truth;
  l.has_truth = true;
  return l;
}

bwe::TrainConfig SmallRun(int steps) {
  bwe::TrainConfig cfg;
  cfg.steps = steps;
  cfg.batch = 2;
  cfg.crop_s = 0.25;
  cfg.lr0 = 3e-3;
  cfg.checkpoint_every = 0;
  cfg.log_every = 1000;
  cfg.seed = 11;
  return cfg;
}

std::string TempPath(const std::string& name) {
  return (fs::temp_directory_path() / ("bwe_train_test_" + name)).string();
}

bool SameParams(const bwe::nn::ParamStore& a, const bwe::nn::ParamStore& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.value(i) != b.value(i)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("plateau schedule halves four times then holds", "[train]") {
  bwe::PlateauSchedule s(1e-3, 10, 4);
  std::vector<double> seen;
  for (std::uint64_t step = 0; step < 100; ++step) {
    const double lr = s.Observe(step, 1.0);  // never improves after step 0
    if (seen.empty() || lr != seen.back()) seen.push_back(lr);
  }
  REQUIRE(seen.size() == 5);
  const double expect[] = {1e-3, 5e-4, 2.5e-4, 1.25e-4, 6.25e-5};
  for (int i = 0; i < 5; ++i) CHECK(seen[i] == Catch::Approx(expect[i]).epsilon(1e-12));
  CHECK(s.halvings() == 4);
}

TEST_CASE("plateau schedule keeps the rate while the loss improves", "[train]") {
  bwe::PlateauSchedule s(1e-3, 5, 4);
  for (std::uint64_t step = 0; step < 50; ++step) {
    CHECK(s.Observe(step, 100.0 - static_cast<double>(step)) == 1e-3);
  }
  // Exactly `patience` stale steps trigger the first halving.
  for (std::uint64_t step = 50; step < 54; ++step) CHECK(s.Observe(step, 1000.0) == 1e-3);
  CHECK(s.Observe(54, 1000.0) == 5e-4);
}

TEST_CASE("plateau schedule restore continues the patience window", "[train]") {
  bwe::PlateauSchedule a(1e-3, 4, 4), b(1e-3, 4, 4);
  for (std::uint64_t step = 0; step < 7; ++step) a.Observe(step, step == 0 ? 1.0 : 2.0);
  b.Restore(a.lr(), a.best_loss(), a.best_step(), a.halvings());
  for (std::uint64_t step = 7; step < 30; ++step) {
    CHECK(a.Observe(step, 2.0) == b.Observe(step, 2.0));
  }
}

TEST_CASE("train config rejects bad values", "[train]") {
  auto cfg = SmallRun(1);
  cfg.batch = 0;
  CHECK_THROWS_AS(cfg.Validate(), std::invalid_argument);
  cfg = SmallRun(1);
  cfg.lr0 = -1.0;
  CHECK_THROWS_AS(cfg.Validate(), std::invalid_argument);
  cfg = SmallRun(1);
  cfg.crop_s = 0.0;
  CHECK_THROWS_AS(cfg.Validate(), std::invalid_argument);
}

TEST_CASE("empty split is a data error", "[train]") {
  bwe::DatasetManifest m = bwe::GenMonoDataset(3);
  CHECK_THROWS_AS(bwe::LoadLabeledClips(m, "validation", "", 2000.0), bwe::DataError);
  bwe::Controller model(fixtures::ScaledConfig(bwe::Variant::kMonoDec), 1);
  CHECK_THROWS_AS(bwe::Train(model, {}, SmallRun(1)), bwe::DataError);
}

TEST_CASE("crops are frame aligned and carry cut oracle tracks", "[train]") {
  const auto clip = Labeled(60, 4);
  const auto mc = fixtures::ScaledConfig(bwe::Variant::kMonoDec);
  const auto crop = bwe::MakeCrop(clip, mc, bwe::PitchSource::kOracle, 3, 2048);
  REQUIRE(crop.target.size() == 2048);
  for (std::size_t i = 0; i < 2048; ++i) CHECK(crop.target.samples[i] == clip.wb.samples[3 * 256 + i]);
  REQUIRE(crop.features.f0.size() == 1);
  CHECK(crop.features.f0[0].size() == 8);
  CHECK_THROWS_AS(bwe::MakeCrop(clip, mc, bwe::PitchSource::kOracle, 100, 2048),
                  std::invalid_argument);
  auto unlabeled = clip;
  unlabeled.has_truth = false;
  CHECK_THROWS_AS(bwe::MakeCrop(unlabeled, mc, bwe::PitchSource::kOracle, 0, 2048),
                  bwe::DataError);
}

TEST_CASE("short training run lowers held-out loss", "[train][slow]") {
  std::vector<bwe::LabeledClip> train;
  for (int i = 0; i < 4; ++i) train.push_back(Labeled(57 + 3 * i, 100 + i));
  auto mc = fixtures::ScaledConfig(bwe::Variant::kMonoDec);
  mc.gru_units = 16;
  mc.mlp_width = 16;
  bwe::Controller model(mc, 5);
  std::vector<bwe::TrainCrop> held;
  for (int i = 0; i < 2; ++i) {
    held.push_back(bwe::MakeCrop(Labeled(59 + 4 * i, 200 + i), mc, bwe::PitchSource::kOracle, 2,
                                 4000));
  }
  bwe::MssConfig mss;
  const double before = bwe::EvaluateLoss(model, held, mss, 9);
  const auto records = bwe::Train(model, train, SmallRun(50));
  const double after = bwe::EvaluateLoss(model, held, mss, 9);
  REQUIRE(records.size() == 50);
  CHECK(model.params().step == 50);
  UNSCOPED_INFO("held-out loss " << before << " -> " << after);
  CHECK(after < 0.9 * before);
}

TEST_CASE("training is deterministic and resumes on the same trajectory", "[train][slow]") {
  std::vector<bwe::LabeledClip> clips{Labeled(60, 1), Labeled(67, 2)};
  const auto mc = fixtures::ScaledConfig(bwe::Variant::kMonoDec);
  auto cfg = SmallRun(8);
  cfg.plateau_steps = 2;  // exercise the schedule state across the resume

  bwe::Controller a(mc, 3), b(mc, 3);
  const auto ra = bwe::Train(a, clips, cfg);
  const auto rb = bwe::Train(b, clips, cfg);
  CHECK(SameParams(a.params(), b.params()));
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].loss == rb[i].loss);

  const std::string ckpt = TempPath("resume.ckpt");
  const std::string log = TempPath("resume.csv");
  bwe::Controller c(mc, 3);
  auto first = cfg;
  first.steps = 4;
  bwe::TrainRun run;
  run.checkpoint_path = ckpt;
  run.loss_log_path = log;
  bwe::Train(c, clips, first, run);
  auto loaded = bwe::LoadCheckpoint(ckpt, bwe::Variant::kMonoDec);
  REQUIRE(loaded.state.has_value());
  CHECK(loaded.model.params().step == 4);
  run.resume = loaded.state;
  const auto rest = bwe::Train(loaded.model, clips, cfg, run);
  REQUIRE(rest.size() == 4);
  for (std::size_t i = 0; i < rest.size(); ++i) {
    CHECK(rest[i].step == ra[4 + i].step);
    CHECK(rest[i].loss == ra[4 + i].loss);
    CHECK(rest[i].lr == ra[4 + i].lr);
  }
  CHECK(SameParams(loaded.model.params(), a.params()));

  std::ifstream in(log);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 9);  // header plus one row per step
  fs::remove(ckpt);
  fs::remove(log);
}

TEST_CASE("non-finite parameters abort training", "[train]") {
  std::vector<bwe::LabeledClip> clips{Labeled(60, 1)};
  bwe::Controller model(fixtures::ScaledConfig(bwe::Variant::kMonoDec), 3);
  auto& p = model.params();
  p.value(p.IndexOf("dec.mlp.0.w"))(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(bwe::Train(model, clips, SmallRun(3)), bwe::NumericError);
}

TEST_CASE("clip cache returns the same audio as a fresh render", "[train]") {
  const auto m = bwe::GenMonoDataset(21);
  const std::string dir = TempPath("cache");
  fs::remove_all(dir);
  const auto fresh = bwe::LoadLabeledClips(m, "test", "", 2000.0, 1, 256, dir);
  REQUIRE(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 1);
  const auto again = bwe::LoadLabeledClips(m, "test", "", 2000.0, 1, 256, dir);
  const auto plain = bwe::LoadLabeledClips(m, "test", "", 2000.0, 1, 256);
  REQUIRE(again.size() == fresh.size());
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    CHECK(again[i].id == plain[i].id);
    CHECK(again[i].wb.samples == plain[i].wb.samples);
    CHECK(again[i].lb.samples == plain[i].lb.samples);
    CHECK(again[i].has_truth);
  }
  fs::remove_all(dir);
}
