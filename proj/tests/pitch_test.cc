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

#include "bwe/data.h"
#include "bwe/pitch.h"
#include "bwe/signal.h"
#include "oracles.h"

using namespace bwe;
using Catch::Approx;

namespace {

AudioBuffer Tone(std::vector<double> hz, std::size_t n = 32000) {
  std::vector<double> x(n, 0.0);
  for (double f : hz) {
    const auto s = oracle::Sine(n, f, 16000.0, 0.5);
    for (std::size_t i = 0; i < n; ++i) x[i] += s[i];
  }
  return AudioBuffer(std::move(x), 16000);
}

double Semitones(double a, double b) { return std::abs(12.0 * std::log2(a / b)); }

std::filesystem::path TempDir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("MIDI and Hz conversions", "[pitch]") {
  CHECK(MidiToHz(69) == 440.0);
  CHECK(MidiToHz(48) == Approx(130.81).margin(0.005));
  CHECK(MidiToHz(48) == Approx(130.82).margin(0.1));  // value quoted for C3
  CHECK(MidiToHz(92) == Approx(1661.22).margin(0.005));
  CHECK(MidiToHz(68) == Approx(415.30).margin(0.005));
  for (int m = 0; m < 128; ++m) CHECK(HzToMidi(MidiToHz(m)) == Approx(m).margin(1e-9));
}

TEST_CASE("YIN tracks a pure tone", "[yin]") {
  const auto t = EstimateF0Mono(Tone({440.0}));
  REQUIRE(t.size() == 125);
  std::size_t ok = 0;
  for (double f : t.f0) {
    if (f > 0.0 && std::abs(f - 440.0) <= 1.0) ++ok;
  }
  CHECK(t.voiced_count() >= 120);
  CHECK(static_cast<double>(ok) >= 0.95 * t.voiced_count());
}

TEST_CASE("YIN tracks tones across the range", "[yin]") {
  for (double hz : {70.0, 130.81, 261.6, 880.0, 1661.22}) {
    INFO(hz);
    const auto t = EstimateF0Mono(Tone({hz}, 16000));
    // Interior frames; the first and last few see reflected padding.
    std::size_t ok = 0, total = 0;
    for (std::size_t i = 4; i + 4 < t.size(); ++i, ++total) {
      if (t.f0[i] > 0.0 && Semitones(t.f0[i], hz) < 0.1) ++ok;
    }
    CHECK(ok >= 0.95 * total);
  }
}

TEST_CASE("YIN reports silence as unvoiced", "[yin]") {
  const auto t = EstimateF0Mono(AudioBuffer(std::vector<double>(16000, 0.0), 16000));
  CHECK(t.size() == 63);
  CHECK(t.voiced_count() == 0);
  CHECK(EstimateF0Mono(AudioBuffer({}, 16000)).size() == 0);
}

TEST_CASE("YIN on a generated note stays within a semitone", "[yin]") {
  const auto clip = RenderClip(MakeMonoClip(68, 15, 3));
  const double truth = MidiToHz(68);
  CHECK(truth == Approx(415.3).margin(0.01));
  for (const auto& input : {clip.audio, LowPass(clip.audio, 2000.0)}) {
    const auto t = EstimateF0Mono(input);
    REQUIRE(t.voiced_count() > 10);
    for (double f : t.f0) {
      if (f > 0.0) CHECK(Semitones(f, truth) <= 1.0);
    }
  }
}

TEST_CASE("multi-f0 separates two tones", "[multif0]") {
  const auto m = EstimateMultiF0(Tone({400.0, 600.0}));
  REQUIRE(m.tracks.size() >= 2);
  std::vector<double> means{m.tracks[0].mean_voiced(), m.tracks[1].mean_voiced()};
  std::sort(means.begin(), means.end());
  CHECK(Semitones(means[0], 400.0) <= 0.5);
  CHECK(Semitones(means[1], 600.0) <= 0.5);
  for (std::size_t i = 2; i < m.tracks.size(); ++i) {
    CHECK(m.tracks[i].voiced_count() < m.tracks[0].voiced_count() / 4);
  }
}

TEST_CASE("multi-f0 on silence returns no tracks", "[multif0]") {
  CHECK(EstimateMultiF0(AudioBuffer(std::vector<double>(16000, 0.0), 16000)).tracks.empty());
}

TEST_CASE("multi-f0 agrees with YIN on monophonic notes", "[multif0]") {
  for (int midi : {50, 62, 69, 81}) {
    INFO(midi);
    const auto x = LowPass(RenderClip(MakeMonoClip(midi, 10, 11)).audio, 2000.0);
    const auto mono = EstimateF0Mono(x);
    MultiF0Config one;
    one.max_voices = 1;
    const auto single = EstimateMultiF0(x, one);
    const auto multi = EstimateMultiF0(x);
    REQUIRE(single.tracks.size() == 1);
    REQUIRE(!multi.tracks.empty());
    std::size_t compared = 0, agree = 0;
    for (std::size_t t = 0; t < mono.size(); ++t) {
      const double a = mono.f0[t], b = single.tracks[0].f0[t];
      if (a > 0.0 && b > 0.0) {
        ++compared;
        if (Semitones(a, b) <= 1.0) ++agree;
      }
    }
    REQUIRE(compared > 10);
    CHECK(agree == compared);
    CHECK(Semitones(multi.tracks[0].mean_voiced(), MidiToHz(midi)) <= 1.0);
    for (std::size_t i = 1; i < multi.tracks.size(); ++i) {
      CHECK(multi.tracks[i].voiced_count() * 4 < multi.tracks[0].voiced_count());
    }
  }
}

TEST_CASE("oracle pitch tracks are constant", "[oracle]") {
  const auto mono = RenderClip(MakeMonoClip(48, 10, 1));
  REQUIRE(mono.truth.tracks.size() == 1);
  for (double f : mono.truth.tracks[0].f0) CHECK(f == Approx(130.81).margin(0.1));
  const auto chord = MakePolyClip(61, 4, 5);
  const auto truth = OraclePitch(chord, 250, 5);
  CHECK(truth.tracks.size() == 4);
  for (std::size_t i = 1; i < truth.tracks.size(); ++i) {
    CHECK(truth.tracks[i].f0[0] < truth.tracks[i - 1].f0[0]);
  }
  ClipSpec corpus;
  corpus.kind = ClipKind::kCorpus;
  CHECK_THROWS_AS(OraclePitch(corpus, 10, 5), DataError);
}

TEST_CASE("pitch files round trip", "[file]") {
  const auto dir = TempDir("bwe_pitch_files");
  const auto truth = OraclePitch(MakePolyClip(55, 3, 2), 250, 5);
  const auto path = (dir / "p.csv").string();
  WritePitchFile(path, truth, 16000);
  const auto back = LoadPitchFile(path, 16000, 250);
  REQUIRE(back.tracks.size() == truth.tracks.size());
  for (std::size_t v = 0; v < truth.tracks.size(); ++v) {
    CHECK(back.tracks[v].f0 == truth.tracks[v].f0);
    CHECK(back.tracks[v].confidence == truth.tracks[v].confidence);
  }
  // An estimated track with unvoiced frames also survives.
  MultiPitchTrack est;
  est.tracks.push_back(EstimateF0Mono(Tone({440.0})));
  WritePitchFile(path, est, 16000);
  CHECK(LoadPitchFile(path, 16000, est.tracks[0].size()).tracks[0].f0 == est.tracks[0].f0);
}

TEST_CASE("pitch file errors", "[file]") {
  const auto dir = TempDir("bwe_pitch_errors");
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream((dir / name).string()) << body;
    return (dir / name).string();
  };
  CHECK(LoadPitchFile(write("empty.csv", ""), 16000, 10).tracks.empty());
  CHECK(LoadPitchFile(write("header.csv", "time_s,f0_hz\n"), 16000, 10).tracks.empty());
  const auto two = LoadPitchFile(write("two.csv", "0.0,440\n0.016,441\n"), 16000, 10);
  REQUIRE(two.tracks.size() == 1);
  CHECK(two.tracks[0].f0[0] == 440.0);
  CHECK(two.tracks[0].f0[1] == 441.0);
  CHECK(two.tracks[0].f0[2] == 0.0);
  CHECK_THROWS_AS(LoadPitchFile(write("bad.csv", "0.0,abc\n"), 16000, 10), DataError);
  CHECK_THROWS_AS(LoadPitchFile(write("cols.csv", "0.0\n"), 16000, 10), DataError);
  CHECK_THROWS_AS(LoadPitchFile(write("order.csv", "0.1,440\n0.05,440\n"), 16000, 10), DataError);
  CHECK_THROWS_AS(LoadPitchFile((dir / "missing.csv").string(), 16000, 10), DataError);
}

TEST_CASE("external track matches the internal estimator", "[file]") {
  const auto dir = TempDir("bwe_pitch_external");
  const auto x = Tone({440.0});
  // An external tool writing a 10 ms grid.
  {
    std::ofstream out((dir / "ext.csv").string());
    out << "time_s,f0_hz\n";
    for (int i = 0; i * 0.01 < x.duration_s(); ++i) out << i * 0.01 << ",440.2\n";
  }
  const auto provider = MakeFileProvider((dir / "ext.csv").string());
  const auto ext = provider->Track(x, 1);
  const auto internal = MakeEstimatorProvider()->Track(x, 1);
  REQUIRE(ext.tracks.size() == 1);
  REQUIRE(internal.tracks.size() == 1);
  const auto held = HoldVoiced(ext.tracks[0]);
  for (std::size_t t = 0; t < held.size(); ++t) {
    if (internal.tracks[0].f0[t] > 0.0) CHECK(Semitones(held[t], internal.tracks[0].f0[t]) <= 1.0);
  }
}

TEST_CASE("providers share framing", "[provider]") {
  const auto x = Tone({300.0}, 20000);
  const auto n = PitchFrames(x.size(), 256);
  CHECK(MakeEstimatorProvider()->Track(x, 1).tracks.at(0).size() == n);
  CHECK(MakeEstimatorProvider()->Track(x, 3).tracks.at(0).size() == n);
  CHECK(MakeFixedProvider(ConstantTracks({300.0}, 3, 5))->Track(x, 5).tracks.at(0).size() == n);
}

TEST_CASE("hold voiced and slot ordering", "[pitch]") {
  PitchTrack t;
  t.f0 = {0, 0, 200, 0, 0, 210, 0};
  CHECK(HoldVoiced(t) == std::vector<double>{200, 200, 200, 200, 200, 210, 210});
  t.f0 = {0, 0};
  CHECK(HoldVoiced(t) == std::vector<double>{0, 0});
  const auto slots = ToSlots(ConstantTracks({200.0, 800.0, 0.0}, 4, 5), 4, 5);
  REQUIRE(slots.tracks.size() == 5);
  CHECK(slots.tracks[0].f0[0] == 800.0);
  CHECK(slots.tracks[1].f0[0] == 200.0);
  CHECK(slots.tracks[2].voiced_count() == 0);
}
