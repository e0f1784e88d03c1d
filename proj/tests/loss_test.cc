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
#include <algorithm>
#include <cmath>
#include <memory>

#include "bwe/loss.h"
#include "bwe/optim.h"
#include "bwe/rng.h"
#include "bwe/stft.h"
#include "bwe/synth.h"
#include "oracles.h"

namespace {

bwe::AudioBuffer Buf(std::vector<double> v) { return bwe::AudioBuffer(std::move(v), 16000); }

bwe::AudioBuffer Random(std::size_t n, unsigned seed, double scale = 0.5) {
  auto v = oracle::RandomSignal(n, seed);
  for (auto& s : v) s *= scale;
  return Buf(std::move(v));
}

}  // namespace

TEST_CASE("MSS loss of a signal against itself is zero") {
  const auto y = Random(4000, 1);
  CHECK(bwe::MssLoss(y, y, {}) == 0.0);
}

TEST_CASE("MSS loss is symmetric") {
  for (unsigned s = 0; s < 5; ++s) {
    const auto a = Random(3000, 10 + s), b = Random(3000, 20 + s, 0.1);
    CHECK(bwe::MssLoss(a, b, {}) == Catch::Approx(bwe::MssLoss(b, a, {})).epsilon(1e-12));
  }
}

TEST_CASE("MSS loss matches a brute-force evaluation") {
  const std::vector<int> sizes = {2048, 1024, 512, 256, 128, 64};
  for (unsigned s = 0; s < 3; ++s) {
    const auto a = Random(5000, 30 + s), b = Random(5000, 40 + s, 0.2);
    bwe::MssConfig full;
    full.high_band_only = false;
    CHECK(bwe::MssLoss(a, b, {}) ==
          Catch::Approx(oracle::Mss(a.samples, b.samples, sizes, 2000.0, 16000)).epsilon(1e-9));
    CHECK(bwe::MssLoss(a, b, full) ==
          Catch::Approx(oracle::Mss(a.samples, b.samples, sizes, 0.0, 16000)).epsilon(1e-9));
  }
}

TEST_CASE("MSS loss only sees the configured band") {
  // A cosine with extrema at both ends stays smooth under the mirror padding
  // (1500 whole periods in 8000 samples).
  std::vector<double> c(8001);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = 0.5 * std::cos(2.0 * oracle::kPi * 3000.0 * i / 16000.0);
  const auto tone = Buf(c);
  const auto silence = Buf(std::vector<double>(c.size(), 0.0));
  bwe::MssConfig c2;
  c2.cutoff_hz = 2000.0;
  CHECK(bwe::MssLoss(tone, silence, c2) > 0.1);
  bwe::MssConfig c4;
  c4.cutoff_hz = 4000.0;
  const auto terms = bwe::MssLossTerms(tone, silence, c4);
  // Only Hann leakage of the short scales (250 Hz bins at 64) reaches 4 kHz.
  CHECK(terms.magnitude < 0.05 * bwe::MssLossTerms(tone, silence, c2).magnitude);
  // Scales with bins narrow enough that 4 kHz is far outside the Hann main
  // lobe see essentially nothing.
  bwe::MssConfig c4_long = c4;
  c4_long.fft_sizes = {2048, 1024, 512, 256};
  bwe::MssConfig c2_long = c2;
  c2_long.fft_sizes = c4_long.fft_sizes;
  CHECK(bwe::MssLossTerms(tone, silence, c4_long).magnitude <
        1e-4 * bwe::MssLossTerms(tone, silence, c2_long).magnitude);
}

TEST_CASE("MSS loss rejects mismatched lengths") {
  CHECK_THROWS_AS(bwe::MssLoss(Random(100, 1), Random(101, 2), {}), std::invalid_argument);
  bwe::MssConfig bad;
  bad.fft_sizes = {1000};
  CHECK_THROWS_AS(bwe::MssLoss(Random(2000, 1), Random(2000, 2), bad), std::invalid_argument);
}

TEST_CASE("MSS gradient with respect to synthesizer controls") {
  const std::size_t n = 1600;  // 0.1 s
  const int hop = 256, frames = bwe::NumFrames(n, hop), h = 8, k = 9;
  std::vector<double> f0(frames, 330.0);
  for (int t = 0; t < frames; ++t) f0[t] += 5.0 * t;
  auto osc = std::make_shared<const bwe::HarmonicOscillator>(f0, hop, n, 16000, h, 3);
  auto noise = std::make_shared<const bwe::FilteredNoise>(frames, k, hop, n, 4);
  bwe::Rng rng(5);
  bwe::nn::ParamStore store;
  bwe::Matrix amps(frames, h), coeffs(frames, k);
  for (Eigen::Index i = 0; i < amps.size(); ++i) amps.data()[i] = rng.Uniform(0.05, 0.4);
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs.data()[i] = rng.Uniform(0.1, 1.0);
  const auto ia = store.Add("amps", amps);
  const auto in = store.Add("noise", coeffs);
  const auto target = bwe::AudioBuffer(
      bwe::HarmonicSynth(f0, amps * 1.5, hop, n, 16000, 9).samples, 16000);
  // Frame 0 of every scale sees a mirror-symmetric segment, so its spectrum
  // is real and |X_k| has a corner wherever X_k crosses zero. Entries whose
  // one-sided differences disagree are such corners, where no derivative
  // exists; every other entry must match the central difference.
  for (bool band : {true, false}) {
    bwe::MssConfig cfg;
    cfg.high_band_only = band;
    auto loss = [&] {
      bwe::nn::Tape t(false);
      auto y = bwe::nn::Add(t, bwe::HarmonicSynthOp(t, t.Param(store, ia), osc),
                            bwe::NoiseSynthOp(t, t.Param(store, in), noise));
      return t.value(bwe::MssLossOp(t, y, target, cfg))(0, 0);
    };
    bwe::nn::Tape t;
    auto y = bwe::nn::Add(t, bwe::HarmonicSynthOp(t, t.Param(store, ia), osc),
                          bwe::NoiseSynthOp(t, t.Param(store, in), noise));
    t.Backward(bwe::MssLossOp(t, y, target, cfg));
    store.ZeroGrad();
    t.AddParamGradsTo(store);
    const double eps = 1e-4, f0 = loss();
    int smooth = 0, corners = 0, bad = 0;
    for (std::size_t p = 0; p < store.size(); ++p) {
      for (Eigen::Index i = 0; i < store.value(p).size(); ++i) {
        double& v = store.value(p).data()[i];
        const double v0 = v;
        v = v0 + eps;
        const double fp = loss();
        v = v0 - eps;
        const double fm = loss();
        v = v0;
        const double right = (fp - f0) / eps, left = (f0 - fm) / eps;
        const double central = (fp - fm) / (2 * eps), analytic = store.grad(p).data()[i];
        const double scale = std::max({std::abs(central), std::abs(analytic), 1e-6});
        if (std::abs(right - left) > 1e-2 * scale) {
          ++corners;
          continue;
        }
        ++smooth;
        if (std::abs(central - analytic) > 1e-3 * scale) ++bad;
      }
    }
    INFO("band " << band << " smooth " << smooth << " corners " << corners);
    CHECK(bad == 0);
    CHECK(smooth >= 0.8 * (smooth + corners));
  }
}

TEST_CASE("MSS gradient is exact away from the first frame") {
  // Scales that fit in 0.1 s several times give a smooth loss everywhere.
  const std::size_t n = 1600;
  const int hop = 256, frames = bwe::NumFrames(n, hop);
  std::vector<double> f0(frames, 410.0);
  auto osc = std::make_shared<const bwe::HarmonicOscillator>(f0, hop, n, 16000, 6, 7);
  auto noise = std::make_shared<const bwe::FilteredNoise>(frames, 9, hop, n, 8);
  bwe::Rng rng(9);
  bwe::nn::ParamStore store;
  bwe::Matrix amps(frames, 6), coeffs(frames, 9);
  for (Eigen::Index i = 0; i < amps.size(); ++i) amps.data()[i] = rng.Uniform(0.05, 0.4);
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) coeffs.data()[i] = rng.Uniform(0.1, 1.0);
  const auto ia = store.Add("amps", amps);
  const auto in = store.Add("noise", coeffs);
  const auto target = Random(n, 10, 0.2);
  bwe::MssConfig cfg;
  cfg.fft_sizes = {256, 128, 64};
  auto f = [&](bwe::nn::Tape& t) {
    auto y = bwe::nn::Add(t, bwe::HarmonicSynthOp(t, t.Param(store, ia), osc),
                          bwe::NoiseSynthOp(t, t.Param(store, in), noise));
    return bwe::MssLossOp(t, y, target, cfg);
  };
  const auto report = bwe::nn::GradCheck(f, store);
  INFO("worst " << report.worst_rel_error);
  CHECK(report.fraction_within() == 1.0);
}

TEST_CASE("LSD is zero on identical input and symmetric") {
  const auto a = Random(4000, 50), b = Random(4000, 51, 0.2);
  CHECK(bwe::Lsd(a, a) == 0.0);
  CHECK(bwe::Lsd(a, b) == bwe::Lsd(b, a));
  CHECK(bwe::Lsd(a, b) > 0.0);
  CHECK_THROWS_AS(bwe::Lsd(a, Random(10, 1)), std::invalid_argument);
}

TEST_CASE("LSD agrees with a brute-force implementation on random pairs") {
  double worst = 0.0;
  for (unsigned s = 0; s < 100; ++s) {
    const std::size_t n = 1500 + 37 * s;
    const auto a = Random(n, 100 + s), b = Random(n, 300 + s, 0.05 + 0.01 * (s % 7));
    worst = std::max(worst, std::abs(bwe::Lsd(a, b) - oracle::Lsd(a.samples, b.samples)));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("literal LSD differs from the squared form") {
  const auto a = Random(4000, 60), b = Random(4000, 61, 0.1);
  bwe::LsdOptions lit;
  lit.literal = true;
  const double l = bwe::Lsd(a, b, lit);
  CHECK(std::isfinite(l));
  CHECK(l != bwe::Lsd(a, b));
}
