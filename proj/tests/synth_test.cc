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
#include <memory>

#include "bwe/optim.h"
#include "bwe/rng.h"
#include "bwe/stft.h"
#include "bwe/synth.h"
#include "oracles.h"

using namespace bwe;
using Catch::Approx;

namespace {

constexpr int kRate = 16000;
constexpr int kHop = 256;

int FramesFor(std::size_t n) { return static_cast<int>((n + kHop - 1) / kHop); }

double Db(double p) { return 10.0 * std::log10(p); }

// Peak power near a target frequency in a Hann-windowed naive DFT.
double PeakPower(const std::vector<double>& seg, double hz) {
  const auto w = oracle::Hann(static_cast<int>(seg.size()));
  std::vector<double> x(seg.size());
  for (std::size_t i = 0; i < seg.size(); ++i) x[i] = w[i] * seg[i];
  const auto spec = oracle::NaiveDft(x);
  const int k = static_cast<int>(std::lround(hz * seg.size() / kRate));
  double best = 0.0;
  for (int j = k - 1; j <= k + 1; ++j) best = std::max(best, std::norm(spec[j]));
  return best;
}

}  // namespace

TEST_CASE("quarter-rate tone gives 0, 1, 0, -1", "[harmonic]") {
  const std::size_t n = 1024;
  std::vector<double> f0(FramesFor(n), 4000.0);
  HarmonicOscillator osc(f0, kHop, n, kRate, 1, 0);
  const double zero = 0.0;
  osc.SetInitialPhases({&zero, 1});
  const auto y = osc.Render(Matrix::Ones(f0.size(), 1));
  const double expect[4] = {0.0, 1.0, 0.0, -1.0};
  for (std::size_t s = 0; s < n; ++s) CHECK(y[s] == Approx(expect[s % 4]).margin(1e-9));
}

TEST_CASE("harmonic peaks fall at multiples of f0 with set levels", "[harmonic]") {
  const std::size_t n = 16000;
  std::vector<double> f0(FramesFor(n), 1000.0);
  Matrix amps(f0.size(), 3);
  amps.col(0).setConstant(1.0);
  amps.col(1).setConstant(0.5);
  amps.col(2).setConstant(0.25);
  const auto y = HarmonicSynth(f0, amps, kHop, n, kRate, 5);
  const std::vector<double> seg(y.samples.begin() + 4000, y.samples.begin() + 4000 + 2048);
  const double p1 = PeakPower(seg, 1000), p2 = PeakPower(seg, 2000), p3 = PeakPower(seg, 3000);
  CHECK(Db(p2) - Db(p1) == Approx(-6.02).margin(0.5));
  CHECK(Db(p3) - Db(p2) == Approx(-6.02).margin(0.5));
  // Peak placement: the largest STFT bin of a frame is bin 64 (1 kHz).
  const auto s = Stft(y);
  int peak = 0;
  for (int k = 0; k < s.num_bins; ++k) {
    if (std::abs(s.at(30, k)) > std::abs(s.at(30, peak))) peak = k;
  }
  CHECK(std::abs(peak - 64) <= 1);
}

TEST_CASE("zero amplitudes are silent", "[harmonic]") {
  std::vector<double> f0(10, 440.0);
  const auto y = HarmonicSynth(f0, Matrix::Zero(10, 8), kHop, 2560, kRate, 1);
  for (double v : y.samples) CHECK(v == 0.0);
}

TEST_CASE("harmonics above Nyquist are suppressed", "[harmonic]") {
  const std::size_t n = 16384;
  std::vector<double> f0(FramesFor(n), 3100.0);
  Matrix amps = Matrix::Ones(f0.size(), 6);
  const auto y = HarmonicSynth(f0, amps, kHop, n, kRate, 2);
  // Only 3100 and 6200 Hz are audible; folded images of 9300 (-> 6700),
  // 12400 (-> 3600) and 15500 (-> 500) must be absent.
  const std::vector<double> seg(y.samples.begin() + 2048, y.samples.begin() + 2048 + 4096);
  const double ref = PeakPower(seg, 3100);
  for (double alias : {6700.0, 3600.0, 500.0}) {
    CHECK(Db(PeakPower(seg, alias)) - Db(ref) <= -80.0);
  }
  std::vector<double> bad(4, 9000.0);
  CHECK_THROWS_AS(HarmonicSynth(bad, Matrix::Ones(4, 1), kHop, 1024, kRate, 1),
                  std::invalid_argument);
  std::vector<double> neg(4, -1.0);
  CHECK_THROWS_AS(HarmonicSynth(neg, Matrix::Ones(4, 1), kHop, 1024, kRate, 1),
                  std::invalid_argument);
}

TEST_CASE("harmonic synth is exactly linear in amplitude", "[harmonic]") {
  const std::size_t n = 4000;
  std::vector<double> f0(FramesFor(n));
  for (std::size_t i = 0; i < f0.size(); ++i) f0[i] = 200.0 + 15.0 * i;
  Rng rng(3);
  Matrix amps(f0.size(), 10);
  for (Eigen::Index i = 0; i < amps.size(); ++i) amps.data()[i] = rng.Uniform();
  const auto a = HarmonicSynth(f0, amps, kHop, n, kRate, 9);
  const auto b = HarmonicSynth(f0, 0.25 * amps, kHop, n, kRate, 9);
  for (std::size_t i = 0; i < n; ++i) CHECK(b.samples[i] == 0.25 * a.samples[i]);
  const auto c = HarmonicSynth(f0, amps, kHop, n, kRate, 9);
  CHECK(a.samples == c.samples);
}

TEST_CASE("upsampling properties", "[upsample]") {
  std::vector<double> constant(12, 0.7);
  for (auto interp : {Interp::kLinear, Interp::kRaisedCosine}) {
    for (double v : UpsampleFrames(constant, kHop, 12 * kHop, interp)) CHECK(v == Approx(0.7).epsilon(1e-15));
    std::vector<double> ramp(12);
    for (int i = 0; i < 12; ++i) ramp[i] = 0.3 * i;
    const auto up = UpsampleFrames(ramp, kHop, 12 * kHop, interp);
    for (std::size_t s = 1; s < up.size(); ++s) CHECK(up[s] >= up[s - 1]);
    for (int i = 0; i < 12; ++i) CHECK(up[i * kHop] == ramp[i]);
  }
  // Smooth curve survives centered block averaging within 1%.
  std::vector<double> smooth(40);
  for (int i = 0; i < 40; ++i) smooth[i] = 1.0 + 0.5 * std::sin(0.15 * i);
  const auto up = UpsampleFrames(smooth, kHop, 40 * kHop, Interp::kRaisedCosine);
  for (int i = 1; i < 39; ++i) {
    double m = 0.0;
    for (int s = i * kHop - kHop / 2; s < i * kHop + kHop / 2; ++s) m += up[s];
    m /= kHop;
    CHECK(m == Approx(smooth[i]).epsilon(0.01));
  }
}

TEST_CASE("upsampling adjoint matches the forward map", "[upsample]") {
  Rng rng(4);
  std::vector<double> frames(9), g(9 * kHop - 40);
  for (double& v : frames) v = rng.Normal();
  for (double& v : g) v = rng.Normal();
  for (auto interp : {Interp::kLinear, Interp::kRaisedCosine}) {
    const auto up = UpsampleFrames(frames, kHop, g.size(), interp);
    const auto adj = UpsampleFramesAdjoint(g, kHop, 9, interp);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t s = 0; s < g.size(); ++s) lhs += up[s] * g[s];
    for (int i = 0; i < 9; ++i) rhs += frames[i] * adj[i];
    CHECK(lhs == Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("noise synth with zero response is silent", "[noise]") {
  const auto y = NoiseSynth(Matrix::Zero(20, 65), kHop, 20 * kHop, kRate, 3);
  for (double v : y.samples) CHECK(v == 0.0);
  CHECK_THROWS_AS(NoiseSynth(-Matrix::Ones(20, 65), kHop, 20 * kHop, kRate, 3),
                  std::invalid_argument);
}

TEST_CASE("flat noise response gives a flat spectrum", "[noise]") {
  const std::size_t n = 16000 * 8;
  const auto y = NoiseSynth(Matrix::Constant(FramesFor(n), 65, 0.3), kHop, n, kRate, 4);
  const auto psd = oracle::WelchPsd(y.samples, 1024);
  double lo = 1e300, hi = 0.0, mean = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < psd.size(); ++k) {
    const double f = k * static_cast<double>(kRate) / 1024;
    if (f < 100.0 || f > 7000.0) continue;
    lo = std::min(lo, psd[k]);
    hi = std::max(hi, psd[k]);
    mean += psd[k];
    ++count;
  }
  mean /= count;
  CHECK(Db(hi / mean) <= 2.0);
  CHECK(Db(lo / mean) >= -2.0);
}

TEST_CASE("high-only noise response keeps the low band quiet", "[noise]") {
  const std::size_t n = 16000 * 4;
  Matrix coeffs = Matrix::Zero(FramesFor(n), 65);
  for (int k = 33; k < 65; ++k) coeffs.col(k).setConstant(1.0);  // >= 4 kHz
  const auto y = NoiseSynth(coeffs, kHop, n, kRate, 5);
  const double below = oracle::BandEnergy(y.samples, kRate, 0.0, 3000.0);
  const double total = oracle::BandEnergy(y.samples, kRate, 0.0, 8001.0);
  CHECK(Db(below / total) <= -40.0);
}

TEST_CASE("noise draws are deterministic per seed", "[noise]") {
  FilteredNoise a(10, 65, kHop, 2560, 8), b(10, 65, kHop, 2560, 8), c(10, 65, kHop, 2560, 9);
  CHECK(a.white_noise() == b.white_noise());
  CHECK(a.white_noise() != c.white_noise());
  double var = 0.0;
  const FilteredNoise long_noise(625, 65, kHop, 160000, 1);
  for (double v : long_noise.white_noise()) var += v * v;
  CHECK(var / 160000 == Approx(1.0).epsilon(0.02));
  std::vector<double> f0(10, 300.0);
  HarmonicOscillator o1(f0, kHop, 2560, kRate, 4, 8), o2(f0, kHop, 2560, kRate, 4, 8);
  CHECK(o1.initial_phases() == o2.initial_phases());
  for (double p : o1.initial_phases()) {
    CHECK(p >= 0.0);
    CHECK(p < kTwoPi);
  }
}

TEST_CASE("asd envelope", "[asd]") {
  const auto rect = AsdEnvelope(0.0, 0.0, 0.6, 0.5, 1.0, kRate);
  REQUIRE(rect.size() == 16000);
  for (int i = 0; i < 8000; ++i) CHECK(rect[i] == 0.6);
  for (int i = 8000; i < 16000; ++i) CHECK(rect[i] == 0.0);

  const auto env = AsdEnvelope(0.2, 0.3, 0.5, 0.8, 2.0, kRate);
  CHECK(env[1600] == Approx(0.5).margin(1e-9));
  for (double v : env) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK_THROWS_AS(AsdEnvelope(-0.1, 0.0, 0.5, 0.5, 1.0, kRate), std::invalid_argument);
  CHECK_THROWS_AS(AsdEnvelope(0.1, 0.0, 1.5, 0.5, 1.0, kRate), std::invalid_argument);
}

TEST_CASE("hpn synth sums its parts", "[hpn]") {
  const std::size_t n = 8000;
  const int frames = FramesFor(n);
  std::vector<double> f0(frames, 220.0);
  ControlFrames c{Matrix::Constant(frames, 5, 0.2), Matrix::Zero(frames, 65), kHop};
  CHECK(HpnSynth(f0, c, n, kRate, 3).samples == HarmonicSynth(f0, c.harmonic_amps, kHop, n, kRate, 3).samples);
  c.harmonic_amps.setZero();
  c.noise_coeffs.setConstant(0.1);
  CHECK(HpnSynth(f0, c, n, kRate, 3).samples == NoiseSynth(c.noise_coeffs, kHop, n, kRate, 3).samples);

  // Energy additivity averaged over seeds.
  c.harmonic_amps.setConstant(0.2);
  double ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double eh = Energy(HarmonicSynth(f0, c.harmonic_amps, kHop, n, kRate, seed).samples);
    const double en = Energy(NoiseSynth(c.noise_coeffs, kHop, n, kRate, seed).samples);
    ratio += Energy(HpnSynth(f0, c, n, kRate, seed).samples) / (eh + en);
  }
  CHECK(ratio / 20 == Approx(1.0).epsilon(0.05));
}

TEST_CASE("synth ops pass grad check under an L2 spectral-free loss", "[gradcheck]") {
  const std::size_t n = 1600;  // 0.1 s
  const int frames = FramesFor(n);
  std::vector<double> f0(frames);
  for (int i = 0; i < frames; ++i) f0[i] = 300.0 + 40.0 * i;
  auto osc = std::make_shared<const HarmonicOscillator>(f0, kHop, n, kRate, 6, 1);
  auto noise = std::make_shared<const FilteredNoise>(frames, 9, kHop, n, 2);
  nn::ParamStore store;
  Rng rng(3);
  Matrix a(frames, 6), k(frames, 9);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.Uniform();
  for (Eigen::Index i = 0; i < k.size(); ++i) k.data()[i] = rng.Uniform();
  const auto ia = store.Add("amps", a);
  const auto ik = store.Add("noise", k);
  const auto target = oracle::RandomSignal(n, 4);
  auto f = [&](nn::Tape& t) {
    nn::Var y = nn::Add(t, HarmonicSynthOp(t, t.Param(store, ia), osc),
                        NoiseSynthOp(t, t.Param(store, ik), noise));
    Matrix tm = Eigen::Map<const Matrix>(target.data(), 1, static_cast<Eigen::Index>(n));
    return nn::SumSquares(t, nn::Sub(t, y, t.Constant(tm)));
  };
  const auto rep = nn::GradCheck(f, store);
  CHECK(rep.fraction_within() == 1.0);
}

TEST_CASE("f0 adjoint matches finite differences", "[gradcheck]") {
  const std::size_t n = 2000;
  const int frames = FramesFor(n);
  std::vector<double> f0(frames);
  for (int i = 0; i < frames; ++i) f0[i] = 250.0 + 10.0 * i;
  const Matrix amps = Matrix::Constant(frames, 4, 0.3);
  const auto g = oracle::RandomSignal(n, 6);
  auto objective = [&](const std::vector<double>& f) {
    const auto y = HarmonicOscillator(f, kHop, n, kRate, 4, 11).Render(amps);
    double acc = 0.0;
    for (std::size_t s = 0; s < n; ++s) acc += g[s] * y[s];
    return acc;
  };
  const auto analytic = HarmonicOscillator(f0, kHop, n, kRate, 4, 11).F0Adjoint(amps, g);
  for (int i = 0; i < frames; ++i) {
    auto up = f0, dn = f0;
    up[i] += 1e-4;
    dn[i] -= 1e-4;
    const double numeric = (objective(up) - objective(dn)) / 2e-4;
    CHECK(analytic[i] == Approx(numeric).epsilon(1e-3).margin(1e-6));
  }
}
