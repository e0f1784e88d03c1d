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

#include "bwe/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "bwe/rng.h"
#include "bwe/stft.h"

namespace bwe {

void WriteControlFramesCsv(const std::string& path, const ControlFrames& c) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "frame";
  for (Eigen::Index h = 0; h < c.harmonic_amps.cols(); ++h) out << ",amp_" << h + 1;
  for (Eigen::Index k = 0; k < c.noise_coeffs.cols(); ++k) out << ",noise_" << k;
  out << "\n";
  const auto rows = std::max(c.harmonic_amps.rows(), c.noise_coeffs.rows());
  out.precision(9);
  for (Eigen::Index t = 0; t < rows; ++t) {
    out << t;
    for (Eigen::Index h = 0; h < c.harmonic_amps.cols(); ++h) {
      out << "," << (t < c.harmonic_amps.rows() ? c.harmonic_amps(t, h) : 0.0);
    }
    for (Eigen::Index k = 0; k < c.noise_coeffs.cols(); ++k) {
      out << "," << (t < c.noise_coeffs.rows() ? c.noise_coeffs(t, k) : 0.0);
    }
    out << "\n";
  }
}

namespace {

struct InterpTap {
  int lo;
  int hi;
  double w;  // weight of hi
};

InterpTap TapFor(std::size_t s, int hop, int n_frames, Interp interp) {
  const int n = static_cast<int>(s / hop);
  if (n >= n_frames - 1) return {n_frames - 1, n_frames - 1, 0.0};
  const double frac = static_cast<double>(s % hop) / hop;
  const double w =
      interp == Interp::kLinear ? frac : 0.5 - 0.5 * std::cos(kPi * frac);
  return {n, n + 1, w};
}

}  // namespace

std::vector<double> UpsampleFrames(std::span<const double> frames, int hop,
                                   std::size_t n_samples, Interp interp) {
  if (frames.empty()) throw std::invalid_argument("upsample: no frames");
  const int n_frames = static_cast<int>(frames.size());
  std::vector<double> out(n_samples);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const InterpTap tap = TapFor(s, hop, n_frames, interp);
    out[s] = (1.0 - tap.w) * frames[tap.lo] + tap.w * frames[tap.hi];
  }
  return out;
}

Matrix UpsampleControls(const Matrix& frames, int hop, std::size_t n_samples,
                        Interp interp) {
  const int n_frames = static_cast<int>(frames.rows());
  if (n_frames == 0) throw std::invalid_argument("upsample: no frames");
  Matrix out(static_cast<Eigen::Index>(n_samples), frames.cols());
  for (std::size_t s = 0; s < n_samples; ++s) {
    const InterpTap tap = TapFor(s, hop, n_frames, interp);
    out.row(static_cast<Eigen::Index>(s)) =
        (1.0 - tap.w) * frames.row(tap.lo) + tap.w * frames.row(tap.hi);
  }
  return out;
}

std::vector<double> UpsampleFramesAdjoint(std::span<const double> sample_grad,
                                          int hop, int n_frames, Interp interp) {
  std::vector<double> out(n_frames, 0.0);
  for (std::size_t s = 0; s < sample_grad.size(); ++s) {
    const InterpTap tap = TapFor(s, hop, n_frames, interp);
    out[tap.lo] += (1.0 - tap.w) * sample_grad[s];
    out[tap.hi] += tap.w * sample_grad[s];
  }
  return out;
}

// ---------------------------------------------------------------------------

HarmonicOscillator::HarmonicOscillator(std::span<const double> f0_frames,
                                       int hop, std::size_t n_samples,
                                       int sample_rate, int n_harmonics,
                                       std::uint64_t seed)
    : hop_(hop),
      n_samples_(n_samples),
      sample_rate_(sample_rate),
      n_frames_(static_cast<int>(f0_frames.size())),
      n_harmonics_(n_harmonics) {
  if (n_frames_ == 0 || hop <= 0 || n_harmonics <= 0 || sample_rate <= 0) {
    throw std::invalid_argument("harmonic_synth: bad configuration");
  }
  if (static_cast<std::size_t>(n_frames_ + 1) * hop < n_samples) {
    throw std::invalid_argument("harmonic_synth: too few frames for the output length");
  }
  const double nyquist = sample_rate / 2.0;
  for (double f : f0_frames) {
    if (!std::isfinite(f) || f < 0.0 || f > nyquist) {
      throw std::invalid_argument("harmonic_synth: f0 outside [0, Nyquist]");
    }
  }

  Rng rng(seed);
  phase0_.resize(n_harmonics);
  harmonic_offset_.resize(n_harmonics);
  for (int h = 0; h < n_harmonics; ++h) {
    phase0_[h] = rng.Uniform(0.0, kTwoPi);
    harmonic_offset_[h] = std::polar(1.0, phase0_[h]);
  }

  const auto f0 = UpsampleFrames(f0_frames, hop, n_samples, Interp::kLinear);
  fundamental_.resize(n_samples);
  active_.resize(n_samples);
  double phase = 0.0;  // wrapped to [0, 2 pi)
  for (std::size_t s = 0; s < n_samples; ++s) {
    fundamental_[s] = std::polar(1.0, phase);
    int count = 0;
    if (f0[s] > 0.0) {
      count = static_cast<int>(std::ceil(nyquist / f0[s])) - 1;
      count = std::clamp(count, 0, n_harmonics);
    }
    active_[s] = count;
    phase = std::fmod(phase + kTwoPi * f0[s] / sample_rate, kTwoPi);
  }
}

void HarmonicOscillator::SetInitialPhases(std::span<const double> phases) {
  if (phases.size() != phase0_.size()) {
    throw std::invalid_argument("harmonic_synth: one phase per harmonic");
  }
  for (int h = 0; h < n_harmonics_; ++h) {
    phase0_[h] = phases[h];
    harmonic_offset_[h] = std::polar(1.0, phases[h]);
  }
}

template <typename Fn>
void HarmonicOscillator::ForEachActive(std::size_t s, Fn&& fn) const {
  const std::complex<double> base = fundamental_[s];
  std::complex<double> cur = base;
  for (int h = 0; h < active_[s]; ++h) {
    fn(h, cur * harmonic_offset_[h]);  // e^{i ((h+1) Phi + phi0_h)}
    cur *= base;
  }
}

std::vector<double> HarmonicOscillator::Render(const Matrix& amps) const {
  if (amps.rows() != n_frames_ || amps.cols() != n_harmonics_) {
    throw std::invalid_argument("harmonic_synth: amplitude shape mismatch");
  }
  std::vector<double> y(n_samples_, 0.0);
  for (std::size_t s = 0; s < n_samples_; ++s) {
    const InterpTap tap = TapFor(s, hop_, n_frames_, Interp::kRaisedCosine);
    const double* lo = amps.row(tap.lo).data();
    const double* hi = amps.row(tap.hi).data();
    double acc = 0.0;
    ForEachActive(s, [&](int h, std::complex<double> e) {
      acc += ((1.0 - tap.w) * lo[h] + tap.w * hi[h]) * e.imag();
    });
    y[s] = acc;
  }
  return y;
}

Matrix HarmonicOscillator::AmpsAdjoint(std::span<const double> out_grad) const {
  Matrix d = Matrix::Zero(n_frames_, n_harmonics_);
  for (std::size_t s = 0; s < n_samples_; ++s) {
    const double g = out_grad[s];
    if (g == 0.0 || active_[s] == 0) continue;
    const InterpTap tap = TapFor(s, hop_, n_frames_, Interp::kRaisedCosine);
    double* lo = d.row(tap.lo).data();
    double* hi = d.row(tap.hi).data();
    const double glo = (1.0 - tap.w) * g, ghi = tap.w * g;
    ForEachActive(s, [&](int h, std::complex<double> e) {
      lo[h] += glo * e.imag();
      hi[h] += ghi * e.imag();
    });
  }
  return d;
}

std::vector<double> HarmonicOscillator::F0Adjoint(
    const Matrix& amps, std::span<const double> out_grad) const {
  // y depends on f0(m) through Phi(s) for every s > m.
  std::vector<double> g_phase(n_samples_, 0.0);
  for (std::size_t s = 0; s < n_samples_; ++s) {
    const InterpTap tap = TapFor(s, hop_, n_frames_, Interp::kRaisedCosine);
    double acc = 0.0;
    ForEachActive(s, [&](int h, std::complex<double> e) {
      const double a = (1.0 - tap.w) * amps(tap.lo, h) + tap.w * amps(tap.hi, h);
      acc += a * (h + 1) * e.real();
    });
    g_phase[s] = out_grad[s] * acc;
  }
  std::vector<double> g_f0(n_samples_, 0.0);
  double suffix = 0.0;
  for (std::size_t s = n_samples_; s-- > 0;) {
    g_f0[s] = kTwoPi / sample_rate_ * suffix;
    suffix += g_phase[s];
  }
  return UpsampleFramesAdjoint(g_f0, hop_, n_frames_, Interp::kLinear);
}

// ---------------------------------------------------------------------------

Matrix FilteredNoise::ImpulseBasis(int n_coeffs) {
  if (n_coeffs < 2) throw std::invalid_argument("noise: need >= 2 coefficients");
  const int taps = 2 * (n_coeffs - 1);
  const auto window = MakeWindow(Window::kHann, taps);
  Matrix b(taps, n_coeffs);
  for (int j = 0; j < taps; ++j) {
    const int lag = j - taps / 2;
    for (int k = 0; k < n_coeffs; ++k) {
      const double weight = (k == 0 || k == n_coeffs - 1) ? 1.0 : 2.0;
      b(j, k) = window[j] * weight * std::cos(kTwoPi * k * lag / taps) / taps;
    }
  }
  return b;
}

FilteredNoise::FilteredNoise(int n_frames, int n_coeffs, int hop,
                             std::size_t n_samples, std::uint64_t seed)
    : n_frames_(n_frames),
      n_coeffs_(n_coeffs),
      hop_(hop),
      n_samples_(n_samples),
      basis_(ImpulseBasis(n_coeffs)) {
  if (n_frames <= 0 || hop <= 0) {
    throw std::invalid_argument("noise: bad configuration");
  }
  if (static_cast<std::size_t>(n_frames + 1) * hop < n_samples) {
    throw std::invalid_argument("noise: too few frames for the output length");
  }
  Rng rng(seed);
  const double half_width = std::sqrt(3.0);
  noise_.resize(n_samples);
  for (double& v : noise_) v = rng.Uniform(-half_width, half_width);

  seg_begin_.resize(n_frames + 1);
  seg_begin_[0] = 0;
  for (int t = 1; t < n_frames; ++t) {
    const auto b = static_cast<std::ptrdiff_t>(t) * hop - hop / 2;
    seg_begin_[t] = std::clamp<std::size_t>(static_cast<std::size_t>(std::max<std::ptrdiff_t>(b, 0)), 0, n_samples);
  }
  seg_begin_[n_frames] = n_samples;
}

std::vector<double> FilteredNoise::Render(const Matrix& coeffs) const {
  if (coeffs.rows() != n_frames_ || coeffs.cols() != n_coeffs_) {
    throw std::invalid_argument("noise_synth: coefficient shape mismatch");
  }
  const int taps = this->taps();
  const auto center = static_cast<std::ptrdiff_t>(taps / 2);
  const auto n = static_cast<std::ptrdiff_t>(n_samples_);
  std::vector<double> y(n_samples_, 0.0);
  Eigen::VectorXd ir(taps);
  for (int t = 0; t < n_frames_; ++t) {
    ir.noalias() = basis_ * coeffs.row(t).transpose();
    for (std::size_t m = seg_begin_[t]; m < seg_begin_[t + 1]; ++m) {
      const double x = noise_[m];
      const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(m) - center;
      const int j0 = static_cast<int>(std::max<std::ptrdiff_t>(0, -base));
      const int j1 = static_cast<int>(std::min<std::ptrdiff_t>(taps, n - base));
      for (int j = j0; j < j1; ++j) y[base + j] += x * ir(j);
    }
  }
  return y;
}

Matrix FilteredNoise::CoeffsAdjoint(std::span<const double> out_grad) const {
  const int taps = this->taps();
  const auto center = static_cast<std::ptrdiff_t>(taps / 2);
  const auto n = static_cast<std::ptrdiff_t>(n_samples_);
  Matrix d(n_frames_, n_coeffs_);
  Eigen::VectorXd dir(taps);
  for (int t = 0; t < n_frames_; ++t) {
    dir.setZero();
    for (std::size_t m = seg_begin_[t]; m < seg_begin_[t + 1]; ++m) {
      const double x = noise_[m];
      const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(m) - center;
      const int j0 = static_cast<int>(std::max<std::ptrdiff_t>(0, -base));
      const int j1 = static_cast<int>(std::min<std::ptrdiff_t>(taps, n - base));
      for (int j = j0; j < j1; ++j) dir(j) += x * out_grad[base + j];
    }
    d.row(t) = (basis_.transpose() * dir).transpose();
  }
  return d;
}

// ---------------------------------------------------------------------------

std::uint64_t HarmonicSeed(std::uint64_t seed) { return MixSeed(seed, 1); }
std::uint64_t NoiseSeed(std::uint64_t seed) { return MixSeed(seed, 2); }

AudioBuffer HarmonicSynth(std::span<const double> f0_frames, const Matrix& amps,
                          int hop, std::size_t n_samples, int sample_rate,
                          std::uint64_t seed) {
  for (Eigen::Index i = 0; i < amps.size(); ++i) {
    if (!(amps.data()[i] >= 0.0)) {
      throw std::invalid_argument("harmonic_synth: amplitudes must be >= 0");
    }
  }
  HarmonicOscillator osc(f0_frames, hop, n_samples, sample_rate,
                         static_cast<int>(amps.cols()), HarmonicSeed(seed));
  return AudioBuffer(osc.Render(amps), sample_rate);
}

AudioBuffer NoiseSynth(const Matrix& coeffs, int hop, std::size_t n_samples,
                       int sample_rate, std::uint64_t seed) {
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
    if (!(coeffs.data()[i] >= 0.0)) {
      throw std::invalid_argument("noise_synth: coefficients must be >= 0");
    }
  }
  FilteredNoise noise(static_cast<int>(coeffs.rows()),
                      static_cast<int>(coeffs.cols()), hop, n_samples,
                      NoiseSeed(seed));
  return AudioBuffer(noise.Render(coeffs), sample_rate);
}

AudioBuffer HpnSynth(std::span<const double> f0_frames, const ControlFrames& c,
                     std::size_t n_samples, int sample_rate,
                     std::uint64_t seed) {
  AudioBuffer out(std::vector<double>(n_samples, 0.0), sample_rate);
  if (c.harmonic_amps.size() > 0) {
    const auto h = HarmonicSynth(f0_frames, c.harmonic_amps, c.hop, n_samples,
                                 sample_rate, seed);
    for (std::size_t i = 0; i < n_samples; ++i) out.samples[i] += h.samples[i];
  }
  if (c.noise_coeffs.size() > 0) {
    const auto n = NoiseSynth(c.noise_coeffs, c.hop, n_samples, sample_rate, seed);
    for (std::size_t i = 0; i < n_samples; ++i) out.samples[i] += n.samples[i];
  }
  return out;
}

std::vector<double> AsdEnvelope(double attack_s, double decay_s,
                                double sustain_level, double sustain_s,
                                double total_s, int sample_rate) {
  if (attack_s < 0 || decay_s < 0 || sustain_s < 0 || total_s < 0) {
    throw std::invalid_argument("asd_envelope: negative duration");
  }
  if (sustain_level < 0 || sustain_level > 1) {
    throw std::invalid_argument("asd_envelope: level outside [0, 1]");
  }
  const auto n = static_cast<std::size_t>(std::llround(total_s * sample_rate));
  const double release_from_peak = std::min(attack_s, sustain_s);
  std::vector<double> env(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate;
    double v = 0.0;
    if (t < attack_s) {
      v = t / attack_s;
    } else if (t < attack_s + sustain_s) {
      const double u = t - attack_s;
      v = u < release_from_peak
              ? 1.0 + (sustain_level - 1.0) * u / release_from_peak
              : sustain_level;
    } else if (t < attack_s + sustain_s + decay_s) {
      v = sustain_level * (1.0 - (t - attack_s - sustain_s) / decay_s);
    }
    env[i] = std::clamp(v, 0.0, 1.0);
  }
  return env;
}

nn::Var HarmonicSynthOp(nn::Tape& t, nn::Var amps,
                        std::shared_ptr<const HarmonicOscillator> osc) {
  const auto y = osc->Render(t.value(amps));
  Matrix out = Eigen::Map<const Matrix>(y.data(), 1, static_cast<Eigen::Index>(y.size()));
  return t.Record(std::move(out), [amps, osc](nn::Tape& tp, const Matrix& g) {
    tp.AccumulateGrad(amps, osc->AmpsAdjoint({g.data(), static_cast<std::size_t>(g.size())}));
  });
}

nn::Var NoiseSynthOp(nn::Tape& t, nn::Var coeffs,
                     std::shared_ptr<const FilteredNoise> noise) {
  const auto y = noise->Render(t.value(coeffs));
  Matrix out = Eigen::Map<const Matrix>(y.data(), 1, static_cast<Eigen::Index>(y.size()));
  return t.Record(std::move(out), [coeffs, noise](nn::Tape& tp, const Matrix& g) {
    tp.AccumulateGrad(coeffs, noise->CoeffsAdjoint({g.data(), static_cast<std::size_t>(g.size())}));
  });
}

}  // namespace bwe
