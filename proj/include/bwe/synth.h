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

#ifndef BWE_SYNTH_H_
#define BWE_SYNTH_H_

#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bwe/audio.h"
#include "bwe/common.h"
#include "bwe/nn.h"

namespace bwe {

// Decoder outputs at frame rate. Frame t is centered on sample t * hop.
struct ControlFrames {
  Matrix harmonic_amps;  // [T x H], linear amplitude per harmonic
  Matrix noise_coeffs;   // [T x K_n], noise magnitude response N(k)
  int hop = 256;
};

void WriteControlFramesCsv(const std::string& path, const ControlFrames& c);

enum class Interp {
  kLinear,        // f0 contours
  kRaisedCosine,  // amplitudes: 50%-overlapping Hann windows
};

// Frame-rate values to n_samples samples; sample s lies between frames
// floor(s / hop) and the next one (clamped at the last frame).
std::vector<double> UpsampleFrames(std::span<const double> frames, int hop,
                                   std::size_t n_samples, Interp interp);
// Column-wise version, returns [n_samples x cols].
Matrix UpsampleControls(const Matrix& frames, int hop, std::size_t n_samples,
                        Interp interp);
// Transpose of UpsampleFrames.
std::vector<double> UpsampleFramesAdjoint(std::span<const double> sample_grad,
                                          int hop, int n_frames, Interp interp);

// Additive oscillator bank y(n) = sum_h A_h(n) sin(phi_h(n)) with
// phi_h(n) = h * 2 pi sum_{m<n} f0(m) / fs + phi0_h. Harmonics whose
// frequency reaches fs/2 at a sample are silent there, as are unvoiced
// (f0 = 0) samples.
class HarmonicOscillator {
 public:
  // Throws std::invalid_argument when an f0 frame is negative, non-finite or
  // above Nyquist.
  HarmonicOscillator(std::span<const double> f0_frames, int hop,
                     std::size_t n_samples, int sample_rate, int n_harmonics,
                     std::uint64_t seed);

  std::size_t n_samples() const { return n_samples_; }
  int n_frames() const { return n_frames_; }
  int n_harmonics() const { return n_harmonics_; }
  const std::vector<double>& initial_phases() const { return phase0_; }
  // Replaces the seeded initial phases (one per harmonic).
  void SetInitialPhases(std::span<const double> phases);

  // amps: [n_frames x n_harmonics], returns n_samples samples.
  std::vector<double> Render(const Matrix& amps) const;
  // d(sum_s g[s] y[s]) / d amps.
  Matrix AmpsAdjoint(std::span<const double> out_grad) const;
  // d(sum_s g[s] y[s]) / d f0 frames.
  std::vector<double> F0Adjoint(const Matrix& amps,
                                std::span<const double> out_grad) const;

 private:
  template <typename Fn>
  void ForEachActive(std::size_t s, Fn&& fn) const;

  int hop_;
  std::size_t n_samples_;
  int sample_rate_;
  int n_frames_;
  int n_harmonics_;
  std::vector<double> phase0_;
  std::vector<std::complex<double>> harmonic_offset_;  // e^{i phi0_h}
  std::vector<std::complex<double>> fundamental_;      // e^{i Phi(s)}
  std::vector<int> active_;                            // audible harmonics
};

// Filtered noise: per frame, a linear-phase FIR of 2 (K - 1) taps obtained
// by the zero-phase inverse DFT of N(k), centered and Hann-windowed, applied
// to that frame's hop of unit-variance uniform white noise; overlap-added.
class FilteredNoise {
 public:
  FilteredNoise(int n_frames, int n_coeffs, int hop, std::size_t n_samples,
                std::uint64_t seed);

  // Maps N(k) [K] to impulse response taps [L], as an [L x K] matrix.
  static Matrix ImpulseBasis(int n_coeffs);

  int taps() const { return static_cast<int>(basis_.rows()); }
  const std::vector<double>& white_noise() const { return noise_; }

  std::vector<double> Render(const Matrix& coeffs) const;
  Matrix CoeffsAdjoint(std::span<const double> out_grad) const;

 private:
  int n_frames_;
  int n_coeffs_;
  int hop_;
  std::size_t n_samples_;
  Matrix basis_;
  std::vector<double> noise_;
  std::vector<std::size_t> seg_begin_;  // noise samples owned by each frame
};

// Harmonic + noise, phases and noise seeded from one seed.
AudioBuffer HarmonicSynth(std::span<const double> f0_frames, const Matrix& amps,
                          int hop, std::size_t n_samples, int sample_rate,
                          std::uint64_t seed);
AudioBuffer NoiseSynth(const Matrix& coeffs, int hop, std::size_t n_samples,
                       int sample_rate, std::uint64_t seed);
AudioBuffer HpnSynth(std::span<const double> f0_frames, const ControlFrames& c,
                     std::size_t n_samples, int sample_rate, std::uint64_t seed);

// Seeds of the two synthesizer streams derived from a single seed.
std::uint64_t HarmonicSeed(std::uint64_t seed);
std::uint64_t NoiseSeed(std::uint64_t seed);

// Piecewise-linear gain: 0 -> 1 over the attack, then from 1 down to the
// sustain level over min(attack, sustain) and held for the rest of the
// sustain span, then sustain level -> 0 over the decay; zero afterwards.
// Clipped to total_s.
std::vector<double> AsdEnvelope(double attack_s, double decay_s,
                                double sustain_level, double sustain_s,
                                double total_s, int sample_rate);

// Differentiable wrappers; the audio is a [1 x n_samples] row.
nn::Var HarmonicSynthOp(nn::Tape& t, nn::Var amps,
                        std::shared_ptr<const HarmonicOscillator> osc);
nn::Var NoiseSynthOp(nn::Tape& t, nn::Var coeffs,
                     std::shared_ptr<const FilteredNoise> noise);

}  // namespace bwe

#endif  // BWE_SYNTH_H_
