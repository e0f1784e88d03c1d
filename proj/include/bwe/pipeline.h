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

#ifndef BWE_PIPELINE_H_
#define BWE_PIPELINE_H_

#include <cstdint>
#include <vector>

#include "bwe/audio.h"
#include "bwe/controller.h"
#include "bwe/nn.h"
#include "bwe/pitch.h"
#include "bwe/stft.h"

namespace bwe {

// STFT used for band recombination, cyclic subtraction and evaluation.
inline constexpr int kAnalysisFft = 1024;
inline constexpr int kAnalysisHop = 256;

// ---- Synthesis from controller outputs ----------------------------------

// Seed of the oscillator bank of voice v; voice 0 matches HpnSynth.
std::uint64_t VoiceSeed(std::uint64_t seed, int voice);

// Full-band harmonic-plus-noise audio. Only the first active_voices amplitude
// sets are rendered (all of them when negative). f0 holds one frame-rate
// track per voice.
struct SynthParts {
  AudioBuffer harmonic;
  AudioBuffer noise;
  AudioBuffer total() const;
};
SynthParts SynthesizeParts(const Controls& controls,
                           const std::vector<std::vector<double>>& f0,
                           const ModelConfig& config, std::size_t n_samples,
                           std::uint64_t seed, int active_voices = -1);

// Differentiable version; returns a [1 x n_samples] row.
nn::Var SynthesizeOp(nn::Tape& t, const ControlVars& controls,
                     const std::vector<std::vector<double>>& f0,
                     const ModelConfig& config, std::size_t n_samples,
                     std::uint64_t seed, int active_voices = -1);

// ---- Pipelines ----------------------------------------------------------

AudioBuffer BweNull(const AudioBuffer& x_lb);

enum class SbrPhase { kReplicated, kOracle };

struct SbrConfig {
  int n_replications = 3;
  double match_fraction = 0.5;
  SbrPhase phase = SbrPhase::kReplicated;

  void Validate() const;
};

struct SbrSpectrum {
  Spectrogram spec;
  Matrix gains;  // [frames x n_replications]
  int band_bins = 0;   // width of one replicated band
  int match_bins = 0;  // width of each energy-matching region
};

// Band j (1-based) of width Q = (fft/2) / (n_replications + 1) is filled
// with bins [0, Q) scaled by g_j, chosen so the energy of the m bins just
// above j Q equals that of the m bins just below it (m = round(alpha Q)).
// Bins past the last band are zeroed. oracle supplies phases in kOracle mode.
SbrSpectrum ReplicateBands(const Spectrogram& lb, const SbrConfig& config,
                           const Spectrogram* oracle = nullptr);

// oracle_wb is the reference wide-band signal, required in kOracle mode.
AudioBuffer BweSbr(const AudioBuffer& x_lb, const SbrConfig& config,
                   const AudioBuffer* oracle_wb = nullptr);

// Bins below the cutoff bin from x_lb, above it from y_full, and the cutoff
// bin itself half of each.
AudioBuffer CombineBands(const AudioBuffer& x_lb, const AudioBuffer& y_full,
                         double cutoff_hz);

// Mono or noise-only checkpoint.
AudioBuffer BweDdspMono(const AudioBuffer& x_lb, const Controller& model,
                        const PitchProvider& pitch, std::uint64_t seed);

struct CyclicTrace {
  // L1 norm of the residual low-band magnitude before iteration 1 and after
  // each iteration.
  std::vector<double> residual_l1;
  // Residual magnitudes [frames x bins] per iteration when requested.
  bool keep_spectra = false;
  std::vector<Matrix> residual_mags;
};

AudioBuffer BweDdspCyclic(const AudioBuffer& x_lb, const Controller& mono,
                          const PitchProvider& pitch, int iterations,
                          std::uint64_t seed, CyclicTrace* trace = nullptr);

AudioBuffer BweDdspPoly(const AudioBuffer& x_lb, const Controller& poly,
                        const PitchProvider& pitch, std::uint64_t seed);

}  // namespace bwe

#endif  // BWE_PIPELINE_H_
