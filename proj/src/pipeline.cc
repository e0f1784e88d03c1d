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

#include "bwe/pipeline.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "bwe/rng.h"
#include "bwe/synth.h"

namespace bwe {

std::uint64_t VoiceSeed(std::uint64_t seed, int voice) {
  return voice == 0 ? HarmonicSeed(seed) : MixSeed(HarmonicSeed(seed), static_cast<std::uint64_t>(voice));
}

AudioBuffer SynthParts::total() const {
  AudioBuffer out = harmonic;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += noise.samples[i];
  return out;
}

namespace {

int ActiveCount(std::size_t available, int active_voices) {
  const int n = static_cast<int>(available);
  return active_voices < 0 ? n : std::min(n, active_voices);
}

void CheckVoices(std::size_t amps, std::size_t f0) {
  if (amps != f0) {
    throw std::invalid_argument("synthesize: " + std::to_string(amps) +
                                " amplitude sets but " + std::to_string(f0) + " f0 tracks");
  }
}

}  // namespace

SynthParts SynthesizeParts(const Controls& controls, const std::vector<std::vector<double>>& f0,
                           const ModelConfig& config, std::size_t n_samples, std::uint64_t seed,
                           int active_voices) {
  CheckVoices(controls.amps.size(), f0.size());
  SynthParts p;
  p.harmonic = AudioBuffer(std::vector<double>(n_samples, 0.0), config.sample_rate);
  const int active = ActiveCount(controls.amps.size(), active_voices);
  for (int v = 0; v < active; ++v) {
    const HarmonicOscillator osc(f0[v], config.hop, n_samples, config.sample_rate,
                                 static_cast<int>(controls.amps[v].cols()), VoiceSeed(seed, v));
    const auto y = osc.Render(controls.amps[v]);
    for (std::size_t i = 0; i < n_samples; ++i) p.harmonic.samples[i] += y[i];
  }
  p.noise = NoiseSynth(controls.noise, config.hop, n_samples, config.sample_rate, seed);
  return p;
}

nn::Var SynthesizeOp(nn::Tape& t, const ControlVars& controls,
                     const std::vector<std::vector<double>>& f0, const ModelConfig& config,
                     std::size_t n_samples, std::uint64_t seed, int active_voices) {
  CheckVoices(controls.amps.size(), f0.size());
  const auto frames = static_cast<int>(t.value(controls.noise).rows());
  auto noise = std::make_shared<const FilteredNoise>(frames, config.n_noise, config.hop,
                                                     n_samples, NoiseSeed(seed));
  nn::Var y = NoiseSynthOp(t, controls.noise, noise);
  const int active = ActiveCount(controls.amps.size(), active_voices);
  for (int v = 0; v < active; ++v) {
    auto osc = std::make_shared<const HarmonicOscillator>(
        f0[v], config.hop, n_samples, config.sample_rate, config.n_harmonics, VoiceSeed(seed, v));
    y = nn::Add(t, y, HarmonicSynthOp(t, controls.amps[v], osc));
  }
  return y;
}

AudioBuffer BweNull(const AudioBuffer& x_lb) { return x_lb; }

namespace {

// Spectral edits are made on a mirror-extended copy so that every kept
// sample lies under the full overlap of synthesis windows. Near the ends of
// an unextended signal only two frames overlap and the overlap-add
// normalization amplifies any inconsistency the edit introduced.
constexpr std::size_t kEditPad = kAnalysisFft;

StftParams AnalysisParams() {
  StftParams p;
  p.fft_size = kAnalysisFft;
  p.hop = kAnalysisHop;
  return p;
}

Spectrogram PaddedStft(const AudioBuffer& x) {
  AudioBuffer padded(std::vector<double>(x.size() + 2 * kEditPad), x.sample_rate);
  for (std::size_t i = 0; i < padded.size(); ++i) {
    const auto src = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(kEditPad);
    padded.samples[i] = x.samples[ReflectIndex(src, x.size())];
  }
  return Stft(padded, AnalysisParams());
}

AudioBuffer CroppedIstft(const Spectrogram& s, std::size_t n) {
  AudioBuffer y = Istft(s);
  return AudioBuffer(std::vector<double>(y.samples.begin() + kEditPad,
                                         y.samples.begin() + kEditPad + n),
                     y.sample_rate);
}

}  // namespace

// ---------------------------------------------------------------- SBR

void SbrConfig::Validate() const {
  if (n_replications < 1) throw std::invalid_argument("sbr: n_replications must be >= 1");
  if (!(match_fraction > 0.0 && match_fraction <= 1.0)) {
    throw std::invalid_argument("sbr: match fraction must be in (0, 1]");
  }
}

SbrSpectrum ReplicateBands(const Spectrogram& lb, const SbrConfig& config,
                           const Spectrogram* oracle) {
  config.Validate();
  if (config.phase == SbrPhase::kOracle) {
    if (!oracle) throw std::invalid_argument("sbr: oracle phase mode needs a reference");
    if (oracle->num_frames != lb.num_frames || oracle->num_bins != lb.num_bins) {
      throw std::invalid_argument("sbr: oracle spectrogram shape mismatch");
    }
  }
  SbrSpectrum out;
  out.spec = lb;
  const int q = (lb.num_bins - 1) / (config.n_replications + 1);
  const int m = std::max(1, static_cast<int>(std::lround(config.match_fraction * q)));
  out.band_bins = q;
  out.match_bins = m;
  out.gains = Matrix::Zero(lb.num_frames, config.n_replications);
  for (int t = 0; t < lb.num_frames; ++t) {
    auto frame = out.spec.frame(t);
    double src_low = 0.0;
    for (int k = 0; k < m; ++k) src_low += std::norm(lb.at(t, k));
    for (int j = 1; j <= config.n_replications; ++j) {
      const int base = j * q;
      double below = 0.0;
      for (int k = base - m; k < base; ++k) below += std::norm(frame[k]);
      const double g = (src_low > 0.0 && below > 0.0) ? std::sqrt(below / src_low) : 0.0;
      out.gains(t, j - 1) = g;
      for (int k = 0; k < q; ++k) {
        const std::complex<double> src = lb.at(t, k);
        if (config.phase == SbrPhase::kOracle) {
          frame[base + k] = std::polar(g * std::abs(src), std::arg(oracle->at(t, base + k)));
        } else {
          frame[base + k] = g * src;
        }
      }
    }
    for (int k = (config.n_replications + 1) * q; k < lb.num_bins; ++k) frame[k] = 0.0;
  }
  return out;
}

AudioBuffer BweSbr(const AudioBuffer& x_lb, const SbrConfig& config, const AudioBuffer* oracle_wb) {
  const Spectrogram lb = PaddedStft(x_lb);
  Spectrogram ref;
  if (config.phase == SbrPhase::kOracle) {
    if (!oracle_wb) throw std::invalid_argument("sbr: oracle phase mode needs the wide-band reference");
    if (oracle_wb->size() != x_lb.size()) throw std::invalid_argument("sbr: reference length mismatch");
    ref = PaddedStft(*oracle_wb);
  }
  const auto rep = ReplicateBands(lb, config, config.phase == SbrPhase::kOracle ? &ref : nullptr);
  return CroppedIstft(rep.spec, x_lb.size());
}

// ------------------------------------------------------------ combine

AudioBuffer CombineBands(const AudioBuffer& x_lb, const AudioBuffer& y_full, double cutoff_hz) {
  if (x_lb.size() != y_full.size()) throw std::invalid_argument("combine_bands: length mismatch");
  Spectrogram a = PaddedStft(x_lb);
  const Spectrogram b = PaddedStft(y_full);
  const int kc = CutoffBin(cutoff_hz, kAnalysisFft, x_lb.sample_rate);
  for (int t = 0; t < a.num_frames; ++t) {
    for (int k = std::max(kc, 0); k < a.num_bins; ++k) {
      // Raised cosine across one bin: weight 1/2 on the cutoff bin.
      const double w = k == kc ? 0.5 : 1.0;
      a.at(t, k) = (1.0 - w) * a.at(t, k) + w * b.at(t, k);
    }
  }
  return CroppedIstft(a, x_lb.size());
}

// ---------------------------------------------------------------- DDSP

namespace {

void RequireVariant(const Controller& model, std::initializer_list<Variant> ok, const char* what) {
  for (Variant v : ok) {
    if (model.config().variant == v) return;
  }
  throw std::invalid_argument(std::string(what) + ": checkpoint variant " +
                              VariantName(model.config().variant) + " is not supported here");
}

SynthParts RunModel(const AudioBuffer& x, const Controller& model, const MultiPitchTrack& pitch,
                    std::uint64_t seed, int active_voices) {
  const ControllerFeatures f = ExtractFeatures(x, pitch, model.config());
  const Controls c = model.Infer(f);
  return SynthesizeParts(c, f.f0, model.config(), x.size(), seed, active_voices);
}

int CountActive(const MultiPitchTrack& m) {
  int n = 0;
  for (const auto& tr : m.tracks) n += tr.voiced_count() > 0 ? 1 : 0;
  return n;
}

}  // namespace

AudioBuffer BweDdspMono(const AudioBuffer& x_lb, const Controller& model,
                        const PitchProvider& pitch, std::uint64_t seed) {
  RequireVariant(model, {Variant::kMonoDec, Variant::kNoiseOnly}, "ddsp-mono");
  MultiPitchTrack tracks;
  if (model.config().voices() > 0) tracks = pitch.Track(x_lb, 1);
  const SynthParts parts = RunModel(x_lb, model, tracks, seed, -1);
  return CombineBands(x_lb, parts.total(), model.config().cutoff_hz);
}

AudioBuffer BweDdspCyclic(const AudioBuffer& x_lb, const Controller& mono,
                          const PitchProvider& pitch, int iterations, std::uint64_t seed,
                          CyclicTrace* trace) {
  RequireVariant(mono, {Variant::kMonoDec}, "ddsp-cyclic");
  if (iterations < 1) throw std::invalid_argument("ddsp-cyclic: iterations must be >= 1");
  const ModelConfig& cfg = mono.config();
  const MultiPitchTrack all = pitch.Track(x_lb, iterations);
  const std::size_t frames = PitchFrames(x_lb.size(), cfg.hop);
  const MultiPitchTrack slots = ToSlots(all, frames, iterations);

  if (CountActive(all) == 0) {
    spdlog::warn("ddsp-cyclic: no pitch found, using the noise part only");
    const SynthParts parts = RunModel(x_lb, mono, MultiPitchTrack{{slots.tracks[0]}, 1}, seed, 0);
    return CombineBands(x_lb, parts.noise, cfg.cutoff_hz);
  }

  const int kc = CutoffBin(cfg.cutoff_hz, kAnalysisFft, x_lb.sample_rate);
  Spectrogram residual = PaddedStft(x_lb);
  auto l1 = [](const Spectrogram& s) {
    double acc = 0.0;
    for (const auto& v : s.data) acc += std::abs(v);
    return acc;
  };
  if (trace) {
    trace->residual_l1.assign(1, l1(residual));
    trace->residual_mags.clear();
  }

  AudioBuffer harmonic(std::vector<double>(x_lb.size(), 0.0), x_lb.sample_rate);
  AudioBuffer noise;
  AudioBuffer x_i = x_lb;
  for (int i = 0; i < iterations; ++i) {
    MultiPitchTrack one;
    one.max_voices = 1;
    one.tracks.push_back(slots.tracks[i]);
    const std::uint64_t s = i == 0 ? seed : MixSeed(seed, static_cast<std::uint64_t>(i));
    const SynthParts parts = RunModel(x_i, mono, one, s, -1);
    for (std::size_t n = 0; n < harmonic.size(); ++n) harmonic.samples[n] += parts.harmonic.samples[n];
    if (i == iterations - 1) noise = parts.noise;
    // Remove the low-band part of this voice's estimate by magnitude
    // subtraction, keeping the residual phase.
    const Spectrogram est = PaddedStft(parts.total());
    for (int t = 0; t < residual.num_frames; ++t) {
      for (int k = 0; k < std::min(kc, residual.num_bins); ++k) {
        const std::complex<double> r = residual.at(t, k);
        const double mag = std::max(0.0, std::abs(r) - std::abs(est.at(t, k)));
        residual.at(t, k) = std::abs(r) > 0.0 ? r * (mag / std::abs(r)) : 0.0;
      }
    }
    if (trace) {
      trace->residual_l1.push_back(l1(residual));
      if (trace->keep_spectra) {
        Matrix m(residual.num_frames, residual.num_bins);
        for (int t = 0; t < residual.num_frames; ++t) {
          for (int k = 0; k < residual.num_bins; ++k) m(t, k) = std::abs(residual.at(t, k));
        }
        trace->residual_mags.push_back(std::move(m));
      }
    }
    if (i + 1 < iterations) x_i = CroppedIstft(residual, x_lb.size());
  }
  for (std::size_t n = 0; n < harmonic.size(); ++n) harmonic.samples[n] += noise.samples[n];
  return CombineBands(x_lb, harmonic, cfg.cutoff_hz);
}

AudioBuffer BweDdspPoly(const AudioBuffer& x_lb, const Controller& poly,
                        const PitchProvider& pitch, std::uint64_t seed) {
  RequireVariant(poly, {Variant::kPolyDec}, "ddsp-poly");
  const int voices = poly.config().voices();
  const MultiPitchTrack tracks = pitch.Track(x_lb, voices);
  const int active = CountActive(tracks);
  const SynthParts parts = RunModel(x_lb, poly, tracks, seed, active);
  return CombineBands(x_lb, parts.total(), poly.config().cutoff_hz);
}

}  // namespace bwe
