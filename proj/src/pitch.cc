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

#include "bwe/pitch.h"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "bwe/common.h"
#include "bwe/fft.h"
#include "bwe/stft.h"

namespace bwe {

std::size_t PitchTrack::voiced_count() const {
  return static_cast<std::size_t>(
      std::count_if(f0.begin(), f0.end(), [](double f) { return f > 0.0; }));
}

double PitchTrack::mean_voiced() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (double f : f0) {
    if (f > 0.0) {
      sum += f;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double MidiToHz(double midi) { return 440.0 * std::exp2((midi - 69.0) / 12.0); }

double HzToMidi(double hz) { return 69.0 + 12.0 * std::log2(hz / 440.0); }

std::size_t PitchFrames(std::size_t n_samples, int hop) {
  return static_cast<std::size_t>(NumFrames(n_samples, hop));
}

std::vector<double> HoldVoiced(const PitchTrack& track) {
  std::vector<double> out = track.f0;
  const auto first = std::find_if(out.begin(), out.end(), [](double f) { return f > 0.0; });
  if (first == out.end()) return out;
  double held = *first;
  for (double& f : out) {
    if (f > 0.0) {
      held = f;
    } else {
      f = held;
    }
  }
  return out;
}

// ------------------------------------------------------------------ YIN

namespace {

int NextPow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

PitchTrack EstimateF0Mono(const AudioBuffer& x, const YinConfig& cfg) {
  if (!(cfg.fmin > 0.0) || !(cfg.fmax > cfg.fmin) || cfg.window <= 0 ||
      cfg.hop <= 0) {
    throw std::invalid_argument("yin: bad configuration");
  }
  PitchTrack out;
  out.hop = cfg.hop;
  if (x.empty()) return out;

  const double fs = x.sample_rate;
  const int w = cfg.window;
  const int tau_max = static_cast<int>(std::ceil(fs / cfg.fmin));
  const int tau_min = std::max(2, static_cast<int>(std::floor(fs / cfg.fmax)));
  const int len = w + tau_max + 1;
  const int n_fft = NextPow2(len);
  const RealFft fft(n_fft);

  const std::size_t n_frames = PitchFrames(x.size(), cfg.hop);
  out.f0.assign(n_frames, 0.0);
  out.confidence.assign(n_frames, 0.0);

  std::vector<double> a(n_fft), b(n_fft), corr(n_fft), energy(len + 1);
  std::vector<std::complex<double>> fa(fft.num_bins()), fb(fft.num_bins());
  std::vector<double> d(tau_max + 2), cmnd(tau_max + 2);

  for (std::size_t t = 0; t < n_frames; ++t) {
    const auto start = static_cast<std::ptrdiff_t>(t) * cfg.hop - w / 2;
    for (int j = 0; j < len; ++j) b[j] = x.samples[ReflectIndex(start + j, x.size())];
    std::fill(b.begin() + len, b.end(), 0.0);
    std::copy(b.begin(), b.begin() + w, a.begin());
    std::fill(a.begin() + w, a.end(), 0.0);

    energy[0] = 0.0;
    for (int j = 0; j < len; ++j) energy[j + 1] = energy[j] + b[j] * b[j];
    const double e0 = energy[w];
    if (e0 <= 1e-10 * w) continue;  // silence

    // corr[tau] = sum_{j<w} a[j] b[j + tau], via the spectrum of a and b.
    fft.Forward(a, fa);
    fft.Forward(b, fb);
    for (std::size_t k = 0; k < fa.size(); ++k) fa[k] = std::conj(fa[k]) * fb[k];
    fft.InverseUnnormalized(fa, corr);

    d[0] = 0.0;
    cmnd[0] = 1.0;
    double running = 0.0;
    for (int tau = 1; tau <= tau_max; ++tau) {
      const double et = energy[tau + w] - energy[tau];
      d[tau] = std::max(0.0, e0 + et - 2.0 * corr[tau] / n_fft);
      running += d[tau];
      cmnd[tau] = running > 0.0 ? d[tau] * tau / running : 1.0;
    }

    int best = -1;
    for (int tau = tau_min; tau < tau_max; ++tau) {
      if (cmnd[tau] < cfg.threshold) {
        while (tau + 1 < tau_max && cmnd[tau + 1] < cmnd[tau]) ++tau;
        best = tau;
        break;
      }
    }
    if (best < 0) {
      double lowest = 1.0;
      for (int tau = tau_min; tau < tau_max; ++tau) lowest = std::min(lowest, cmnd[tau]);
      out.confidence[t] = std::clamp(1.0 - lowest, 0.0, 1.0);
      continue;
    }

    double refined = best;
    const double l = cmnd[best - 1], c = cmnd[best], r = cmnd[best + 1];
    const double denom = l - 2.0 * c + r;
    if (denom > 0.0) refined += std::clamp(0.5 * (l - r) / denom, -0.5, 0.5);
    const double f0 = fs / refined;
    if (f0 < cfg.fmin || f0 >= fs / 2.0) continue;
    out.f0[t] = f0;
    out.confidence[t] = std::clamp(1.0 - c, 0.0, 1.0);
  }
  return out;
}

// ------------------------------------------------------------- multi-f0

namespace {

struct Pick {
  double hz;
  double salience;
};

// Largest magnitude within [k - radius, k + radius].
double PeakNear(const std::vector<double>& mag, double bin, int radius,
                int* where = nullptr) {
  const int c = static_cast<int>(std::lround(bin));
  double best = 0.0;
  int at = c;
  for (int k = std::max(0, c - radius);
       k <= std::min<int>(static_cast<int>(mag.size()) - 1, c + radius); ++k) {
    if (mag[k] > best) {
      best = mag[k];
      at = k;
    }
  }
  if (where) *where = at;
  return best;
}

std::vector<Pick> PicksForFrame(std::vector<double> mag, double bin_hz,
                                const MultiF0Config& cfg, double nyquist) {
  std::vector<Pick> picks;
  std::vector<double> sorted(mag);
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double frame_peak = *std::max_element(mag.begin(), mag.end());
  // A fundamental must stand out from the noise floor and must not be a
  // leakage sidelobe of a much stronger partial.
  const double floor = std::max(cfg.peak_to_floor * sorted[sorted.size() / 2],
                                cfg.min_relative_peak * frame_peak);
  const double m_lo = HzToMidi(cfg.fmin), m_hi = HzToMidi(cfg.fmax);
  double first_salience = 0.0;

  for (int voice = 0; voice < cfg.max_voices; ++voice) {
    Pick best{0.0, 0.0};
    for (double m = m_lo; m <= m_hi; m += 0.1) {
      const double f = MidiToHz(m);
      bool near_existing = false;
      for (const auto& p : picks) {
        if (std::abs(HzToMidi(p.hz) - m) < 0.5) near_existing = true;
      }
      if (near_existing) continue;
      int at = 0;
      const double fund = PeakNear(mag, f / bin_hz, 1, &at);
      if (fund <= floor) continue;
      if (at == 0 || at + 1 >= static_cast<int>(mag.size()) || mag[at - 1] > fund ||
          mag[at + 1] > fund) {
        continue;  // not a spectral peak
      }
      double s = 0.0, weight = 1.0;
      for (int h = 1; h <= cfg.n_harmonics && h * f < nyquist; ++h) {
        const int radius = std::max(1, static_cast<int>(std::lround(0.01 * h * f / bin_hz)));
        s += weight * PeakNear(mag, h * f / bin_hz, radius);
        weight *= cfg.harmonic_decay;
      }
      if (s > best.salience) best = {f, s};
    }
    if (best.salience <= 0.0) break;
    if (voice == 0) first_salience = best.salience;
    if (best.salience < cfg.relative_salience * first_salience) break;

    // Refine on the fundamental peak with parabolic interpolation.
    int k = 0;
    const double p1 = PeakNear(mag, best.hz / bin_hz, 2, &k);
    double hz = best.hz;
    if (k > 0 && k + 1 < static_cast<int>(mag.size()) && p1 > 0.0) {
      const double l = std::log(mag[k - 1] + 1e-12), c = std::log(mag[k] + 1e-12),
                   r = std::log(mag[k + 1] + 1e-12);
      const double denom = l - 2.0 * c + r;
      const double off = denom < 0.0 ? std::clamp(0.5 * (l - r) / denom, -0.5, 0.5) : 0.0;
      hz = (k + off) * bin_hz;
    }
    if (hz < cfg.fmin * 0.97 || hz > cfg.fmax * 1.03) break;
    picks.push_back({hz, best.salience});

    // Comb subtraction: remove the fundamental, and at most p1 / h of each
    // higher harmonic so that partials shared with other notes survive.
    for (int h = 1; h * hz < nyquist; ++h) {
      const int radius = std::max(2, static_cast<int>(std::lround(0.01 * h * hz / bin_hz)) + 1);
      const int c = static_cast<int>(std::lround(h * hz / bin_hz));
      const double ph = PeakNear(mag, h * hz / bin_hz, radius);
      if (ph <= 0.0) continue;
      const double keep = 1.0 - std::min(1.0, (h == 1 ? ph : p1 / h) / ph);
      for (int j = std::max(0, c - radius);
           j <= std::min<int>(static_cast<int>(mag.size()) - 1, c + radius); ++j) {
        mag[j] *= keep;
      }
    }
  }
  return picks;
}

}  // namespace

MultiPitchTrack EstimateMultiF0(const AudioBuffer& x, const MultiF0Config& cfg) {
  if (cfg.max_voices <= 0) throw std::invalid_argument("multi_f0: max_voices must be positive");
  MultiPitchTrack out;
  out.max_voices = cfg.max_voices;
  if (x.empty()) return out;

  const Spectrogram s = Stft(x, {cfg.fft_size, cfg.hop, Window::kHann});
  const double bin_hz = static_cast<double>(x.sample_rate) / cfg.fft_size;
  const double nyquist = x.sample_rate / 2.0;
  // A full-scale sine peaks near fft_size / 4 with a Hann window.
  const double silence = 1e-5 * cfg.fft_size / 4.0;

  struct Slot {
    PitchTrack track;
    double total = 0.0;
    double last_midi = 0.0;
  };
  std::vector<Slot> slots;
  const std::size_t n_frames = static_cast<std::size_t>(s.num_frames);
  double max_salience = 0.0;

  std::vector<double> mag(s.num_bins);
  for (int t = 0; t < s.num_frames; ++t) {
    const auto frame = s.frame(t);
    double peak = 0.0;
    for (int k = 0; k < s.num_bins; ++k) {
      mag[k] = std::abs(frame[k]);
      peak = std::max(peak, mag[k]);
    }
    if (peak < silence) continue;
    const auto picks = PicksForFrame(mag, bin_hz, cfg, nyquist);

    std::vector<bool> taken(slots.size(), false);
    for (const auto& p : picks) {
      const double m = HzToMidi(p.hz);
      int chosen = -1;
      double dist = 1.0;  // semitones
      for (std::size_t i = 0; i < slots.size(); ++i) {
        if (taken[i]) continue;
        const double dd = std::abs(slots[i].last_midi - m);
        if (dd < dist) {
          dist = dd;
          chosen = static_cast<int>(i);
        }
      }
      if (chosen < 0) {
        Slot fresh;
        fresh.track.hop = cfg.hop;
        fresh.track.f0.assign(n_frames, 0.0);
        fresh.track.confidence.assign(n_frames, 0.0);
        slots.push_back(std::move(fresh));
        taken.push_back(false);
        chosen = static_cast<int>(slots.size()) - 1;
      }
      taken[chosen] = true;
      auto& slot = slots[chosen];
      slot.track.f0[t] = p.hz;
      slot.track.confidence[t] = p.salience;
      slot.total += p.salience;
      slot.last_midi = m;
      max_salience = std::max(max_salience, p.salience);
    }
  }

  std::stable_sort(slots.begin(), slots.end(),
                   [](const Slot& a, const Slot& b) { return a.total > b.total; });
  for (auto& slot : slots) {
    if (static_cast<int>(out.tracks.size()) >= cfg.max_voices) break;
    if (slot.track.voiced_count() < 3) continue;
    for (double& c : slot.track.confidence) c /= max_salience;
    out.tracks.push_back(std::move(slot.track));
  }
  return out;
}

// --------------------------------------------------------------- oracle

PitchTrack ConstantTrack(double hz, std::size_t n_frames, int hop) {
  PitchTrack t;
  t.hop = hop;
  t.f0.assign(n_frames, hz);
  t.confidence.assign(n_frames, hz > 0.0 ? 1.0 : 0.0);
  return t;
}

MultiPitchTrack ConstantTracks(const std::vector<double>& hz,
                               std::size_t n_frames, int max_voices, int hop) {
  if (static_cast<int>(hz.size()) > max_voices) {
    throw std::invalid_argument("oracle pitch: more tracks than max_voices");
  }
  MultiPitchTrack out;
  out.max_voices = max_voices;
  for (double f : hz) out.tracks.push_back(ConstantTrack(f, n_frames, hop));
  return out;
}

// ----------------------------------------------------------------- files

void WritePitchFile(const std::string& path, const MultiPitchTrack& tracks,
                    int sample_rate) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write pitch file " + path);
  out << "time_s,f0_hz,voice_index,confidence\n";
  out << std::setprecision(17);
  for (std::size_t v = 0; v < tracks.tracks.size(); ++v) {
    const auto& tr = tracks.tracks[v];
    for (std::size_t t = 0; t < tr.size(); ++t) {
      const double conf = t < tr.confidence.size() ? tr.confidence[t] : 1.0;
      out << static_cast<double>(t) * tr.hop / sample_rate << ',' << tr.f0[t]
          << ',' << v << ',' << conf << '\n';
    }
  }
}

MultiPitchTrack LoadPitchFile(const std::string& path, int sample_rate,
                              std::size_t n_frames, int hop, int max_voices) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read pitch file " + path);
  MultiPitchTrack out;
  out.max_voices = max_voices;
  std::vector<double> last_time;
  std::string line;
  std::size_t line_no = 0;
  bool any = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (line_no == 1 && line.find("time") != std::string::npos) continue;
    std::vector<double> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || !std::isfinite(v)) {
        throw DataError(path + ":" + std::to_string(line_no) + ": malformed value '" + cell + "'");
      }
      cols.push_back(v);
    }
    if (cols.size() < 2 || cols.size() > 4) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 2 to 4 columns");
    }
    const double time = cols[0], f0 = cols[1];
    const int voice = cols.size() >= 3 ? static_cast<int>(cols[2]) : 0;
    const double conf = cols.size() == 4 ? cols[3] : (f0 > 0.0 ? 1.0 : 0.0);
    if (time < 0.0 || f0 < 0.0 || voice < 0 || voice >= max_voices) {
      throw DataError(path + ":" + std::to_string(line_no) + ": value out of range");
    }
    if (static_cast<std::size_t>(voice) >= out.tracks.size()) {
      out.tracks.resize(voice + 1, ConstantTrack(0.0, n_frames, hop));
      last_time.resize(voice + 1, -1.0);
    }
    if (time <= last_time[voice]) {
      throw DataError(path + ":" + std::to_string(line_no) + ": time not increasing");
    }
    last_time[voice] = time;
    any = true;
    const auto frame = static_cast<std::size_t>(std::llround(time * sample_rate / hop));
    if (frame < n_frames) {
      out.tracks[voice].f0[frame] = f0;
      out.tracks[voice].confidence[frame] = conf;
    }
  }
  if (!any) spdlog::warn("pitch file {} has no rows; using an empty track", path);
  return out;
}

MultiPitchTrack ToSlots(const MultiPitchTrack& tracks, std::size_t n_frames,
                        int max_voices) {
  std::vector<PitchTrack> active;
  for (const auto& t : tracks.tracks) {
    if (t.voiced_count() > 0) active.push_back(t);
  }
  std::stable_sort(active.begin(), active.end(), [](const PitchTrack& a, const PitchTrack& b) {
    return a.mean_voiced() > b.mean_voiced();
  });
  if (static_cast<int>(active.size()) > max_voices) active.resize(max_voices);
  MultiPitchTrack out;
  out.max_voices = max_voices;
  out.tracks = std::move(active);
  for (auto& t : out.tracks) {
    t.f0.resize(n_frames, 0.0);
    t.confidence.resize(n_frames, 0.0);
  }
  while (static_cast<int>(out.tracks.size()) < max_voices) {
    out.tracks.push_back(ConstantTrack(0.0, n_frames, tracks.tracks.empty() ? 256 : tracks.tracks[0].hop));
  }
  return out;
}

// ------------------------------------------------------------- providers

namespace {

class EstimatorProvider : public PitchProvider {
 public:
  MultiPitchTrack Track(const AudioBuffer& x, int max_voices) const override {
    if (max_voices == 1) {
      MultiPitchTrack out;
      out.max_voices = 1;
      auto t = EstimateF0Mono(x);
      if (t.voiced_count() > 0) out.tracks.push_back(std::move(t));
      return out;
    }
    MultiF0Config cfg;
    cfg.max_voices = max_voices;
    return EstimateMultiF0(x, cfg);
  }
  std::string name() const override { return "estimate"; }
};

class FixedProvider : public PitchProvider {
 public:
  explicit FixedProvider(MultiPitchTrack tracks) : tracks_(std::move(tracks)) {}
  MultiPitchTrack Track(const AudioBuffer& x, int max_voices) const override {
    const std::size_t n = PitchFrames(x.size(), 256);
    MultiPitchTrack out;
    out.max_voices = max_voices;
    for (const auto& t : tracks_.tracks) {
      if (static_cast<int>(out.tracks.size()) >= max_voices) break;
      PitchTrack c = t;
      // Constant oracle tracks extend to any length.
      c.f0.resize(n, t.f0.empty() ? 0.0 : t.f0.back());
      c.confidence.resize(n, t.confidence.empty() ? 0.0 : t.confidence.back());
      out.tracks.push_back(std::move(c));
    }
    return out;
  }
  std::string name() const override { return "oracle"; }

 private:
  MultiPitchTrack tracks_;
};

class FileProvider : public PitchProvider {
 public:
  explicit FileProvider(std::string path) : path_(std::move(path)) {}
  MultiPitchTrack Track(const AudioBuffer& x, int max_voices) const override {
    return LoadPitchFile(path_, x.sample_rate, PitchFrames(x.size(), 256), 256,
                         std::max(max_voices, 1));
  }
  std::string name() const override { return "file"; }

 private:
  std::string path_;
};

}  // namespace

std::unique_ptr<PitchProvider> MakeEstimatorProvider() {
  return std::make_unique<EstimatorProvider>();
}

std::unique_ptr<PitchProvider> MakeFixedProvider(MultiPitchTrack tracks) {
  return std::make_unique<FixedProvider>(std::move(tracks));
}

std::unique_ptr<PitchProvider> MakeFileProvider(std::string path) {
  return std::make_unique<FileProvider>(std::move(path));
}

}  // namespace bwe
