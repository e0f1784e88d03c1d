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

#include "bwe/signal.h"

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "bwe/fft.h"
#include "bwe/rng.h"
#include "bwe/stft.h"

namespace bwe {

BandPair BandSplit(const AudioBuffer& x, const BandSplitSpec& spec) {
  if (!(spec.cutoff_hz > 0.0) || spec.cutoff_hz >= x.sample_rate / 2.0) {
    throw std::invalid_argument("band_split: cutoff must be in (0, Nyquist)");
  }
  Spectrogram s = Stft(x, {1024, 256, Window::kHann});
  const int kc = CutoffBin(spec.cutoff_hz, 1024, x.sample_rate);
  for (int t = 0; t < s.num_frames; ++t) {
    auto f = s.frame(t);
    for (int k = kc; k < s.num_bins; ++k) f[k] = 0.0;
  }
  BandPair out{Istft(s), AudioBuffer({}, x.sample_rate)};
  out.high.samples.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.high.samples[i] = x.samples[i] - out.low.samples[i];
  }
  return out;
}

AudioBuffer LowPass(const AudioBuffer& x, double cutoff_hz) {
  return BandSplit(x, {cutoff_hz}).low;
}

AudioBuffer PinkNoise(std::size_t n_samples, std::uint64_t seed,
                      int sample_rate) {
  if (n_samples == 0) throw std::invalid_argument("pink_noise: empty");
  // Even FFT length covering the request.
  const std::size_t n = n_samples + (n_samples & 1);
  Rng rng(seed);
  std::vector<double> white(n);
  for (double& v : white) v = rng.Normal();

  const RealFft fft(static_cast<int>(n));
  std::vector<std::complex<double>> spec(fft.num_bins());
  fft.Forward(white, spec);
  spec[0] = 0.0;
  for (std::size_t k = 1; k < spec.size(); ++k) {
    spec[k] /= std::sqrt(static_cast<double>(k));
  }
  std::vector<double> pink(n);
  fft.InverseUnnormalized(spec, pink);
  pink.resize(n_samples);

  double mean = 0.0;
  for (double v : pink) mean += v;
  mean /= static_cast<double>(n_samples);
  for (double& v : pink) v -= mean;
  const double rms = std::sqrt(MeanPower(pink));
  if (rms > 0.0) {
    for (double& v : pink) v /= rms;
  }
  return AudioBuffer(std::move(pink), sample_rate);
}

AudioBuffer MixAtSnr(const AudioBuffer& signal, const AudioBuffer& noise,
                     double snr_db) {
  if (signal.size() != noise.size()) {
    throw std::invalid_argument("mix_at_snr: length mismatch");
  }
  const double ps = MeanPower(signal.samples);
  if (ps <= 0.0) throw std::invalid_argument("mix_at_snr: zero-power signal");
  if (std::isinf(snr_db) && snr_db > 0) return signal;
  const double pn = MeanPower(noise.samples);
  if (pn <= 0.0) throw std::invalid_argument("mix_at_snr: zero-power noise");
  const double g = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  AudioBuffer out = signal;
  for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += g * noise.samples[i];
  return out;
}

}  // namespace bwe
