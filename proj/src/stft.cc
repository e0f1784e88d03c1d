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

#include "bwe/stft.h"

#include <cmath>
#include <stdexcept>

#include "bwe/common.h"
#include "bwe/fft.h"

namespace bwe {

std::vector<double> MakeWindow(Window window, int n) {
  std::vector<double> w(n, 1.0);
  if (window == Window::kHann) {
    for (int i = 0; i < n; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(kTwoPi * i / n);
    }
  }
  return w;
}

bool SatisfiesCola(Window window, int fft_size, int hop) {
  if (hop <= 0 || hop > fft_size) return false;
  const auto w = MakeWindow(window, fft_size);
  std::vector<double> acc(hop, 0.0);
  for (int j = 0; j < fft_size; ++j) acc[j % hop] += w[j] * w[j];
  double lo = acc[0], hi = acc[0];
  for (double v : acc) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return lo > 0.0 && (hi - lo) <= 1e-9 * hi;
}

int NumFrames(std::size_t n_samples, int hop) {
  return static_cast<int>((n_samples + hop - 1) / hop);
}

std::size_t ReflectIndex(std::ptrdiff_t i, std::size_t n) {
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<std::ptrdiff_t>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

namespace {

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

Spectrogram Stft(const AudioBuffer& x, const StftParams& params) {
  if (x.empty()) throw std::invalid_argument("stft: empty signal");
  if (!IsPowerOfTwo(params.fft_size)) {
    throw std::invalid_argument("stft: fft_size must be a power of two");
  }
  if (params.hop <= 0 || params.hop > params.fft_size) {
    throw std::invalid_argument("stft: hop must be in (0, fft_size]");
  }
  if (!SatisfiesCola(params.window, params.fft_size, params.hop)) {
    throw std::invalid_argument("stft: window/hop combination is not COLA");
  }

  const int n_fft = params.fft_size;
  const int half = n_fft / 2;
  const auto window = MakeWindow(params.window, n_fft);
  const RealFft fft(n_fft);

  Spectrogram spec;
  spec.params = params;
  spec.sample_rate = x.sample_rate;
  spec.signal_length = x.size();
  spec.num_frames = NumFrames(x.size(), params.hop);
  spec.num_bins = fft.num_bins();
  spec.data.resize(static_cast<std::size_t>(spec.num_frames) * spec.num_bins);

  std::vector<double> frame(n_fft);
  for (int t = 0; t < spec.num_frames; ++t) {
    const std::ptrdiff_t start =
        static_cast<std::ptrdiff_t>(t) * params.hop - half;
    for (int j = 0; j < n_fft; ++j) {
      frame[j] = window[j] * x.samples[ReflectIndex(start + j, x.size())];
    }
    fft.Forward(frame, spec.frame(t));
  }
  return spec;
}

AudioBuffer Istft(const Spectrogram& spec) {
  const int n_fft = spec.params.fft_size;
  const int hop = spec.params.hop;
  if (spec.num_bins != n_fft / 2 + 1 ||
      spec.data.size() !=
          static_cast<std::size_t>(spec.num_frames) * spec.num_bins) {
    throw std::invalid_argument("istft: malformed spectrogram");
  }
  const int half = n_fft / 2;
  const auto window = MakeWindow(spec.params.window, n_fft);
  const RealFft fft(n_fft);
  const std::size_t n = spec.signal_length;

  std::vector<double> out(n, 0.0), norm(n, 0.0), frame(n_fft);
  for (int t = 0; t < spec.num_frames; ++t) {
    fft.InverseUnnormalized(spec.frame(t), frame);
    const std::ptrdiff_t start =
        static_cast<std::ptrdiff_t>(t) * hop - half;
    for (int j = 0; j < n_fft; ++j) {
      const std::ptrdiff_t i = start + j;
      if (i < 0 || i >= static_cast<std::ptrdiff_t>(n)) continue;
      out[i] += window[j] * frame[j] / n_fft;
      norm[i] += window[j] * window[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (norm[i] > 1e-12) out[i] /= norm[i];
  }
  return AudioBuffer(std::move(out), spec.sample_rate);
}

int CutoffBin(double cutoff_hz, int fft_size, int sample_rate) {
  return static_cast<int>(
      std::ceil(cutoff_hz * fft_size / sample_rate - 1e-9));
}

}  // namespace bwe
