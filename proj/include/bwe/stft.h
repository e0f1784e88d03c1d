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

#ifndef BWE_STFT_H_
#define BWE_STFT_H_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "bwe/audio.h"

namespace bwe {

enum class Window { kHann, kRectangular };

struct StftParams {
  int fft_size = 1024;
  int hop = 256;
  Window window = Window::kHann;
};

// Periodic window of length n.
std::vector<double> MakeWindow(Window window, int n);

// True when the squared window overlap-adds to a constant at this hop, i.e.
// weighted overlap-add with the same analysis and synthesis window is an
// exact inverse.
bool SatisfiesCola(Window window, int fft_size, int hop);

// Frames are centered on t * hop, t = 0..ceil(n / hop) - 1.
int NumFrames(std::size_t n_samples, int hop);

// Index into [0, n) with reflect padding ("abcd" -> "dcb|abcd|cba"),
// repeated as many times as needed for short signals.
std::size_t ReflectIndex(std::ptrdiff_t i, std::size_t n);

// Complex STFT, row-major [num_frames x num_bins].
struct Spectrogram {
  int num_frames = 0;
  int num_bins = 0;
  StftParams params;
  int sample_rate = kDefaultSampleRate;
  std::size_t signal_length = 0;
  std::vector<std::complex<double>> data;

  std::complex<double>& at(int t, int k) {
    return data[static_cast<std::size_t>(t) * num_bins + k];
  }
  const std::complex<double>& at(int t, int k) const {
    return data[static_cast<std::size_t>(t) * num_bins + k];
  }
  std::span<std::complex<double>> frame(int t) {
    return {data.data() + static_cast<std::size_t>(t) * num_bins,
            static_cast<std::size_t>(num_bins)};
  }
  std::span<const std::complex<double>> frame(int t) const {
    return {data.data() + static_cast<std::size_t>(t) * num_bins,
            static_cast<std::size_t>(num_bins)};
  }
  double bin_hz(int k) const {
    return static_cast<double>(k) * sample_rate / params.fft_size;
  }
};

// Throws std::invalid_argument for an empty signal, a non power-of-two FFT
// size, hop > fft_size, or a window/hop pair that is not COLA.
Spectrogram Stft(const AudioBuffer& x, const StftParams& params = {});

// Least-squares weighted overlap-add inverse. Output has signal_length
// samples.
AudioBuffer Istft(const Spectrogram& spec);

// First bin whose center frequency is >= cutoff_hz.
int CutoffBin(double cutoff_hz, int fft_size, int sample_rate);

}  // namespace bwe

#endif  // BWE_STFT_H_
