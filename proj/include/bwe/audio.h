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

#ifndef BWE_AUDIO_H_
#define BWE_AUDIO_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace bwe {

inline constexpr int kDefaultSampleRate = 16000;

// Mono signal in linear amplitude, nominally within [-1, 1].
struct AudioBuffer {
  std::vector<double> samples;
  int sample_rate = kDefaultSampleRate;

  AudioBuffer() = default;
  AudioBuffer(std::vector<double> s, int rate)
      : samples(std::move(s)), sample_rate(rate) {}

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Throws std::invalid_argument when the rate is not positive or a sample is
// NaN/Inf.
void Validate(const AudioBuffer& x);

double Energy(std::span<const double> x);
double MeanPower(std::span<const double> x);
double Peak(std::span<const double> x);

enum class WavEncoding { kPcm16, kFloat32 };

// Reads PCM 8/16/24/32-bit or IEEE float WAV. Channels are averaged to mono.
// When target_rate > 0 the result is resampled to that rate.
AudioBuffer ReadWav(const std::string& path, int target_rate = kDefaultSampleRate);
void WriteWav(const std::string& path, const AudioBuffer& x,
              WavEncoding encoding = WavEncoding::kFloat32);

// Band-limited resampling with a Kaiser-windowed sinc (32 zero crossings per
// side, beta 8.6, cutoff at 0.95 of the lower Nyquist). Passband ripple is
// below 0.01 dB up to 0.9 of the lower Nyquist; stopband attenuation is about
// 80 dB.
std::vector<double> Resample(std::span<const double> x, int from_rate,
                             int to_rate);

}  // namespace bwe

#endif  // BWE_AUDIO_H_
