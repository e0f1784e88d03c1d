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

#ifndef BWE_SIGNAL_H_
#define BWE_SIGNAL_H_

#include <cstdint>
#include <utility>

#include "bwe/audio.h"

namespace bwe {

// Task band split. bandwidth_factor is the ratio between the full Nyquist
// band and the retained low band (4 for 2 kHz at 16 kHz).
struct BandSplitSpec {
  double cutoff_hz = 2000.0;

  double bandwidth_factor(int sample_rate) const {
    return (sample_rate / 2.0) / cutoff_hz;
  }
};

struct BandPair {
  AudioBuffer low;
  AudioBuffer high;
};

// Low band by zeroing 1024/256 STFT bins at and above the cutoff; the high
// band is the exact complement x - low.
BandPair BandSplit(const AudioBuffer& x, const BandSplitSpec& spec);

// Convenience for the low band only.
AudioBuffer LowPass(const AudioBuffer& x, double cutoff_hz);

// Pink (1/f power) noise with unit RMS, shaped in the frequency domain from
// seeded Gaussian white noise.
AudioBuffer PinkNoise(std::size_t n_samples, std::uint64_t seed,
                      int sample_rate = kDefaultSampleRate);

// Returns signal + g * noise with g chosen so that the signal-to-noise power
// ratio equals snr_db. snr_db = +inf returns the signal unchanged.
AudioBuffer MixAtSnr(const AudioBuffer& signal, const AudioBuffer& noise,
                     double snr_db);

}  // namespace bwe

#endif  // BWE_SIGNAL_H_
