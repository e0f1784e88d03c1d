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

#ifndef BWE_FEATURES_H_
#define BWE_FEATURES_H_

#include <vector>

#include "bwe/audio.h"
#include "bwe/common.h"

namespace bwe {

struct MfccParams {
  int n_coeffs = 30;
  int n_mels = 128;
  double fmin = 20.0;
  double fmax = 8000.0;
  int fft_size = 1024;
  double overlap = 0.75;

  int hop() const {
    return static_cast<int>(fft_size * (1.0 - overlap) + 0.5);
  }
};

double HzToMel(double hz);
double MelToHz(double mel);

// Triangular HTK-mel filterbank, row-major [n_mels x (fft_size/2 + 1)].
Matrix MelFilterbank(int n_mels, double fmin, double fmax, int fft_size,
                     int sample_rate);

// Per-frame orthonormal DCT-II of floored log-mel energies, coefficients
// 0..n_coeffs-1. Shape [num_frames x n_coeffs].
Matrix Mfcc(const AudioBuffer& x, const MfccParams& params = {});

inline constexpr double kLoudnessFloorDb = -90.0;

struct LoudnessTrack {
  std::vector<double> values;  // dB, one per frame
  int hop = 256;
};

// IEC 61672 A-weighting as a power gain, normalized to exactly 1 at 1 kHz.
double AWeightingPowerGain(double hz);

// 10 log10 of the A-weighted frame power, floored at -90 dB. Frame power is
// normalized so that a full-scale 1 kHz sine reads about -3 dB.
LoudnessTrack AWeightedLoudness(const AudioBuffer& x, int fft_size = 1024,
                                int hop = 256);

}  // namespace bwe

#endif  // BWE_FEATURES_H_
