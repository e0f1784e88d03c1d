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

#ifndef BWE_LOSS_H_
#define BWE_LOSS_H_

#include <vector>

#include "bwe/audio.h"
#include "bwe/nn.h"

namespace bwe {

struct MssConfig {
  std::vector<int> fft_sizes = {2048, 1024, 512, 256, 128, 64};
  // Hop is fft_size / hop_divisor (75% overlap by default).
  int hop_divisor = 4;
  // Restrict every scale to bins at or above the cutoff.
  bool high_band_only = true;
  double cutoff_hz = 2000.0;

  void Validate() const;
};

// Sum over scales of mean |S - S^| + mean |log S - log S^| on Hann STFT
// magnitudes, logs floored at kLogFloor. Symmetric in its arguments.
double MssLoss(const AudioBuffer& y, const AudioBuffer& y_hat,
               const MssConfig& config);

struct MssTerms {
  double magnitude = 0.0;
  double log_magnitude = 0.0;
  double total() const { return magnitude + log_magnitude; }
};
MssTerms MssLossTerms(const AudioBuffer& y, const AudioBuffer& y_hat,
                      const MssConfig& config);

// Same loss as a tape op on y_hat, a [1 x n] row; y is the fixed target.
// The backward pass runs the analytic adjoint of each STFT.
nn::Var MssLossOp(nn::Tape& t, nn::Var y_hat, const AudioBuffer& y,
                  const MssConfig& config);

struct LsdOptions {
  int fft_size = 1024;
  int hop = 256;
  // The formula without the square on the log difference. Its inner mean
  // can be negative, so the magnitude of the mean goes under the root.
  bool literal = false;
};

// Frame-averaged RMS difference of log10 power spectra (floor kLogFloor).
double Lsd(const AudioBuffer& y, const AudioBuffer& y_hat,
           const LsdOptions& options = {});

}  // namespace bwe

#endif  // BWE_LOSS_H_
