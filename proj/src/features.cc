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

#include "bwe/features.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bwe/stft.h"

namespace bwe {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Matrix MelFilterbank(int n_mels, double fmin, double fmax, int fft_size,
                     int sample_rate) {
  const int n_bins = fft_size / 2 + 1;
  Matrix fb = Matrix::Zero(n_mels, n_bins);
  const double mel_lo = HzToMel(fmin);
  const double mel_hi = HzToMel(fmax);
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));
  }
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      fb(m, k) = w;
    }
  }
  return fb;
}

Matrix Mfcc(const AudioBuffer& x, const MfccParams& params) {
  if (params.fmax > x.sample_rate / 2.0 + 1e-9) {
    throw std::invalid_argument("mfcc: fmax exceeds Nyquist");
  }
  if (params.n_coeffs > params.n_mels) {
    throw std::invalid_argument("mfcc: more coefficients than mel bands");
  }
  const Spectrogram spec =
      Stft(x, {params.fft_size, params.hop(), Window::kHann});
  const Matrix fb = MelFilterbank(params.n_mels, params.fmin, params.fmax,
                                  params.fft_size, x.sample_rate);

  // Orthonormal DCT-II basis, [n_coeffs x n_mels].
  const int m_count = params.n_mels;
  Matrix dct(params.n_coeffs, m_count);
  for (int c = 0; c < params.n_coeffs; ++c) {
    const double scale =
        c == 0 ? std::sqrt(1.0 / m_count) : std::sqrt(2.0 / m_count);
    for (int m = 0; m < m_count; ++m) {
      dct(c, m) = scale * std::cos(kPi * c * (m + 0.5) / m_count);
    }
  }

  Matrix power(spec.num_frames, spec.num_bins);
  for (int t = 0; t < spec.num_frames; ++t) {
    for (int k = 0; k < spec.num_bins; ++k) power(t, k) = std::norm(spec.at(t, k));
  }
  Matrix logmel = power * fb.transpose();
  logmel = logmel.unaryExpr(
      [](double e) { return std::log(std::max(e, kLogFloor)); });
  return logmel * dct.transpose();
}

double AWeightingPowerGain(double hz) {
  auto ra = [](double f) {
    const double f2 = f * f;
    const double num = 12194.0 * 12194.0 * f2 * f2;
    const double den = (f2 + 20.6 * 20.6) *
                       std::sqrt((f2 + 107.7 * 107.7) * (f2 + 737.9 * 737.9)) *
                       (f2 + 12194.0 * 12194.0);
    return num / den;
  };
  const double r = ra(hz) / ra(1000.0);
  return r * r;
}

LoudnessTrack AWeightedLoudness(const AudioBuffer& x, int fft_size, int hop) {
  LoudnessTrack track;
  track.hop = hop;
  if (x.empty()) return track;
  const Spectrogram spec = Stft(x, {fft_size, hop, Window::kHann});
  const auto window = MakeWindow(Window::kHann, fft_size);
  double win_energy = 0.0;
  for (double w : window) win_energy += w * w;
  const double norm = 2.0 / (static_cast<double>(fft_size) * win_energy);

  std::vector<double> gain(spec.num_bins);
  for (int k = 0; k < spec.num_bins; ++k) {
    gain[k] = AWeightingPowerGain(spec.bin_hz(k));
  }
  track.values.resize(spec.num_frames);
  for (int t = 0; t < spec.num_frames; ++t) {
    double p = 0.0;
    for (int k = 0; k < spec.num_bins; ++k) p += gain[k] * std::norm(spec.at(t, k));
    const double db = 10.0 * std::log10(p * norm + 1e-9);
    track.values[t] = std::max(kLoudnessFloorDb, db);
  }
  return track;
}

}  // namespace bwe
