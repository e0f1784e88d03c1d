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

#include "bwe/loss.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bwe/fft.h"
#include "bwe/stft.h"

namespace bwe {

void MssConfig::Validate() const {
  if (fft_sizes.empty()) throw std::invalid_argument("mss: no fft sizes");
  for (int s : fft_sizes) {
    if (s < 4 || (s & (s - 1)) != 0) {
      throw std::invalid_argument("mss: fft sizes must be powers of two >= 4");
    }
  }
  if (hop_divisor < 1) throw std::invalid_argument("mss: hop divisor must be >= 1");
  if (high_band_only && !(cutoff_hz >= 0.0)) {
    throw std::invalid_argument("mss: cutoff must be non-negative");
  }
}

namespace {

void CheckPair(const AudioBuffer& y, const AudioBuffer& y_hat, const char* what) {
  if (y.size() != y_hat.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" +
                                std::to_string(y.size()) + " vs " +
                                std::to_string(y_hat.size()) + ")");
  }
  if (y.empty()) throw std::invalid_argument(std::string(what) + ": empty signal");
}

struct Scale {
  StftParams params;
  int first_bin = 0;
};

std::vector<Scale> Scales(const MssConfig& c, int sample_rate) {
  std::vector<Scale> out;
  for (int s : c.fft_sizes) {
    Scale sc;
    sc.params.fft_size = s;
    sc.params.hop = std::max(1, s / c.hop_divisor);
    sc.first_bin = c.high_band_only ? CutoffBin(c.cutoff_hz, s, sample_rate) : 0;
    sc.first_bin = std::min(sc.first_bin, s / 2 + 1);
    out.push_back(sc);
  }
  return out;
}

double LogMag(double m) { return std::log(std::max(m, kLogFloor)); }

double Sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// One scale's loss; when grad is non-null, adds d loss / d y_hat into it.
MssTerms ScaleLoss(const Spectrogram& sy, const AudioBuffer& y_hat, const Scale& sc,
                   std::vector<double>* grad) {
  const Spectrogram sh = Stft(y_hat, sc.params);
  const int bins = sh.num_bins;
  const int used = bins - sc.first_bin;
  if (used <= 0) return {};
  const double norm = 1.0 / (static_cast<double>(sh.num_frames) * used);
  double mag_sum = 0.0, log_sum = 0.0;
  for (int t = 0; t < sh.num_frames; ++t) {
    for (int k = sc.first_bin; k < bins; ++k) {
      const double a = std::abs(sy.at(t, k)), b = std::abs(sh.at(t, k));
      mag_sum += std::abs(a - b);
      log_sum += std::abs(LogMag(a) - LogMag(b));
    }
  }
  if (grad) {
    const int n_fft = sc.params.fft_size;
    const int half = n_fft / 2;
    const auto window = MakeWindow(sc.params.window, n_fft);
    const RealFft fft(n_fft);
    std::vector<std::complex<double>> c(bins);
    std::vector<double> seg(n_fft);
    for (int t = 0; t < sh.num_frames; ++t) {
      std::fill(c.begin(), c.end(), std::complex<double>(0.0, 0.0));
      for (int k = sc.first_bin; k < bins; ++k) {
        const std::complex<double> x = sh.at(t, k);
        const double b = std::abs(x);
        if (b == 0.0) continue;
        const double a = std::abs(sy.at(t, k));
        double g = Sign(b - a);
        if (b > kLogFloor) g += Sign(LogMag(b) - LogMag(a)) / b;
        // d|X|/ds_j = Re(conj(X) e^{-i w j}) / |X|, so the frame gradient is
        // Re(sum_k g_k X_k / |X_k| e^{+i w j}); interior bins are halved
        // because the Hermitian inverse doubles them.
        const double scale = (k == 0 || k == half) ? 1.0 : 0.5;
        c[k] = norm * g * scale * x / b;
      }
      fft.InverseUnnormalized(c, seg);
      const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t) * sc.params.hop - half;
      for (int j = 0; j < n_fft; ++j) {
        (*grad)[ReflectIndex(start + j, y_hat.size())] += window[j] * seg[j];
      }
    }
  }
  return {norm * mag_sum, norm * log_sum};
}

MssTerms Loss(const AudioBuffer& y, const AudioBuffer& y_hat, const MssConfig& config,
              std::vector<double>* grad) {
  config.Validate();
  CheckPair(y, y_hat, "mss_loss");
  MssTerms total;
  for (const Scale& sc : Scales(config, y.sample_rate)) {
    const MssTerms s = ScaleLoss(Stft(y, sc.params), y_hat, sc, grad);
    total.magnitude += s.magnitude;
    total.log_magnitude += s.log_magnitude;
  }
  return total;
}

}  // namespace

double MssLoss(const AudioBuffer& y, const AudioBuffer& y_hat, const MssConfig& config) {
  return Loss(y, y_hat, config, nullptr).total();
}

MssTerms MssLossTerms(const AudioBuffer& y, const AudioBuffer& y_hat, const MssConfig& config) {
  return Loss(y, y_hat, config, nullptr);
}

nn::Var MssLossOp(nn::Tape& t, nn::Var y_hat, const AudioBuffer& y,
                  const MssConfig& config) {
  const Matrix& v = t.value(y_hat);
  if (v.rows() != 1) throw std::invalid_argument("mss_loss: prediction must be a row");
  AudioBuffer pred(std::vector<double>(v.data(), v.data() + v.size()), y.sample_rate);
  std::vector<double> grad;
  if (t.requires_grad()) grad.assign(pred.size(), 0.0);
  const double loss = Loss(y, pred, config, t.requires_grad() ? &grad : nullptr).total();
  Matrix out(1, 1);
  out(0, 0) = loss;
  return t.Record(std::move(out), [y_hat, g = std::move(grad)](nn::Tape& tape,
                                                               const Matrix& og) {
    Matrix d = Eigen::Map<const Matrix>(g.data(), 1, static_cast<Eigen::Index>(g.size()));
    d *= og(0, 0);
    tape.AccumulateGrad(y_hat, d);
  });
}

double Lsd(const AudioBuffer& y, const AudioBuffer& y_hat, const LsdOptions& options) {
  CheckPair(y, y_hat, "lsd");
  StftParams p;
  p.fft_size = options.fft_size;
  p.hop = options.hop;
  const Spectrogram a = Stft(y, p), b = Stft(y_hat, p);
  double total = 0.0;
  for (int t = 0; t < a.num_frames; ++t) {
    double acc = 0.0;
    for (int k = 0; k < a.num_bins; ++k) {
      const double d = std::log10(std::max(std::norm(a.at(t, k)), kLogFloor)) -
                       std::log10(std::max(std::norm(b.at(t, k)), kLogFloor));
      acc += options.literal ? d : d * d;
    }
    acc /= a.num_bins;
    total += std::sqrt(options.literal ? std::abs(acc) : acc);
  }
  return total / a.num_frames;
}

}  // namespace bwe
