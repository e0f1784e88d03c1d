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

#ifndef BWE_FFT_H_
#define BWE_FFT_H_

#include <complex>
#include <memory>
#include <span>

namespace bwe {

// Real-input FFT of fixed size backed by FFTW. Plans are created once per
// size (FFTW_ESTIMATE, so the algorithm choice is reproducible) and shared;
// executing a plan is thread-safe.
class RealFft {
 public:
  explicit RealFft(int size);

  int size() const { return size_; }
  int num_bins() const { return size_ / 2 + 1; }

  // out[k] = sum_j in[j] exp(-2 pi i j k / n), k = 0..n/2.
  void Forward(std::span<const double> in,
               std::span<std::complex<double>> out) const;

  // Unnormalized Hermitian inverse:
  // out[j] = Re(in[0]) + Re(in[n/2]) (-1)^j + 2 sum_{0<k<n/2} Re(in[k] e^{+2 pi i j k / n}).
  void InverseUnnormalized(std::span<const std::complex<double>> in,
                           std::span<double> out) const;

 private:
  struct Plans;
  int size_;
  std::shared_ptr<const Plans> plans_;
};

}  // namespace bwe

#endif  // BWE_FFT_H_
