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

#include "bwe/fft.h"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace bwe {

struct RealFft::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
  ~Plans() {
    if (forward) fftw_destroy_plan(forward);
    if (inverse) fftw_destroy_plan(inverse);
  }
};

namespace {

std::mutex& PlannerMutex() {
  static std::mutex m;
  return m;
}

}  // namespace

RealFft::RealFft(int size) : size_(size) {
  if (size < 2) throw std::invalid_argument("FFT size must be at least 2");
  static std::map<int, std::shared_ptr<const Plans>> cache;
  std::lock_guard<std::mutex> lock(PlannerMutex());
  auto it = cache.find(size);
  if (it != cache.end()) {
    plans_ = it->second;
    return;
  }
  auto plans = std::make_shared<Plans>();
  std::vector<double> real(size);
  std::vector<fftw_complex> spec(size / 2 + 1);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plans->forward =
      fftw_plan_dft_r2c_1d(size, real.data(), spec.data(), flags);
  plans->inverse =
      fftw_plan_dft_c2r_1d(size, spec.data(), real.data(), flags);
  if (!plans->forward || !plans->inverse) {
    throw std::runtime_error("FFTW planning failed");
  }
  cache.emplace(size, plans);
  plans_ = std::move(plans);
}

void RealFft::Forward(std::span<const double> in,
                      std::span<std::complex<double>> out) const {
  if (static_cast<int>(in.size()) != size_ ||
      static_cast<int>(out.size()) != num_bins()) {
    throw std::invalid_argument("RealFft::Forward: buffer size mismatch");
  }
  // r2c leaves its input untouched.
  fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(out.data()));
}

void RealFft::InverseUnnormalized(std::span<const std::complex<double>> in,
                                  std::span<double> out) const {
  if (static_cast<int>(in.size()) != num_bins() ||
      static_cast<int>(out.size()) != size_) {
    throw std::invalid_argument("RealFft::Inverse: buffer size mismatch");
  }
  // c2r overwrites its input.
  std::vector<std::complex<double>> scratch(in.begin(), in.end());
  fftw_execute_dft_c2r(plans_->inverse,
                       reinterpret_cast<fftw_complex*>(scratch.data()),
                       out.data());
}

}  // namespace bwe
