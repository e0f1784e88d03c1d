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

#ifndef BWE_OPTIM_H_
#define BWE_OPTIM_H_

#include <functional>
#include <string>
#include <vector>

#include "bwe/nn.h"

namespace bwe::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Uses and increments ParamStore::step.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // Throws std::logic_error when no gradients were accumulated since the
  // last ZeroGrad.
  void Step(ParamStore& params);

  double lr() const { return config_.lr; }
  void set_lr(double lr) { config_.lr = lr; }
  const AdamConfig& config() const { return config_; }

  // Moment buffers, one per parameter tensor (empty before the first step).
  std::vector<Matrix>& first_moments() { return m_; }
  std::vector<Matrix>& second_moments() { return v_; }

 private:
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

double GlobalGradNorm(const ParamStore& params);
// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double ClipGradNorm(ParamStore& params, double max_norm);

struct TensorGradCheck {
  std::string name;
  std::size_t count = 0;
  std::size_t within_tolerance = 0;
  double max_rel_error = 0.0;
  double mean_rel_error = 0.0;
};

// An entry whose central difference missed the tolerance.
struct GradCheckMiss {
  std::size_t param = 0;
  Eigen::Index entry = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  // Smallest follow-up step that brought the entry within tolerance, 0 if
  // none did (or no follow-up was requested).
  double resolved_at = 0.0;
};

struct GradCheckReport {
  std::vector<TensorGradCheck> tensors;
  std::size_t total = 0;
  std::size_t within_tolerance = 0;
  double worst_rel_error = 0.0;
  std::vector<GradCheckMiss> misses;

  std::size_t resolved_misses() const {
    std::size_t n = 0;
    for (const auto& m : misses) n += m.resolved_at > 0.0;
    return n;
  }

  double fraction_within() const {
    return total == 0 ? 1.0 : static_cast<double>(within_tolerance) / total;
  }
};

struct GradCheckOptions {
  double eps = 1e-4;
  double tolerance = 1e-3;
  // Denominator floor: errors are relative to max(|analytic|, |numeric|,
  // abs_floor), so gradients far below the floor are compared absolutely.
  double abs_floor = 1e-6;
  // Steps tried, in order, on entries that miss at eps. A miss that passes
  // at a smaller step points at a kink or strong curvature within +-eps
  // rather than a wrong gradient.
  std::vector<double> follow_up_eps;
};

// Compares tape gradients of the scalar f against central finite
// differences for every parameter scalar. f must be deterministic.
GradCheckReport GradCheck(const std::function<Var(Tape&)>& f,
                          ParamStore& params, const GradCheckOptions& opts = {});

}  // namespace bwe::nn

#endif  // BWE_OPTIM_H_
