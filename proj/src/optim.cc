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

#include "bwe/optim.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bwe::nn {

void Adam::Step(ParamStore& params) {
  if (!params.grads_populated()) {
    throw std::logic_error("adam: no gradients accumulated");
  }
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_.push_back(Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
      v_.push_back(Matrix::Zero(params.value(i).rows(), params.value(i).cols()));
    }
  }
  ++params.step;
  const double t = static_cast<double>(params.step);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& g = params.grad(i);
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    params.value(i).array() -=
        config_.lr * (m_[i].array() / c1) /
        ((v_[i].array() / c2).sqrt() + config_.eps);
  }
}

double GlobalGradNorm(const ParamStore& params) {
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) sq += params.grad(i).squaredNorm();
  return std::sqrt(sq);
}

double ClipGradNorm(ParamStore& params, double max_norm) {
  const double norm = GlobalGradNorm(params);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (std::size_t i = 0; i < params.size(); ++i) params.grad(i) *= s;
  }
  return norm;
}

namespace {

double RelError(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

}  // namespace

GradCheckReport GradCheck(const std::function<Var(Tape&)>& f,
                          ParamStore& params, const GradCheckOptions& opts) {
  std::vector<Matrix> analytic;
  {
    Tape tape(true);
    Var out = f(tape);
    tape.Backward(out);
    params.ZeroGrad();
    tape.AddParamGradsTo(params);
    for (std::size_t i = 0; i < params.size(); ++i) analytic.push_back(params.grad(i));
    params.ZeroGrad();
  }
  auto eval = [&]() {
    Tape tape(false);
    return tape.value(f(tape))(0, 0);
  };

  GradCheckReport report;
  for (std::size_t i = 0; i < params.size(); ++i) {
    TensorGradCheck tc;
    tc.name = params.name(i);
    Matrix& value = params.value(i);
    double err_sum = 0.0;
    for (Eigen::Index j = 0; j < value.size(); ++j) {
      const double orig = value.data()[j];
      value.data()[j] = orig + opts.eps;
      const double fp = eval();
      value.data()[j] = orig - opts.eps;
      const double fm = eval();
      value.data()[j] = orig;
      const double numeric = (fp - fm) / (2.0 * opts.eps);
      const double a = analytic[i].data()[j];
      const double rel = RelError(a, numeric, opts.abs_floor);
      err_sum += rel;
      tc.max_rel_error = std::max(tc.max_rel_error, rel);
      if (rel <= opts.tolerance) {
        ++tc.within_tolerance;
      } else {
        GradCheckMiss miss{i, j, a, numeric, rel, 0.0};
        for (double e : opts.follow_up_eps) {
          value.data()[j] = orig + e;
          const double p = eval();
          value.data()[j] = orig - e;
          const double m = eval();
          value.data()[j] = orig;
          if (RelError(a, (p - m) / (2.0 * e), opts.abs_floor) <= opts.tolerance) {
            miss.resolved_at = e;
            break;
          }
        }
        report.misses.push_back(miss);
      }
      ++tc.count;
    }
    tc.mean_rel_error = tc.count ? err_sum / tc.count : 0.0;
    report.total += tc.count;
    report.within_tolerance += tc.within_tolerance;
    report.worst_rel_error = std::max(report.worst_rel_error, tc.max_rel_error);
    report.tensors.push_back(std::move(tc));
  }
  return report;
}

}  // namespace bwe::nn
