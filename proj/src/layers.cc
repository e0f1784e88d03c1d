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

#include "bwe/layers.h"

#include <cmath>

namespace bwe::nn {

Matrix UniformFanIn(Rng& rng, int rows, int cols, int fan_in) {
  const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = rng.Uniform(-limit, limit);
  }
  return m;
}

Dense Dense::Create(ParamStore& store, Rng& rng, const std::string& prefix,
                    int in, int out) {
  Dense d;
  d.w = store.Add(prefix + ".w", UniformFanIn(rng, out, in, in));
  d.b = store.Add(prefix + ".b", Matrix::Zero(1, out));
  return d;
}

Var Dense::operator()(Tape& t, const ParamStore& store, Var x) const {
  return Linear(t, x, t.Param(store, w), t.Param(store, b));
}

Mlp Mlp::Create(ParamStore& store, Rng& rng, const std::string& prefix,
                int in, int width, int layers) {
  Mlp m;
  for (int i = 0; i < layers; ++i) {
    const std::string p = prefix + "." + std::to_string(i);
    Block blk;
    blk.dense = Dense::Create(store, rng, p, i == 0 ? in : width, width);
    blk.ln_gain = store.Add(p + ".ln_gain", Matrix::Ones(1, width));
    blk.ln_bias = store.Add(p + ".ln_bias", Matrix::Zero(1, width));
    m.blocks.push_back(blk);
  }
  return m;
}

Var Mlp::operator()(Tape& t, const ParamStore& store, Var x) const {
  for (const auto& blk : blocks) {
    x = blk.dense(t, store, x);
    x = LayerNorm(t, x, t.Param(store, blk.ln_gain), t.Param(store, blk.ln_bias));
    x = LeakyRelu(t, x);
  }
  return x;
}

GruLayer GruLayer::Create(ParamStore& store, Rng& rng,
                          const std::string& prefix, int in, int units) {
  GruLayer g;
  g.units = units;
  g.w = store.Add(prefix + ".w", UniformFanIn(rng, 3 * units, in, units));
  g.u = store.Add(prefix + ".u", UniformFanIn(rng, 3 * units, units, units));
  g.b = store.Add(prefix + ".b", Matrix::Zero(1, 3 * units));
  return g;
}

Var GruLayer::operator()(Tape& t, const ParamStore& store, Var x) const {
  Var h0 = t.Constant(Matrix::Zero(1, units));
  return Gru(t, x, h0, t.Param(store, w), t.Param(store, u), t.Param(store, b));
}

}  // namespace bwe::nn
