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

#ifndef BWE_LAYERS_H_
#define BWE_LAYERS_H_

#include <string>
#include <vector>

#include "bwe/nn.h"
#include "bwe/rng.h"

namespace bwe::nn {

// Weight init: uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Matrix UniformFanIn(Rng& rng, int rows, int cols, int fan_in);

struct Dense {
  std::size_t w = 0;
  std::size_t b = 0;

  static Dense Create(ParamStore& store, Rng& rng, const std::string& prefix,
                      int in, int out);
  Var operator()(Tape& t, const ParamStore& store, Var x) const;
};

// Stack of dense -> layer norm -> leaky ReLU blocks.
struct Mlp {
  struct Block {
    Dense dense;
    std::size_t ln_gain = 0;
    std::size_t ln_bias = 0;
  };
  std::vector<Block> blocks;

  static Mlp Create(ParamStore& store, Rng& rng, const std::string& prefix,
                    int in, int width, int layers = 3);
  Var operator()(Tape& t, const ParamStore& store, Var x) const;
};

// GRU layer starting from a zero state.
struct GruLayer {
  std::size_t w = 0;
  std::size_t u = 0;
  std::size_t b = 0;
  int units = 0;

  static GruLayer Create(ParamStore& store, Rng& rng, const std::string& prefix,
                         int in, int units);
  Var operator()(Tape& t, const ParamStore& store, Var x) const;
};

}  // namespace bwe::nn

#endif  // BWE_LAYERS_H_
