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

#ifndef BWE_NN_H_
#define BWE_NN_H_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "bwe/common.h"

namespace bwe::nn {

// Named trainable tensors, each paired with a gradient slot of the same
// shape.
class ParamStore {
 public:
  std::size_t Add(std::string name, Matrix init);

  std::size_t size() const { return entries_.size(); }
  bool Contains(std::string_view name) const;
  // Throws std::out_of_range for unknown names.
  std::size_t IndexOf(std::string_view name) const;

  const std::string& name(std::size_t i) const { return entries_[i].name; }
  Matrix& value(std::size_t i) { return entries_[i].value; }
  const Matrix& value(std::size_t i) const { return entries_[i].value; }
  Matrix& grad(std::size_t i) { return entries_[i].grad; }
  const Matrix& grad(std::size_t i) const { return entries_[i].grad; }

  // Exact number of trainable scalars.
  std::size_t ScalarCount() const;

  void ZeroGrad();
  bool grads_populated() const { return grads_populated_; }
  void MarkGradsPopulated() { grads_populated_ = true; }

  std::uint64_t step = 0;
  std::uint64_t init_seed = 0;

 private:
  struct Entry {
    std::string name;
    Matrix value;
    Matrix grad;
  };
  std::vector<Entry> entries_;
  bool grads_populated_ = false;
};

inline std::size_t ParamCount(const ParamStore& params) {
  return params.ScalarCount();
}

// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Records one forward pass. Nodes are appended in evaluation order, which is
// a topological order, so Backward walks them in reverse exactly once.
// With requires_grad = false no backward closures are stored (inference).
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& out_grad)>;

  explicit Tape(bool requires_grad = true) : requires_grad_(requires_grad) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool requires_grad() const { return requires_grad_; }

  Var Constant(Matrix value);
  // References the stored tensor without copying; the store must outlive
  // the tape. All parameters on one tape must come from the same store.
  Var Param(const ParamStore& store, std::size_t index);
  Var Record(Matrix value, BackwardFn backward);

  const Matrix& value(Var v) const;
  // Gradient of the last Backward output w.r.t. v; empty when v did not
  // influence it.
  const Matrix& grad(Var v) const { return nodes_[v.id].grad; }

  // Adds g into v's gradient slot (used by backward closures).
  void AccumulateGrad(Var v, const Matrix& g);
  // Zero-initialized gradient slot for in-place accumulation.
  Matrix& MutableGrad(Var v);

  // output must be 1x1.
  void Backward(Var output);

  // Adds the parameter gradients of the last Backward into store.grad().
  void AddParamGradsTo(ParamStore& store) const;

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix owned;
    const Matrix* external = nullptr;
    Matrix grad;
    BackwardFn backward;
    int param_index = -1;
  };
  bool requires_grad_;
  const ParamStore* store_ = nullptr;
  std::deque<Node> nodes_;
};

// ---- Scalar helpers -------------------------------------------------------

double Logistic(double x);
// 2 * logistic(x)^ln(10) + 1e-7, range (1e-7, 2 + 1e-7).
double ModifiedSigmoid(double x);
double ModifiedSigmoidDerivative(double x);

// ---- Differentiable ops ---------------------------------------------------

Var Add(Tape& t, Var a, Var b);
Var Sub(Tape& t, Var a, Var b);
Var Mul(Tape& t, Var a, Var b);
Var Scale(Tape& t, Var a, double c);
Var Sum(Tape& t, Var a);
Var SumSquares(Tape& t, Var a);

// x [T x in] * W^T [in x out] + b [1 x out].
Var Linear(Tape& t, Var x, Var w, Var b);
// Per-column x * scale + shift; scale and shift are [1 x d].
Var AffineCols(Tape& t, Var x, Var scale, Var shift);
// Row-wise layer normalization with trainable gain and bias [1 x d].
Var LayerNorm(Tape& t, Var x, Var gain, Var bias, double eps = 1e-5);
Var LeakyRelu(Tape& t, Var x, double slope = 0.2);
Var ModifiedSigmoid(Tape& t, Var x);
Var SoftmaxRows(Tape& t, Var x);
Var ConcatCols(Tape& t, const std::vector<Var>& parts);
Var SliceCols(Tape& t, Var x, int start, int count);
// col [T x 1] broadcast-multiplied into m [T x H].
Var MulColBroadcast(Tape& t, Var col, Var m);

// GRU over a sequence x [T x in] from initial state h0 [1 x H]:
//   z = sigmoid(W_z x + U_z h + b_z)
//   r = sigmoid(W_r x + U_r h + b_r)
//   n = tanh(W_n x + r * (U_n h) + b_n)
//   h' = (1 - z) * n + z * h
// W [3H x in], U [3H x H], b [1 x 3H], gate blocks stacked in order z, r, n.
// Returns the hidden states [T x H].
Var Gru(Tape& t, Var x, Var h0, Var w, Var u, Var b);
// Single step: x [1 x in], h [1 x H] -> h' [1 x H].
inline Var GruStep(Tape& t, Var x, Var h, Var w, Var u, Var b) {
  return Gru(t, x, h, w, u, b);
}

}  // namespace bwe::nn

#endif  // BWE_NN_H_
