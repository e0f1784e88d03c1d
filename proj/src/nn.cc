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

#include "bwe/nn.h"

#include <cmath>
#include <stdexcept>

namespace bwe::nn {

std::size_t ParamStore::Add(std::string name, Matrix init) {
  if (Contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  Matrix g = Matrix::Zero(init.rows(), init.cols());
  entries_.push_back({std::move(name), std::move(init), std::move(g)});
  return entries_.size() - 1;
}

bool ParamStore::Contains(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

std::size_t ParamStore::IndexOf(std::string_view name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name == name) return i;
  }
  throw std::out_of_range("unknown parameter " + std::string(name));
}

std::size_t ParamStore::ScalarCount() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.value.size());
  return n;
}

void ParamStore::ZeroGrad() {
  for (auto& e : entries_) e.grad.setZero();
  grads_populated_ = false;
}

// ---------------------------------------------------------------------------

Var Tape::Constant(Matrix value) {
  Node n;
  n.owned = std::move(value);
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Param(const ParamStore& store, std::size_t index) {
  if (store_ != nullptr && store_ != &store) {
    throw std::logic_error("tape parameters must come from one store");
  }
  store_ = &store;
  Node n;
  n.external = &store.value(index);
  n.param_index = static_cast<int>(index);
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

Var Tape::Record(Matrix value, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  if (requires_grad_) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::value(Var v) const {
  const Node& n = nodes_[v.id];
  return n.external != nullptr ? *n.external : n.owned;
}

Matrix& Tape::MutableGrad(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() == 0) {
    const Matrix& val = value(v);
    n.grad = Matrix::Zero(val.rows(), val.cols());
  }
  return n.grad;
}

void Tape::AccumulateGrad(Var v, const Matrix& g) {
  Matrix& dst = MutableGrad(v);
  if (dst.rows() != g.rows() || dst.cols() != g.cols()) {
    throw std::logic_error("gradient shape mismatch");
  }
  dst += g;
}

void Tape::Backward(Var output) {
  if (!requires_grad_) throw std::logic_error("tape does not record gradients");
  const Matrix& out = value(output);
  if (out.rows() != 1 || out.cols() != 1) {
    throw std::invalid_argument("Backward needs a scalar output");
  }
  for (auto& n : nodes_) n.grad.resize(0, 0);
  MutableGrad(output)(0, 0) = 1.0;
  for (int i = output.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

void Tape::AddParamGradsTo(ParamStore& store) const {
  if (store_ != nullptr && store_ != &store) {
    throw std::logic_error("gradients belong to a different store");
  }
  for (const auto& n : nodes_) {
    if (n.param_index >= 0 && n.grad.size() != 0) {
      store.grad(n.param_index) += n.grad;
    }
  }
  store.MarkGradsPopulated();
}

// ---------------------------------------------------------------------------

double Logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {
const double kLn10 = std::log(10.0);
}  // namespace

double ModifiedSigmoid(double x) {
  return 2.0 * std::pow(Logistic(x), kLn10) + 1e-7;
}

double ModifiedSigmoidDerivative(double x) {
  const double s = Logistic(x);
  return 2.0 * kLn10 * std::pow(s, kLn10) * (1.0 - s);
}

namespace {

void CheckSameShape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

}  // namespace

Var Add(Tape& t, Var a, Var b) {
  CheckSameShape(t.value(a), t.value(b), "add");
  return t.Record(t.value(a) + t.value(b), [a, b](Tape& tp, const Matrix& g) {
    tp.AccumulateGrad(a, g);
    tp.AccumulateGrad(b, g);
  });
}

Var Sub(Tape& t, Var a, Var b) {
  CheckSameShape(t.value(a), t.value(b), "sub");
  return t.Record(t.value(a) - t.value(b), [a, b](Tape& tp, const Matrix& g) {
    tp.AccumulateGrad(a, g);
    tp.AccumulateGrad(b, -g);
  });
}

Var Mul(Tape& t, Var a, Var b) {
  CheckSameShape(t.value(a), t.value(b), "mul");
  return t.Record(t.value(a).cwiseProduct(t.value(b)),
                  [a, b](Tape& tp, const Matrix& g) {
                    tp.AccumulateGrad(a, g.cwiseProduct(tp.value(b)));
                    tp.AccumulateGrad(b, g.cwiseProduct(tp.value(a)));
                  });
}

Var Scale(Tape& t, Var a, double c) {
  return t.Record(t.value(a) * c, [a, c](Tape& tp, const Matrix& g) {
    tp.AccumulateGrad(a, g * c);
  });
}

Var Sum(Tape& t, Var a) {
  Matrix out(1, 1);
  out(0, 0) = t.value(a).sum();
  return t.Record(std::move(out), [a](Tape& tp, const Matrix& g) {
    Matrix& dst = tp.MutableGrad(a);
    dst.array() += g(0, 0);
  });
}

Var SumSquares(Tape& t, Var a) {
  Matrix out(1, 1);
  out(0, 0) = t.value(a).squaredNorm();
  return t.Record(std::move(out), [a](Tape& tp, const Matrix& g) {
    tp.AccumulateGrad(a, 2.0 * g(0, 0) * tp.value(a));
  });
}

Var Linear(Tape& t, Var x, Var w, Var b) {
  const Matrix& xv = t.value(x);
  const Matrix& wv = t.value(w);
  const Matrix& bv = t.value(b);
  if (xv.cols() != wv.cols() || bv.rows() != 1 || bv.cols() != wv.rows()) {
    throw std::invalid_argument("linear: shape mismatch");
  }
  Matrix out = xv * wv.transpose();
  out.rowwise() += bv.row(0);
  return t.Record(std::move(out), [x, w, b](Tape& tp, const Matrix& g) {
    tp.MutableGrad(x).noalias() += g * tp.value(w);
    tp.MutableGrad(w).noalias() += g.transpose() * tp.value(x);
    tp.MutableGrad(b) += g.colwise().sum();
  });
}

Var AffineCols(Tape& t, Var x, Var scale, Var shift) {
  const Matrix& xv = t.value(x);
  const Matrix& sv = t.value(scale);
  const Matrix& hv = t.value(shift);
  if (sv.rows() != 1 || hv.rows() != 1 || sv.cols() != xv.cols() ||
      hv.cols() != xv.cols()) {
    throw std::invalid_argument("affine_cols: shape mismatch");
  }
  Matrix out = xv.array().rowwise() * sv.row(0).array();
  out.rowwise() += hv.row(0);
  return t.Record(std::move(out), [x, scale, shift](Tape& tp, const Matrix& g) {
    const Matrix& xv = tp.value(x);
    const Matrix& sv = tp.value(scale);
    Matrix dx = g.array().rowwise() * sv.row(0).array();
    tp.AccumulateGrad(x, dx);
    tp.MutableGrad(scale) += g.cwiseProduct(xv).colwise().sum();
    tp.MutableGrad(shift) += g.colwise().sum();
  });
}

Var LayerNorm(Tape& t, Var x, Var gain, Var bias, double eps) {
  const Matrix& xv = t.value(x);
  const Matrix& gv = t.value(gain);
  const Matrix& bv = t.value(bias);
  const auto d = xv.cols();
  if (gv.rows() != 1 || gv.cols() != d || bv.rows() != 1 || bv.cols() != d) {
    throw std::invalid_argument("layer_norm: shape mismatch");
  }
  Matrix xhat(xv.rows(), d);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  Matrix out = xhat.array().rowwise() * gv.row(0).array();
  out.rowwise() += bv.row(0);
  return t.Record(std::move(out), [x, gain, bias, xhat, inv_std](
                                      Tape& tp, const Matrix& g) {
    const Matrix& gv = tp.value(gain);
    tp.MutableGrad(gain) += g.cwiseProduct(xhat).colwise().sum();
    tp.MutableGrad(bias) += g.colwise().sum();
    const Matrix dxhat = g.array().rowwise() * gv.row(0).array();
    Matrix& dx = tp.MutableGrad(x);
    for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
      const double m1 = dxhat.row(r).mean();
      const double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).mean();
      dx.row(r).array() += inv_std(r) * (dxhat.row(r).array() - m1 -
                                         xhat.row(r).array() * m2);
    }
  });
}

Var LeakyRelu(Tape& t, Var x, double slope) {
  Matrix out = t.value(x).unaryExpr(
      [slope](double v) { return v > 0 ? v : slope * v; });
  return t.Record(std::move(out), [x, slope](Tape& tp, const Matrix& g) {
    const Matrix& xv = tp.value(x);
    Matrix d = g;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      if (!(xv.data()[i] > 0)) d.data()[i] *= slope;
    }
    tp.AccumulateGrad(x, d);
  });
}

Var ModifiedSigmoid(Tape& t, Var x) {
  Matrix out = t.value(x).unaryExpr([](double v) { return ModifiedSigmoid(v); });
  return t.Record(std::move(out), [x](Tape& tp, const Matrix& g) {
    Matrix d = tp.value(x).unaryExpr(
        [](double v) { return ModifiedSigmoidDerivative(v); });
    tp.AccumulateGrad(x, d.cwiseProduct(g));
  });
}

Var SoftmaxRows(Tape& t, Var x) {
  const Matrix& xv = t.value(x);
  Matrix out(xv.rows(), xv.cols());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mx = xv.row(r).maxCoeff();
    out.row(r) = (xv.row(r).array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  Matrix y = out;
  return t.Record(std::move(out), [x, y](Tape& tp, const Matrix& g) {
    Matrix& dx = tp.MutableGrad(x);
    for (Eigen::Index r = 0; r < y.rows(); ++r) {
      const double dot = g.row(r).dot(y.row(r));
      dx.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
    }
  });
}

Var ConcatCols(Tape& t, const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  const auto rows = t.value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (t.value(p).rows() != rows) {
      throw std::invalid_argument("concat: row mismatch");
    }
    cols += t.value(p).cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    const Matrix& v = t.value(p);
    out.middleCols(c, v.cols()) = v;
    c += v.cols();
  }
  return t.Record(std::move(out), [parts](Tape& tp, const Matrix& g) {
    Eigen::Index c = 0;
    for (Var p : parts) {
      const auto w = tp.value(p).cols();
      tp.MutableGrad(p) += g.middleCols(c, w);
      c += w;
    }
  });
}

Var SliceCols(Tape& t, Var x, int start, int count) {
  const Matrix& xv = t.value(x);
  if (start < 0 || count < 0 || start + count > xv.cols()) {
    throw std::invalid_argument("slice: out of range");
  }
  Matrix out = xv.middleCols(start, count);
  return t.Record(std::move(out), [x, start, count](Tape& tp, const Matrix& g) {
    tp.MutableGrad(x).middleCols(start, count) += g;
  });
}

Var MulColBroadcast(Tape& t, Var col, Var m) {
  const Matrix& cv = t.value(col);
  const Matrix& mv = t.value(m);
  if (cv.cols() != 1 || cv.rows() != mv.rows()) {
    throw std::invalid_argument("mul_col_broadcast: shape mismatch");
  }
  Matrix out = mv.array().colwise() * cv.col(0).array();
  return t.Record(std::move(out), [col, m](Tape& tp, const Matrix& g) {
    const Matrix& cv = tp.value(col);
    const Matrix& mv = tp.value(m);
    tp.MutableGrad(col) += g.cwiseProduct(mv).rowwise().sum();
    Matrix dm = g.array().colwise() * cv.col(0).array();
    tp.AccumulateGrad(m, dm);
  });
}

Var Gru(Tape& t, Var x, Var h0, Var w, Var u, Var b) {
  const Matrix& xv = t.value(x);
  const Matrix& wv = t.value(w);
  const Matrix& uv = t.value(u);
  const Matrix& bv = t.value(b);
  const Matrix& hv = t.value(h0);
  const auto n_h = uv.cols();
  if (uv.rows() != 3 * n_h || wv.rows() != 3 * n_h || wv.cols() != xv.cols() ||
      bv.rows() != 1 || bv.cols() != 3 * n_h || hv.rows() != 1 ||
      hv.cols() != n_h) {
    throw std::invalid_argument("gru: shape mismatch");
  }
  const auto steps = xv.rows();

  // Input projections for all steps at once.
  Matrix xp = xv * wv.transpose();
  xp.rowwise() += bv.row(0);

  Matrix hs(steps, n_h);
  // Saved activations for the backward pass.
  Matrix zs(steps, n_h), rs(steps, n_h), ns(steps, n_h), hpn(steps, n_h);
  Eigen::VectorXd h = hv.row(0).transpose();
  Eigen::VectorXd hp(3 * n_h);
  for (Eigen::Index s = 0; s < steps; ++s) {
    hp.noalias() = uv * h;
    for (Eigen::Index j = 0; j < n_h; ++j) {
      const double z = Logistic(xp(s, j) + hp(j));
      const double r = Logistic(xp(s, n_h + j) + hp(n_h + j));
      const double n = std::tanh(xp(s, 2 * n_h + j) + r * hp(2 * n_h + j));
      zs(s, j) = z;
      rs(s, j) = r;
      ns(s, j) = n;
      hpn(s, j) = hp(2 * n_h + j);
      h(j) = (1.0 - z) * n + z * h(j);
    }
    hs.row(s) = h.transpose();
  }
  if (!t.requires_grad()) return t.Record(std::move(hs), nullptr);

  Matrix hs_copy = hs;
  return t.Record(std::move(hs), [x, h0, w, u, b, zs, rs, ns, hpn,
                                  hs = std::move(hs_copy)](Tape& tp,
                                                           const Matrix& g) {
    const Matrix& uv = tp.value(u);
    const Matrix& h0v = tp.value(h0);
    const auto steps = g.rows();
    const auto n_h = g.cols();
    Matrix dxp(steps, 3 * n_h);   // grads of input pre-activations
    Matrix dhp(steps, 3 * n_h);   // grads of U h
    Matrix hprev(steps, n_h);
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(n_h);
    for (Eigen::Index s = steps - 1; s >= 0; --s) {
      const auto prev = s > 0 ? hs.row(s - 1) : h0v.row(0);
      hprev.row(s) = prev;
      for (Eigen::Index j = 0; j < n_h; ++j) {
        const double dh = g(s, j) + dh_next(j);
        const double z = zs(s, j), r = rs(s, j), n = ns(s, j);
        const double dn = dh * (1.0 - z);
        const double dz = dh * (prev(j) - n);
        const double da_n = dn * (1.0 - n * n);
        const double da_z = dz * z * (1.0 - z);
        const double da_r = da_n * hpn(s, j) * r * (1.0 - r);
        dxp(s, j) = da_z;
        dxp(s, n_h + j) = da_r;
        dxp(s, 2 * n_h + j) = da_n;
        dhp(s, j) = da_z;
        dhp(s, n_h + j) = da_r;
        dhp(s, 2 * n_h + j) = da_n * r;
        dh_next(j) = dh * z;
      }
      dh_next.noalias() += uv.transpose() * dhp.row(s).transpose();
    }
    tp.MutableGrad(h0) += dh_next.transpose();
    tp.MutableGrad(u).noalias() += dhp.transpose() * hprev;
    tp.MutableGrad(w).noalias() += dxp.transpose() * tp.value(x);
    tp.MutableGrad(b) += dxp.colwise().sum();
    tp.MutableGrad(x).noalias() += dxp * tp.value(w);
  });
}

}  // namespace bwe::nn
