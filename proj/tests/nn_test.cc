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

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "bwe/layers.h"
#include "bwe/nn.h"
#include "bwe/optim.h"
#include "bwe/rng.h"

using namespace bwe;
using namespace bwe::nn;
using Catch::Approx;

namespace {

Matrix RandomMatrix(int r, int c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.Normal();
  return m;
}

// Fixed random projection to a scalar so that every output element gets a
// distinct gradient.
Var Project(Tape& t, Var y, std::uint64_t seed) {
  const Matrix& v = t.value(y);
  Var p = t.Constant(RandomMatrix(static_cast<int>(v.rows()), static_cast<int>(v.cols()), seed));
  return Sum(t, Mul(t, y, p));
}

}  // namespace

TEST_CASE("grad check on a quadratic is exact", "[gradcheck]") {
  ParamStore store;
  Matrix th(1, 1);
  th(0, 0) = 3.0;
  const auto i = store.Add("theta", th);
  Tape t;
  Var y = SumSquares(t, t.Param(store, i));
  t.Backward(y);
  store.ZeroGrad();
  t.AddParamGradsTo(store);
  CHECK(store.grad(i)(0, 0) == 6.0);
  const auto rep = GradCheck([&](Tape& tt) { return SumSquares(tt, tt.Param(store, i)); }, store);
  CHECK(rep.worst_rel_error < 1e-9);
}

TEST_CASE("dense layer under L2 loss passes grad check at 1e-6", "[gradcheck]") {
  ParamStore store;
  Rng rng(1);
  const auto d = Dense::Create(store, rng, "d", 5, 4);
  const Matrix x = RandomMatrix(7, 5, 2);
  const Matrix target = RandomMatrix(7, 4, 3);
  auto f = [&](Tape& t) {
    Var y = d(t, store, t.Constant(x));
    return SumSquares(t, Sub(t, y, t.Constant(target)));
  };
  GradCheckOptions opts;
  opts.tolerance = 1e-6;
  const auto rep = GradCheck(f, store, opts);
  CHECK(rep.fraction_within() == 1.0);
  CHECK(rep.worst_rel_error <= 1e-6);
}

TEST_CASE("every op passes grad check", "[gradcheck]") {
  ParamStore store;
  const auto a = store.Add("a", RandomMatrix(4, 6, 10));
  const auto b = store.Add("b", RandomMatrix(4, 6, 11));
  const auto g = store.Add("g", RandomMatrix(1, 6, 12));
  const auto s = store.Add("s", RandomMatrix(1, 6, 13));
  const auto c = store.Add("c", RandomMatrix(4, 1, 14));
  GradCheckOptions linear_opts;
  linear_opts.tolerance = 1e-4;

  struct Case {
    const char* name;
    std::function<Var(Tape&)> f;
    bool linear;
  };
  auto P = [&](Tape& t, std::size_t i) { return t.Param(store, i); };
  const std::vector<Case> cases = {
      {"add", [&](Tape& t) { return Project(t, Add(t, P(t, a), P(t, b)), 1); }, true},
      {"sub", [&](Tape& t) { return Project(t, Sub(t, P(t, a), P(t, b)), 2); }, true},
      {"mul", [&](Tape& t) { return Project(t, Mul(t, P(t, a), P(t, b)), 3); }, false},
      {"scale", [&](Tape& t) { return Project(t, Scale(t, P(t, a), -1.7), 4); }, true},
      {"affine", [&](Tape& t) { return Project(t, AffineCols(t, P(t, a), P(t, g), P(t, s)), 5); }, false},
      {"layernorm", [&](Tape& t) { return Project(t, LayerNorm(t, P(t, a), P(t, g), P(t, s)), 6); }, false},
      {"leaky", [&](Tape& t) { return Project(t, LeakyRelu(t, P(t, a)), 7); }, false},
      {"msig", [&](Tape& t) { return Project(t, ModifiedSigmoid(t, P(t, a)), 8); }, false},
      {"softmax", [&](Tape& t) { return Project(t, SoftmaxRows(t, P(t, a)), 9); }, false},
      {"concat", [&](Tape& t) { return Project(t, ConcatCols(t, {P(t, a), P(t, c), P(t, b)}), 10); }, true},
      {"slice", [&](Tape& t) { return Project(t, SliceCols(t, P(t, a), 2, 3), 11); }, true},
      {"bcast", [&](Tape& t) { return Project(t, MulColBroadcast(t, P(t, c), P(t, a)), 12); }, false},
  };
  for (const auto& cs : cases) {
    INFO(cs.name);
    const auto rep = GradCheck(cs.f, store, cs.linear ? linear_opts : GradCheckOptions{});
    CHECK(rep.fraction_within() == 1.0);
  }
}

TEST_CASE("softmax grad check within 1e-4", "[softmax]") {
  ParamStore store;
  const auto x = store.Add("x", RandomMatrix(3, 5, 21));
  GradCheckOptions opts;
  opts.tolerance = 1e-4;
  const auto rep = GradCheck([&](Tape& t) { return Project(t, SoftmaxRows(t, t.Param(store, x)), 4); },
                             store, opts);
  CHECK(rep.fraction_within() == 1.0);
}

TEST_CASE("GRU and MLP pass grad check", "[gradcheck]") {
  ParamStore store;
  Rng rng(5);
  const auto mlp = Mlp::Create(store, rng, "mlp", 3, 8);
  const auto gru = GruLayer::Create(store, rng, "gru", 8, 6);
  const Matrix x = RandomMatrix(5, 3, 6);
  auto f = [&](Tape& t) { return Project(t, gru(t, store, mlp(t, store, t.Constant(x))), 7); };
  const auto rep = GradCheck(f, store);
  CHECK(rep.fraction_within() == 1.0);
  CHECK(rep.worst_rel_error <= 1e-3);

  // Initial state gradient too.
  ParamStore s2;
  const auto h0 = s2.Add("h0", RandomMatrix(1, 4, 8, 0.5));
  const auto w = s2.Add("w", RandomMatrix(12, 2, 9, 0.5));
  const auto u = s2.Add("u", RandomMatrix(12, 4, 10, 0.5));
  const auto b = s2.Add("b", RandomMatrix(1, 12, 11, 0.5));
  const Matrix xs = RandomMatrix(6, 2, 12);
  auto g = [&](Tape& t) {
    return Project(t, Gru(t, t.Constant(xs), t.Param(s2, h0), t.Param(s2, w), t.Param(s2, u), t.Param(s2, b)), 13);
  };
  CHECK(GradCheck(g, s2).fraction_within() == 1.0);
}

TEST_CASE("GRU with zero weights halves the state", "[gru]") {
  Tape t(false);
  const Matrix h = RandomMatrix(1, 4, 3);
  Var out = GruStep(t, t.Constant(RandomMatrix(1, 2, 4)), t.Constant(h),
                    t.Constant(Matrix::Zero(12, 2)), t.Constant(Matrix::Zero(12, 4)),
                    t.Constant(Matrix::Zero(1, 12)));
  // z = 0.5, n = tanh(0) = 0 -> h' = 0.5 h.
  for (int j = 0; j < 4; ++j) CHECK(t.value(out)(0, j) == Approx(0.5 * h(0, j)).margin(1e-15));
}

TEST_CASE("MLP with zero input and zero params outputs zero", "[mlp]") {
  ParamStore store;
  Rng rng(1);
  const auto mlp = Mlp::Create(store, rng, "m", 1, 16);
  for (std::size_t i = 0; i < store.size(); ++i) store.value(i).setZero();
  Tape t(false);
  Var y = mlp(t, store, t.Constant(Matrix::Zero(3, 1)));
  CHECK(t.value(y).rows() == 3);
  CHECK(t.value(y).cols() == 16);
  CHECK(t.value(y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("full-size MLP maps 1 -> 512", "[mlp]") {
  ParamStore store;
  Rng rng(1);
  const auto mlp = Mlp::Create(store, rng, "m", 1, 512);
  Tape t(false);
  Var y = mlp(t, store, t.Constant(RandomMatrix(4, 1, 2)));
  CHECK(t.value(y).cols() == 512);
}

TEST_CASE("modified sigmoid", "[sigmoid]") {
  // 40-digit decimal evaluation of 2 * 0.5^ln(10) + 1e-7.
  CHECK(ModifiedSigmoid(0.0) == Approx(0.4053992325730346).epsilon(1e-14));
  CHECK(ModifiedSigmoid(800.0) == Approx(2.0 + 1e-7).epsilon(1e-15));
  CHECK(ModifiedSigmoid(-800.0) == 1e-7);
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 1000; ++i) {
    double a = u(gen), b = u(gen);
    if (a > b) std::swap(a, b);
    CHECK(ModifiedSigmoid(a) <= ModifiedSigmoid(b));
    CHECK(ModifiedSigmoid(a) > 1e-7 * (1 - 1e-12));
    CHECK(ModifiedSigmoid(b) < 2.0 + 1e-7);
  }
}

TEST_CASE("softmax properties", "[softmax]") {
  Tape t(false);
  Matrix z = Matrix::Zero(1, 2);
  CHECK(t.value(SoftmaxRows(t, t.Constant(z)))(0, 0) == 0.5);
  const Matrix x = RandomMatrix(6, 9, 4, 20.0);
  const Matrix sx = t.value(SoftmaxRows(t, t.Constant(x)));
  const Matrix sy = t.value(SoftmaxRows(t, t.Constant((x.array() + 123.0).matrix())));
  CHECK((sx - sy).cwiseAbs().maxCoeff() < 1e-12);
  for (Eigen::Index r = 0; r < sx.rows(); ++r) CHECK(std::abs(sx.row(r).sum() - 1.0) <= 1e-9);
  Matrix big(1, 3);
  big << 1000.0, 1000.0, -1000.0;
  const Matrix sb = t.value(SoftmaxRows(t, t.Constant(big)));
  CHECK(sb(0, 0) == Approx(0.5));
  CHECK(std::isfinite(sb(0, 2)));
}

TEST_CASE("adam update rules", "[adam]") {
  auto make = [](double g) {
    ParamStore s;
    Matrix v(1, 1);
    v(0, 0) = 1.0;
    s.Add("p", v);
    s.grad(0)(0, 0) = g;
    s.MarkGradsPopulated();
    return s;
  };
  {
    auto s = make(0.37);
    Adam opt;
    opt.Step(s);
    CHECK(s.value(0)(0, 0) - 1.0 == Approx(-1e-3).epsilon(1e-6));
    CHECK(s.step == 1);
  }
  {
    auto s = make(-42.0);
    Adam opt;
    opt.Step(s);
    CHECK(s.value(0)(0, 0) - 1.0 == Approx(1e-3).epsilon(1e-6));
  }
  {
    auto s = make(0.0);
    Adam opt;
    opt.Step(s);
    CHECK(s.value(0)(0, 0) == 1.0);
  }
  {
    // Constant gradient: closed form at t=2 gives the same bias-corrected
    // ratio, so the second step cannot exceed the first.
    auto s = make(2.5);
    Adam opt;
    opt.Step(s);
    const double d1 = s.value(0)(0, 0) - 1.0;
    s.grad(0)(0, 0) = 2.5;
    s.MarkGradsPopulated();
    const double before = s.value(0)(0, 0);
    opt.Step(s);
    const double d2 = s.value(0)(0, 0) - before;
    CHECK(std::abs(d2) <= std::abs(d1) * (1 + 1e-6));
  }
  {
    ParamStore s;
    s.Add("p", Matrix::Ones(2, 2));
    Adam opt;
    CHECK_THROWS_AS(opt.Step(s), std::logic_error);
  }
}

TEST_CASE("parameter counts", "[params]") {
  ParamStore s;
  Rng rng(0);
  Dense::Create(s, rng, "d", 2, 3);
  CHECK(ParamCount(s) == 9);
  ParamStore g;
  GruLayer::Create(g, rng, "g", 2, 4);
  CHECK(ParamCount(g) == 84);
  CHECK(g.Contains("g.w"));
  CHECK_THROWS_AS(g.IndexOf("nope"), std::out_of_range);
}

TEST_CASE("forward and backward are deterministic", "[determinism]") {
  auto run = [] {
    ParamStore store;
    Rng rng(77);
    const auto mlp = Mlp::Create(store, rng, "m", 2, 12);
    const auto gru = GruLayer::Create(store, rng, "g", 12, 5);
    Tape t;
    Var y = Project(t, gru(t, store, mlp(t, store, t.Constant(RandomMatrix(9, 2, 1)))), 2);
    t.Backward(y);
    store.ZeroGrad();
    t.AddParamGradsTo(store);
    std::vector<double> out{t.value(y)(0, 0)};
    for (std::size_t i = 0; i < store.size(); ++i) {
      out.insert(out.end(), store.grad(i).data(), store.grad(i).data() + store.grad(i).size());
    }
    return out;
  };
  CHECK(run() == run());
}
