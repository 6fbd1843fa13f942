// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <functional>
#include <random>

#include "doctest.h"

#include "curvefold/errors.hpp"
#include "curvefold/nn/tape.hpp"

using namespace curvefold;
using namespace curvefold::nn;
using Var = Tape::Var;

namespace {

// Builds a scalar from the parameters through `f`, then compares the tape
// gradient with central differences for every parameter entry.
void check_gradients(ParameterSet& ps, const std::function<Var(Tape&)>& f, double tol = 1e-6) {
  ps.zero_grad();
  {
    Tape t;
    t.backward(f(t));
  }
  const double h = 1e-5;
  for (auto& p : ps.all()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const double keep = p->value(i);
      p->value(i) = keep + h;
      Tape tp;
      const double up = tp.value(f(tp))(0, 0);
      p->value(i) = keep - h;
      Tape tm;
      const double dn = tm.value(f(tm))(0, 0);
      p->value(i) = keep;
      const double fd = (up - dn) / (2 * h);
      const double an = p->grad(i);
      INFO(p->name << "[" << i << "] analytic " << an << " fd " << fd);
      CHECK(std::abs(an - fd) <= tol * std::max(1.0, std::abs(fd)));
    }
  }
}

}  // namespace

TEST_CASE("tape ops match central differences") {
  std::mt19937_64 rng(3);
  ParameterSet ps;
  Parameter& a = ps.add("a", 5, 4, rng);
  Parameter& b = ps.add("b", 4, 3, rng);
  Parameter& c = ps.add("c", 1, 3, rng);
  Parameter& d = ps.add("d", 5, 1, rng);
  std::normal_distribution<double> g;
  for (auto& p : ps.all())
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value(i) = g(rng);

  SUBCASE("matmul, bias, silu, mean square") {
    check_gradients(ps, [&](Tape& t) {
      Var y = t.add_row(t.matmul(t.param(a), t.param(b)), t.param(c));
      return t.mean_square(t.silu(y));
    });
  }
  SUBCASE("concat, slice, transpose, hadamard, scale") {
    check_gradients(ps, [&](Tape& t) {
      Var ab = t.matmul(t.param(a), t.param(b));
      Var cat = t.concat_cols({ab, t.param(d), t.scale(ab, -0.5)});
      Var s = t.slice_cols(cat, 2, 4);
      Var prod = t.hadamard(s, s);
      return t.mean_square(t.matmul(t.transpose(prod), prod));
    });
  }
  SUBCASE("gather, scatter, shift, row norms, row scaling") {
    const std::vector<int> rows = {4, 0, 0, 2, 3};
    const std::vector<int> to = {1, 1, 0, 2, 2};
    Eigen::VectorXd w(5);
    w << 0.5, -1.0, 2.0, 0.25, 1.5;
    check_gradients(ps, [&](Tape& t) {
      Var x = t.gather_rows(t.param(a), rows);
      Var s = t.scatter_add_rows(x, to, 3);
      Var n = t.row_sqnorm(t.param(a));
      Var sc = t.scale_rows(t.param(a), t.add(n, t.param(d)));
      Var sh = t.add(t.shift_rows(sc, 2), t.shift_rows(sc, -1));
      return t.add(t.mean_square(s), t.mean_square(t.scale_rows_const(sh, w)));
    });
  }
  SUBCASE("softmax and cross entropy") {
    const std::vector<int> tgt = {0, 2, -1, 1, 2};
    check_gradients(ps, [&](Tape& t) {
      Var logits = t.matmul(t.param(a), t.param(b));
      Var sm = t.softmax_rows(logits);
      return t.add(t.cross_entropy(logits, tgt), t.mean_square_diff(sm, t.scale(sm, 0.3)));
    });
  }
}

TEST_CASE("cross entropy value and masking") {
  Tape t;
  Eigen::MatrixXd z(2, 3);
  z << 1.0, 2.0, 3.0, 0.0, 0.0, 0.0;
  const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
  CHECK(t.value(t.cross_entropy(t.constant(z), {2, 0}))(0, 0) ==
        doctest::Approx(((lse - 3.0) + std::log(3.0)) / 2).epsilon(1e-14));
  CHECK(t.value(t.cross_entropy(t.constant(z), {-1, 0}))(0, 0) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
  CHECK(t.value(t.cross_entropy(t.constant(z), {-1, -1}))(0, 0) == 0.0);
  CHECK_THROWS_AS(t.cross_entropy(t.constant(z), {3, 0}), IndexError);
  CHECK_THROWS_AS(t.cross_entropy(t.constant(z), {0}), DimensionError);
}

TEST_CASE("shape errors") {
  Tape t;
  Var a = t.constant(Eigen::MatrixXd::Ones(2, 3));
  Var b = t.constant(Eigen::MatrixXd::Ones(2, 3));
  CHECK_THROWS_AS(t.matmul(a, b), DimensionError);
  CHECK_THROWS_AS(t.add_row(a, b), DimensionError);
  CHECK_THROWS_AS(t.gather_rows(a, {2}), IndexError);
  CHECK_THROWS_AS(t.backward(a), DimensionError);
}

TEST_CASE("adam matches the textbook update") {
  std::mt19937_64 rng(1);
  ParameterSet ps;
  Parameter& p = ps.add("p", 3, 2, rng);
  const Eigen::MatrixXd start = p.value;
  Adam adam({0.01, 0.9, 0.999, 1e-8});
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 2), v = m, x = start;
  for (int step = 1; step <= 5; ++step) {
    Eigen::MatrixXd g(3, 2);
    for (Eigen::Index i = 0; i < g.size(); ++i) g(i) = std::sin(step + 0.7 * static_cast<double>(i));
    p.grad = g;
    adam.step(ps);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g.cwiseProduct(g);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double mh = m(i) / (1 - std::pow(0.9, step));
      const double vh = v(i) / (1 - std::pow(0.999, step));
      x(i) -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  CHECK((p.value - x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(adam.steps() == 5);
}

TEST_CASE("parameter json round trip and validation") {
  std::mt19937_64 rng(9);
  ParameterSet a;
  a.add("w", 2, 3, rng);
  a.add("b", 1, 3, rng);
  ParameterSet b;
  std::mt19937_64 other(10);
  b.add("w", 2, 3, other);
  b.add("b", 1, 3, other);
  b.load_json(a.to_json());
  CHECK(b.get("w").value == a.get("w").value);
  CHECK(b.get("b").value == a.get("b").value);

  ParameterSet c;
  c.add("w", 3, 2, other);
  c.add("b", 1, 3, other);
  CHECK_THROWS_AS(c.load_json(a.to_json()), ConfigError);
  ParameterSet d;
  d.add("w", 2, 3, other);
  CHECK_THROWS_AS(d.load_json(a.to_json()), ConfigError);
  CHECK_THROWS_AS(d.add("w", 1, 1, other), ConfigError);
}
