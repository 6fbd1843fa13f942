// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"

#include "curvefold/encoder/encoder.hpp"
#include "curvefold/errors.hpp"
#include "curvefold/sketch/bundles.hpp"

using namespace curvefold;
using Var = nn::Tape::Var;

namespace {

// Evaluates Linear -> SiLU -> Linear by hand.
Eigen::RowVectorXd mlp_by_hand(const nn::Mlp2& m, const Eigen::RowVectorXd& in) {
  Eigen::RowVectorXd a = in * m.l1.w->value + m.l1.b->value;
  for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = a(i) / (1 + std::exp(-a(i)));
  Eigen::RowVectorXd out = a * m.l2.w->value + m.l2.b->value;
  if (m.act_out)
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = out(i) / (1 + std::exp(-out(i)));
  return out;
}

Curve helix_axis_like(int n) {
  std::mt19937_64 rng(5);
  Points p = oracle::random_smooth_curve(rng, n, 6.0);
  return Curve(p);
}

SseExample example_from(const Curve& c, const std::string& labels) { return {c, SseLabels(labels)}; }

std::vector<EgclLayer> random_layers(nn::ParameterSet& ps, std::mt19937_64& rng) {
  std::vector<EgclLayer> ls;
  ls.push_back(EgclLayer::make(ps, "l0", 2, 8, rng));
  ls.push_back(EgclLayer::make(ps, "l1", 8, 8, rng));
  // Give the coordinate head enough weight that x' visibly moves.
  for (auto& l : ls) l.phi_x.l2.w->value *= 10.0;
  return ls;
}

}  // namespace

TEST_CASE("egcl single node without edges") {
  std::mt19937_64 rng(1);
  nn::ParameterSet ps;
  auto layer = EgclLayer::make(ps, "l", 3, 6, rng);
  Eigen::MatrixXd h(1, 3);
  h << 0.3, -1.2, 0.8;
  Eigen::MatrixXd x(1, 3);
  x << 1.0, 2.0, 3.0;
  const auto out = egcl_forward(layer, h, x, EdgeList{});
  Eigen::RowVectorXd in(9);
  in << h.row(0), Eigen::RowVectorXd::Zero(6);
  CHECK((out.h.row(0) - mlp_by_hand(layer.phi_h, in)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(out.x == x);
}

TEST_CASE("egcl matches a hand-written message pass") {
  std::mt19937_64 rng(2);
  nn::ParameterSet ps;
  auto layer = EgclLayer::make(ps, "l", 2, 5, rng);
  layer.phi_x.l2.w->value *= 10.0;
  const int n = 6;
  Eigen::MatrixXd h = Eigen::MatrixXd::Random(n, 2);
  Eigen::MatrixXd x = 3.0 * Eigen::MatrixXd::Random(n, 3);
  const EdgeList edges = chain_edges(n);
  const auto out = egcl_forward(layer, h, x, edges);

  for (int i = 0; i < n; ++i) {
    Eigen::RowVectorXd msum = Eigen::RowVectorXd::Zero(5);
    Eigen::RowVector3d shift = Eigen::RowVector3d::Zero();
    int deg = 0;
    for (int j : {i - 1, i + 1}) {
      if (j < 0 || j >= n) continue;
      ++deg;
      Eigen::RowVectorXd in(6);
      in << h.row(i), h.row(j), (x.row(i) - x.row(j)).squaredNorm(), 1.0;
      const Eigen::RowVectorXd m = mlp_by_hand(layer.phi_e, in);
      msum += m;
      shift += (x.row(i) - x.row(j)) * mlp_by_hand(layer.phi_x, m)(0);
    }
    Eigen::RowVectorXd hin(7);
    hin << h.row(i), msum;
    CHECK((out.h.row(i) - mlp_by_hand(layer.phi_h, hin)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((out.x.row(i) - (x.row(i) + shift / deg)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("egcl equivariance") {
  std::mt19937_64 rng(3);
  nn::ParameterSet ps;
  const auto layers = random_layers(ps, rng);
  const int n = 12;
  Eigen::MatrixXd h = Eigen::MatrixXd::Random(n, 2);
  const Eigen::MatrixXd x = oracle::random_smooth_curve(rng, n, 5.0).transpose();
  const EdgeList edges = chain_edges(n);
  auto run = [&](Eigen::MatrixXd xx) {
    Eigen::MatrixXd hh = h;
    for (const auto& l : layers) {
      auto o = egcl_forward(l, hh, xx, edges);
      hh = o.h;
      xx = o.x;
    }
    return EgclOutput{hh, xx};
  };
  const auto base = run(x);
  CHECK((base.x - x).norm() > 1e-3);

  SUBCASE("translation") {
    const Eigen::RowVector3d t(7.0, -3.0, 11.0);
    const auto moved = run(x.rowwise() + t);
    CHECK(((moved.x.rowwise() - t) - base.x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((moved.h - base.h).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("rotation") {
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::Matrix3d r = oracle::random_rotation(rng);
      const auto rot = run(x * r.transpose());
      CHECK((rot.x - base.x * r.transpose()).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((rot.h - base.h).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("egcl errors") {
  std::mt19937_64 rng(4);
  nn::ParameterSet ps;
  auto layer = EgclLayer::make(ps, "l", 1, 4, rng);
  CHECK_THROWS_AS(egcl_forward(layer, Eigen::MatrixXd::Ones(3, 1), Eigen::MatrixXd::Ones(2, 3), chain_edges(3)),
                  DimensionError);
  CHECK_THROWS_AS(egcl_forward(layer, Eigen::MatrixXd::Ones(3, 2), Eigen::MatrixXd::Ones(3, 3), chain_edges(3)),
                  DimensionError);
  CHECK_THROWS_AS(egcl_forward(layer, Eigen::MatrixXd::Ones(3, 1), Eigen::MatrixXd::Random(3, 3), chain_edges(4)),
                  IndexError);
}

TEST_CASE("egcl parameter gradients match finite differences") {
  std::mt19937_64 rng(6);
  nn::ParameterSet ps;
  const auto layers = random_layers(ps, rng);
  const int n = 10;
  const Eigen::MatrixXd h = Eigen::MatrixXd::Random(n, 2);
  const Eigen::MatrixXd x = oracle::random_smooth_curve(rng, n, 1.0).transpose();
  const EdgeList edges = chain_edges(n);
  Eigen::MatrixXd target_h = Eigen::MatrixXd::Random(n, 8);
  auto loss = [&](nn::Tape& t) {
    Var hv = t.constant(h), xv = t.constant(x);
    for (const auto& l : layers) std::tie(hv, xv) = egcl_apply(l, t, hv, xv, edges);
    return t.add(t.mean_square_diff(hv, t.constant(target_h)), t.mean_square(xv));
  };
  ps.zero_grad();
  {
    nn::Tape t;
    const Var l = loss(t);
    // Keep the loss O(1-10) so central differences are not swamped by rounding.
    CHECK(t.value(l)(0, 0) < 100.0);
    t.backward(l);
  }
  const double step = 1e-5;
  int checked = 0;
  for (auto& p : ps.all()) {
    for (Eigen::Index i = 0; i < p->value.size(); i += 3) {
      const double keep = p->value(i);
      p->value(i) = keep + step;
      nn::Tape tp;
      const double up = tp.value(loss(tp))(0, 0);
      p->value(i) = keep - step;
      nn::Tape tm;
      const double dn = tm.value(loss(tm))(0, 0);
      p->value(i) = keep;
      const double fd = (up - dn) / (2 * step);
      const double an = p->grad(i);
      const double scale = std::max(std::abs(an), std::abs(fd));
      INFO(p->name << "[" << i << "] analytic " << an << " fd " << fd);
      if (scale > 1e-6) {
        CHECK(std::abs(an - fd) <= 1e-4 * scale);
      } else {
        CHECK(std::abs(an - fd) < 1e-9);
      }
      ++checked;
    }
  }
  CHECK(checked > 300);
}

TEST_CASE("full encoder gradients match finite differences on a 10-point curve") {
  const Curve c = helix_axis_like(10);
  const std::vector<int> tgt = {2, 2, 0, 0, 0, 0, 1, 1, 2, 2};
  EncoderModel model(11);
  auto loss = [&](nn::Tape& t) {
    const auto fwd = model.forward(t, c.points());
    return t.cross_entropy(t.gather_rows(fwd.logits, fwd.input_rows), tgt);
  };
  model.params().zero_grad();
  {
    nn::Tape t;
    t.backward(loss(t));
  }
  const double step = 1e-5;
  std::mt19937_64 pick(1);
  int checked = 0;
  for (auto& p : model.params().all()) {
    std::uniform_int_distribution<Eigen::Index> u(0, p->value.size() - 1);
    for (int k = 0; k < 4; ++k) {
      const Eigen::Index i = u(pick);
      const double keep = p->value(i);
      p->value(i) = keep + step;
      nn::Tape tp;
      const double up = tp.value(loss(tp))(0, 0);
      p->value(i) = keep - step;
      nn::Tape tm;
      const double dn = tm.value(loss(tm))(0, 0);
      p->value(i) = keep;
      const double fd = (up - dn) / (2 * step);
      const double an = p->grad(i);
      const double scale = std::max(std::abs(an), std::abs(fd));
      INFO(p->name << "[" << i << "] analytic " << an << " fd " << fd);
      if (scale > 1e-6) {
        CHECK(std::abs(an - fd) <= 1e-4 * scale);
      } else {
        CHECK(std::abs(an - fd) < 1e-9);
      }
      ++checked;
    }
  }
  CHECK(checked == 4 * static_cast<int>(model.params().all().size()));
}

TEST_CASE("encode_curve output contract") {
  EncoderModel model(2);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const Curve c(oracle::random_smooth_curve(rng, 8 + 7 * trial, 8.0));
    const auto probs = encode_curve(model, c);
    REQUIRE(probs.size() == c.size());
    for (const auto& p : probs) {
      CHECK(std::abs(p[0] + p[1] + p[2] - 1.0) < 1e-6);
      for (double v : p) CHECK(v >= 0.0);
    }
    RigidTransform g{oracle::random_rotation(rng), Vec3(20.0 * trial, -5.0, 3.0)};
    const auto moved = encode_curve(model, c.transformed(g));
    double worst = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i)
      for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(probs[i][k] - moved[i][k]));
    CHECK(worst < 1e-5);
  }
  CHECK_THROWS_AS(encode_curve(model, helix_axis_like(7)), LengthTooShort);
  CHECK(predict_labels(model, helix_axis_like(9)).size() == 9);
}

TEST_CASE("training memorises a single curve with non-increasing loss") {
  const Curve c = helix_axis_like(16);
  const std::vector<SseExample> data = {example_from(c, "LLLHHHHHHHLLEEEL")};
  TrainingConfig cfg;
  cfg.learning_rate = 3e-3;
  cfg.epochs = 150;
  cfg.seed = 4;
  const auto r = train_encoder(data, cfg);
  REQUIRE(r.trace.size() == 150);
  CHECK(r.trace.back().train_accuracy == 1.0);
  CHECK(encoder_accuracy(r.model, data) == 1.0);

  TrainingConfig slow = cfg;
  slow.learning_rate = 1e-4;
  slow.epochs = 40;
  const auto s = train_encoder(data, slow);
  for (std::size_t k = 1; k < s.trace.size(); ++k) {
    INFO("epoch " << k + 1);
    CHECK(s.trace[k].loss <= s.trace[k - 1].loss);
  }
  CHECK(s.trace.back().loss < s.trace.front().loss);
}

TEST_CASE("zero mask fraction equals a plain Adam loop") {
  const Curve c = helix_axis_like(12);
  const std::vector<SseExample> data = {example_from(c, "LLHHHHHHLLLL")};
  TrainingConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 5;
  cfg.seed = 21;
  const auto r = train_encoder(data, cfg);

  // Reference loop: same initial weights, one full-label step per epoch.
  EncoderModel ref(derive_seed(21, 0));
  nn::Adam adam({1e-3, 0.9, 0.999, 1e-8});
  std::vector<int> tgt;
  for (char ch : std::string("LLHHHHHHLLLL")) tgt.push_back(sse_class_index(ch));
  for (int e = 0; e < 5; ++e) {
    ref.params().zero_grad();
    nn::Tape t;
    const auto fwd = ref.forward(t, c.points());
    const Var loss = t.cross_entropy(t.gather_rows(fwd.logits, fwd.input_rows), tgt);
    t.backward(t.scale(loss, 1.0));
    adam.step(ref.params());
  }
  for (std::size_t k = 0; k < ref.params().all().size(); ++k)
    CHECK(ref.params().all()[k]->value == r.model.params().all()[k]->value);

  TrainingConfig masked = cfg;
  masked.mask_fraction = 0.25;
  const auto m = train_encoder(data, masked);
  bool differs = false;
  for (std::size_t k = 0; k < m.model.params().all().size(); ++k)
    differs |= m.model.params().all()[k]->value != r.model.params().all()[k]->value;
  CHECK(differs);
}

TEST_CASE("training is deterministic and validates its inputs") {
  const auto data = generate_synthetic_sse_dataset(4, 3);
  TrainingConfig cfg;
  cfg.learning_rate = 2e-3;
  cfg.epochs = 2;
  cfg.batch_size = 3;
  cfg.mask_fraction = 0.2;
  cfg.seed = 8;
  const auto a = train_encoder(data, cfg, {data[0]});
  const auto b = train_encoder(data, cfg, {data[0]});
  REQUIRE(a.trace.size() == 2);
  CHECK(a.trace[1].heldout_accuracy.has_value());
  for (std::size_t k = 0; k < a.trace.size(); ++k) CHECK(a.trace[k].loss == b.trace[k].loss);
  CHECK(a.model.to_json() == b.model.to_json());

  TrainingConfig bad = cfg;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(train_encoder(data, bad), ConfigError);
  bad = cfg;
  bad.mask_fraction = 0.6;
  CHECK_THROWS_AS(train_encoder(data, bad), ConfigError);
  CHECK_THROWS_AS(train_encoder({}, cfg), PreconditionError);
  std::vector<SseExample> misaligned = {{data[0].curve, SseLabels("HHH")}};
  CHECK_THROWS_AS(train_encoder(misaligned, cfg), DataError);
}

TEST_CASE("encoder model json round trip") {
  EncoderModel model(31);
  const auto j = model.to_json();
  CHECK(j["format"] == "curvefold.encoder");
  CHECK(j["manifest"].size() == model.params().all().size());
  const EncoderModel back = EncoderModel::from_json(nlohmann::json::parse(j.dump()));
  const Curve c = helix_axis_like(20);
  const auto p0 = encode_curve(model, c);
  const auto p1 = encode_curve(back, c);
  for (std::size_t i = 0; i < p0.size(); ++i) CHECK(p0[i] == p1[i]);

  auto wrong_version = j;
  wrong_version["version"] = 99;
  CHECK_THROWS_AS(EncoderModel::from_json(wrong_version), ConfigError);
  auto wrong_shape = j;
  wrong_shape["manifest"][0]["shape"][0] = 123;
  CHECK_THROWS_AS(EncoderModel::from_json(wrong_shape), ConfigError);
  auto wrong_hidden = j;
  wrong_hidden["shape"]["hidden"] = 16;
  CHECK_THROWS_AS(EncoderModel::from_json(wrong_hidden), ConfigError);
  CHECK_THROWS_AS(EncoderModel::from_json(nlohmann::json::object()), ConfigError);

  EncoderModel copy = model;
  CHECK(copy.to_json() == j);
}

TEST_CASE("synthetic dataset contract") {
  const auto one = generate_synthetic_sse_dataset(1, 5);
  REQUIRE(one.size() == 1);
  CHECK(one[0].curve.size() == one[0].labels.size());

  const auto a = generate_synthetic_sse_dataset(30, 12);
  const auto b = generate_synthetic_sse_dataset(30, 12);
  std::set<char> classes;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].curve.points() == b[i].curve.points());
    CHECK(a[i].labels == b[i].labels);
    CHECK(a[i].curve.size() >= kMinEncoderPoints);
    for (std::size_t k = 0; k < a[i].labels.size(); ++k) classes.insert(a[i].labels[k]);
  }
  CHECK(classes == std::set<char>{'H', 'E', 'L'});
  // Rates cycle 0.4, 0.8, 1.2: the same topology is not reused, but the
  // denser granularities must carry more points on average.
  double mean[3] = {0, 0, 0};
  for (std::size_t i = 0; i < a.size(); ++i) mean[i % 3] += static_cast<double>(a[i].curve.size()) / 10.0;
  CHECK(mean[0] < mean[1]);
  CHECK(mean[1] < mean[2]);
  CHECK_THROWS_AS(generate_synthetic_sse_dataset(0, 1), PreconditionError);
}
