// SPDX-License-Identifier: Apache-2.0
#include "curvefold/diffusion/toy_denoiser.hpp"

#include <algorithm>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>
#include <random>

#include "curvefold/backbone/sse.hpp"
#include "curvefold/errors.hpp"
#include "curvefold/sketch/bundles.hpp"
#include "curvefold/sketch/sketcher.hpp"

namespace curvefold {

using nn::Tape;
using Var = Tape::Var;

namespace {

constexpr int kFormatVersion = 1;
constexpr int kNodeFeatures = 4;
constexpr double kMaxSnrWeight = 5.0;

EdgeList banded_edges(Eigen::Index n, int window) {
  EdgeList e;
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = -window; k <= window; ++k) {
      const Eigen::Index j = i + k;
      if (k == 0 || j < 0 || j >= n) continue;
      e.src.push_back(static_cast<int>(i));
      e.dst.push_back(static_cast<int>(j));
      e.attr.push_back(static_cast<double>(std::abs(k)) / window);
    }
  return e;
}

// Rows are residues.
Eigen::MatrixXd centred_rows(const Points& p, double scale) {
  const Vec3 c = p.rowwise().mean();
  return ((p.colwise() - c) / scale).transpose();
}

void check_shape(const ToyDenoiserShape& s) {
  if (s.layers < 1 || s.hidden < 1 || s.window < 1) throw ConfigError("invalid toy denoiser shape");
}

}  // namespace

ToyDenoiser::ToyDenoiser(ToyDenoiserShape shape, DiffusionSchedule schedule, double coord_scale,
                         std::vector<double> variogram, std::uint64_t init_seed)
    : shape_(shape), schedule_(std::move(schedule)), coord_scale_(coord_scale), variogram_(std::move(variogram)) {
  check_shape(shape_);
  if (!(coord_scale_ > 0.0) || !std::isfinite(coord_scale_)) throw ConfigError("coord_scale must be positive");
  if (variogram_.size() < 2 || variogram_[0] != 0.0) throw ConfigError("variogram must start at 0 and have 2+ lags");
  for (std::size_t k = 1; k < variogram_.size(); ++k)
    if (!(variogram_[k] > 0.0) || !std::isfinite(variogram_[k])) throw ConfigError("variogram lags must be positive");
  if (schedule_.T < 1 || schedule_.alpha_bar.size() != static_cast<std::size_t>(schedule_.T) + 1)
    throw ConfigError("toy denoiser needs a complete schedule");
  std::mt19937_64 rng(init_seed);
  for (int l = 0; l < shape_.layers; ++l)
    layers_.push_back(
        EgclLayer::make(params_, "egcl" + std::to_string(l), l == 0 ? kNodeFeatures : shape_.hidden, shape_.hidden, rng));
}

Eigen::MatrixXd ToyDenoiser::linear_estimate(Eigen::Index n, double ab) const {
  // Centred Gram of the prior from expected squared distances, as in classical
  // MDS, divided by 3 for a per-coordinate covariance.
  Eigen::MatrixXd v(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto k = static_cast<std::size_t>(std::abs(i - j));
      v(i, j) = variogram_[std::min(k, variogram_.size() - 1)];
    }
  const Eigen::MatrixXd centre =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd g = -centre * v * centre / 6.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  // White component of 1 A per coordinate: local detail the pooled variogram
  // cannot represent survives at low noise.
  const double nugget = 1.0 / (coord_scale_ * coord_scale_);
  Eigen::VectorXd gain(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double lam = std::max(0.0, es.eigenvalues()(i)) + nugget;
    gain(i) = std::sqrt(ab) * lam / (ab * lam + 1.0 - ab);
  }
  return es.eigenvectors() * gain.asDiagonal() * es.eigenvectors().transpose();
}

Var ToyDenoiser::forward(Tape& tape, const Eigen::MatrixXd& x, int t) const {
  if (t < 1 || t > schedule_.T) throw IndexError("step " + std::to_string(t) + " outside the schedule");
  const Eigen::Index n = x.rows();
  if (n < 3 || x.cols() != 3) throw PreconditionError("toy denoiser needs at least 3 residues as N x 3 rows");

  const double ab = schedule_.alpha_bar[static_cast<std::size_t>(t)];
  Eigen::MatrixXd h0(n, kNodeFeatures);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double end = std::min<double>(static_cast<double>(std::min(i, n - 1 - i)) / 8.0, 1.0);
    h0.row(i) << std::sqrt(ab), std::sqrt(1.0 - ab), static_cast<double>(t) / schedule_.T, end;
  }
  const EdgeList edges = banded_edges(n, shape_.window);
  const Var x_lin = tape.constant(linear_estimate(n, ab) * x);
  Var h = tape.constant(h0);
  Var xv = x_lin;
  for (const auto& layer : layers_) std::tie(h, xv) = egcl_apply(layer, tape, h, xv, edges);
  // The learned correction fades out as the noise level goes to zero.
  const Var out = tape.add(x_lin, tape.scale(tape.sub(xv, x_lin), std::sqrt(1.0 - ab)));
  const Eigen::MatrixXd centre =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  return tape.matmul(tape.constant(centre), out);
}

DenoiserOutput ToyDenoiser::predict_z0(const Points& z_t, int t, const MotifSpec* motif) const {
  if (z_t.cols() < 3) throw PreconditionError("toy denoiser needs at least 3 residues");
  Tape tape;
  const Vec3 c = z_t.rowwise().mean();
  const Var out = forward(tape, centred_rows(z_t, coord_scale_), t);
  Points coords = (tape.value(out).transpose() * coord_scale_).colwise() + c;
  if (motif != nullptr && !motif->empty()) {
    validate_motif(*motif, static_cast<std::size_t>(z_t.cols()));
    for (std::size_t k = 0; k < motif->indices.size(); ++k)
      coords.col(static_cast<Eigen::Index>(motif->indices[k])) = motif->coords.col(static_cast<Eigen::Index>(k));
  }
  const auto n = static_cast<std::size_t>(coords.cols());
  SseLabels labels = assign_sse_geometric(Backbone::single_chain(coords, SseLabels::uniform(n, 'L'))).labels;
  return {std::move(coords), std::move(labels)};
}

nlohmann::json ToyDenoiser::to_json() const {
  return {{"format", "curvefold.toy_denoiser"},
          {"version", kFormatVersion},
          {"shape", {{"layers", shape_.layers}, {"hidden", shape_.hidden}, {"window", shape_.window}}},
          {"schedule", {{"T", schedule_.T}, {"shape", to_string(schedule_.shape)}, {"beta", schedule_.beta}}},
          {"coord_scale", coord_scale_},
          {"variogram", variogram_},
          {"params", params_.to_json()["params"]}};
}

std::shared_ptr<ToyDenoiser> ToyDenoiser::from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || j.value("format", std::string{}) != "curvefold.toy_denoiser")
      throw ConfigError("not a toy denoiser file");
    if (j.at("version").get<int>() != kFormatVersion)
      throw ConfigError("unsupported toy denoiser version " + j.at("version").dump());
    ToyDenoiserShape shape;
    shape.layers = j.at("shape").at("layers").get<int>();
    shape.hidden = j.at("shape").at("hidden").get<int>();
    shape.window = j.at("shape").at("window").get<int>();

    const auto& js = j.at("schedule");
    DiffusionSchedule s;
    s.T = js.at("T").get<int>();
    s.shape = schedule_shape_from_string(js.at("shape").get<std::string>());
    s.beta = js.at("beta").get<std::vector<double>>();
    if (s.T < 1 || s.beta.size() != static_cast<std::size_t>(s.T) + 1) throw ConfigError("schedule length mismatch");
    s.alpha.assign(s.beta.size(), 1.0);
    s.alpha_bar.assign(s.beta.size(), 1.0);
    for (int t = 1; t <= s.T; ++t) {
      if (!(s.beta[t] > 0.0 && s.beta[t] < 1.0)) throw ConfigError("schedule beta outside (0, 1)");
      s.alpha[t] = 1.0 - s.beta[t];
      s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    }

    auto model = std::make_shared<ToyDenoiser>(shape, std::move(s), j.at("coord_scale").get<double>(),
                                               j.at("variogram").get<std::vector<double>>(), 0);
    model->params_.load_json({{"params", j.at("params")}});
    if (!model->params_.all_finite()) throw ConfigError("toy denoiser contains non-finite parameters");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed toy denoiser: ") + e.what());
  }
}

ToyTrainingResult train_toy_denoiser(const std::vector<Backbone>& train, const ToyDenoiserConfig& cfg) {
  check_shape(cfg.shape);
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
    throw ConfigError("learning rate must be positive");
  if (cfg.epochs < 0 || cfg.draws_per_example < 1) throw ConfigError("epochs and draws must be non-negative/positive");
  if (train.empty()) throw PreconditionError("training set is empty");

  std::vector<Eigen::MatrixXd> clean;
  clean.reserve(train.size());
  std::vector<double> sum_d2;
  std::vector<double> pairs;
  for (const auto& bb : train) {
    if (bb.size() < 3) throw PreconditionError("training backbone shorter than 3 residues");
    clean.push_back(centred_rows(bb.ca(), cfg.coord_scale));
    const Eigen::MatrixXd& x = clean.back();
    const auto n = static_cast<std::size_t>(x.rows());
    if (sum_d2.size() < n) {
      sum_d2.resize(n, 0.0);
      pairs.resize(n, 0.0);
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        sum_d2[j - i] += (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm();
        pairs[j - i] += 1.0;
      }
  }
  std::vector<double> variogram(sum_d2.size(), 0.0);
  for (std::size_t k = 1; k < variogram.size(); ++k) variogram[k] = sum_d2[k] / pairs[k];

  ToyTrainingResult result;
  result.denoiser = std::make_shared<ToyDenoiser>(cfg.shape, cfg.schedule, cfg.coord_scale, variogram,
                                                  derive_seed(cfg.seed, 0));
  ToyDenoiser& model = *result.denoiser;
  nn::Adam adam(nn::AdamConfig{cfg.learning_rate});
  std::mt19937_64 order_rng(derive_seed(cfg.seed, 1));
  std::mt19937_64 noise_rng(derive_seed(cfg.seed, 2));
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<std::size_t> order(clean.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    // Stratified steps: every epoch covers [1, T] evenly, in shuffled order.
    std::vector<int> steps_t(order.size() * static_cast<std::size_t>(cfg.draws_per_example));
    for (std::size_t k = 0; k < steps_t.size(); ++k)
      steps_t[k] = 1 + static_cast<int>(k * static_cast<std::size_t>(cfg.schedule.T) / steps_t.size());
    std::shuffle(steps_t.begin(), steps_t.end(), noise_rng);
    double total = 0.0;
    int steps = 0;
    for (std::size_t idx : order) {
      const Eigen::MatrixXd& x0 = clean[idx];
      for (int d = 0; d < cfg.draws_per_example; ++d) {
        const int t = steps_t[static_cast<std::size_t>(steps)];
        const double ab = cfg.schedule.alpha_bar[static_cast<std::size_t>(t)];
        Eigen::MatrixXd eps(x0.rows(), 3);
        for (Eigen::Index i = 0; i < eps.rows(); ++i)
          for (int c = 0; c < 3; ++c) eps(i, c) = gauss(noise_rng);
        Eigen::MatrixXd xt = std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
        xt.rowwise() -= xt.colwise().mean();

        Tape tape;
        // Signal-to-noise weighting capped at kMaxSnrWeight, so low-noise
        // detail is not drowned out by the large errors at high t.
        const double w = std::min(ab / (1.0 - ab), kMaxSnrWeight);
        const Var loss = tape.scale(tape.mean_square_diff(model.forward(tape, xt, t), tape.constant(x0)), w);
        const double lv = tape.value(loss)(0, 0);
        if (!std::isfinite(lv)) throw TrainingError("toy denoiser loss became non-finite in epoch " + std::to_string(epoch));
        tape.backward(loss);
        adam.step(model.params());
        model.params().zero_grad();
        total += lv;
        ++steps;
      }
    }
    if (!model.params().all_finite()) throw TrainingError("toy denoiser parameters became non-finite");
    result.loss_trace.push_back(total / steps);
  }
  return result;
}

std::vector<Backbone> generate_bundle_backbones(std::size_t n, std::uint64_t seed) {
  std::vector<Backbone> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    out.push_back(bundle_backbone(random_bundle_curve(rng, {}, "bundle" + std::to_string(i))));
  }
  return out;
}

}  // namespace curvefold
