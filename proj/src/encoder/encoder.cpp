// SPDX-License-Identifier: Apache-2.0
#include "curvefold/encoder/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "curvefold/backbone/extract.hpp"
#include "curvefold/errors.hpp"
#include "curvefold/geometry/spline.hpp"
#include "curvefold/sketch/bundles.hpp"

namespace curvefold {

using nn::Tape;
using Var = nn::Tape::Var;

int sse_class_index(char label) {
  switch (label) {
    case 'H': return 0;
    case 'E': return 1;
    case 'L': return 2;
    default: throw DataError(std::string("not an SSE label: ") + label);
  }
}

// ---------------------------------------------------------------------------
// EGCL

EgclLayer EgclLayer::make(nn::ParameterSet& ps, const std::string& name, int in_dim, int hidden,
                          std::mt19937_64& rng) {
  EgclLayer l;
  l.in_dim = in_dim;
  l.hidden = hidden;
  l.phi_e = nn::Mlp2::make(ps, name + ".phi_e", 2 * in_dim + 2, hidden, hidden, true, rng);
  l.phi_x = nn::Mlp2::make(ps, name + ".phi_x", hidden, hidden, 1, false, rng);
  // Small final coordinate weights keep early updates from scrambling x.
  l.phi_x.l2.w->value *= 0.1;
  l.phi_h = nn::Mlp2::make(ps, name + ".phi_h", in_dim + hidden, hidden, hidden, false, rng);
  return l;
}

EdgeList chain_edges(std::size_t n) {
  EdgeList e;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    e.src.push_back(static_cast<int>(i));
    e.dst.push_back(static_cast<int>(i + 1));
    e.src.push_back(static_cast<int>(i + 1));
    e.dst.push_back(static_cast<int>(i));
  }
  return e;
}

std::pair<Var, Var> egcl_apply(const EgclLayer& layer, Tape& tape, Var h, Var x, const EdgeList& edges) {
  const Eigen::Index n = tape.value(h).rows();
  if (tape.value(x).rows() != n) throw DimensionError("EGCL: feature and coordinate counts differ");
  if (tape.value(x).cols() != 3) throw DimensionError("EGCL: coordinates must have 3 columns");
  if (tape.value(h).cols() != layer.in_dim) throw DimensionError("EGCL: feature width mismatch");
  if (edges.src.size() != edges.dst.size() || (!edges.attr.empty() && edges.attr.size() != edges.src.size()))
    throw DimensionError("EGCL: malformed edge list");
  for (std::size_t k = 0; k < edges.size(); ++k)
    if (edges.src[k] < 0 || edges.src[k] >= n || edges.dst[k] < 0 || edges.dst[k] >= n)
      throw IndexError("EGCL: edge references a missing node");

  const auto e = static_cast<Eigen::Index>(edges.size());
  Eigen::VectorXd inv_degree = Eigen::VectorXd::Zero(n);
  for (int s : edges.src) inv_degree(s) += 1.0;
  for (Eigen::Index i = 0; i < n; ++i) inv_degree(i) = inv_degree(i) > 0 ? 1.0 / inv_degree(i) : 0.0;

  const Var diff = tape.sub(tape.gather_rows(x, edges.src), tape.gather_rows(x, edges.dst));
  const Var d2 = tape.row_sqnorm(diff);
  const Var attr = tape.constant(edges.attr.empty()
                                     ? Eigen::MatrixXd::Ones(e, 1)
                                     : Eigen::MatrixXd(Eigen::Map<const Eigen::VectorXd>(edges.attr.data(), e)));
  const Var edge_in =
      tape.concat_cols({tape.gather_rows(h, edges.src), tape.gather_rows(h, edges.dst), d2, attr});
  const Var m = layer.phi_e(tape, edge_in);
  const Var w = layer.phi_x(tape, m);
  const Var shift = tape.scatter_add_rows(tape.scale_rows(diff, w), edges.src, n);
  const Var x_new = tape.add(x, tape.scale_rows_const(shift, inv_degree));
  const Var m_sum = tape.scatter_add_rows(m, edges.src, n);
  Var h_new = layer.phi_h(tape, tape.concat_cols({h, m_sum}));
  if (layer.in_dim == layer.hidden) h_new = tape.add(h, h_new);
  return {h_new, x_new};
}

EgclOutput egcl_forward(const EgclLayer& layer, const Eigen::MatrixXd& h, const Eigen::MatrixXd& x,
                        const EdgeList& edges) {
  if (h.rows() != x.rows()) throw DimensionError("EGCL: feature and coordinate counts differ");
  Tape tape;
  const auto [hv, xv] = egcl_apply(layer, tape, tape.constant(h), tape.constant(x), edges);
  return {tape.value(hv), tape.value(xv)};
}

// ---------------------------------------------------------------------------
// Model

EncoderModel::EncoderModel(std::uint64_t init_seed, EncoderShape shape) : shape_(shape) {
  if (shape_.layers < 1 || shape_.hidden < 1 || shape_.heads < 1 || shape_.hidden % shape_.heads != 0 ||
      shape_.kernel < 1 || shape_.conv_layers < 1 || shape_.kernel % 2 == 0 || shape_.classes != 3 || shape_.dense_per_span < 1 ||
      !(shape_.kappa_scale > 0.0))
    throw ConfigError("invalid encoder shape");
  build(init_seed);
}

EncoderModel::EncoderModel(const EncoderModel& other) : shape_(other.shape_) {
  build(0);
  for (std::size_t k = 0; k < params_.all().size(); ++k) {
    params_.all()[k]->value = other.params_.all()[k]->value;
  }
}

EncoderModel& EncoderModel::operator=(const EncoderModel& other) {
  if (this != &other) {
    EncoderModel tmp(other);
    *this = std::move(tmp);
  }
  return *this;
}

void EncoderModel::build(std::uint64_t init_seed) {
  std::mt19937_64 rng(init_seed);
  params_ = nn::ParameterSet();
  egcl_.clear();
  const int hd = shape_.hidden;
  for (int l = 0; l < shape_.layers; ++l)
    egcl_.push_back(EgclLayer::make(params_, "egcl" + std::to_string(l), l == 0 ? 1 : hd, hd, rng));
  convs_.clear();
  for (int l = 0; l < shape_.conv_layers; ++l)
    convs_.push_back(nn::Linear::make(params_, "conv" + std::to_string(l), l == 0 ? shape_.kernel : shape_.kernel * hd,
                                      hd, rng));
  conv_mix_ = nn::Linear::make(params_, "conv_mix", hd, hd, rng);
  wq_ = nn::Linear::make(params_, "attn.q", hd, hd, rng);
  wk_ = nn::Linear::make(params_, "attn.k", hd, hd, rng);
  wv_ = nn::Linear::make(params_, "attn.v", hd, hd, rng);
  wo_ = nn::Linear::make(params_, "attn.o", hd, hd, rng);
  head_ = nn::Linear::make(params_, "head", hd, shape_.classes, rng);
}

EncoderModel::Forward EncoderModel::forward(Tape& tape, const Points& points) const {
  if (static_cast<std::size_t>(points.cols()) < kMinEncoderPoints)
    throw LengthTooShort("encoder needs at least " + std::to_string(kMinEncoderPoints) + " points");
  const SplineSample dense = spline_subdivide(points, static_cast<std::size_t>(shape_.dense_per_span));
  const CurvatureResult kr = curvature(dense);
  const Eigen::Index n = dense.points.cols();

  Eigen::MatrixXd kappa(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) kappa(i, 0) = shape_.kappa_scale * kr.kappa[static_cast<std::size_t>(i)];
  const Vec3 centroid = dense.points.rowwise().mean();
  const Eigen::MatrixXd x0 = (dense.points.colwise() - centroid).transpose();

  // Graph branch.
  const EdgeList edges = chain_edges(static_cast<std::size_t>(n));
  Var h = tape.constant(kappa);
  Var x = tape.constant(x0);
  for (const auto& layer : egcl_) std::tie(h, x) = egcl_apply(layer, tape, h, x, edges);

  // Curvature convolution branch ("same" padding with zeros).
  const int half = shape_.kernel / 2;
  Eigen::MatrixXd windows = Eigen::MatrixXd::Zero(n, shape_.kernel);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int k = 0; k < shape_.kernel; ++k) {
      const Eigen::Index j = i + k - half;
      if (j >= 0 && j < n) windows(i, k) = kappa(j, 0);
    }
  Var c = tape.silu(convs_[0](tape, tape.constant(windows)));
  for (std::size_t l = 1; l < convs_.size(); ++l) {
    std::vector<Var> shifted;
    for (int k = 0; k < shape_.kernel; ++k) shifted.push_back(tape.shift_rows(c, k - half));
    c = tape.silu(convs_[l](tape, tape.concat_cols(shifted)));
  }
  c = conv_mix_(tape, c);

  // Fusion.
  const Var q = wq_(tape, h);
  const Var k = wk_(tape, c);
  const Var v = wv_(tape, c);
  const int dh = shape_.hidden / shape_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> heads;
  for (int a = 0; a < shape_.heads; ++a) {
    const Var qa = tape.slice_cols(q, a * dh, dh);
    const Var ka = tape.slice_cols(k, a * dh, dh);
    const Var va = tape.slice_cols(v, a * dh, dh);
    const Var att = tape.softmax_rows(tape.scale(tape.matmul(qa, tape.transpose(ka)), inv_sqrt));
    heads.push_back(tape.matmul(att, va));
  }
  const Var fused = tape.add(tape.add(h, c), wo_(tape, tape.concat_cols(heads)));
  Forward out;
  out.logits = head_(tape, fused);
  out.input_rows.reserve(dense.knot_index.size());
  for (std::size_t r : dense.knot_index) out.input_rows.push_back(static_cast<int>(r));
  return out;
}

nlohmann::json EncoderModel::to_json() const {
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& p : params_.all())
    manifest.push_back({{"name", p->name}, {"shape", {p->value.rows(), p->value.cols()}}});
  return {{"format", "curvefold.encoder"},
          {"version", kFormatVersion},
          {"shape",
           {{"layers", shape_.layers},
            {"hidden", shape_.hidden},
            {"heads", shape_.heads},
            {"kernel", shape_.kernel},
            {"conv_layers", shape_.conv_layers},
            {"classes", shape_.classes},
            {"dense_per_span", shape_.dense_per_span},
            {"kappa_scale", shape_.kappa_scale}}},
          {"manifest", manifest},
          {"params", params_.to_json()["params"]}};
}

EncoderModel EncoderModel::from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || j.value("format", std::string{}) != "curvefold.encoder")
      throw ConfigError("not an encoder model file");
    if (j.at("version").get<int>() != kFormatVersion)
      throw ConfigError("unsupported encoder format version " + j.at("version").dump());
    const auto& s = j.at("shape");
    EncoderShape shape;
    shape.layers = s.at("layers").get<int>();
    shape.hidden = s.at("hidden").get<int>();
    shape.heads = s.at("heads").get<int>();
    shape.kernel = s.at("kernel").get<int>();
    shape.conv_layers = s.at("conv_layers").get<int>();
    shape.classes = s.at("classes").get<int>();
    shape.dense_per_span = s.at("dense_per_span").get<int>();
    shape.kappa_scale = s.at("kappa_scale").get<double>();
    EncoderModel model(0, shape);
    const auto& manifest = j.at("manifest");
    const auto& params = model.params_.all();
    if (!manifest.is_array() || manifest.size() != params.size())
      throw ConfigError("manifest does not match the model layout");
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& e = manifest[i];
      if (e.at("name").get<std::string>() != params[i]->name || e.at("shape")[0].get<long>() != params[i]->value.rows() ||
          e.at("shape")[1].get<long>() != params[i]->value.cols())
        throw ConfigError("manifest entry " + std::to_string(i) + " does not match " + params[i]->name);
    }
    model.params_.load_json({{"params", j.at("params")}});
    if (!model.params_.all_finite()) throw ConfigError("model contains non-finite parameters");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed encoder model: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Inference

namespace {

std::vector<std::array<double, 3>> probabilities_at(const Eigen::MatrixXd& logits, const std::vector<int>& rows) {
  std::vector<std::array<double, 3>> out;
  out.reserve(rows.size());
  for (int r : rows) {
    const Eigen::RowVectorXd z = logits.row(r);
    const double mx = z.maxCoeff();
    std::array<double, 3> p{};
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) sum += (p[static_cast<std::size_t>(c)] = std::exp(z(c) - mx));
    for (double& v : p) v /= sum;
    out.push_back(p);
  }
  return out;
}

int argmax3(const Eigen::MatrixXd& logits, int row) {
  int best = 0;
  for (int c = 1; c < 3; ++c)
    if (logits(row, c) > logits(row, best)) best = c;
  return best;
}

}  // namespace

std::vector<std::array<double, 3>> encode_curve(const EncoderModel& model, const Curve& curve) {
  Tape tape;
  const auto fwd = model.forward(tape, curve.points());
  return probabilities_at(tape.value(fwd.logits), fwd.input_rows);
}

SseLabels predict_labels(const EncoderModel& model, const Curve& curve) {
  Tape tape;
  const auto fwd = model.forward(tape, curve.points());
  std::string s;
  for (int r : fwd.input_rows) s.push_back(kSseClasses[static_cast<std::size_t>(argmax3(tape.value(fwd.logits), r))]);
  return SseLabels(s);
}

double encoder_accuracy(const EncoderModel& model, const std::vector<SseExample>& data) {
  std::size_t hit = 0, total = 0;
  for (const auto& ex : data) {
    const SseLabels pred = predict_labels(model, ex.curve);
    if (pred.size() != ex.labels.size()) throw DataError("labels and points are misaligned");
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == ex.labels[i];
    total += pred.size();
  }
  return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Training

TrainingResult train_encoder(const std::vector<SseExample>& dataset, const TrainingConfig& cfg,
                             const std::vector<SseExample>& heldout) {
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate))
    throw ConfigError("learning rate must be positive");
  if (!(cfg.mask_fraction >= 0.0 && cfg.mask_fraction <= 0.5)) throw ConfigError("mask fraction must lie in [0, 0.5]");
  if (cfg.epochs < 0) throw ConfigError("epochs must be non-negative");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (cfg.eval_every < 1) throw ConfigError("eval_every must be at least 1");
  if (dataset.empty()) throw PreconditionError("training set is empty");

  std::vector<std::vector<int>> targets;
  targets.reserve(dataset.size());
  for (const auto& ex : dataset) {
    if (ex.labels.size() != ex.curve.size()) throw DataError("labels and points are misaligned for '" + ex.curve.id() + "'");
    if (ex.curve.size() < kMinEncoderPoints) throw LengthTooShort("training curve shorter than 8 points");
    std::vector<int> t(ex.labels.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = sse_class_index(ex.labels[i]);
    targets.push_back(std::move(t));
  }
  for (const auto& ex : heldout)
    if (ex.labels.size() != ex.curve.size()) throw DataError("held-out labels and points are misaligned");

  TrainingResult result{EncoderModel(derive_seed(cfg.seed, 0)), {}};
  EncoderModel& model = result.model;
  nn::Adam adam({cfg.learning_rate, 0.9, 0.999, 1e-8});
  std::mt19937_64 order_rng(derive_seed(cfg.seed, 1));
  std::mt19937_64 mask_rng(derive_seed(cfg.seed, 2));

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double loss_sum = 0.0;
    std::size_t hit = 0, seen = 0;
    int in_batch = 0;
    model.params().zero_grad();
    for (std::size_t step = 0; step < order.size(); ++step) {
      const std::size_t idx = order[step];
      std::vector<int> tgt = targets[idx];
      if (cfg.mask_fraction > 0.0) {
        const auto n_mask = static_cast<std::size_t>(std::floor(cfg.mask_fraction * static_cast<double>(tgt.size())));
        std::vector<std::size_t> pick(tgt.size());
        std::iota(pick.begin(), pick.end(), 0);
        std::shuffle(pick.begin(), pick.end(), mask_rng);
        for (std::size_t k = 0; k < n_mask; ++k) tgt[pick[k]] = -1;
      }
      Tape tape;
      const auto fwd = model.forward(tape, dataset[idx].curve.points());
      const Var at_points = tape.gather_rows(fwd.logits, fwd.input_rows);
      const Var loss = tape.cross_entropy(at_points, tgt);
      const double lv = tape.value(loss)(0, 0);
      if (!std::isfinite(lv)) throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += lv;
      const auto& lg = tape.value(at_points);
      for (std::size_t i = 0; i < targets[idx].size(); ++i)
        hit += argmax3(lg, static_cast<int>(i)) == targets[idx][i];
      seen += targets[idx].size();

      tape.backward(tape.scale(loss, 1.0 / cfg.batch_size));
      if (++in_batch == cfg.batch_size || step + 1 == order.size()) {
        if (in_batch != cfg.batch_size)
          for (auto& p : model.params().all()) p->grad *= static_cast<double>(cfg.batch_size) / in_batch;
        adam.step(model.params());
        model.params().zero_grad();
        in_batch = 0;
        if (!model.params().all_finite()) throw TrainingError("parameters became non-finite");
      }
    }
    EpochStats st;
    st.epoch = epoch;
    st.loss = loss_sum / static_cast<double>(dataset.size());
    st.train_accuracy = static_cast<double>(hit) / static_cast<double>(seen);
    if (!heldout.empty() && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs))
      st.heldout_accuracy = encoder_accuracy(model, heldout);
    result.trace.push_back(st);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Synthetic data

std::vector<SseExample> generate_synthetic_sse_dataset(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw PreconditionError("dataset size must be at least 1");
  static constexpr double kRates[3] = {0.4, 0.8, 1.2};
  std::vector<SseExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(seed, i));
    BundleParams bp;
    bp.hairpin_probability = 1.0 / 3.0;
    const std::string id = "syn" + std::to_string(i);
    const Curve topo = random_bundle_curve(rng, bp, id);
    const Backbone bb = bundle_backbone(topo);
    const Curve c = extract_curve(bb, kRates[i % 3]).with_id(id);
    out.push_back({c, *c.labels()});
  }
  return out;
}

}  // namespace curvefold
