// SPDX-License-Identifier: Apache-2.0
#include "curvefold/nn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "curvefold/errors.hpp"
#include "curvefold/simd/kernels.hpp"

namespace curvefold::nn {

Parameter& ParameterSet::add(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                             std::mt19937_64& rng, bool zero) {
  for (const auto& p : params_)
    if (p->name == name) throw ConfigError("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Matrix::Zero(rows, cols);
  if (!zero) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) p->value(i, j) = u(rng);
  }
  p->grad = Matrix::Zero(rows, cols);
  p->adam_m = Matrix::Zero(rows, cols);
  p->adam_v = Matrix::Zero(rows, cols);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterSet::get(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return *p;
  throw ConfigError("unknown parameter: " + name);
}

const Parameter& ParameterSet::get(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return *p;
  throw ConfigError("unknown parameter: " + name);
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

bool ParameterSet::all_finite() const {
  for (const auto& p : params_)
    if (!p->value.allFinite()) return false;
  return true;
}

nlohmann::json ParameterSet::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : params_) {
    nlohmann::json data = nlohmann::json::array();
    // row-major for readability
    for (Eigen::Index i = 0; i < p->value.rows(); ++i)
      for (Eigen::Index j = 0; j < p->value.cols(); ++j) data.push_back(p->value(i, j));
    arr.push_back({{"name", p->name}, {"shape", {p->value.rows(), p->value.cols()}}, {"data", data}});
  }
  return {{"params", arr}};
}

void ParameterSet::load_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("params") || !j["params"].is_array())
    throw ConfigError("parameter blob lacks a params array");
  const auto& arr = j["params"];
  if (arr.size() != params_.size())
    throw ConfigError("parameter count mismatch: expected " + std::to_string(params_.size()) + ", got " +
                      std::to_string(arr.size()));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    const auto& e = arr[k];
    if (!e.is_object() || e.value("name", std::string{}) != p.name)
      throw ConfigError("parameter " + std::to_string(k) + " should be named " + p.name);
    const auto& shape = e.at("shape");
    if (!shape.is_array() || shape.size() != 2 || shape[0].get<long>() != p.value.rows() ||
        shape[1].get<long>() != p.value.cols())
      throw ConfigError("shape mismatch for parameter " + p.name);
    const auto& data = e.at("data");
    if (!data.is_array() || data.size() != static_cast<std::size_t>(p.value.size()))
      throw ConfigError("data size mismatch for parameter " + p.name);
    std::size_t idx = 0;
    for (Eigen::Index r = 0; r < p.value.rows(); ++r)
      for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
        const auto& x = data[idx++];
        if (!x.is_number()) throw ConfigError("non-numeric entry in parameter " + p.name);
        p.value(r, c) = x.get<double>();
      }
    p.grad.setZero();
    p.adam_m.setZero();
    p.adam_v.setZero();
  }
}

// ---------------------------------------------------------------------------

Tape::Var Tape::push(Matrix value, std::function<void(Tape&, int)> back) {
  Node n;
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Tape::Var Tape::constant(Matrix value) { return push(std::move(value), nullptr); }

Tape::Var Tape::param(Parameter& p) {
  Var v = push(p.value, nullptr);
  nodes_.back().param = &p;
  return v;
}

Tape::Var Tape::matmul(Var a, Var b) {
  if (value(a).cols() != value(b).rows()) throw DimensionError("matmul shape mismatch");
  return push(value(a) * value(b), [a, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    t.grad(a.id).noalias() += g * t.value(b).transpose();
    t.grad(b.id).noalias() += t.value(a).transpose() * g;
  });
}

Tape::Var Tape::add_row(Var a, Var b) {
  if (value(b).rows() != 1 || value(b).cols() != value(a).cols()) throw DimensionError("add_row shape mismatch");
  return push(value(a).rowwise() + value(b).row(0), [a, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    t.grad(a.id) += g;
    t.grad(b.id) += g.colwise().sum();
  });
}

Tape::Var Tape::add(Var a, Var b) {
  return push(value(a) + value(b), [a, b](Tape& t, int self) {
    t.grad(a.id) += t.nodes_[self].grad;
    t.grad(b.id) += t.nodes_[self].grad;
  });
}

Tape::Var Tape::sub(Var a, Var b) {
  return push(value(a) - value(b), [a, b](Tape& t, int self) {
    t.grad(a.id) += t.nodes_[self].grad;
    t.grad(b.id) -= t.nodes_[self].grad;
  });
}

Tape::Var Tape::hadamard(Var a, Var b) {
  return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    t.grad(a.id) += g.cwiseProduct(t.value(b));
    t.grad(b.id) += g.cwiseProduct(t.value(a));
  });
}

Tape::Var Tape::scale(Var a, double s) {
  return push(value(a) * s, [a, s](Tape& t, int self) { t.grad(a.id) += s * t.nodes_[self].grad; });
}

Tape::Var Tape::silu(Var a) {
  const Matrix& x = value(a);
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) y(i) = x(i) / (1.0 + std::exp(-x(i)));
  return push(std::move(y), [a](Tape& t, int self) {
    const Matrix& x = t.value(a);
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad(a.id);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double s = 1.0 / (1.0 + std::exp(-x(i)));
      ga(i) += g(i) * s * (1.0 + x(i) * (1.0 - s));
    }
  });
}

Tape::Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat of nothing");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    if (value(p).rows() != rows) throw DimensionError("concat row mismatch");
    cols += value(p).cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, value(p).cols()) = value(p);
    c += value(p).cols();
  }
  return push(std::move(out), [parts](Tape& t, int self) {
    Eigen::Index c = 0;
    for (Var p : parts) {
      const Eigen::Index w = t.value(p).cols();
      t.grad(p.id) += t.nodes_[self].grad.middleCols(c, w);
      c += w;
    }
  });
}

Tape::Var Tape::slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || begin + count > value(a).cols()) throw DimensionError("slice out of range");
  return push(value(a).middleCols(begin, count), [a, begin, count](Tape& t, int self) {
    t.grad(a.id).middleCols(begin, count) += t.nodes_[self].grad;
  });
}

Tape::Var Tape::transpose(Var a) {
  return push(value(a).transpose(), [a](Tape& t, int self) { t.grad(a.id) += t.nodes_[self].grad.transpose(); });
}

Tape::Var Tape::gather_rows(Var a, const std::vector<int>& rows) {
  const Matrix& x = value(a);
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= x.rows()) throw IndexError("gather row out of range");
    out.row(static_cast<Eigen::Index>(k)) = x.row(rows[k]);
  }
  return push(std::move(out), [a, rows](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad(a.id);
    for (std::size_t k = 0; k < rows.size(); ++k) ga.row(rows[k]) += g.row(static_cast<Eigen::Index>(k));
  });
}

Tape::Var Tape::scatter_add_rows(Var a, const std::vector<int>& idx, Eigen::Index rows) {
  const Matrix& x = value(a);
  if (static_cast<Eigen::Index>(idx.size()) != x.rows()) throw DimensionError("scatter index count mismatch");
  Matrix out = Matrix::Zero(rows, x.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= rows) throw IndexError("scatter row out of range");
    out.row(idx[k]) += x.row(static_cast<Eigen::Index>(k));
  }
  return push(std::move(out), [a, idx](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad(a.id);
    for (std::size_t k = 0; k < idx.size(); ++k) ga.row(static_cast<Eigen::Index>(k)) += g.row(idx[k]);
  });
}

Tape::Var Tape::shift_rows(Var a, Eigen::Index offset) {
  const Matrix& x = value(a);
  const Eigen::Index n = x.rows();
  Matrix out = Matrix::Zero(n, x.cols());
  const Eigen::Index lo = std::max<Eigen::Index>(0, -offset);
  const Eigen::Index hi = std::min<Eigen::Index>(n, n - offset);
  if (hi > lo) out.middleRows(lo, hi - lo) = x.middleRows(lo + offset, hi - lo);
  return push(std::move(out), [a, offset, lo, hi](Tape& t, int self) {
    if (hi > lo) t.grad(a.id).middleRows(lo + offset, hi - lo) += t.nodes_[self].grad.middleRows(lo, hi - lo);
  });
}

Tape::Var Tape::row_sqnorm(Var a) {
  return push(value(a).rowwise().squaredNorm(), [a](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    t.grad(a.id) += 2.0 * (t.value(a).array().colwise() * g.col(0).array()).matrix();
  });
}

Tape::Var Tape::scale_rows(Var a, Var c) {
  if (value(c).cols() != 1 || value(c).rows() != value(a).rows()) throw DimensionError("scale_rows shape mismatch");
  return push((value(a).array().colwise() * value(c).col(0).array()).matrix(), [a, c](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    t.grad(a.id) += (g.array().colwise() * t.value(c).col(0).array()).matrix();
    t.grad(c.id) += g.cwiseProduct(t.value(a)).rowwise().sum();
  });
}

Tape::Var Tape::scale_rows_const(Var a, const Eigen::VectorXd& w) {
  if (w.size() != value(a).rows()) throw DimensionError("scale_rows_const shape mismatch");
  return push((value(a).array().colwise() * w.array()).matrix(), [a, w](Tape& t, int self) {
    t.grad(a.id) += (t.nodes_[self].grad.array().colwise() * w.array()).matrix();
  });
}

Tape::Var Tape::softmax_rows(Var a) {
  const Matrix& x = value(a);
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mx = x.row(i).maxCoeff();
    y.row(i) = (x.row(i).array() - mx).exp();
    y.row(i) /= y.row(i).sum();
  }
  return push(std::move(y), [a](Tape& t, int self) {
    const Matrix& y = t.nodes_[self].value;
    const Matrix& g = t.nodes_[self].grad;
    const Eigen::VectorXd dots = g.cwiseProduct(y).rowwise().sum();
    t.grad(a.id) += (y.array() * (g.array().colwise() - dots.array())).matrix();
  });
}

Tape::Var Tape::cross_entropy(Var logits, const std::vector<int>& targets) {
  const Matrix& x = value(logits);
  if (static_cast<Eigen::Index>(targets.size()) != x.rows()) throw DimensionError("target count mismatch");
  Matrix p(x.rows(), x.cols());
  double loss = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mx = x.row(i).maxCoeff();
    p.row(i) = (x.row(i).array() - mx).exp();
    const double z = p.row(i).sum();
    p.row(i) /= z;
    const int tgt = targets[static_cast<std::size_t>(i)];
    if (tgt < 0) continue;
    if (tgt >= x.cols()) throw IndexError("target class out of range");
    loss -= x(i, tgt) - mx - std::log(z);
    ++count;
  }
  Matrix out(1, 1);
  out(0, 0) = count > 0 ? loss / count : 0.0;
  return push(std::move(out), [logits, targets, p, count](Tape& t, int self) {
    if (count == 0) return;
    const double g = t.nodes_[self].grad(0, 0) / count;
    Matrix& gl = t.grad(logits.id);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      const int tgt = targets[static_cast<std::size_t>(i)];
      if (tgt < 0) continue;
      gl.row(i) += g * p.row(i);
      gl(i, tgt) -= g;
    }
  });
}

Tape::Var Tape::mean_square(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).squaredNorm() / static_cast<double>(value(a).size());
  return push(std::move(out), [a](Tape& t, int self) {
    const double g = t.nodes_[self].grad(0, 0);
    t.grad(a.id) += (2.0 * g / static_cast<double>(t.value(a).size())) * t.value(a);
  });
}

Tape::Var Tape::mean_square_diff(Var a, Var b) { return mean_square(sub(a, b)); }

void Tape::backward(Var out) {
  if (value(out).size() != 1) throw DimensionError("backward needs a scalar output");
  grad(out.id)(0, 0) += 1.0;
  for (int id = out.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) continue;
    if (n.back) n.back(*this, id);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

// ---------------------------------------------------------------------------

Linear Linear::make(ParameterSet& ps, const std::string& name, Eigen::Index in, Eigen::Index out,
                    std::mt19937_64& rng) {
  Linear l;
  l.w = &ps.add(name + ".w", in, out, rng);
  l.b = &ps.add(name + ".b", 1, out, rng, true);
  return l;
}

Tape::Var Linear::operator()(Tape& t, Tape::Var x) const {
  return t.add_row(t.matmul(x, t.param(*w)), t.param(*b));
}

Mlp2 Mlp2::make(ParameterSet& ps, const std::string& name, Eigen::Index in, Eigen::Index hidden, Eigen::Index out,
                bool act_out, std::mt19937_64& rng) {
  Mlp2 m;
  m.l1 = Linear::make(ps, name + ".0", in, hidden, rng);
  m.l2 = Linear::make(ps, name + ".1", hidden, out, rng);
  m.act_out = act_out;
  return m;
}

Tape::Var Mlp2::operator()(Tape& t, Tape::Var x) const {
  Tape::Var y = l2(t, t.silu(l1(t, x)));
  return act_out ? t.silu(y) : y;
}

void Adam::step(ParameterSet& ps) {
  ++t_;
  simd::AdamCoeffs c{cfg_.lr,
                     cfg_.beta1,
                     cfg_.beta2,
                     cfg_.eps,
                     1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)),
                     1.0 - std::pow(cfg_.beta2, static_cast<double>(t_))};
  for (auto& p : ps.all()) {
    const auto n = static_cast<std::size_t>(p->value.size());
    simd::adam_step({p->value.data(), n}, {p->adam_m.data(), n}, {p->adam_v.data(), n}, {p->grad.data(), n}, c);
  }
}

}  // namespace curvefold::nn
