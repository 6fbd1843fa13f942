// SPDX-License-Identifier: Apache-2.0
//
// A small reverse-mode automatic differentiation tape over dense Eigen
// matrices, sized for the per-curve models in this project (hundreds of rows,
// tens of columns). Values are recorded eagerly; backward() walks the tape in
// reverse once.
#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

namespace curvefold::nn {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;
};

/// Owns named parameters in creation order (the order defines the
/// serialisation manifest).
class ParameterSet {
 public:
  /// Glorot-uniform weights (rows = fan-in); zero when `zero` is set.
  Parameter& add(const std::string& name, Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                 bool zero = false);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  std::vector<std::unique_ptr<Parameter>>& all() { return params_; }
  const std::vector<std::unique_ptr<Parameter>>& all() const { return params_; }
  void zero_grad();
  std::size_t scalar_count() const;
  bool all_finite() const;

  /// {"params":[{"name", "shape":[r,c], "data":[...]}, ...]}
  nlohmann::json to_json() const;
  /// Loads values; throws ConfigError unless names and shapes match exactly.
  void load_json(const nlohmann::json& j);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

class Tape {
 public:
  struct Var {
    int id = -1;
  };

  Var constant(Matrix value);
  Var param(Parameter& p);
  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  std::size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  /// a (n x k) + b (1 x k) broadcast over rows.
  Var add_row(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double s);
  Var silu(Var a);
  Var concat_cols(const std::vector<Var>& parts);
  Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
  Var transpose(Var a);
  Var gather_rows(Var a, const std::vector<int>& rows);
  /// out.row(idx[k]) += a.row(k); out has `rows` rows.
  Var scatter_add_rows(Var a, const std::vector<int>& idx, Eigen::Index rows);
  /// out.row(i) = a.row(i + offset), zero where i + offset is out of range.
  Var shift_rows(Var a, Eigen::Index offset);
  /// (n x k) -> (n x 1) squared row norms.
  Var row_sqnorm(Var a);
  /// a (n x k) with row i scaled by c(i, 0), c is (n x 1).
  Var scale_rows(Var a, Var c);
  /// a (n x k) with row i scaled by a constant weight.
  Var scale_rows_const(Var a, const Eigen::VectorXd& w);
  Var softmax_rows(Var a);
  /// Mean over selected rows of -log softmax(logits)[row, target].
  /// Rows with target < 0 are ignored. Returns a 1x1 node.
  Var cross_entropy(Var logits, const std::vector<int>& targets);
  /// Mean of squared entries (1x1).
  Var mean_square(Var a);
  Var mean_square_diff(Var a, Var b);

  /// Seeds d(out)/d(out) = 1 for a 1x1 node and accumulates gradients into
  /// every Parameter touched by param().
  void backward(Var out);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, int)> back;
    Parameter* param = nullptr;
  };
  Var push(Matrix value, std::function<void(Tape&, int)> back);
  Matrix& grad(int id);

  std::vector<Node> nodes_;
};

/// y = x W + b.
struct Linear {
  Parameter* w = nullptr;
  Parameter* b = nullptr;
  static Linear make(ParameterSet& ps, const std::string& name, Eigen::Index in, Eigen::Index out,
                     std::mt19937_64& rng);
  Tape::Var operator()(Tape& t, Tape::Var x) const;
};

/// Linear -> SiLU -> Linear, optionally followed by SiLU.
struct Mlp2 {
  Linear l1;
  Linear l2;
  bool act_out = false;
  static Mlp2 make(ParameterSet& ps, const std::string& name, Eigen::Index in, Eigen::Index hidden,
                   Eigen::Index out, bool act_out, std::mt19937_64& rng);
  Tape::Var operator()(Tape& t, Tape::Var x) const;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}
  /// One update from the accumulated gradients; does not clear them.
  void step(ParameterSet& ps);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
};

}  // namespace curvefold::nn
