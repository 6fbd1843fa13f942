// SPDX-License-Identifier: Apache-2.0
#include "curvefold/diffusion/denoiser.hpp"

#include <set>

#include "curvefold/errors.hpp"
#include "curvefold/geometry/superpose.hpp"

namespace curvefold {

void validate_motif(const MotifSpec& motif, std::size_t length) {
  if (static_cast<std::size_t>(motif.coords.cols()) != motif.indices.size())
    throw DimensionError("motif needs one coordinate per index");
  std::set<std::size_t> seen;
  for (std::size_t i : motif.indices) {
    if (i >= length)
      throw IndexError("motif index " + std::to_string(i) + " outside chain of length " + std::to_string(length));
    if (!seen.insert(i).second) throw IndexError("motif index " + std::to_string(i) + " listed twice");
  }
}

namespace {

class OracleDenoiser final : public Denoiser {
 public:
  explicit OracleDenoiser(const Backbone& target) : coords_(target.ca()), labels_(target.labels()) {
    if (!target.labeled() || target.size() == 0) throw PreconditionError("oracle target must be labeled");
    if (target.size() < 3) throw PreconditionError("oracle target needs at least 3 residues");
  }

  DenoiserOutput predict_z0(const Points& z_t, int, const MotifSpec* motif) const override {
    if (z_t.cols() != coords_.cols())
      throw DimensionError("oracle expects " + std::to_string(coords_.cols()) + " residues, got " +
                           std::to_string(z_t.cols()));
    Points out;
    if (motif != nullptr && !motif->empty()) {
      validate_motif(*motif, static_cast<std::size_t>(coords_.cols()));
      const auto m = static_cast<Eigen::Index>(motif->indices.size());
      if (m >= 3) {
        Points sub(3, m);
        for (Eigen::Index k = 0; k < m; ++k) sub.col(k) = coords_.col(static_cast<Eigen::Index>(motif->indices[k]));
        out = kabsch_superpose(sub, motif->coords).apply(coords_);
      } else {
        out = kabsch_superpose(coords_, z_t).apply(coords_);
      }
      for (Eigen::Index k = 0; k < m; ++k) out.col(static_cast<Eigen::Index>(motif->indices[k])) = motif->coords.col(k);
    } else {
      out = kabsch_superpose(coords_, z_t).apply(coords_);
    }
    return {std::move(out), labels_};
  }

  std::optional<std::size_t> length() const override { return static_cast<std::size_t>(coords_.cols()); }
  std::string name() const override { return "oracle"; }

 private:
  Points coords_;
  SseLabels labels_;
};

class FailingDenoiser final : public Denoiser {
 public:
  FailingDenoiser(DenoiserPtr inner, int fail_at) : inner_(std::move(inner)), fail_at_(fail_at) {}
  DenoiserOutput predict_z0(const Points& z_t, int t, const MotifSpec* motif) const override {
    if (t == fail_at_) throw Error("injected failure");
    return inner_->predict_z0(z_t, t, motif);
  }
  std::optional<std::size_t> length() const override { return inner_->length(); }
  std::string name() const override { return "failing(" + inner_->name() + ")"; }

 private:
  DenoiserPtr inner_;
  int fail_at_;
};

class ConjugatedDenoiser final : public Denoiser {
 public:
  ConjugatedDenoiser(DenoiserPtr inner, const RigidTransform& g) : inner_(std::move(inner)), g_(g), inv_(g.inverse()) {}
  DenoiserOutput predict_z0(const Points& z_t, int t, const MotifSpec* motif) const override {
    DenoiserOutput out;
    if (motif != nullptr) {
      MotifSpec back{inv_.apply(motif->coords), motif->indices};
      out = inner_->predict_z0(inv_.apply(z_t), t, &back);
    } else {
      out = inner_->predict_z0(inv_.apply(z_t), t, nullptr);
    }
    out.coords = g_.apply(out.coords);
    return out;
  }
  std::optional<std::size_t> length() const override { return inner_->length(); }
  std::string name() const override { return "conjugated(" + inner_->name() + ")"; }

 private:
  DenoiserPtr inner_;
  RigidTransform g_;
  RigidTransform inv_;
};

}  // namespace

DenoiserPtr oracle_denoiser(const Backbone& target) { return std::make_shared<OracleDenoiser>(target); }

DenoiserPtr failing_denoiser(DenoiserPtr inner, int fail_at) {
  return std::make_shared<FailingDenoiser>(std::move(inner), fail_at);
}

DenoiserPtr conjugated_denoiser(DenoiserPtr inner, const RigidTransform& g) {
  return std::make_shared<ConjugatedDenoiser>(std::move(inner), g);
}

}  // namespace curvefold
