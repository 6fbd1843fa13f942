// SPDX-License-Identifier: Apache-2.0
//
// Restoration benchmark: ground-truth backbone -> topology curve -> sketch ->
// guided sampling, scored by how well the generated backbone reproduces the
// curve (scTF_1) and the truth (TM-score, RMSD). Ablation, noise and MDS
// drivers are built on top of run_restoration.
#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "curvefold/backbone/backbone.hpp"
#include "curvefold/backbone/extract.hpp"
#include "curvefold/diffusion/sampler.hpp"
#include "curvefold/encoder/encoder.hpp"
#include "curvefold/geometry/curve.hpp"

#include "json.hpp"

namespace curvefold {

/// Builds the denoiser used for one case. The oracle needs the case's ground
/// truth; learned denoisers ignore it.
using DenoiserFactory = std::function<DenoiserPtr(const Backbone& truth)>;

DenoiserFactory oracle_factory();
DenoiserFactory shared_factory(DenoiserPtr denoiser);

struct NamedBackbone {
  std::string id;
  Backbone backbone;
};

/// n sketcher-generated helix bundles named "bundle<i>".
std::vector<NamedBackbone> synthetic_dataset(std::size_t n, std::uint64_t seed);

/// Every *.pdb file in `dir`, sorted by file name, labels from geometric
/// assignment. Throws DataError if the directory is missing or holds no PDB.
std::vector<NamedBackbone> load_pdb_dataset(const std::string& dir);

struct RestorationConfig {
  SamplerConfig sampler{};
  DiffusionSchedule schedule = default_schedule();
  std::size_t n_bb = 1;
  double extract_rate = kDefaultExtractRate;
  /// When set, the condition curve is relabeled by the encoder instead of
  /// carrying the ground-truth labels.
  std::shared_ptr<const EncoderModel> encoder;
  /// Radius of the per-point ball perturbation applied to the condition.
  double perturb_radius = 0.0;
  /// Master seed; sampler.seed is ignored in favour of per-run seeds.
  std::uint64_t seed = 0;
  /// Cases processed concurrently. Results do not depend on it.
  std::size_t threads = 1;
};

/// Throws ConfigError on n_bb == 0, threads == 0, a negative radius or an
/// invalid sampler configuration.
void validate_restoration_config(const RestorationConfig& cfg);

struct BackboneMetrics {
  std::uint64_t seed = 0;
  /// TF between the generated backbone's extracted curve and the reference.
  double sctf1 = 0.0;
  double tm_to_truth = 0.0;
  double rmsd_to_truth = 0.0;
  double helix_fraction = 0.0;
  /// (sctf1 + tm_to_truth) / 2, used for selection.
  double score = 0.0;
};

struct RestorationCase {
  std::string id;
  std::size_t length = 0;
  /// Extracted from the truth, before any perturbation or relabeling.
  std::optional<Curve> reference;
  /// What the sampler was conditioned on.
  std::optional<Curve> condition;
  std::vector<Backbone> generated;
  std::vector<BackboneMetrics> metrics;
  /// Index of the highest-scoring backbone.
  std::optional<std::size_t> best;
  /// Empty on success; the stage and message otherwise.
  std::string error;
  bool ok() const { return error.empty(); }
};

struct RestorationAggregates {
  std::size_t cases = 0;
  std::size_t failed_cases = 0;
  /// n_bb x cases; failed cases count as entries that pass no threshold.
  std::size_t entries = 0;
  std::size_t scored_entries = 0;
  double mean_sctf1 = 0.0;
  double mean_tm = 0.0;
  double mean_rmsd = 0.0;
  double frac_sctf1_above_0_7 = 0.0;
  double frac_sctf1_above_0_8 = 0.0;
};

struct RestorationTiming {
  double total_seconds = 0.0;
  std::vector<double> case_seconds;
};

struct RestorationReport {
  RestorationConfig config;
  std::string denoiser;
  std::vector<RestorationCase> cases;
  RestorationAggregates aggregates;
  /// Wall-clock data; kept out of to_json so reports are reproducible.
  RestorationTiming timing;
};

/// Per case: extract the reference curve, perturb and relabel it into the
/// condition, sketch it, draw n_bb trajectories of the truth's length and
/// score them. A failing stage is recorded on its case and the run goes on.
/// Seeds: case i uses derive_seed(cfg.seed, i); its backbone j samples with
/// derive_seed(case seed, j + 1) and the perturbation uses stream 0.
RestorationReport run_restoration(const std::vector<NamedBackbone>& dataset, const RestorationConfig& cfg,
                                  const DenoiserFactory& factory);

nlohmann::json restoration_config_to_json(const RestorationConfig& cfg);
nlohmann::json restoration_report_to_json(const RestorationReport& r);
/// One row per generated backbone (failed cases get one row with status
/// "failed").
std::string restoration_csv(const RestorationReport& r);
nlohmann::json timing_to_json(const RestorationTiming& t);

/// Writes report.json, cases.csv, backbones.jsonl and timing.json into `dir`
/// (created if needed). All but timing.json are byte-reproducible.
void write_restoration_report(const RestorationReport& r, const std::string& dir);

struct AblationPoint {
  double lambda = 2.0 / 3.0;
  double gamma = 0.2;
  double eta = 0.7;
  /// Empty means Helix-Gating.
  std::optional<int> fixed_phase_switch;
};

std::string phase_label(const std::optional<int>& fixed_phase_switch);
/// "gated" or "fixed:<t>". Throws ConfigError otherwise.
std::optional<int> parse_phase(const std::string& s);

struct AblationGrid {
  std::vector<double> lambdas{2.0 / 3.0};
  std::vector<double> gammas{0.2};
  std::vector<double> etas{0.7};
  std::vector<std::optional<int>> phase_switches{std::nullopt};
  /// Cartesian product, lambda varying slowest.
  std::vector<AblationPoint> points() const;
};

struct AblationRow {
  AblationPoint point;
  RestorationReport report;
  /// (mean scTF_1 + mean TM) / 2.
  double score = 0.0;
};

struct AblationReport {
  std::vector<AblationRow> rows;
};

/// One run_restoration per grid point, all with the same master seed.
/// Throws ConfigError on an empty grid.
AblationReport ablation_sweep(const AblationGrid& grid, const RestorationConfig& base,
                              const std::vector<NamedBackbone>& dataset, const DenoiserFactory& factory);
std::string ablation_csv(const AblationReport& r);
nlohmann::json ablation_to_json(const AblationReport& r);

struct NoiseRow {
  double radius = 0.0;
  RestorationAggregates aggregates;
};

/// run_restoration at each radius; throws ConfigError for a negative radius.
std::vector<NoiseRow> noise_robustness(const std::vector<NamedBackbone>& dataset, const std::vector<double>& radii,
                                       const RestorationConfig& base, const DenoiserFactory& factory);
std::string noise_csv(const std::vector<NoiseRow>& rows);

struct TopologyMap {
  std::vector<std::string> ids;
  /// Pairwise 1 - TF over the kept items.
  Eigen::MatrixXd distances;
  Eigen::MatrixX2d coords;
  /// Items dropped as degenerate, with the reason.
  std::vector<std::pair<std::string, std::string>> skipped;
};

/// MDS of the pairwise (1 - TF) distances. Throws PreconditionError when
/// fewer than 3 items are given or survive the degeneracy check.
TopologyMap topology_map(const std::vector<Curve>& curves, const std::vector<std::string>& ids);
/// Backbones go through extract_curve (unlabeled ones get geometric labels).
TopologyMap topology_map(const std::vector<NamedBackbone>& backbones);
/// "id,x,y" rows in input order.
std::string topology_map_csv(const TopologyMap& m);

/// Spearman rank correlation with average ranks for ties. Throws
/// PreconditionError for mismatched or fewer than 2 values; returns 0 when a
/// side is constant.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

/// printf("%.17g") for CSV cells; NaN prints as "nan".
std::string format_double(double v);

}  // namespace curvefold
