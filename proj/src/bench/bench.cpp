// SPDX-License-Identifier: Apache-2.0
#include "curvefold/bench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "curvefold/backbone/pdb.hpp"
#include "curvefold/backbone/sse.hpp"
#include "curvefold/curveops/curveops.hpp"
#include "curvefold/diffusion/toy_denoiser.hpp"
#include "curvefold/errors.hpp"
#include "curvefold/geometry/fitness.hpp"
#include "curvefold/geometry/mds.hpp"
#include "curvefold/geometry/superpose.hpp"
#include "curvefold/io/json_io.hpp"
#include "curvefold/sketch/bundles.hpp"
#include "curvefold/sketch/sketcher.hpp"

namespace curvefold {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMinRestorationLength = 20;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

Backbone ensure_labels(const Backbone& bb) {
  if (!bb.labels().empty()) return bb;
  return bb.with_labels(assign_sse_geometric(bb).labels);
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

// Runs `stage` and prefixes any library error with its name.
template <class F>
auto staged(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw Error(std::string(stage) + ": " + e.what());
  }
}

RestorationCase restore_case(const NamedBackbone& item, std::size_t index, const RestorationConfig& cfg,
                             const DenoiserFactory& factory) {
  RestorationCase rc;
  rc.id = item.id;
  rc.length = item.backbone.size();
  const std::uint64_t case_seed = derive_seed(cfg.seed, index);
  try {
    if (rc.length < kMinRestorationLength)
      throw Error("precondition: backbone has " + std::to_string(rc.length) + " residues, at least " +
                  std::to_string(kMinRestorationLength) + " are required");
    const Backbone truth = ensure_labels(item.backbone);
    rc.reference = staged("extract", [&] { return extract_curve(truth, cfg.extract_rate); });
    Curve condition = staged("perturb", [&] {
      return perturb_sphere(*rc.reference, cfg.perturb_radius, derive_seed(case_seed, 0));
    });
    if (cfg.encoder)
      condition = staged("encode", [&] { return condition.with_labels(predict_labels(*cfg.encoder, condition)); });
    rc.condition = condition;
    const Sketch sketch = staged("sketch", [&] { return sketch_from_curve(condition); });
    const DenoiserPtr denoiser = staged("denoiser", [&] {
      DenoiserPtr d = factory(truth);
      if (!d) throw PreconditionError("factory returned no denoiser");
      return d;
    });

    for (std::size_t j = 0; j < cfg.n_bb; ++j) {
      SamplerConfig scfg = cfg.sampler;
      scfg.seed = derive_seed(case_seed, j + 1);
      scfg.record_coordinates = false;
      const Trajectory traj =
          staged("sample", [&] { return sample(*denoiser, &sketch, scfg, cfg.schedule, truth.size()); });
      BackboneMetrics m;
      m.seed = scfg.seed;
      staged("score", [&] {
        const Backbone& gen = traj.final_backbone;
        m.sctf1 = topology_fitness(extract_curve(gen, cfg.extract_rate), *rc.reference);
        m.tm_to_truth = tm_score_sequential(gen.ca(), truth.ca());
        m.rmsd_to_truth = rmsd_superposed(gen.ca(), truth.ca());
        m.helix_fraction = helix_fraction(gen.labels());
        m.score = (m.sctf1 + m.tm_to_truth) / 2.0;
        return 0;
      });
      rc.generated.push_back(traj.final_backbone);
      rc.metrics.push_back(m);
    }
    std::size_t best = 0;
    for (std::size_t j = 1; j < rc.metrics.size(); ++j)
      if (rc.metrics[j].score > rc.metrics[best].score) best = j;
    rc.best = best;
  } catch (const std::exception& e) {
    rc.error = e.what();
    rc.generated.clear();
    rc.metrics.clear();
    rc.best.reset();
  }
  return rc;
}

RestorationAggregates aggregate(const std::vector<RestorationCase>& cases, std::size_t n_bb) {
  RestorationAggregates a;
  a.cases = cases.size();
  a.entries = cases.size() * n_bb;
  double sctf = 0.0, tm = 0.0, rm = 0.0;
  std::size_t above7 = 0, above8 = 0;
  for (const auto& c : cases) {
    if (!c.ok()) ++a.failed_cases;
    for (const auto& m : c.metrics) {
      ++a.scored_entries;
      sctf += m.sctf1;
      tm += m.tm_to_truth;
      rm += m.rmsd_to_truth;
      above7 += m.sctf1 > 0.7;
      above8 += m.sctf1 > 0.8;
    }
  }
  const double k = static_cast<double>(a.scored_entries);
  a.mean_sctf1 = a.scored_entries ? sctf / k : nan();
  a.mean_tm = a.scored_entries ? tm / k : nan();
  a.mean_rmsd = a.scored_entries ? rm / k : nan();
  if (a.entries) {
    a.frac_sctf1_above_0_7 = static_cast<double>(above7) / static_cast<double>(a.entries);
    a.frac_sctf1_above_0_8 = static_cast<double>(above8) / static_cast<double>(a.entries);
  }
  return a;
}

nlohmann::json aggregates_to_json(const RestorationAggregates& a) {
  return {{"cases", a.cases},
          {"failed_cases", a.failed_cases},
          {"entries", a.entries},
          {"scored_entries", a.scored_entries},
          {"mean_sctf1", a.mean_sctf1},
          {"mean_tm_to_truth", a.mean_tm},
          {"mean_rmsd_to_truth", a.mean_rmsd},
          {"frac_sctf1_above_0.7", a.frac_sctf1_above_0_7},
          {"frac_sctf1_above_0.8", a.frac_sctf1_above_0_8}};
}

}  // namespace

DenoiserFactory oracle_factory() {
  return [](const Backbone& truth) { return oracle_denoiser(truth); };
}

DenoiserFactory shared_factory(DenoiserPtr denoiser) {
  if (!denoiser) throw PreconditionError("shared_factory needs a denoiser");
  return [d = std::move(denoiser)](const Backbone&) { return d; };
}

std::vector<NamedBackbone> synthetic_dataset(std::size_t n, std::uint64_t seed) {
  std::vector<NamedBackbone> out;
  const std::vector<Backbone> bbs = generate_bundle_backbones(n, seed);
  out.reserve(n);
  for (std::size_t i = 0; i < bbs.size(); ++i) out.push_back({"bundle" + std::to_string(i), bbs[i]});
  return out;
}

std::vector<NamedBackbone> load_pdb_dataset(const std::string& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw DataError("dataset directory not found: " + dir);
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".pdb") files.push_back(e.path());
  if (files.empty()) throw DataError("no .pdb files in " + dir);
  std::sort(files.begin(), files.end());
  std::vector<NamedBackbone> out;
  for (const auto& f : files) {
    const Backbone bb = read_pdb_file(f.string());
    out.push_back({f.stem().string(), bb.with_labels(assign_sse_geometric(bb).labels)});
  }
  return out;
}

void validate_restoration_config(const RestorationConfig& cfg) {
  if (cfg.n_bb == 0) throw ConfigError("n_bb must be at least 1");
  if (cfg.threads == 0) throw ConfigError("threads must be at least 1");
  if (!(cfg.perturb_radius >= 0.0) || !std::isfinite(cfg.perturb_radius))
    throw ConfigError("perturbation radius must be non-negative");
  if (!(cfg.extract_rate > 0.0 && cfg.extract_rate <= 4.0)) throw ConfigError("extract rate must lie in (0, 4]");
  if (cfg.sampler.mode == SamplerMode::MotifGuided) throw ConfigError("restoration does not take a motif");
  validate_sampler_config(cfg.sampler, cfg.schedule);
}

RestorationReport run_restoration(const std::vector<NamedBackbone>& dataset, const RestorationConfig& cfg,
                                  const DenoiserFactory& factory) {
  validate_restoration_config(cfg);
  if (!factory) throw PreconditionError("no denoiser factory");
  RestorationReport report;
  report.config = cfg;
  report.cases.resize(dataset.size());
  report.timing.case_seconds.assign(dataset.size(), 0.0);

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < dataset.size(); i = next++) {
      const auto c0 = clock::now();
      report.cases[i] = restore_case(dataset[i], i, cfg, factory);
      report.timing.case_seconds[i] = std::chrono::duration<double>(clock::now() - c0).count();
    }
  };
  const std::size_t n_threads = std::min(cfg.threads, std::max<std::size_t>(dataset.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  report.timing.total_seconds = std::chrono::duration<double>(clock::now() - t0).count();

  if (!dataset.empty()) {
    try {
      report.denoiser = factory(ensure_labels(dataset.front().backbone))->name();
    } catch (const std::exception&) {
      report.denoiser = "unavailable";
    }
  }
  report.aggregates = aggregate(report.cases, cfg.n_bb);
  return report;
}

nlohmann::json restoration_config_to_json(const RestorationConfig& cfg) {
  const SamplerConfig& s = cfg.sampler;
  return {{"n_bb", cfg.n_bb},
          {"seed", cfg.seed},
          {"extract_rate", cfg.extract_rate},
          {"labels", cfg.encoder ? "encoder" : "ground_truth"},
          {"perturb_radius", cfg.perturb_radius},
          {"sampler",
           {{"mode", to_string(s.mode)},
            {"lambda", s.lambda},
            {"gamma", s.gamma},
            {"eta", s.eta},
            {"phase", phase_label(s.fixed_phase_switch)},
            {"coord_scale", s.coord_scale}}},
          {"schedule",
           {{"T", cfg.schedule.T},
            {"shape", to_string(cfg.schedule.shape)},
            {"beta_first", cfg.schedule.beta.at(1)},
            {"beta_last", cfg.schedule.beta.back()}}}};
}

nlohmann::json restoration_report_to_json(const RestorationReport& r) {
  nlohmann::json cases = nlohmann::json::array();
  for (const auto& c : r.cases) {
    nlohmann::json bbs = nlohmann::json::array();
    for (std::size_t j = 0; j < c.metrics.size(); ++j) {
      const auto& m = c.metrics[j];
      bbs.push_back({{"index", j},
                     {"seed", m.seed},
                     {"sctf1", m.sctf1},
                     {"tm_to_truth", m.tm_to_truth},
                     {"rmsd_to_truth", m.rmsd_to_truth},
                     {"helix_fraction", m.helix_fraction},
                     {"score", m.score}});
    }
    nlohmann::json jc = {{"id", c.id},
                         {"length", c.length},
                         {"status", c.ok() ? "ok" : "failed"},
                         {"backbones", std::move(bbs)}};
    if (c.condition) jc["condition_points"] = c.condition->size();
    if (c.best) jc["best"] = *c.best;
    if (!c.ok()) jc["error"] = c.error;
    cases.push_back(std::move(jc));
  }
  return {{"format", "curvefold.restoration_report"},
          {"version", 1},
          {"denoiser", r.denoiser},
          {"config", restoration_config_to_json(r.config)},
          {"aggregates", aggregates_to_json(r.aggregates)},
          {"notes",
           "sctf1 compares the generated backbone's extracted curve with the unperturbed reference curve; "
           "tm_to_truth stands in for designability since no refolding is run; best = argmax of "
           "(sctf1 + tm_to_truth) / 2"},
          {"cases", std::move(cases)}};
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string restoration_csv(const RestorationReport& r) {
  std::ostringstream os;
  os << "case_id,index,seed,sctf1,tm_to_truth,rmsd_to_truth,helix_fraction,score,status,error\n";
  for (const auto& c : r.cases) {
    if (!c.ok()) {
      os << csv_quote(c.id) << ",,,,,,,,failed," << csv_quote(c.error) << "\n";
      continue;
    }
    for (std::size_t j = 0; j < c.metrics.size(); ++j) {
      const auto& m = c.metrics[j];
      os << csv_quote(c.id) << ',' << j << ',' << m.seed << ',' << format_double(m.sctf1) << ','
         << format_double(m.tm_to_truth) << ',' << format_double(m.rmsd_to_truth) << ','
         << format_double(m.helix_fraction) << ',' << format_double(m.score) << ",ok,\n";
    }
  }
  return os.str();
}

nlohmann::json timing_to_json(const RestorationTiming& t) {
  return {{"total_seconds", t.total_seconds}, {"case_seconds", t.case_seconds}};
}

void write_restoration_report(const RestorationReport& r, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path d(dir);
  write_text_file((d / "report.json").string(), restoration_report_to_json(r).dump(2) + "\n");
  write_text_file((d / "cases.csv").string(), restoration_csv(r));
  std::string lines;
  for (const auto& c : r.cases)
    for (std::size_t j = 0; j < c.generated.size(); ++j)
      lines += nlohmann::json{{"case", c.id}, {"index", j}, {"backbone", backbone_to_json(c.generated[j])}}.dump() +
               "\n";
  write_text_file((d / "backbones.jsonl").string(), lines);
  write_text_file((d / "timing.json").string(), timing_to_json(r.timing).dump(2) + "\n");
}

std::string phase_label(const std::optional<int>& fixed_phase_switch) {
  return fixed_phase_switch ? "fixed:" + std::to_string(*fixed_phase_switch) : "gated";
}

std::optional<int> parse_phase(const std::string& s) {
  if (s == "gated") return std::nullopt;
  if (s.rfind("fixed:", 0) == 0) {
    const std::string num = s.substr(6);
    std::size_t pos = 0;
    int t = 0;
    try {
      t = std::stoi(num, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (!num.empty() && pos == num.size() && t >= 0) return t;
  }
  throw ConfigError("phase must be 'gated' or 'fixed:<t>', got '" + s + "'");
}

std::vector<AblationPoint> AblationGrid::points() const {
  std::vector<AblationPoint> out;
  for (double l : lambdas)
    for (double g : gammas)
      for (double e : etas)
        for (const auto& p : phase_switches) out.push_back({l, g, e, p});
  return out;
}

AblationReport ablation_sweep(const AblationGrid& grid, const RestorationConfig& base,
                              const std::vector<NamedBackbone>& dataset, const DenoiserFactory& factory) {
  const auto points = grid.points();
  if (points.empty()) throw ConfigError("ablation grid is empty");
  AblationReport out;
  for (const auto& p : points) {
    RestorationConfig cfg = base;
    cfg.sampler.lambda = p.lambda;
    cfg.sampler.gamma = p.gamma;
    cfg.sampler.eta = p.eta;
    cfg.sampler.fixed_phase_switch = p.fixed_phase_switch;
    AblationRow row{p, run_restoration(dataset, cfg, factory), 0.0};
    row.score = (row.report.aggregates.mean_sctf1 + row.report.aggregates.mean_tm) / 2.0;
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::string ablation_csv(const AblationReport& r) {
  std::ostringstream os;
  os << "lambda,gamma,eta,phase,mean_sctf1,mean_tm_to_truth,score,frac_sctf1_above_0.7,frac_sctf1_above_0.8,"
        "failed_cases\n";
  for (const auto& row : r.rows) {
    const auto& a = row.report.aggregates;
    os << format_double(row.point.lambda) << ',' << format_double(row.point.gamma) << ','
       << format_double(row.point.eta) << ',' << phase_label(row.point.fixed_phase_switch) << ','
       << format_double(a.mean_sctf1) << ',' << format_double(a.mean_tm) << ',' << format_double(row.score) << ','
       << format_double(a.frac_sctf1_above_0_7) << ',' << format_double(a.frac_sctf1_above_0_8) << ','
       << a.failed_cases << "\n";
  }
  return os.str();
}

nlohmann::json ablation_to_json(const AblationReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"lambda", row.point.lambda},
                    {"gamma", row.point.gamma},
                    {"eta", row.point.eta},
                    {"phase", phase_label(row.point.fixed_phase_switch)},
                    {"score", row.score},
                    {"aggregates", aggregates_to_json(row.report.aggregates)}});
  return {{"format", "curvefold.ablation_report"}, {"version", 1}, {"rows", std::move(rows)}};
}

std::vector<NoiseRow> noise_robustness(const std::vector<NamedBackbone>& dataset, const std::vector<double>& radii,
                                       const RestorationConfig& base, const DenoiserFactory& factory) {
  for (double r : radii)
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("perturbation radii must be non-negative");
  std::vector<NoiseRow> out;
  for (double r : radii) {
    RestorationConfig cfg = base;
    cfg.perturb_radius = r;
    out.push_back({r, run_restoration(dataset, cfg, factory).aggregates});
  }
  return out;
}

std::string noise_csv(const std::vector<NoiseRow>& rows) {
  std::ostringstream os;
  os << "radius,mean_sctf1,mean_tm_to_truth,frac_sctf1_above_0.7,failed_cases\n";
  for (const auto& r : rows)
    os << format_double(r.radius) << ',' << format_double(r.aggregates.mean_sctf1) << ','
       << format_double(r.aggregates.mean_tm) << ',' << format_double(r.aggregates.frac_sctf1_above_0_7) << ','
       << r.aggregates.failed_cases << "\n";
  return os.str();
}

TopologyMap topology_map(const std::vector<Curve>& curves, const std::vector<std::string>& ids) {
  if (curves.size() != ids.size()) throw PreconditionError("topology map needs one id per curve");
  if (curves.size() < 3) throw PreconditionError("topology map needs at least 3 items");
  TopologyMap m;
  std::vector<const Curve*> kept;
  for (std::size_t i = 0; i < curves.size(); ++i) {
    try {
      (void)topology_fitness(curves[i], curves[i]);
      kept.push_back(&curves[i]);
      m.ids.push_back(ids[i]);
    } catch (const std::exception& e) {
      m.skipped.emplace_back(ids[i], e.what());
    }
  }
  const auto n = static_cast<Eigen::Index>(kept.size());
  if (n < 3) throw PreconditionError("fewer than 3 non-degenerate items for the topology map");
  m.distances = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = std::max(0.0, 1.0 - topology_fitness(*kept[static_cast<std::size_t>(i)],
                                                            *kept[static_cast<std::size_t>(j)]));
      m.distances(i, j) = d;
      m.distances(j, i) = d;
    }
  m.coords = mds_embed(m.distances);
  return m;
}

TopologyMap topology_map(const std::vector<NamedBackbone>& backbones) {
  std::vector<Curve> curves;
  std::vector<std::string> ids;
  std::vector<std::pair<std::string, std::string>> skipped;
  for (const auto& b : backbones) {
    try {
      curves.push_back(extract_curve(ensure_labels(b.backbone)));
      ids.push_back(b.id);
    } catch (const std::exception& e) {
      skipped.emplace_back(b.id, e.what());
    }
  }
  if (backbones.size() < 3) throw PreconditionError("topology map needs at least 3 items");
  if (curves.size() < 3) throw PreconditionError("fewer than 3 non-degenerate items for the topology map");
  TopologyMap m = topology_map(curves, ids);
  m.skipped.insert(m.skipped.begin(), skipped.begin(), skipped.end());
  return m;
}

std::string topology_map_csv(const TopologyMap& m) {
  std::ostringstream os;
  os << "id,x,y\n";
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    os << csv_quote(m.ids[i]) << ',' << format_double(m.coords(r, 0)) << ',' << format_double(m.coords(r, 1))
       << "\n";
  }
  return os.str();
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = r;
    i = j + 1;
  }
  return rank;
}

}  // namespace

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw PreconditionError("spearman_rho needs two equal series of >= 2");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace curvefold
