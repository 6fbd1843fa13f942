// SPDX-License-Identifier: Apache-2.0
#include "curvefold/cli/cli.hpp"

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "curvefold/backbone/extract.hpp"
#include "curvefold/backbone/pdb.hpp"
#include "curvefold/backbone/sse.hpp"
#include "curvefold/bench/bench.hpp"
#include "curvefold/diffusion/sampler.hpp"
#include "curvefold/diffusion/toy_denoiser.hpp"
#include "curvefold/encoder/encoder.hpp"
#include "curvefold/errors.hpp"
#include "curvefold/geometry/fitness.hpp"
#include "curvefold/io/json_io.hpp"
#include "curvefold/service/service.hpp"
#include "curvefold/sketch/bundles.hpp"
#include "curvefold/sketch/sketcher.hpp"

namespace curvefold {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Curve load_curve_file(const std::string& path) { return curve_from_json(json::parse(read_text_file(path))); }

Backbone load_backbone_file(const std::string& path) {
  if (ends_with(path, ".pdb")) {
    const Backbone bb = read_pdb_file(path);
    return bb.with_labels(assign_sse_geometric(bb).labels);
  }
  Backbone bb = backbone_from_json(json::parse(read_text_file(path)));
  return bb.labels().empty() ? bb.with_labels(assign_sse_geometric(bb).labels) : bb;
}

void write_backbone_file(const Backbone& bb, const std::string& path) {
  if (ends_with(path, ".pdb"))
    write_text_file(path, write_pdb_calpha(bb));
  else
    write_text_file(path, backbone_to_json(bb).dump(2) + "\n");
}

std::shared_ptr<ToyDenoiser> load_toy(const std::string& path) {
  return ToyDenoiser::from_json(json::parse(read_text_file(path)));
}

std::shared_ptr<const EncoderModel> load_encoder(const std::string& path) {
  return std::make_shared<EncoderModel>(EncoderModel::from_json(json::parse(read_text_file(path))));
}

// "oracle" or "toy:PATH".
struct DenoiserChoice {
  bool oracle = true;
  std::shared_ptr<ToyDenoiser> toy;
};

DenoiserChoice parse_denoiser(const std::string& spec) {
  if (spec == "oracle") return {};
  if (spec.rfind("toy:", 0) == 0 && spec.size() > 4) return {false, load_toy(spec.substr(4))};
  throw ConfigError("denoiser must be 'oracle' or 'toy:PATH', got '" + spec + "'");
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (item.empty() || pos != item.size()) throw ConfigError(std::string("bad ") + what + " value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError(std::string(what) + " list is empty");
  return out;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

struct SamplerFlags {
  double lambda = 2.0 / 3.0;
  double gamma = 0.2;
  double eta = 0.7;
  std::string phase = "gated";
  std::string mode = "guided";

  void add(CLI::App* app) {
    app->add_option("--lambda", lambda, "guidance strength in [0, 1)")->capture_default_str();
    app->add_option("--gamma", gamma, "helix-gating slope")->capture_default_str();
    app->add_option("--eta", eta, "helix-gating floor")->capture_default_str();
    app->add_option("--phase", phase, "gated | fixed:T")->capture_default_str();
  }
  SamplerConfig build(std::uint64_t seed) const {
    SamplerConfig c;
    c.lambda = lambda;
    c.gamma = gamma;
    c.eta = eta;
    c.fixed_phase_switch = parse_phase(phase);
    c.seed = seed;
    c.mode = sampler_mode_from_string(mode);
    return c;
  }
};

struct DatasetFlags {
  std::string dir;
  std::size_t synthetic = 20;
  std::uint64_t data_seed = 1;

  void add(CLI::App* app) {
    app->add_option("--dataset", dir, "directory of .pdb files (default: synthetic bundles)");
    app->add_option("--synthetic", synthetic, "number of synthetic bundles when no --dataset is given")
        ->capture_default_str();
    app->add_option("--data-seed", data_seed, "seed of the synthetic bundles")->capture_default_str();
  }
  std::vector<NamedBackbone> load() const {
    return dir.empty() ? synthetic_dataset(synthetic, data_seed) : load_pdb_dataset(dir);
  }
};

struct RestoreFlags {
  DatasetFlags data;
  SamplerFlags sampler;
  std::size_t n_bb = 1;
  std::string denoiser = "oracle";
  std::string encoder;
  double perturb = 0.0;
  std::size_t threads = 1;

  void add(CLI::App* app) {
    data.add(app);
    sampler.add(app);
    app->add_option("--n-bb", n_bb, "backbones per case")->capture_default_str();
    app->add_option("--denoiser", denoiser, "oracle | toy:PATH")->capture_default_str();
    app->add_option("--encoder", encoder, "relabel condition curves with this encoder model");
    app->add_option("--perturb", perturb, "ball radius for condition noise (A)")->capture_default_str();
    app->add_option("--threads", threads, "cases processed concurrently")->capture_default_str();
  }
  RestorationConfig config(std::uint64_t seed, const DenoiserChoice& d) const {
    RestorationConfig c;
    c.sampler = sampler.build(seed);
    if (d.toy) c.schedule = d.toy->schedule();
    c.n_bb = n_bb;
    c.perturb_radius = perturb;
    c.seed = seed;
    c.threads = threads;
    if (!encoder.empty()) c.encoder = load_encoder(encoder);
    return c;
  }
};

DenoiserFactory factory_for(const DenoiserChoice& d) { return d.oracle ? oracle_factory() : shared_factory(d.toy); }

void on_signal(int) { g_stop = true; }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Curve-conditioned protein backbone design toolkit", "curvefold"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  std::string out_path;
  auto common = [&](CLI::App* sub, bool out_required = true) {
    sub->add_option("--seed", seed, "master seed")->capture_default_str();
    auto* o = sub->add_option("--out", out_path, "output file or directory");
    if (out_required) o->required();
  };

  // sketch
  auto* sketch_cmd = app.add_subcommand("sketch", "build the naive C-alpha sketch of a labeled curve");
  std::string curve_path;
  sketch_cmd->add_option("--curve", curve_path, "curve JSON")->required();
  common(sketch_cmd);

  // generate
  auto* gen_cmd = app.add_subcommand("generate", "sample a backbone guided by a curve");
  SamplerFlags gen_flags;
  std::string gen_denoiser = "oracle", target_path, motif_path;
  std::size_t gen_length = 0;
  gen_cmd->add_option("--curve", curve_path, "labeled curve JSON");
  gen_cmd->add_option("--denoiser", gen_denoiser, "oracle | toy:PATH")->capture_default_str();
  gen_cmd->add_option("--target", target_path, "target backbone for the oracle (.json or .pdb)");
  gen_cmd->add_option("--motif", motif_path, "motif JSON {\"indices\": [...], \"coords\": [[x,y,z], ...]}");
  gen_cmd->add_option("--length", gen_length, "chain length (default: denoiser's or sketch's)");
  gen_cmd->add_option("--mode", gen_flags.mode, "guided | unconditional | motif-guided")->capture_default_str();
  gen_flags.add(gen_cmd);
  common(gen_cmd);

  // restore
  auto* restore_cmd = app.add_subcommand("restore", "run the restoration benchmark");
  RestoreFlags restore_flags;
  restore_flags.add(restore_cmd);
  common(restore_cmd);

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "sweep guidance parameters over the restoration benchmark");
  RestoreFlags ablate_flags;
  std::string lambdas = "0,0.5,0.6666666666666666,0.75", gammas = "0.2", etas = "0.7", phases = "gated";
  ablate_flags.add(ablate_cmd);
  ablate_cmd->add_option("--lambdas", lambdas, "comma-separated lambda values")->capture_default_str();
  ablate_cmd->add_option("--gammas", gammas, "comma-separated gamma values")->capture_default_str();
  ablate_cmd->add_option("--etas", etas, "comma-separated eta values")->capture_default_str();
  ablate_cmd->add_option("--phases", phases, "comma-separated gated | fixed:T")->capture_default_str();
  common(ablate_cmd);

  // noise
  auto* noise_cmd = app.add_subcommand("noise", "restoration under perturbed condition curves");
  RestoreFlags noise_flags;
  std::string radii = "0,1,2,3,4,5";
  noise_flags.add(noise_cmd);
  noise_cmd->add_option("--radii", radii, "comma-separated radii (A)")->capture_default_str();
  common(noise_cmd);

  // map
  auto* map_cmd = app.add_subcommand("map", "2D MDS map of pairwise topology distances");
  DatasetFlags map_data;
  map_data.add(map_cmd);
  common(map_cmd);

  // encode
  auto* encode_cmd = app.add_subcommand("encode", "per-point SSE probabilities for a curve");
  std::string encoder_path;
  encode_cmd->add_option("--curve", curve_path, "curve JSON")->required();
  encode_cmd->add_option("--encoder", encoder_path, "encoder model JSON")->required();
  common(encode_cmd);

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP design service");
  std::string host = "127.0.0.1", data_dir = default_data_dir();
  int port = 8080;
  std::size_t workers = 1;
  std::vector<std::string> serve_denoisers;
  std::string serve_encoder;
  serve_cmd->add_option("--host", host)->capture_default_str();
  serve_cmd->add_option("--port", port)->capture_default_str();
  serve_cmd->add_option("--workers", workers)->capture_default_str();
  serve_cmd->add_option("--data-dir", data_dir, std::string("job store (default $") + kDataDirEnv + ")")
      ->capture_default_str();
  serve_cmd->add_option("--denoiser", serve_denoisers, "toy:PATH or NAME=toy:PATH (repeatable)");
  serve_cmd->add_option("--encoder", serve_encoder, "encoder model JSON");
  common(serve_cmd, false);

  // dataset
  auto* dataset_cmd = app.add_subcommand("dataset", "write synthetic bundle backbones as PDB files");
  std::size_t dataset_n = 20;
  dataset_cmd->add_option("-n,--count", dataset_n)->capture_default_str();
  common(dataset_cmd);

  // train-encoder
  auto* train_enc_cmd = app.add_subcommand("train-encoder", "train the curve SSE encoder on synthetic data");
  std::size_t enc_n = 200, enc_heldout = 60;
  TrainingConfig enc_cfg;
  enc_cfg.learning_rate = 3e-3;
  enc_cfg.epochs = 8;
  enc_cfg.mask_fraction = 0.1;
  enc_cfg.eval_every = 1;
  train_enc_cmd->add_option("--examples", enc_n)->capture_default_str();
  train_enc_cmd->add_option("--heldout", enc_heldout)->capture_default_str();
  train_enc_cmd->add_option("--epochs", enc_cfg.epochs)->capture_default_str();
  train_enc_cmd->add_option("--lr", enc_cfg.learning_rate)->capture_default_str();
  train_enc_cmd->add_option("--mask", enc_cfg.mask_fraction)->capture_default_str();
  common(train_enc_cmd);

  // train-toy
  auto* train_toy_cmd = app.add_subcommand("train-toy", "train the toy denoiser on synthetic bundles");
  std::size_t toy_n = 50;
  ToyDenoiserConfig toy_cfg;
  train_toy_cmd->add_option("--examples", toy_n)->capture_default_str();
  train_toy_cmd->add_option("--epochs", toy_cfg.epochs)->capture_default_str();
  train_toy_cmd->add_option("--draws", toy_cfg.draws_per_example)->capture_default_str();
  train_toy_cmd->add_option("--lr", toy_cfg.learning_rate)->capture_default_str();
  common(train_toy_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*sketch_cmd) {
      const Curve c = load_curve_file(curve_path);
      const Sketch s = sketch_from_curve(c);
      write_backbone_file(s.to_backbone(), out_path);
      out << "sketch: " << s.size() << " residues -> " << out_path << "\n";
    } else if (*gen_cmd) {
      const DenoiserChoice d = parse_denoiser(gen_denoiser);
      std::optional<Curve> curve;
      if (!curve_path.empty()) curve = load_curve_file(curve_path);
      std::optional<Sketch> sketch;
      if (curve) sketch = sketch_from_curve(*curve);
      DenoiserPtr denoiser;
      if (d.oracle) {
        if (target_path.empty()) throw ConfigError("--denoiser oracle needs --target");
        denoiser = oracle_denoiser(load_backbone_file(target_path));
      } else {
        denoiser = d.toy;
      }
      const DiffusionSchedule schedule = d.toy ? d.toy->schedule() : default_schedule();
      SamplerConfig cfg = gen_flags.build(seed);
      std::optional<std::size_t> length;
      if (gen_length > 0) length = gen_length;
      Trajectory traj;
      if (!motif_path.empty()) {
        const json mj = json::parse(read_text_file(motif_path));
        MotifSpec motif;
        motif.indices = mj.at("indices").get<std::vector<std::size_t>>();
        motif.coords = points_from_json(mj.at("coords"), "/coords");
        if (cfg.mode == SamplerMode::Guided) cfg.mode = SamplerMode::MotifGuided;
        traj = sample_with_motif(*denoiser, sketch ? &*sketch : nullptr, motif, cfg, schedule, length);
      } else {
        traj = sample(*denoiser, sketch ? &*sketch : nullptr, cfg, schedule, length);
      }
      fs::create_directories(out_path);
      const fs::path dir(out_path);
      write_backbone_file(traj.final_backbone, (dir / "backbone.json").string());
      write_backbone_file(traj.final_backbone, (dir / "backbone.pdb").string());
      write_text_file((dir / "trajectory.jsonl").string(), trajectory_jsonl(traj, false));
      json summary = {{"denoiser", denoiser->name()},
                      {"seed", seed},
                      {"lambda", cfg.lambda},
                      {"gamma", cfg.gamma},
                      {"eta", cfg.eta},
                      {"phase", phase_label(cfg.fixed_phase_switch)},
                      {"mode", to_string(cfg.mode)},
                      {"length", traj.final_backbone.size()},
                      {"helix_fraction", helix_fraction(traj.final_backbone.labels())}};
      summary["sctf1"] = curve ? json(topology_fitness(extract_curve(traj.final_backbone), *curve)) : json(nullptr);
      write_text_file((dir / "summary.json").string(), summary.dump(2) + "\n");
      out << "generate: " << traj.final_backbone.size() << " residues";
      if (curve) out << ", scTF_1 " << summary["sctf1"].get<double>();
      out << " -> " << out_path << "\n";
    } else if (*restore_cmd) {
      const DenoiserChoice d = parse_denoiser(restore_flags.denoiser);
      const auto data = restore_flags.data.load();
      const RestorationReport r = run_restoration(data, restore_flags.config(seed, d), factory_for(d));
      write_restoration_report(r, out_path);
      out << "restore: " << r.aggregates.cases << " cases, mean scTF_1 " << r.aggregates.mean_sctf1
          << ", scTF_1 > 0.8 " << r.aggregates.frac_sctf1_above_0_8 << ", failed " << r.aggregates.failed_cases
          << " -> " << out_path << "\n";
    } else if (*ablate_cmd) {
      const DenoiserChoice d = parse_denoiser(ablate_flags.denoiser);
      AblationGrid grid;
      grid.lambdas = parse_list(lambdas, "lambda");
      grid.gammas = parse_list(gammas, "gamma");
      grid.etas = parse_list(etas, "eta");
      grid.phase_switches.clear();
      for (const auto& p : split_commas(phases)) grid.phase_switches.push_back(parse_phase(p));
      const auto rep = ablation_sweep(grid, ablate_flags.config(seed, d), ablate_flags.data.load(), factory_for(d));
      fs::create_directories(out_path);
      write_text_file((fs::path(out_path) / "ablation.csv").string(), ablation_csv(rep));
      write_text_file((fs::path(out_path) / "ablation.json").string(), ablation_to_json(rep).dump(2) + "\n");
      out << "ablate: " << rep.rows.size() << " grid points -> " << out_path << "\n";
    } else if (*noise_cmd) {
      const DenoiserChoice d = parse_denoiser(noise_flags.denoiser);
      const auto rows =
          noise_robustness(noise_flags.data.load(), parse_list(radii, "radius"), noise_flags.config(seed, d), factory_for(d));
      fs::create_directories(out_path);
      write_text_file((fs::path(out_path) / "noise.csv").string(), noise_csv(rows));
      out << "noise: " << rows.size() << " radii -> " << out_path << "\n";
    } else if (*map_cmd) {
      const TopologyMap m = topology_map(map_data.load());
      write_text_file(out_path, topology_map_csv(m));
      for (const auto& [id, why] : m.skipped) err << "warning: skipped " << id << ": " << why << "\n";
      out << "map: " << m.ids.size() << " items -> " << out_path << "\n";
    } else if (*encode_cmd) {
      const auto model = load_encoder(encoder_path);
      const Curve c = load_curve_file(curve_path);
      const auto probs = encode_curve(*model, c);
      json rows = json::array();
      for (const auto& p : probs) rows.push_back({p[0], p[1], p[2]});
      write_text_file(out_path,
                      json{{"classes", "HEL"}, {"probabilities", rows}, {"labels", predict_labels(*model, c).str()}}.dump(2) +
                          "\n");
      out << "encode: " << probs.size() << " points -> " << out_path << "\n";
    } else if (*serve_cmd) {
      ServiceConfig cfg;
      cfg.data_dir = data_dir;
      cfg.workers = workers;
      for (const auto& spec : serve_denoisers) {
        const auto eq = spec.find('=');
        const std::string name = eq == std::string::npos ? "toy" : spec.substr(0, eq);
        const DenoiserChoice d = parse_denoiser(eq == std::string::npos ? spec : spec.substr(eq + 1));
        if (d.oracle) throw ConfigError("the oracle is always available; register toy:PATH models only");
        cfg.denoisers[name] = d.toy;
      }
      if (!serve_encoder.empty()) cfg.encoder = load_encoder(serve_encoder);
      DesignService service(cfg);
      HttpServer server(service);
      const int bound = server.bind(host, port);
      out << "serving on http://" << host << ":" << bound << " (data " << cfg.data_dir << ")" << std::endl;
      g_stop = false;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      server.start();
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      service.shutdown();
    } else if (*dataset_cmd) {
      fs::create_directories(out_path);
      for (const auto& item : synthetic_dataset(dataset_n, seed))
        write_text_file((fs::path(out_path) / (item.id + ".pdb")).string(), write_pdb_calpha(item.backbone));
      out << "dataset: " << dataset_n << " backbones -> " << out_path << "\n";
    } else if (*train_enc_cmd) {
      enc_cfg.seed = seed;
      const auto train = generate_synthetic_sse_dataset(enc_n, derive_seed(seed, 1));
      const auto heldout = generate_synthetic_sse_dataset(enc_heldout, derive_seed(seed, 2));
      const TrainingResult r = train_encoder(train, enc_cfg, heldout);
      for (const auto& e : r.trace) {
        out << "epoch " << e.epoch << " loss " << e.loss << " train " << e.train_accuracy;
        if (e.heldout_accuracy) out << " heldout " << *e.heldout_accuracy;
        out << "\n";
      }
      write_text_file(out_path, r.model.to_json().dump() + "\n");
    } else if (*train_toy_cmd) {
      toy_cfg.seed = seed;
      const ToyTrainingResult r = train_toy_denoiser(generate_bundle_backbones(toy_n, derive_seed(seed, 1)), toy_cfg);
      for (std::size_t e = 0; e < r.loss_trace.size(); ++e) out << "epoch " << e + 1 << " loss " << r.loss_trace[e] << "\n";
      write_text_file(out_path, r.denoiser->to_json().dump() + "\n");
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace curvefold
