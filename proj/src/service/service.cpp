// SPDX-License-Identifier: Apache-2.0
#include "curvefold/service/service.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "curvefold/backbone/extract.hpp"
#include "curvefold/bench/bench.hpp"
#include "curvefold/curveops/curveops.hpp"
#include "curvefold/diffusion/sampler.hpp"
#include "curvefold/diffusion/toy_denoiser.hpp"
#include "curvefold/errors.hpp"
#include "curvefold/geometry/fitness.hpp"
#include "curvefold/io/json_io.hpp"
#include "curvefold/sketch/sketcher.hpp"

namespace curvefold {

namespace fs = std::filesystem;
using nlohmann::json;

std::string default_data_dir() {
  const char* env = std::getenv(kDataDirEnv);
  return env != nullptr && *env != '\0' ? env : "curvefold-data";
}

const char* to_string(JobKind k) {
  switch (k) {
    case JobKind::Generate: return "generate";
    case JobKind::MotifGenerate: return "motif-generate";
    case JobKind::Restore: return "restore";
  }
  return "?";
}

const char* to_string(JobStatus s) {
  switch (s) {
    case JobStatus::Queued: return "queued";
    case JobStatus::Running: return "running";
    case JobStatus::Done: return "done";
    case JobStatus::Failed: return "failed";
  }
  return "?";
}

JobKind job_kind_from_string(const std::string& s) {
  if (s == "generate") return JobKind::Generate;
  if (s == "motif-generate") return JobKind::MotifGenerate;
  if (s == "restore") return JobKind::Restore;
  throw ValidationError("/kind", "must be one of generate, motif-generate, restore");
}

namespace {

JobStatus job_status_from_string(const std::string& s) {
  for (JobStatus v : {JobStatus::Queued, JobStatus::Running, JobStatus::Done, JobStatus::Failed})
    if (s == to_string(v)) return v;
  throw DataError("unknown job status '" + s + "'");
}

Response error_response(int status, const std::string& kind, const std::string& message,
                        const std::optional<std::string>& field = std::nullopt) {
  json body = {{"error", kind}, {"message", message}};
  if (field) body["field"] = *field;
  return {status, std::move(body)};
}

Response not_found(const std::string& what) { return error_response(404, "not_found", what + " not found"); }

Response invalid(const ValidationError& e) {
  std::string msg = e.what();
  const std::string prefix = e.field() + ": ";
  if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
  return error_response(422, "validation", msg, e.field());
}

// ---- payload field access ---------------------------------------------------

std::string child(const std::string& path, const std::string& key) { return path + "/" + key; }

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "must be an object");
}

void reject_unknown(const json& j, const std::string& path, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ValidationError(child(path, k), "unknown field");
}

double get_number(const json& j, const std::string& key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw ValidationError(child(path, key), "must be a number");
  return v.get<double>();
}

double require_number(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ValidationError(child(path, key), "is required");
  return get_number(j, key, path, 0.0);
}

std::int64_t get_integer(const json& j, const std::string& key, const std::string& path, std::int64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ValidationError(child(path, key), "must be an integer");
  return v.get<std::int64_t>();
}

std::uint64_t get_seed(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) return 0;
  const json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ValidationError(child(path, key), "must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& key, const std::string& path, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_string()) throw ValidationError(child(path, key), "must be a string");
  return v.get<std::string>();
}

Vec3 require_vec3(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) throw ValidationError(child(path, key), "is required");
  const json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) throw ValidationError(child(path, key), "must be [x, y, z]");
  Vec3 out;
  for (int k = 0; k < 3; ++k) {
    if (!v[static_cast<std::size_t>(k)].is_number())
      throw ValidationError(child(path, key) + "/" + std::to_string(k), "must be a number");
    out(k) = v[static_cast<std::size_t>(k)].get<double>();
  }
  return out;
}

// Runs a library call and turns its errors into a validation error at `field`.
template <class F>
auto at_field(const std::string& field, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(field, e.what());
  }
}

SamplerConfig sampler_config_from_json(const json& payload, JobKind kind) {
  SamplerConfig cfg;
  cfg.mode = kind == JobKind::MotifGenerate ? SamplerMode::MotifGuided : SamplerMode::Guided;
  if (!payload.contains("config")) return cfg;
  const json& c = payload.at("config");
  const std::string path = "/config";
  require_object(c, path);
  reject_unknown(c, path, {"lambda", "gamma", "eta", "phase", "seed", "mode"});
  cfg.lambda = get_number(c, "lambda", path, cfg.lambda);
  cfg.gamma = get_number(c, "gamma", path, cfg.gamma);
  cfg.eta = get_number(c, "eta", path, cfg.eta);
  cfg.seed = get_seed(c, "seed", path);
  if (c.contains("phase")) {
    const std::string ph = get_string(c, "phase", path, "gated");
    cfg.fixed_phase_switch = at_field("/config/phase", [&] { return parse_phase(ph); });
  }
  if (c.contains("mode")) {
    const std::string m = get_string(c, "mode", path, "guided");
    cfg.mode = at_field("/config/mode", [&] { return sampler_mode_from_string(m); });
    if (kind == JobKind::MotifGenerate && cfg.mode == SamplerMode::Guided) cfg.mode = SamplerMode::MotifGuided;
    if (kind != JobKind::MotifGenerate && cfg.mode == SamplerMode::MotifGuided)
      throw ValidationError("/config/mode", "motif-guided needs a motif-generate job");
  }
  return cfg;
}

MotifSpec motif_from_json(const json& payload) {
  if (!payload.contains("motif")) throw ValidationError("/motif", "is required");
  const json& m = payload.at("motif");
  require_object(m, "/motif");
  reject_unknown(m, "/motif", {"indices", "coords"});
  MotifSpec spec;
  if (!m.contains("indices") || !m.at("indices").is_array())
    throw ValidationError("/motif/indices", "must be an array of residue indices");
  for (std::size_t k = 0; k < m.at("indices").size(); ++k) {
    const json& v = m.at("indices")[k];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
      throw ValidationError("/motif/indices/" + std::to_string(k), "must be a non-negative integer");
    spec.indices.push_back(v.get<std::size_t>());
  }
  if (!m.contains("coords")) throw ValidationError("/motif/coords", "is required");
  spec.coords = points_from_json(m.at("coords"), "/motif/coords");
  if (static_cast<std::size_t>(spec.coords.cols()) != spec.indices.size())
    throw ValidationError("/motif/coords", "needs one coordinate per index");
  if (spec.indices.empty()) throw ValidationError("/motif/indices", "must not be empty");
  return spec;
}

// Reports progress after every successful prediction.
class ProgressDenoiser final : public Denoiser {
 public:
  ProgressDenoiser(DenoiserPtr inner, std::function<void()> tick) : inner_(std::move(inner)), tick_(std::move(tick)) {}
  DenoiserOutput predict_z0(const Points& z_t, int t, const MotifSpec* motif) const override {
    DenoiserOutput out = inner_->predict_z0(z_t, t, motif);
    tick_();
    return out;
  }
  std::optional<std::size_t> length() const override { return inner_->length(); }
  std::string name() const override { return inner_->name(); }

 private:
  DenoiserPtr inner_;
  std::function<void()> tick_;
};

std::string padded_id(char prefix, std::uint64_t n) {
  std::string digits = std::to_string(n);
  if (digits.size() < 6) digits.insert(0, 6 - digits.size(), '0');
  return std::string(1, prefix) + digits;
}

// Parses ids of the form <prefix><digits>; 0 when it does not match.
std::uint64_t id_number(const std::string& id, char prefix) {
  if (id.size() < 2 || id[0] != prefix) return 0;
  std::uint64_t n = 0;
  for (std::size_t i = 1; i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') return 0;
    n = n * 10 + static_cast<std::uint64_t>(id[i] - '0');
  }
  return n;
}

bool safe_id(const std::string& id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

// ---- construction and persistence ---------------------------------------------

DesignService::DesignService(ServiceConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.workers == 0) throw ConfigError("the service needs at least one worker");
  fs::create_directories(fs::path(cfg_.data_dir) / "curves");
  fs::create_directories(fs::path(cfg_.data_dir) / "results");
  for (const auto& e : fs::directory_iterator(fs::path(cfg_.data_dir) / "curves"))
    next_curve_ = std::max(next_curve_, id_number(e.path().stem().string(), 'c') + 1);
  replay_log();
  if (!cfg_.paused)
    for (std::size_t k = 0; k < cfg_.workers; ++k) workers_.emplace_back([this] { worker_loop(); });
}

DesignService::~DesignService() { shutdown(); }

void DesignService::shutdown() {
  {
    std::lock_guard lk(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& w : workers_)
    if (w.joinable()) w.join();
  workers_.clear();
}

void DesignService::append_log(const json& event) {
  std::ofstream out(fs::path(cfg_.data_dir) / "jobs.log", std::ios::app | std::ios::binary);
  out << event.dump() << '\n';
  out.flush();
  if (!out) throw DataError("cannot append to the job log in " + cfg_.data_dir);
}

void DesignService::replay_log() {
  std::ifstream in(fs::path(cfg_.data_dir) / "jobs.log", std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    json ev;
    try {
      ev = json::parse(line);
      const std::string id = ev.at("id").get<std::string>();
      const std::string op = ev.at("op").get<std::string>();
      if (op == "submit") {
        Job j;
        j.id = id;
        j.kind = job_kind_from_string(ev.at("kind").get<std::string>());
        j.config = ev.at("payload");
        j.total_steps = ev.at("total_steps").get<int>();
        jobs_[id] = std::move(j);
        next_job_ = std::max(next_job_, id_number(id, 'j') + 1);
      } else if (op == "status" && jobs_.count(id)) {
        Job& j = jobs_[id];
        j.status = job_status_from_string(ev.at("status").get<std::string>());
        j.progress = ev.value("progress", j.progress);
        j.error = ev.value("error", std::string{});
      }
    } catch (const std::exception&) {
      // A torn final line from a crash is ignored.
      continue;
    }
  }
  for (auto& [id, j] : jobs_) {
    if (j.status == JobStatus::Running) {
      j.status = JobStatus::Queued;
      j.progress = 0;
      append_log({{"op", "status"}, {"id", id}, {"status", "queued"}, {"progress", 0}});
    }
    if (j.status == JobStatus::Queued) queue_.push_back(id);
  }
}

std::string DesignService::result_path(const std::string& id) const {
  return (fs::path(cfg_.data_dir) / "results" / (id + ".json")).string();
}

std::string DesignService::trajectory_path(const std::string& id) const {
  return (fs::path(cfg_.data_dir) / "results" / (id + ".trajectory.jsonl")).string();
}

std::string DesignService::store_curve(const Curve& c) {
  std::string id;
  {
    std::lock_guard lk(mu_);
    id = padded_id('c', next_curve_++);
  }
  write_text_file((fs::path(cfg_.data_dir) / "curves" / (id + ".json")).string(),
                  curve_to_json(c.with_id(id)).dump() + "\n");
  return id;
}

std::optional<Curve> DesignService::load_curve(const std::string& id) const {
  if (!safe_id(id)) return std::nullopt;
  const fs::path p = fs::path(cfg_.data_dir) / "curves" / (id + ".json");
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) return std::nullopt;
  return curve_from_json(json::parse(read_text_file(p.string())));
}

// ---- routing -----------------------------------------------------------------

Response DesignService::handle(const std::string& method, const std::string& path, const std::string& body) {
  const auto seg = split_path(path);
  auto parse_body = [&]() -> json {
    if (body.empty()) return json::object();
    try {
      return json::parse(body);
    } catch (const json::parse_error& e) {
      throw ValidationError("", std::string("body is not valid JSON: ") + e.what());
    }
  };
  auto expect = [&](const char* m) { return method == m; };
  try {
    if (seg.size() == 1 && seg[0] == "health") return expect("GET") ? health() : error_response(405, "method", "use GET");
    if (seg.size() >= 1 && seg[0] == "curves") {
      if (seg.size() == 1) return expect("POST") ? create_curve(parse_body()) : error_response(405, "method", "use POST");
      if (seg.size() == 2) return expect("GET") ? get_curve(seg[1]) : error_response(405, "method", "use GET");
      if (seg.size() == 3 && seg[2] == "encode")
        return expect("POST") ? encode_curve_route(seg[1]) : error_response(405, "method", "use POST");
      if (seg.size() == 4 && seg[2] == "ops")
        return expect("POST") ? curve_op(seg[1], seg[3], parse_body()) : error_response(405, "method", "use POST");
    }
    if (seg.size() == 1 && seg[0] == "sketches")
      return expect("POST") ? create_sketch(parse_body()) : error_response(405, "method", "use POST");
    if (seg.size() >= 1 && seg[0] == "jobs") {
      if (seg.size() == 1) return expect("POST") ? submit_job(parse_body()) : error_response(405, "method", "use POST");
      if (seg.size() == 2) return expect("GET") ? get_job(seg[1]) : error_response(405, "method", "use GET");
      if (seg.size() == 3 && seg[2] == "trajectory")
        return expect("GET") ? get_trajectory(seg[1]) : error_response(405, "method", "use GET");
    }
    return error_response(404, "not_found", "no route for " + path);
  } catch (const ValidationError& e) {
    return invalid(e);
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

Response DesignService::health() {
  std::lock_guard lk(mu_);
  std::size_t queued = 0, running = 0;
  for (const auto& [id, j] : jobs_) {
    queued += j.status == JobStatus::Queued;
    running += j.status == JobStatus::Running;
  }
  json names = json::array({"oracle"});
  for (const auto& [name, d] : cfg_.denoisers) names.push_back(name);
  return {200,
          {{"status", "ok"},
           {"workers", cfg_.paused ? 0 : cfg_.workers},
           {"jobs", jobs_.size()},
           {"queued", queued},
           {"running", running},
           {"denoisers", names},
           {"encoder", static_cast<bool>(cfg_.encoder)}}};
}

// ---- curves ------------------------------------------------------------------

Response DesignService::create_curve(const json& body) {
  require_object(body, "");
  const json& cj = body.contains("curve") ? body.at("curve") : body;
  const std::string path = body.contains("curve") ? "/curve" : "";
  const Curve c = curve_from_json(cj, path);
  const std::string id = store_curve(c);
  return {201, {{"id", id}, {"curve", curve_to_json(c.with_id(id))}}};
}

Response DesignService::get_curve(const std::string& id) {
  const auto c = load_curve(id);
  if (!c) return not_found("curve " + id);
  return {200, {{"id", id}, {"curve", curve_to_json(*c)}}};
}

Response DesignService::encode_curve_route(const std::string& id) {
  const auto c = load_curve(id);
  if (!c) return not_found("curve " + id);
  if (!cfg_.encoder) return error_response(503, "unavailable", "no encoder model is loaded");
  const auto probs = at_field("/points", [&] { return encode_curve(*cfg_.encoder, *c); });
  json rows = json::array();
  std::string labels;
  for (const auto& p : probs) {
    rows.push_back({p[0], p[1], p[2]});
    labels += kSseClasses[static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())];
  }
  return {200, {{"id", id}, {"classes", "HEL"}, {"probabilities", rows}, {"labels", labels}}};
}

Response DesignService::curve_op(const std::string& id, const std::string& op, const json& body) {
  const auto c = load_curve(id);
  if (!c) return not_found("curve " + id);
  require_object(body, "");
  Curve out = *c;
  if (op == "drag") {
    reject_unknown(body, "", {"anchor", "displacement", "falloff"});
    const std::int64_t anchor = get_integer(body, "anchor", "", -1);
    if (anchor < 0 || static_cast<std::size_t>(anchor) >= c->size())
      throw ValidationError("/anchor", "must index a curve point");
    DragSpec spec{static_cast<std::size_t>(anchor), require_vec3(body, "displacement", ""),
                  get_number(body, "falloff", "", DragSpec{}.falloff)};
    out = at_field("/falloff", [&] { return drag(*c, spec); });
  } else if (op == "joint") {
    reject_unknown(body, "", {"other", "angle"});
    const std::string other_id = get_string(body, "other", "", "");
    const auto other = load_curve(other_id);
    if (!other) throw ValidationError("/other", "must name a stored curve");
    const double angle = require_number(body, "angle", "");
    out = at_field("/angle", [&] { return joint(*c, *other, angle); });
  } else if (op == "edit-sse") {
    reject_unknown(body, "", {"begin", "end", "label"});
    const std::int64_t b = get_integer(body, "begin", "", -1);
    const std::int64_t e = get_integer(body, "end", "", -1);
    if (b < 0) throw ValidationError("/begin", "must be a non-negative integer");
    if (e < b || static_cast<std::size_t>(e) > c->size()) throw ValidationError("/end", "must lie in [begin, size]");
    const std::string label = get_string(body, "label", "", "");
    if (label.size() != 1) throw ValidationError("/label", "must be one of H, E, L");
    out = at_field("/label", [&] {
      return edit_sse(*c, static_cast<std::size_t>(b), static_cast<std::size_t>(e), label[0]);
    });
  } else if (op == "lift") {
    reject_unknown(body, "", {"depth_amplitude", "period", "noise_amplitude", "seed"});
    LiftSpec spec;
    spec.depth_amplitude = get_number(body, "depth_amplitude", "", spec.depth_amplitude);
    spec.period = get_number(body, "period", "", spec.period);
    spec.noise_amplitude = get_number(body, "noise_amplitude", "", spec.noise_amplitude);
    spec.seed = get_seed(body, "seed", "");
    const Eigen::Matrix2Xd xy = c->points().topRows(2);
    out = at_field("", [&] { return lift_2d_to_3d(xy, spec).with_labels(c->labels()); });
  } else if (op == "perturb") {
    reject_unknown(body, "", {"radius", "seed"});
    const double r = require_number(body, "radius", "");
    const std::uint64_t seed = get_seed(body, "seed", "");
    out = at_field("/radius", [&] { return perturb_sphere(*c, r, seed); });
  } else {
    return error_response(404, "not_found", "unknown curve operation '" + op + "'");
  }
  const std::string new_id = store_curve(out);
  return {201, {{"id", new_id}, {"source", id}, {"curve", curve_to_json(out.with_id(new_id))}}};
}

// ---- sketches ----------------------------------------------------------------

Response DesignService::create_sketch(const json& body) {
  require_object(body, "");
  reject_unknown(body, "", {"curve_id", "curve"});
  std::optional<Curve> c;
  std::string field = "/curve";
  if (body.contains("curve_id")) {
    field = "/curve_id";
    c = load_curve(get_string(body, "curve_id", "", ""));
    if (!c) return not_found("curve " + body.at("curve_id").dump());
  } else if (body.contains("curve")) {
    c = curve_from_json(body.at("curve"), "/curve");
  } else {
    throw ValidationError("/curve_id", "is required");
  }
  if (!c->labeled()) throw ValidationError(field, "the curve needs SSE labels to be sketched");
  const Sketch s = at_field(field, [&] { return sketch_from_curve(*c); });
  return {200,
          {{"curve_id", c->id()},
           {"sketch", backbone_to_json(s.to_backbone())},
           {"short_segments", s.short_segments}}};
}

// ---- jobs --------------------------------------------------------------------

namespace {

struct ResolvedJob {
  JobKind kind;
  SamplerConfig sampler;
  std::optional<Curve> curve;
  std::optional<Sketch> sketch;
  std::optional<Backbone> target;
  std::optional<MotifSpec> motif;
  std::optional<std::size_t> length;
  std::string denoiser_name;
  DenoiserPtr denoiser;  // null for oracle restoration (built per case)
  DiffusionSchedule schedule;
  std::size_t n_bb = 1;
  double perturb_radius = 0.0;
  bool encoder_labels = false;
};

}  // namespace

// Parses and checks a payload completely; used both before queuing and when
// the job runs, so a queued job cannot fail validation later.
static ResolvedJob resolve_job(JobKind kind, const json& p, const ServiceConfig& cfg,
                               const std::function<std::optional<Curve>(const std::string&)>& load) {
  require_object(p, "");
  ResolvedJob r;
  r.kind = kind;
  std::set<std::string> allowed = {"kind", "config", "denoiser", "target"};
  if (kind == JobKind::Restore) {
    allowed.insert({"backbone", "n_bb", "perturb_radius", "labels"});
  } else {
    allowed.insert({"curve", "curve_id", "labels", "length"});
    if (kind == JobKind::MotifGenerate) allowed.insert("motif");
  }
  reject_unknown(p, "", allowed);
  r.sampler = sampler_config_from_json(p, kind);

  const std::string labels = get_string(p, "labels", "", "curve");
  if (labels != "curve" && labels != "encoder") throw ValidationError("/labels", "must be 'curve' or 'encoder'");
  r.encoder_labels = labels == "encoder";
  if (r.encoder_labels && !cfg.encoder) throw ValidationError("/labels", "no encoder model is loaded");

  r.denoiser_name = get_string(p, "denoiser", "", cfg.denoisers.count("toy") ? "toy" : "oracle");
  if (r.denoiser_name == "oracle") {
    if (kind != JobKind::Restore) {
      if (!p.contains("target")) throw ValidationError("/target", "the oracle denoiser needs a target backbone");
      r.target = backbone_from_json(p.at("target"), "/target");
      if (r.target->labels().empty() || r.target->size() < 3)
        throw ValidationError("/target", "must be a labeled backbone of at least 3 residues");
      r.denoiser = oracle_denoiser(*r.target);
    }
  } else {
    const auto it = cfg.denoisers.find(r.denoiser_name);
    if (it == cfg.denoisers.end()) throw ValidationError("/denoiser", "unknown denoiser '" + r.denoiser_name + "'");
    r.denoiser = it->second;
  }
  const auto* toy = dynamic_cast<const ToyDenoiser*>(r.denoiser.get());
  r.schedule = toy ? toy->schedule() : cfg.schedule;
  at_field("/config", [&] {
    validate_sampler_config(r.sampler, r.schedule);
    return 0;
  });

  if (kind == JobKind::Restore) {
    if (!p.contains("backbone")) throw ValidationError("/backbone", "is required");
    r.target = backbone_from_json(p.at("backbone"), "/backbone");
    if (r.target->size() < 20) throw ValidationError("/backbone", "restoration needs at least 20 residues");
    const std::int64_t n_bb = get_integer(p, "n_bb", "", 1);
    if (n_bb < 1 || n_bb > 64) throw ValidationError("/n_bb", "must lie in [1, 64]");
    r.n_bb = static_cast<std::size_t>(n_bb);
    r.perturb_radius = get_number(p, "perturb_radius", "", 0.0);
    if (!(r.perturb_radius >= 0.0)) throw ValidationError("/perturb_radius", "must be non-negative");
    if (r.sampler.mode == SamplerMode::Unconditional)
      throw ValidationError("/config/mode", "restoration runs guided sampling");
    return r;
  }

  std::string curve_field = "/curve";
  if (p.contains("curve_id")) {
    curve_field = "/curve_id";
    r.curve = load(get_string(p, "curve_id", "", ""));
    if (!r.curve) throw ValidationError("/curve_id", "must name a stored curve");
  } else if (p.contains("curve")) {
    r.curve = curve_from_json(p.at("curve"), "/curve");
  } else if (r.sampler.mode != SamplerMode::Unconditional) {
    throw ValidationError("/curve", "is required");
  }
  if (r.curve) {
    if (r.encoder_labels)
      r.curve = at_field(curve_field, [&] { return r.curve->with_labels(predict_labels(*cfg.encoder, *r.curve)); });
    if (!r.curve->labeled()) throw ValidationError(curve_field, "the curve needs SSE labels (or labels: encoder)");
    r.sketch = at_field(curve_field, [&] { return sketch_from_curve(*r.curve); });
  }
  if (p.contains("length")) {
    const std::int64_t n = get_integer(p, "length", "", 0);
    if (n < 3 || n > 2000) throw ValidationError("/length", "must lie in [3, 2000]");
    r.length = static_cast<std::size_t>(n);
  }
  const auto bound = r.denoiser->length();
  if (bound && r.length && *bound != *r.length)
    throw ValidationError("/length", "differs from the denoiser's length " + std::to_string(*bound));
  if (!bound && !r.length && !r.sketch) throw ValidationError("/length", "is required without a curve");
  if (kind == JobKind::MotifGenerate) {
    r.motif = motif_from_json(p);
    const std::size_t n = bound ? *bound : r.length ? *r.length : r.sketch->size();
    at_field("/motif/indices", [&] {
      validate_motif(*r.motif, n);
      return 0;
    });
  }
  return r;
}

void DesignService::validate_payload(JobKind kind, const json& payload) const {
  (void)resolve_job(kind, payload, cfg_, [this](const std::string& id) { return load_curve(id); });
}

json DesignService::job_json(const Job& j) const {
  json out = {{"id", j.id},
              {"kind", to_string(j.kind)},
              {"status", to_string(j.status)},
              {"config", j.config},
              {"progress", j.progress},
              {"total_steps", j.total_steps}};
  if (j.status == JobStatus::Failed) out["error"] = j.error;
  return out;
}

Response DesignService::submit_job(const json& body) {
  require_object(body, "");
  if (!body.contains("kind") || !body.at("kind").is_string()) throw ValidationError("/kind", "is required");
  const JobKind kind = job_kind_from_string(body.at("kind").get<std::string>());
  const ResolvedJob r = resolve_job(kind, body, cfg_, [this](const std::string& id) { return load_curve(id); });
  Job j;
  j.kind = kind;
  j.config = body;
  j.total_steps = r.schedule.T * static_cast<int>(r.n_bb);
  {
    std::lock_guard lk(mu_);
    j.id = padded_id('j', next_job_++);
    append_log({{"op", "submit"}, {"id", j.id}, {"kind", to_string(kind)}, {"payload", body}, {"total_steps", j.total_steps}});
    jobs_[j.id] = j;
    queue_.push_back(j.id);
  }
  cv_.notify_one();
  return {202, job_json(j)};
}

Response DesignService::get_job(const std::string& id) {
  Job j;
  {
    std::lock_guard lk(mu_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return not_found("job " + id);
    j = it->second;
  }
  json out = job_json(j);
  if (j.status == JobStatus::Done) out["result"] = json::parse(read_text_file(result_path(id)));
  return {200, std::move(out)};
}

Response DesignService::get_trajectory(const std::string& id) {
  Job j;
  {
    std::lock_guard lk(mu_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return not_found("job " + id);
    j = it->second;
  }
  if (j.status != JobStatus::Done) return error_response(409, "conflict", "job " + id + " is " + to_string(j.status));
  if (j.kind == JobKind::Restore) return error_response(409, "conflict", "restore jobs keep no trajectory");
  json steps = json::array();
  std::istringstream in(read_text_file(trajectory_path(id)));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) steps.push_back(json::parse(line));
  return {200, {{"id", id}, {"steps", std::move(steps)}}};
}

void DesignService::set_status(const std::string& id, JobStatus s, const std::string& error) {
  {
    std::lock_guard lk(mu_);
    Job& j = jobs_.at(id);
    j.status = s;
    if (s == JobStatus::Done) j.progress = j.total_steps;
    j.error = error;
    json ev = {{"op", "status"}, {"id", id}, {"status", to_string(s)}, {"progress", j.progress}};
    if (!error.empty()) ev["error"] = error;
    append_log(ev);
  }
  done_cv_.notify_all();
}

void DesignService::execute(const std::string& id) {
  Job snapshot;
  {
    std::lock_guard lk(mu_);
    snapshot = jobs_.at(id);
  }
  set_status(id, JobStatus::Running);
  try {
    const ResolvedJob r =
        resolve_job(snapshot.kind, snapshot.config, cfg_, [this](const std::string& cid) { return load_curve(cid); });
    auto tick = [this, id] {
      std::lock_guard lk(mu_);
      Job& j = jobs_.at(id);
      j.progress = std::min(j.progress + 1, j.total_steps);
    };
    json result;
    if (snapshot.kind == JobKind::Restore) {
      RestorationConfig rc;
      rc.sampler = r.sampler;
      rc.schedule = r.schedule;
      rc.n_bb = r.n_bb;
      rc.perturb_radius = r.perturb_radius;
      rc.seed = r.sampler.seed;
      rc.encoder = r.encoder_labels ? cfg_.encoder : nullptr;
      const DenoiserPtr shared = r.denoiser;
      const DenoiserFactory factory = [shared, tick](const Backbone& truth) -> DenoiserPtr {
        return std::make_shared<ProgressDenoiser>(shared ? shared : oracle_denoiser(truth), tick);
      };
      const std::vector<NamedBackbone> data{NamedBackbone{"target", *r.target}};
      const RestorationReport rep = run_restoration(data, rc, factory);
      const RestorationCase& c = rep.cases.at(0);
      if (!c.ok()) throw Error(c.error);
      result = restoration_report_to_json(rep);
      json bbs = json::array();
      for (const auto& b : c.generated) bbs.push_back(backbone_to_json(b));
      result["backbones"] = std::move(bbs);
    } else {
      const auto denoiser = std::make_shared<ProgressDenoiser>(r.denoiser, tick);
      const Sketch* y = r.sketch ? &*r.sketch : nullptr;
      SamplerConfig scfg = r.sampler;
      scfg.record_coordinates = true;
      const Trajectory traj = r.motif ? sample_with_motif(*denoiser, y, *r.motif, scfg, r.schedule, r.length)
                                      : sample(*denoiser, y, scfg, r.schedule, r.length);
      const Backbone& gen = traj.final_backbone;
      json metrics = json::object();
      metrics["sctf1"] = r.curve ? json(topology_fitness(extract_curve(gen), *r.curve)) : json(nullptr);
      json switch_t = nullptr;
      for (const auto& s : traj.steps)
        if (s.phase == Phase::Controllable) {
          switch_t = s.t;
          break;
        }
      result = {{"backbone", backbone_to_json(gen)},
                {"length", gen.size()},
                {"denoiser", r.denoiser_name},
                {"metrics", metrics},
                {"trajectory",
                 {{"steps", traj.steps.size()},
                  {"phase_switch_t", switch_t},
                  {"final_gate", traj.steps.empty() ? 1.0 : traj.steps.back().gate}}}};
      write_text_file(trajectory_path(id), trajectory_jsonl(traj, true));
    }
    write_text_file(result_path(id), result.dump() + "\n");
    set_status(id, JobStatus::Done);
  } catch (const std::exception& e) {
    set_status(id, JobStatus::Failed, e.what());
  }
}

void DesignService::worker_loop() {
  for (;;) {
    std::string id;
    {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [this] { return stopping_ || !queue_.empty(); });
      if (stopping_) return;
      id = queue_.front();
      queue_.pop_front();
    }
    execute(id);
  }
}

void DesignService::run_pending() {
  for (;;) {
    std::string id;
    {
      std::lock_guard lk(mu_);
      if (queue_.empty()) return;
      id = queue_.front();
      queue_.pop_front();
    }
    execute(id);
  }
}

std::optional<JobStatus> DesignService::wait_for(const std::string& job_id, double timeout_seconds) {
  std::unique_lock lk(mu_);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
  const bool finished = done_cv_.wait_until(lk, deadline, [&] {
    const auto it = jobs_.find(job_id);
    return it != jobs_.end() && (it->second.status == JobStatus::Done || it->second.status == JobStatus::Failed);
  });
  if (!finished) return std::nullopt;
  return jobs_.at(job_id).status;
}

}  // namespace curvefold
