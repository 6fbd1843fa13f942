// SPDX-License-Identifier: Apache-2.0
#include <limits>
#include <set>

#include "curvefold/errors.hpp"
#include "curvefold/service/service.hpp"

namespace curvefold {

using nlohmann::json;

namespace {

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path, "must be an object");
  if (!j.contains(key)) throw ValidationError(path + "/" + key, "is required");
  return j.at(key);
}

void expect(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ValidationError(path, what);
}

void check_points(const json& p, const std::string& path) {
  expect(p.is_array(), path, "must be an array");
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::string at = path + "/" + std::to_string(i);
    expect(p[i].is_array() && p[i].size() == 3, at, "must be [x, y, z]");
    for (const auto& v : p[i]) expect(v.is_number(), at, "coordinates must be numbers");
  }
}

void check_labels(const json& l, std::size_t n, const std::string& path) {
  expect(l.is_string(), path, "must be a string");
  const std::string s = l.get<std::string>();
  expect(s.size() == n, path, "needs one label per point");
  expect(s.find_first_not_of("HEL") == std::string::npos, path, "labels must be H, E or L");
}

void check_curve(const json& c, const std::string& path) {
  const json& pts = field(c, "points", path);
  check_points(pts, path + "/points");
  if (c.contains("labels")) check_labels(c.at("labels"), pts.size(), path + "/labels");
  if (c.contains("id")) expect(c.at("id").is_string(), path + "/id", "must be a string");
}

void check_backbone(const json& b, const std::string& path) {
  const json& res = field(b, "residues", path);
  expect(res.is_array(), path + "/residues", "must be an array");
  for (std::size_t i = 0; i < res.size(); ++i) {
    const std::string at = path + "/residues/" + std::to_string(i);
    const json& r = res[i];
    expect(r.is_array() && r.size() == 5, at, "must be [chain, index, x, y, z]");
    expect(r[0].is_string() && r[1].is_number_integer(), at, "chain must be a string and index an integer");
    for (std::size_t k = 2; k < 5; ++k) expect(r[k].is_number(), at, "coordinates must be numbers");
  }
  if (b.contains("labels") && !b.at("labels").get<std::string>().empty())
    check_labels(b.at("labels"), res.size(), path + "/labels");
}

void check_nonneg_int(const json& j, const std::string& key, const std::string& path) {
  const json& v = field(j, key, path);
  expect(v.is_number_integer() && v.get<std::int64_t>() >= 0, path + "/" + key, "must be a non-negative integer");
}

}  // namespace

void check_error_schema(const json& j) {
  expect(field(j, "error", "").is_string(), "/error", "must be a string");
  expect(field(j, "message", "").is_string(), "/message", "must be a string");
  if (j.contains("field")) expect(j.at("field").is_string(), "/field", "must be a string");
}

void check_curve_response_schema(const json& j) {
  expect(field(j, "id", "").is_string(), "/id", "must be a string");
  check_curve(field(j, "curve", ""), "/curve");
}

void check_job_schema(const json& j) {
  expect(field(j, "id", "").is_string(), "/id", "must be a string");
  static const std::set<std::string> kinds = {"generate", "motif-generate", "restore"};
  static const std::set<std::string> statuses = {"queued", "running", "done", "failed"};
  const json& kind = field(j, "kind", "");
  expect(kind.is_string() && kinds.count(kind.get<std::string>()), "/kind", "unknown job kind");
  const json& status = field(j, "status", "");
  expect(status.is_string() && statuses.count(status.get<std::string>()), "/status", "unknown job status");
  expect(field(j, "config", "").is_object(), "/config", "must be an object");
  check_nonneg_int(j, "progress", "");
  check_nonneg_int(j, "total_steps", "");
  expect(j.at("progress").get<int>() <= j.at("total_steps").get<int>(), "/progress", "exceeds total_steps");
  const std::string st = status.get<std::string>();
  if (st == "failed") expect(field(j, "error", "").is_string(), "/error", "must be a string");
  if (st != "done") {
    expect(!j.contains("result"), "/result", "only done jobs carry a result");
    return;
  }
  const json& result = field(j, "result", "");
  expect(result.is_object(), "/result", "must be an object");
  if (kind.get<std::string>() == "restore") {
    const json& bbs = field(result, "backbones", "/result");
    expect(bbs.is_array() && !bbs.empty(), "/result/backbones", "must be a non-empty array");
    for (std::size_t i = 0; i < bbs.size(); ++i) check_backbone(bbs[i], "/result/backbones/" + std::to_string(i));
    expect(field(result, "aggregates", "/result").is_object(), "/result/aggregates", "must be an object");
    return;
  }
  check_backbone(field(result, "backbone", "/result"), "/result/backbone");
  const json& m = field(result, "metrics", "/result");
  const json& tf = field(m, "sctf1", "/result/metrics");
  expect(tf.is_null() || (tf.is_number() && tf.get<double>() >= -1.0 && tf.get<double>() <= 1.0),
         "/result/metrics/sctf1", "must be null or in [-1, 1]");
  const json& tr = field(result, "trajectory", "/result");
  check_nonneg_int(tr, "steps", "/result/trajectory");
  const json& sw = field(tr, "phase_switch_t", "/result/trajectory");
  expect(sw.is_null() || sw.is_number_integer(), "/result/trajectory/phase_switch_t", "must be null or an integer");
}

void check_trajectory_schema(const json& j) {
  expect(field(j, "id", "").is_string(), "/id", "must be a string");
  const json& steps = field(j, "steps", "");
  expect(steps.is_array(), "/steps", "must be an array");
  int prev_t = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const std::string at = "/steps/" + std::to_string(i);
    const json& s = steps[i];
    const json& t = field(s, "t", at);
    expect(t.is_number_integer() && t.get<int>() < prev_t && t.get<int>() >= 1, at + "/t",
           "must be a decreasing positive integer");
    prev_t = t.get<int>();
    const json& ph = field(s, "phase", at);
    expect(ph == "confidential" || ph == "controllable", at + "/phase", "unknown phase");
    expect(field(s, "F", at).is_number(), at + "/F", "must be a number");
    const json& r = field(s, "rmsd_to_sketch", at);
    expect(r.is_null() || r.is_number(), at + "/rmsd_to_sketch", "must be null or a number");
    if (s.contains("z_t")) check_points(s.at("z_t"), at + "/z_t");
    if (s.contains("z0_hat")) check_points(s.at("z0_hat"), at + "/z0_hat");
  }
}

void check_health_schema(const json& j) {
  expect(field(j, "status", "") == "ok", "/status", "must be \"ok\"");
  check_nonneg_int(j, "workers", "");
  check_nonneg_int(j, "jobs", "");
  expect(field(j, "denoisers", "").is_array(), "/denoisers", "must be an array");
}

}  // namespace curvefold
