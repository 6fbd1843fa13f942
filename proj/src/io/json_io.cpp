// SPDX-License-Identifier: Apache-2.0
#include "curvefold/io/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "curvefold/errors.hpp"

namespace curvefold {

Json points_to_json(const Points& p) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < p.cols(); ++i) arr.push_back({p(0, i), p(1, i), p(2, i)});
  return arr;
}

Points points_from_json(const Json& j, const std::string& path) {
  if (!j.is_array()) throw ValidationError(path, "expected an array of [x, y, z] triples");
  Points p(3, static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& row = j[i];
    const std::string where = path + "/" + std::to_string(i);
    if (!row.is_array() || row.size() != 3) throw ValidationError(where, "expected [x, y, z]");
    for (std::size_t k = 0; k < 3; ++k) {
      if (!row[k].is_number()) throw ValidationError(where + "/" + std::to_string(k), "expected a number");
      const double v = row[k].get<double>();
      if (!std::isfinite(v)) throw ValidationError(where + "/" + std::to_string(k), "non-finite coordinate");
      p(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = v;
    }
  }
  return p;
}

Json curve_to_json(const Curve& c) {
  Json j = {{"id", c.id()}, {"points", points_to_json(c.points())}};
  if (c.labels()) j["labels"] = c.labels()->str();
  return j;
}

Curve curve_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path.empty() ? "/" : path, "expected a curve object");
  std::string id;
  if (j.contains("id")) {
    if (!j["id"].is_string()) throw ValidationError(path + "/id", "expected a string");
    id = j["id"].get<std::string>();
  }
  if (!j.contains("points")) throw ValidationError(path + "/points", "missing");
  Points p = points_from_json(j["points"], path + "/points");
  std::optional<SseLabels> labels;
  if (j.contains("labels") && !j["labels"].is_null()) {
    if (!j["labels"].is_string()) throw ValidationError(path + "/labels", "expected a string over HEL");
    try {
      labels = SseLabels(j["labels"].get<std::string>());
    } catch (const DataError& e) {
      throw ValidationError(path + "/labels", e.what());
    }
  }
  try {
    return Curve(std::move(p), std::move(labels), std::move(id));
  } catch (const InvalidCurve& e) {
    throw ValidationError(path + "/points", e.what());
  } catch (const DimensionError& e) {
    throw ValidationError(path + "/labels", e.what());
  }
}

Json backbone_to_json(const Backbone& bb) {
  Json res = Json::array();
  for (std::size_t i = 0; i < bb.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    res.push_back({bb.ids()[i].chain, bb.ids()[i].index, bb.ca()(0, c), bb.ca()(1, c), bb.ca()(2, c)});
  }
  return {{"residues", res}, {"labels", bb.labels().str()}};
}

Backbone backbone_from_json(const Json& j, const std::string& path) {
  if (!j.is_object() || !j.contains("residues") || !j["residues"].is_array())
    throw ValidationError(path + "/residues", "expected an array of [chain, index, x, y, z]");
  const auto& res = j["residues"];
  std::vector<ResidueId> ids;
  Points ca(3, static_cast<Eigen::Index>(res.size()));
  for (std::size_t i = 0; i < res.size(); ++i) {
    const auto& r = res[i];
    const std::string where = path + "/residues/" + std::to_string(i);
    if (!r.is_array() || r.size() != 5 || !r[0].is_string() || !r[1].is_number_integer())
      throw ValidationError(where, "expected [chain, index, x, y, z]");
    ids.push_back({r[0].get<std::string>(), r[1].get<int>()});
    for (std::size_t k = 0; k < 3; ++k) {
      if (!r[k + 2].is_number() || !std::isfinite(r[k + 2].get<double>()))
        throw ValidationError(where + "/" + std::to_string(k + 2), "expected a finite number");
      ca(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = r[k + 2].get<double>();
    }
  }
  SseLabels labels;
  if (j.contains("labels")) {
    if (!j["labels"].is_string()) throw ValidationError(path + "/labels", "expected a string over HEL");
    try {
      labels = SseLabels(j["labels"].get<std::string>());
    } catch (const DataError& e) {
      throw ValidationError(path + "/labels", e.what());
    }
  }
  try {
    return Backbone(std::move(ids), std::move(ca), std::move(labels));
  } catch (const DimensionError& e) {
    throw ValidationError(path + "/labels", e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp);
    out << content;
    if (!out.flush()) throw DataError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw DataError("cannot rename " + tmp + " to " + path);
}

}  // namespace curvefold
