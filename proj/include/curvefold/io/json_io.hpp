// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "json.hpp"

#include "curvefold/backbone/backbone.hpp"
#include "curvefold/geometry/curve.hpp"

namespace curvefold {

using Json = nlohmann::json;

/// {"id": str, "points": [[x,y,z], ...], "labels": "HEL..."}; labels omitted
/// when absent. Doubles are written with round-trip precision.
Json curve_to_json(const Curve& c);
/// Throws ValidationError whose field is prefixed by `path` (e.g. "/curve").
Curve curve_from_json(const Json& j, const std::string& path = "");

/// {"residues": [[chain, index, x, y, z], ...], "labels": "HEL..."}
Json backbone_to_json(const Backbone& bb);
Backbone backbone_from_json(const Json& j, const std::string& path = "");

Json points_to_json(const Points& p);
Points points_from_json(const Json& j, const std::string& path);

std::string read_text_file(const std::string& path);
/// Writes atomically via a temporary file and rename.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace curvefold
