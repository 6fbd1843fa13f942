// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

#include "curvefold/backbone/backbone.hpp"

namespace curvefold {

/// Reads C-alpha atoms from PDB ATOM records (fixed-column layout).
///
/// Only the first MODEL is read. For residues with alternate locations the
/// first altloc encountered is kept. Residues are ordered by chain (in order of
/// first appearance) and then by residue number and insertion code. Labels are
/// initialised to all-L.
///
/// Throws EmptyStructure when no CA atom is found and ParseError (with the
/// 1-based line number) when a coordinate or residue-number field is malformed.
Backbone parse_pdb_calpha(std::string_view text);

Backbone read_pdb_file(const std::string& path);

/// Minimal ATOM/TER/END writer for C-alpha traces, residue name ALA for H/E/L
/// alike. Labels are not encoded.
std::string write_pdb_calpha(const Backbone& bb);

}  // namespace curvefold
