// SPDX-License-Identifier: Apache-2.0
#include "curvefold/backbone/pdb.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "curvefold/errors.hpp"

namespace curvefold {
namespace {

std::string_view columns(std::string_view line, std::size_t first, std::size_t last) {
  // 1-based inclusive column range, clipped to the line.
  if (line.size() < first) return {};
  return line.substr(first - 1, std::min(last, line.size()) - (first - 1));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_coord(std::string_view field, std::size_t line_no, const char* name) {
  const auto t = trim(field);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ParseError(line_no, std::string("malformed ") + name + " coordinate '" + std::string(field) + "'");
  return v;
}

int parse_int(std::string_view field, std::size_t line_no) {
  const auto t = trim(field);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
    throw ParseError(line_no, "malformed residue number '" + std::string(field) + "'");
  return v;
}

struct Atom {
  std::size_t chain_rank;
  int res_seq;
  char icode;
  std::string chain;
  Vec3 xyz;
};

}  // namespace

Backbone parse_pdb_calpha(std::string_view text) {
  std::map<std::string, std::size_t> chain_rank;
  std::set<std::tuple<std::string, int, char>> seen;
  std::vector<Atom> atoms;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;

    if (line.starts_with("ENDMDL")) break;
    if (!line.starts_with("ATOM  ")) continue;
    if (trim(columns(line, 13, 16)) != "CA") continue;

    std::string chain(trim(columns(line, 22, 22)));
    const int res_seq = parse_int(columns(line, 23, 26), line_no);
    const char icode = line.size() >= 27 ? line[26] : ' ';

    const auto key = std::make_tuple(chain, res_seq, icode);
    // Later alternate locations (and repeated records) of a residue are dropped.
    if (seen.contains(key)) continue;
    const Vec3 xyz(parse_coord(columns(line, 31, 38), line_no, "x"),
                   parse_coord(columns(line, 39, 46), line_no, "y"),
                   parse_coord(columns(line, 47, 54), line_no, "z"));
    seen.insert(key);
    const auto rank = chain_rank.emplace(chain, chain_rank.size()).first->second;
    atoms.push_back({rank, res_seq, icode == ' ' ? '\0' : icode, std::move(chain), xyz});
  }
  if (atoms.empty()) throw EmptyStructure("no CA atoms found");

  std::stable_sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) {
    return std::tie(a.chain_rank, a.res_seq, a.icode) < std::tie(b.chain_rank, b.res_seq, b.icode);
  });
  std::vector<ResidueId> ids;
  Points ca(3, static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    ids.push_back({atoms[i].chain, atoms[i].res_seq});
    ca.col(static_cast<Eigen::Index>(i)) = atoms[i].xyz;
  }
  return Backbone(std::move(ids), std::move(ca), SseLabels::uniform(atoms.size(), 'L'));
}

Backbone read_pdb_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pdb_calpha(ss.str());
}

std::string write_pdb_calpha(const Backbone& bb) {
  std::string out;
  char buf[96];
  for (std::size_t i = 0; i < bb.size(); ++i) {
    const auto& id = bb.ids()[i];
    const Vec3 p = bb.ca().col(static_cast<Eigen::Index>(i));
    const char chain = id.chain.empty() ? ' ' : id.chain[0];
    std::snprintf(buf, sizeof buf, "ATOM  %5zu  CA  ALA %c%4d    %8.3f%8.3f%8.3f  1.00  0.00           C\n",
                  (i + 1) % 100000, chain, id.index, p.x(), p.y(), p.z());
    out += buf;
  }
  out += "END\n";
  return out;
}

}  // namespace curvefold
