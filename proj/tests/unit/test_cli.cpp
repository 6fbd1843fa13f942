// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"

#include "curvefold/backbone/pdb.hpp"
#include "curvefold/cli/cli.hpp"
#include "curvefold/io/json_io.hpp"
#include "curvefold/sketch/bundles.hpp"
#include "curvefold/sketch/sketcher.hpp"

using namespace curvefold;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "curvefold");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string curve_file(const fs::path& dir) {
  std::mt19937_64 rng(3);
  const Curve c = random_bundle_curve(rng, {}, "c3");
  const std::string path = (dir / "curve.json").string();
  write_text_file(path, curve_to_json(c).dump());
  return path;
}

}  // namespace

TEST_CASE("sketch writes the sketcher's backbone as JSON or PDB") {
  const fs::path dir = oracle::temp_dir("cli_sketch");
  const std::string curve = curve_file(dir);
  const Sketch expect = sketch_from_curve(curve_from_json(nlohmann::json::parse(read_text_file(curve))));
  const Run json_run = cli({"sketch", "--curve", curve, "--out", (dir / "s.json").string()});
  REQUIRE(json_run.code == 0);
  const Backbone bb = backbone_from_json(nlohmann::json::parse(read_text_file((dir / "s.json").string())));
  CHECK(bb.size() == expect.size());
  CHECK((bb.ca() - expect.coords).cwiseAbs().maxCoeff() < 1e-6);
  REQUIRE(cli({"sketch", "--curve", curve, "--out", (dir / "s.pdb").string()}).code == 0);
  CHECK(read_pdb_file((dir / "s.pdb").string()).size() == expect.size());
}

TEST_CASE("usage and runtime errors give non-zero exit codes") {
  const fs::path dir = oracle::temp_dir("cli_errors");
  CHECK(cli({}).code != 0);
  CHECK(cli({"frobnicate"}).code != 0);
  CHECK(cli({"sketch"}).code != 0);
  const Run missing = cli({"sketch", "--curve", (dir / "nope.json").string(), "--out", (dir / "x.json").string()});
  CHECK(missing.code == 1);
  CHECK(missing.err.rfind("error: ", 0) == 0);
  const Run bad_phase = cli({"restore", "--synthetic", "2", "--phase", "sometimes", "--out", (dir / "r").string()});
  CHECK(bad_phase.code == 1);
  const Run oracle_no_target = cli({"generate", "--curve", curve_file(dir), "--out", (dir / "g").string()});
  CHECK(oracle_no_target.code == 1);
  CHECK(oracle_no_target.err.find("--target") != std::string::npos);
}

TEST_CASE("oracle restore and map runs are repeatable byte for byte") {
  const fs::path dir = oracle::temp_dir("cli_repeat");
  for (const char* rep : {"a", "b"}) {
    REQUIRE(cli({"restore", "--synthetic", "3", "--n-bb", "2", "--lambda", "0.75", "--seed", "8", "--out",
                 (dir / rep / "restore").string()})
                .code == 0);
    REQUIRE(cli({"map", "--synthetic", "5", "--out", (dir / rep / "map.csv").string()}).code == 0);
  }
  for (const char* f : {"restore/report.json", "restore/cases.csv", "restore/backbones.jsonl", "map.csv"})
    CHECK(read_text_file((dir / "a" / f).string()) == read_text_file((dir / "b" / f).string()));
  const auto report = nlohmann::json::parse(read_text_file((dir / "a" / "restore" / "report.json").string()));
  CHECK(report.dump().find("\"denoiser\"") != std::string::npos);
  CHECK(fs::exists(dir / "a" / "restore" / "timing.json"));
}
