// SPDX-License-Identifier: Apache-2.0
//
// The `curvefold` command line: sketch, generate, restore, ablate, noise,
// map, encode, serve, dataset, train-encoder and train-toy.
#pragma once

#include <ostream>

namespace curvefold {

/// Parses and runs one command. Returns the process exit code: 0 on
/// success, 1 on a runtime error, CLI11's code on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace curvefold
