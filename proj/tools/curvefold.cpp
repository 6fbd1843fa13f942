// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "curvefold/cli/cli.hpp"

int main(int argc, char** argv) { return curvefold::run_cli(argc, argv, std::cout, std::cerr); }
