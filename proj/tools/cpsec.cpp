// Copyright 2026 The cpsec Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "cpsec/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cpsec::cli::run_cli(args, std::cout, std::cerr);
}
