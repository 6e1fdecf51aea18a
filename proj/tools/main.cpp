// SPDX-License-Identifier: Apache-2.0
#include <string>
#include <vector>

#include "csinas/cli.hpp"

int main(int argc, char** argv) {
  return csinas::cli_run(std::vector<std::string>(argv + 1, argv + argc));
}
