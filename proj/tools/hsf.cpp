// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
#include "hsf/cli.hpp"

int main(int argc, char** argv) { return hsf::cli::run(std::vector<std::string>(argv + 1, argv + argc)); }
