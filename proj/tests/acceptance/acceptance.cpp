// Copyright Contributors to the hsf project
// SPDX-License-Identifier: Apache-2.0
//
// Runs every acceptance check and prints one PASS/FAIL line per criterion.
// Usage: hsf_acceptance [fixture_dir]

#include "hsf/verify.hpp"

#include <chrono>
#include <cstdio>

int main(int argc, char** argv) {
  hsf::VerifyContext ctx;
  ctx.data_dir = argc > 1 ? argv[1] : HSF_TEST_DATA_DIR;
  const auto t0 = std::chrono::steady_clock::now();
  int failed = 0;
  hsf::run_checks("all", ctx, [&](const hsf::CheckResult& r) {
    std::printf("%s\n", hsf::format_check(r).c_str());
    std::fflush(stdout);
    if (!r.pass) ++failed;
  });
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_budget = total < 300.0;
  std::printf("fixtures: %s\n", ctx.fixtures().source.empty() ? "generated in memory" : ctx.fixtures().source.c_str());
  std::printf("total %.1fs (budget 300s) %s\n", total, in_budget ? "ok" : "EXCEEDED");
  std::printf("%s: %d of 13 criteria failed\n", failed == 0 && in_budget ? "ACCEPTED" : "REJECTED", failed);
  return failed == 0 && in_budget ? 0 : 1;
}
