// One line per criterion: "criterion N PASS|FAIL title: detail (time)".
// Exit status is nonzero when any selected criterion fails.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "brw/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  brw::AcceptanceOptions opt;
  app.add_option("--only", only, "criterion numbers to run (default: all)")->check(CLI::Range(1, 10));
  app.add_option("--seed", opt.seed, "master seed");
  app.add_option("--threads", opt.threads, "worker threads");
  CLI11_PARSE(app, argc, argv);
  if (only.empty())
    for (int i = 1; i <= 10; ++i) only.push_back(i);
  bool all = true;
  for (int id : only) {
    const auto r = brw::run_criterion(id, opt);
    std::cout << brw::format_line(r) << std::endl;
    all = all && r.passed;
  }
  return all ? 0 : 1;
}
