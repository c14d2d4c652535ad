// brwlab: runs one scenario from a JSON file and writes its CSVs.
//
//   brwlab speed --config law.json --out results/
//   brwlab verify --seed 7
//
// Exit status: 0 all checks pass, 1 a check failed, 2 usage or schema
// error, 3 runtime error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "brw/config.hpp"
#include "brw/runner.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw brw::SchemaError("--config", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Command-line flags win over the file; both go through one validation.
std::string merged(const Flags& f) {
  nlohmann::json doc = nlohmann::json::object();
  if (!f.config.empty()) {
    try {
      doc = nlohmann::json::parse(read_file(f.config));
    } catch (const nlohmann::json::parse_error& e) {
      throw brw::SchemaError("", std::string("not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw brw::SchemaError("", "top level must be an object");
  }
  if (f.out) doc["output"] = *f.out;
  if (f.seed) doc["seed"] = *f.seed;
  if (f.threads) doc["threads"] = *f.threads;
  return doc.dump();
}

int run(const std::string& scenario, const Flags& f) {
  brw::ExperimentConfig cfg;
  try {
    cfg = brw::parse_config(merged(f), scenario);
  } catch (const brw::SchemaError& e) {
    for (const auto& i : e.issues()) std::cerr << "schema: " << (i.path.empty() ? "<root>" : i.path) << ": " << i.reason << "\n";
    return 2;
  }
  try {
    const brw::RunOutcome out = brw::run(cfg);
    for (const auto& c : out.checks)
      if (!c.passed) std::cerr << "check failed: " << c.name << "\n";
    std::ifstream summary(cfg.output + "/summary.txt");
    std::cout << summary.rdbuf();
    return out.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching random walk speeds, simulations and fronts"};
  app.require_subcommand(1);
  Flags flags;
  std::string chosen;
  for (const char* name : {"speed", "anomalous", "simulate", "front", "verify"}) {
    CLI::App* sub = app.add_subcommand(name, std::string("run a '") + name + "' scenario");
    sub->add_option("--config", flags.config, "scenario file (JSON)");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--seed", flags.seed, "master seed");
    sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return run(chosen, flags);
}
