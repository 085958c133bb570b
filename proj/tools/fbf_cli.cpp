#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "fbf/cli.hpp"
#include "fbf/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Fractional Brownian field experiments"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", fbf::kVersion);

  std::string command;
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<double> h;
  double h2 = 0.0;
  long long grid = 0;
  long long paths = 0;
  long long basis_size = 0;
  std::vector<double> eps;
  std::vector<double> delta;

  std::string names;
  for (const auto& n : fbf::command_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("command", command, "one of: " + names)->required();
  app.add_option("--config", config_path, "JSON config; flags override its keys");
  auto* o_seed = app.add_option("--seed", seed, "random seed");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  auto* o_threads = app.add_option("--threads", threads, "worker threads (0: all cores)");
  auto* o_h = app.add_option("--h", h, "Hurst index or list");
  auto* o_h2 = app.add_option("--h2", h2, "second Hurst index");
  auto* o_grid = app.add_option("--grid", grid, "grid size");
  auto* o_paths = app.add_option("--paths", paths, "number of sample paths");
  auto* o_eps = app.add_option("--eps", eps, "epsilon levels");
  auto* o_delta = app.add_option("--delta", delta, "Hurst increments");
  auto* o_basis = app.add_option("--basis-size", basis_size, "truncation size N");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fbf::kExitInvalid;
  }

  nlohmann::json cfg = nlohmann::json::object();
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config " << config_path << "\n";
      return fbf::kExitInvalid;
    }
    try {
      cfg = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
      return fbf::kExitInvalid;
    }
    if (!cfg.is_object()) {
      std::cerr << "error: config must be a JSON object\n";
      return fbf::kExitInvalid;
    }
    if (cfg.contains("command") && cfg["command"] != command) {
      std::cerr << "error: config is for command " << cfg["command"] << "\n";
      return fbf::kExitInvalid;
    }
  }
  if (*o_seed) cfg["seed"] = seed;
  if (*o_threads) cfg["threads"] = threads;
  if (*o_h) cfg["h"] = h;
  if (*o_h2) cfg["h2"] = h2;
  if (*o_grid) cfg["grid"] = grid;
  if (*o_paths) cfg["paths"] = paths;
  if (*o_eps) cfg["eps"] = eps;
  if (*o_delta) cfg["delta"] = delta;
  if (*o_basis) cfg["basis_size"] = basis_size;

  return fbf::run(command, cfg, out_dir, std::cerr);
}
