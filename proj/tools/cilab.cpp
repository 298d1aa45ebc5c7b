#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cilab/harness.hpp"

namespace {

struct Flags {
  std::vector<std::string> schemes;
  std::optional<std::string> n;
  std::optional<std::string> n_grid;
  std::optional<std::size_t> seeds;
  std::vector<std::string> seed_list;
  std::optional<std::string> init;
  bool full = false;
  std::optional<std::string> out;
  std::optional<std::string> config;
  std::optional<unsigned> threads;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--scheme", f.schemes, "Reward scheme (binary, market, minority); repeatable");
  auto* n = sub->add_option("--n", f.n, "Number of factors, or a comma separated list");
  auto* grid = sub->add_option("--n-grid", f.n_grid, "Grid as lo:max (decade spacing) or a comma separated list");
  n->excludes(grid);
  auto* seeds = sub->add_option("--seeds", f.seeds, "Use seeds 1..k");
  auto* list = sub->add_option("--seed-list", f.seed_list, "Explicit seeds")->delimiter(',');
  seeds->excludes(list);
  sub->add_option("--init", f.init, "Initial allocation: uniform, concentrated or both comma separated");
  sub->add_flag("--full", f.full, "Include the n=10000 runs");
  sub->add_option("--out", f.out, "Output directory");
  sub->add_option("--config", f.config, "key=value config file; flags override it");
  sub->add_option("--threads", f.threads, "Worker threads");
  sub->add_option("--set", f.overrides, "Extra key=value setting; repeatable");
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += ',';
    out += s;
  }
  return out;
}

cilab::Settings merge(const Flags& f) {
  cilab::Settings s;
  if (f.config) s = cilab::load_settings(*f.config);
  if (f.n) s.erase("n_grid");
  if (f.n_grid) s.erase("n");
  if (f.seeds) s.erase("seed_list");
  if (!f.seed_list.empty()) s.erase("seeds");
  if (!f.schemes.empty()) s["scheme"] = join(f.schemes);
  if (f.n) s["n"] = *f.n;
  if (f.n_grid) s["n_grid"] = *f.n_grid;
  if (f.seeds) s["seeds"] = std::to_string(*f.seeds);
  if (!f.seed_list.empty()) s["seed_list"] = join(f.seed_list);
  if (f.init) s["init"] = *f.init;
  if (f.full) s["full"] = "true";
  if (f.out) s["out"] = *f.out;
  if (f.threads) s["threads"] = std::to_string(*f.threads);
  for (const auto& kv : f.overrides) {
    const auto extra = cilab::parse_settings(kv);
    for (const auto& [k, v] : extra) s[k] = v;
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collective intelligence reward-scheme laboratory"};
  app.set_version_flag("--version", std::string(cilab::version()));
  app.require_subcommand(1);

  Flags flags;
  const std::pair<const char*, const char*> commands[] = {
      {"simulate", "Integrate trajectories and write trajectory.csv"},
      {"sweep", "Equilibrium accuracy over an n grid (sweep.csv)"},
      {"scatter", "Equilibrium attention against beta (equilibrium.csv)"},
      {"stability", "Perturbation experiments around rho = beta (stability.csv)"},
      {"oracle", "Cross-check exact, approximate and Monte Carlo engines (oracle.csv)"}};
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const auto command = cilab::parse_command(app.get_subcommands().front()->get_name());
    const auto cfg = cilab::resolve_config(command, merge(flags));
    const auto summary = cilab::run_command(cfg, std::cerr);
    for (const auto& f : summary.files) std::cout << f.string() << '\n';
    return summary.exit_code;
  } catch (const cilab::ConfigError& e) {
    std::cerr << "cilab: config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "cilab: error: " << e.what() << '\n';
    return 2;
  }
}
