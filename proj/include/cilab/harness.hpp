#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "cilab/dynamics.hpp"
#include "cilab/error.hpp"
#include "cilab/model.hpp"

namespace cilab {

std::string_view version();

enum class Command { simulate, sweep, scatter, stability, oracle };

std::string_view to_string(Command c);
Command parse_command(std::string_view name);

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Flat key=value settings. Later assignments override earlier ones.
using Settings = std::map<std::string, std::string>;

// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
Settings parse_settings(std::string_view text);
Settings load_settings(const std::filesystem::path& path);

struct RunConfig {
  Command command = Command::simulate;
  std::vector<RewardScheme> schemes;
  std::vector<std::size_t> n_values;
  std::vector<std::uint64_t> seeds;
  std::vector<InitKind> inits;
  bool full = false;
  std::filesystem::path out_dir = "out";
  unsigned threads = 1;

  IntegratorConfig integrator;
  double epsilon = 1e-6;

  // Monte Carlo and finite population
  std::size_t mc_samples = 1'000'000;
  std::size_t population = 100000;
  std::size_t rounds = 20000;
  double imitation_rate = 0.05;

  // Stability experiments
  std::size_t pairs = 10;
  double delta = 1e-3;
  std::size_t extensive_n = 2000;
  std::vector<double> k_values{0.2, 0.1, 0.05};
  double tolerance = 0.25;
  std::size_t block_size = 10;
  double block_c = 0.3;

  // Oracle checks
  std::size_t oracle_n = 8;
  std::size_t oracle_instances = 5;

  // Every setting, resolved, for the manifest.
  Settings resolved() const;
};

// Default grid: equally spaced values within each decade from 3 up to max.
std::vector<std::size_t> decade_grid(std::size_t lo, std::size_t max);

// "3:1000" expands through decade_grid; otherwise a comma separated list.
std::vector<std::size_t> parse_n_grid(std::string_view spec);

// Applies settings over the command defaults. Throws ConfigError on unknown
// keys or malformed values.
RunConfig resolve_config(Command command, const Settings& settings);

// Writes rows with 12 significant digits and LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);

  CsvWriter& field(std::string_view s);
  CsvWriter& field(double v);
  CsvWriter& field(std::size_t v);
  CsvWriter& field(int v);
  CsvWriter& empty();
  void end_row();
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream file_;
  std::size_t columns_ = 0;
  std::size_t in_row_ = 0;
};

std::string format_double(double v);

struct RunSummary {
  int exit_code = 0;
  std::vector<std::filesystem::path> files;
  std::size_t failed_checks = 0;
};

// Each command writes its CSV files and manifest.json into cfg.out_dir and
// logs progress lines to `log`.
RunSummary run_trajectory(const RunConfig& cfg, std::ostream& log);
RunSummary run_sweep(const RunConfig& cfg, std::ostream& log);
RunSummary run_scatter(const RunConfig& cfg, std::ostream& log);
RunSummary run_stability(const RunConfig& cfg, std::ostream& log);
RunSummary run_oracle(const RunConfig& cfg, std::ostream& log);

RunSummary run_command(const RunConfig& cfg, std::ostream& log);

}  // namespace cilab
