#include "cilab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cilab/accuracy.hpp"
#include "cilab/correlated.hpp"
#include "cilab/mc.hpp"
#include "cilab/parallel.hpp"
#include "cilab/rewards.hpp"
#include "cilab/rng.hpp"
#include "cilab/stability.hpp"

#ifndef CILAB_VERSION
#define CILAB_VERSION "0.0.0"
#endif

namespace cilab {

namespace fs = std::filesystem;

std::string_view version() { return CILAB_VERSION; }

std::string_view to_string(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::sweep: return "sweep";
    case Command::scatter: return "scatter";
    case Command::stability: return "stability";
    case Command::oracle: return "oracle";
  }
  return "unknown";
}

Command parse_command(std::string_view name) {
  for (auto c : {Command::simulate, Command::sweep, Command::scatter, Command::stability, Command::oracle}) {
    if (to_string(c) == name) return c;
  }
  throw ConfigError("unknown command '" + std::string(name) + "'");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!piece.empty()) out.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = first + text.size();
  bool ok = false;
  if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    value = std::strtod(first, &end);
    ok = end == last && !text.empty() && std::isfinite(value);
  } else {
    const auto res = std::from_chars(first, last, value);
    ok = res.ec == std::errc{} && res.ptr == last;
  }
  if (!ok) throw ConfigError("invalid value for " + key + ": '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "1" || text == "true" || text == "yes" || text == "on") return true;
  if (text == "0" || text == "false" || text == "no" || text == "off") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + text + "'");
}

std::string join_numbers(const auto& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ',';
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>) {
      out += format_double(v);
    } else {
      out += std::to_string(v);
    }
  }
  return out;
}

}  // namespace

Settings parse_settings(std::string_view text) {
  Settings out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    ++line_no;
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
    }
    auto key = trim(std::string_view(content).substr(0, eq));
    auto value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    std::replace(key.begin(), key.end(), '-', '_');
    out[key] = value;
  }
  return out;
}

Settings load_settings(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_settings(buf.str());
}

std::vector<std::size_t> decade_grid(std::size_t lo, std::size_t max) {
  std::vector<std::size_t> out;
  if (lo == 0) lo = 1;
  for (std::size_t decade = 1; decade <= max; decade *= 10) {
    for (std::size_t m = 1; m <= 9; ++m) {
      const std::size_t v = m * decade;
      if (v >= lo && v <= max) out.push_back(v);
    }
    if (decade > max / 10) break;
  }
  return out;
}

std::vector<std::size_t> parse_n_grid(std::string_view spec) {
  const auto text = trim(spec);
  if (const auto colon = text.find(':'); colon != std::string::npos) {
    const auto lo = parse_number<std::size_t>("n_grid", trim(std::string_view(text).substr(0, colon)));
    const auto hi = parse_number<std::size_t>("n_grid", trim(std::string_view(text).substr(colon + 1)));
    if (lo < 1 || hi < lo) throw ConfigError("n_grid range must satisfy 1 <= lo <= hi");
    return decade_grid(lo, hi);
  }
  std::vector<std::size_t> out;
  for (const auto& piece : split_list(text)) out.push_back(parse_number<std::size_t>("n_grid", piece));
  if (out.empty()) throw ConfigError("n_grid is empty");
  return out;
}

Settings RunConfig::resolved() const {
  Settings s;
  s["command"] = std::string(to_string(command));
  std::string schemes_text;
  for (auto sc : schemes) {
    if (!schemes_text.empty()) schemes_text += ',';
    schemes_text += to_string(sc);
  }
  s["scheme"] = schemes_text;
  s["n"] = join_numbers(n_values);
  s["seed_list"] = join_numbers(seeds);
  std::string inits_text;
  for (auto k : inits) {
    if (!inits_text.empty()) inits_text += ',';
    inits_text += to_string(k);
  }
  s["init"] = inits_text;
  s["full"] = full ? "true" : "false";
  s["out"] = out_dir.generic_string();
  s["threads"] = std::to_string(threads);
  s["rel_tol"] = format_double(integrator.rel_tol);
  s["abs_tol"] = format_double(integrator.abs_tol);
  s["t_max"] = format_double(integrator.t_max);
  s["equilibrium_tol"] = format_double(integrator.equilibrium_tol);
  s["quad_abs_tol"] = format_double(integrator.rewards.quad.abs_tol);
  s["max_panels"] = std::to_string(integrator.rewards.quad.max_panels);
  s["epsilon"] = format_double(epsilon);
  s["mc_samples"] = std::to_string(mc_samples);
  s["population"] = std::to_string(population);
  s["rounds"] = std::to_string(rounds);
  s["imitation_rate"] = format_double(imitation_rate);
  s["pairs"] = std::to_string(pairs);
  s["delta"] = format_double(delta);
  s["extensive_n"] = std::to_string(extensive_n);
  s["k_values"] = join_numbers(k_values);
  s["tolerance"] = format_double(tolerance);
  s["block_size"] = std::to_string(block_size);
  s["block_c"] = format_double(block_c);
  s["oracle_n"] = std::to_string(oracle_n);
  s["oracle_instances"] = std::to_string(oracle_instances);
  return s;
}

RunConfig resolve_config(Command command, const Settings& settings) {
  RunConfig cfg;
  cfg.command = command;
  auto get = [&](const char* key) -> const std::string* {
    const auto it = settings.find(key);
    return it == settings.end() ? nullptr : &it->second;
  };
  if (const auto* v = get("command"); v && parse_command(*v) != command) {
    throw ConfigError("config file is for command '" + *v + "'");
  }
  if (const auto* v = get("full")) cfg.full = parse_bool("full", *v);

  cfg.schemes = {RewardScheme::binary, RewardScheme::market, RewardScheme::minority};
  cfg.inits = {InitKind::uniform};
  const std::size_t big = cfg.full ? 10000 : 1000;
  std::size_t default_seeds = 1;
  switch (command) {
    case Command::simulate:
      cfg.n_values = {100, 1000};
      if (cfg.full) cfg.n_values.push_back(10000);
      cfg.inits = {InitKind::uniform, InitKind::concentrated};
      break;
    case Command::sweep:
      cfg.n_values = decade_grid(3, big);
      default_seeds = 10;
      break;
    case Command::scatter:
      cfg.n_values = {big};
      break;
    case Command::stability:
      cfg.n_values = {1000};
      cfg.schemes = {RewardScheme::minority};
      break;
    case Command::oracle:
      cfg.n_values = {100, 1000};
      break;
  }
  cfg.seeds.resize(default_seeds);
  std::iota(cfg.seeds.begin(), cfg.seeds.end(), 1);

  static const std::vector<std::string> known{
      "command",     "full",       "scheme",     "n",          "n_grid",          "seeds",      "seed_list",
      "init",        "out",        "threads",    "rel_tol",    "abs_tol",         "t_max",      "equilibrium_tol",
      "quad_abs_tol", "max_panels", "epsilon",    "mc_samples", "population",      "rounds",     "imitation_rate",
      "pairs",       "delta",      "extensive_n", "k_values",  "tolerance",       "block_size", "block_c",
      "oracle_n",    "oracle_instances"};
  for (const auto& [key, value] : settings) {
    if (std::find(known.begin(), known.end(), key) == known.end()) throw ConfigError("unknown setting '" + key + "'");
  }
  if (get("n") && get("n_grid")) throw ConfigError("n and n_grid are mutually exclusive");
  if (get("seeds") && get("seed_list")) throw ConfigError("seeds and seed_list are mutually exclusive");

  try {
    if (const auto* v = get("scheme")) {
      cfg.schemes.clear();
      for (const auto& s : split_list(*v)) cfg.schemes.push_back(parse_scheme(s));
      if (cfg.schemes.empty()) throw ConfigError("scheme list is empty");
    }
    if (const auto* v = get("init")) {
      cfg.inits.clear();
      for (const auto& s : split_list(*v)) cfg.inits.push_back(parse_init(s));
      if (cfg.inits.empty()) throw ConfigError("init list is empty");
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  if (const auto* v = get("n")) {
    cfg.n_values.clear();
    for (const auto& s : split_list(*v)) cfg.n_values.push_back(parse_number<std::size_t>("n", s));
  }
  if (const auto* v = get("n_grid")) cfg.n_values = parse_n_grid(*v);
  if (const auto* v = get("seeds")) {
    const auto k = parse_number<std::size_t>("seeds", *v);
    if (k == 0) throw ConfigError("seeds must be positive");
    cfg.seeds.resize(k);
    std::iota(cfg.seeds.begin(), cfg.seeds.end(), 1);
  }
  if (const auto* v = get("seed_list")) {
    cfg.seeds.clear();
    for (const auto& s : split_list(*v)) cfg.seeds.push_back(parse_number<std::uint64_t>("seed_list", s));
  }
  if (const auto* v = get("out")) cfg.out_dir = *v;
  if (const auto* v = get("threads")) cfg.threads = parse_number<unsigned>("threads", *v);
  if (const auto* v = get("rel_tol")) cfg.integrator.rel_tol = parse_number<double>("rel_tol", *v);
  if (const auto* v = get("abs_tol")) cfg.integrator.abs_tol = parse_number<double>("abs_tol", *v);
  if (const auto* v = get("t_max")) cfg.integrator.t_max = parse_number<double>("t_max", *v);
  if (const auto* v = get("equilibrium_tol")) {
    cfg.integrator.equilibrium_tol = parse_number<double>("equilibrium_tol", *v);
  }
  if (const auto* v = get("quad_abs_tol")) {
    cfg.integrator.rewards.quad.abs_tol = parse_number<double>("quad_abs_tol", *v);
  }
  if (const auto* v = get("max_panels")) {
    cfg.integrator.rewards.quad.max_panels = parse_number<std::size_t>("max_panels", *v);
  }
  if (const auto* v = get("epsilon")) cfg.epsilon = parse_number<double>("epsilon", *v);
  if (const auto* v = get("mc_samples")) cfg.mc_samples = parse_number<std::size_t>("mc_samples", *v);
  if (const auto* v = get("population")) cfg.population = parse_number<std::size_t>("population", *v);
  if (const auto* v = get("rounds")) cfg.rounds = parse_number<std::size_t>("rounds", *v);
  if (const auto* v = get("imitation_rate")) cfg.imitation_rate = parse_number<double>("imitation_rate", *v);
  if (const auto* v = get("pairs")) cfg.pairs = parse_number<std::size_t>("pairs", *v);
  if (const auto* v = get("delta")) cfg.delta = parse_number<double>("delta", *v);
  if (const auto* v = get("extensive_n")) cfg.extensive_n = parse_number<std::size_t>("extensive_n", *v);
  if (const auto* v = get("k_values")) {
    cfg.k_values.clear();
    for (const auto& s : split_list(*v)) cfg.k_values.push_back(parse_number<double>("k_values", s));
  }
  if (const auto* v = get("tolerance")) cfg.tolerance = parse_number<double>("tolerance", *v);
  if (const auto* v = get("block_size")) cfg.block_size = parse_number<std::size_t>("block_size", *v);
  if (const auto* v = get("block_c")) cfg.block_c = parse_number<double>("block_c", *v);
  if (const auto* v = get("oracle_n")) cfg.oracle_n = parse_number<std::size_t>("oracle_n", *v);
  if (const auto* v = get("oracle_instances")) {
    cfg.oracle_instances = parse_number<std::size_t>("oracle_instances", *v);
  }

  if (cfg.n_values.empty()) throw ConfigError("no problem sizes given");
  for (auto n : cfg.n_values) {
    if (n < 2) throw ConfigError("every n must be at least 2");
  }
  if (cfg.threads == 0) throw ConfigError("threads must be positive");
  if (cfg.mc_samples < 2) throw ConfigError("mc_samples must be at least 2");
  if (cfg.k_values.empty()) throw ConfigError("k_values is empty");
  for (double k : cfg.k_values) {
    if (!(k > 0.0 && k < 1.0)) throw ConfigError("k_values must lie in (0, 1)");
  }
  if (!(cfg.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta <= 0.01)) throw ConfigError("delta must lie in (0, 0.01]");
  if (!(cfg.block_c >= 0.0 && cfg.block_c < 1.0)) throw ConfigError("block_c must lie in [0, 1)");
  if (cfg.block_size == 0) throw ConfigError("block_size must be positive");
  if (cfg.oracle_n < 2 || cfg.oracle_n > kExactLimit) throw ConfigError("oracle_n must lie in [2, 20]");
  if (cfg.extensive_n < 2) throw ConfigError("extensive_n must be at least 2");
  if (cfg.pairs == 0) throw ConfigError("pairs must be positive");
  try {
    cfg.integrator.validate();
    RewardSpec{RewardScheme::market, cfg.epsilon}.validate();
    FinitePopulationConfig{cfg.population, cfg.rounds, cfg.imitation_rate}.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

CsvWriter::CsvWriter(const fs::path& path, std::vector<std::string> header) : path_(path) {
  file_.open(path, std::ios::binary | std::ios::trunc);
  if (!file_) throw IoError("cannot write " + path.string());
  columns_ = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) file_ << ',';
    file_ << header[i];
  }
  file_ << '\n';
}

CsvWriter& CsvWriter::field(std::string_view s) {
  if (in_row_++) file_ << ',';
  file_ << s;
  return *this;
}

CsvWriter& CsvWriter::field(double v) { return field(std::string_view(format_double(v))); }
CsvWriter& CsvWriter::field(std::size_t v) { return field(std::string_view(std::to_string(v))); }
CsvWriter& CsvWriter::field(int v) { return field(std::string_view(std::to_string(v))); }
CsvWriter& CsvWriter::empty() { return field(std::string_view()); }

void CsvWriter::end_row() {
  if (in_row_ != columns_) {
    throw Error("row in " + path_.string() + " has " + std::to_string(in_row_) + " fields, expected " +
                std::to_string(columns_));
  }
  file_ << '\n';
  in_row_ = 0;
}

void CsvWriter::close() {
  file_.close();
  if (!file_) throw IoError("failed writing " + path_.string());
}

namespace {

constexpr std::uint64_t kStabilityTag = 0x57ab;
constexpr std::uint64_t kOracleTag = 0x0c1e;

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

void write_manifest(const RunConfig& cfg, const std::vector<fs::path>& files) {
  nlohmann::ordered_json j;
  j["tool"] = "cilab";
  j["version"] = std::string(version());
  j["command"] = std::string(to_string(cfg.command));
  nlohmann::ordered_json conf = nlohmann::ordered_json::object();
  for (const auto& [k, v] : cfg.resolved()) conf[k] = v;
  j["config"] = conf;
  j["seeds"] = cfg.seeds;
  std::vector<std::string> names;
  for (const auto& f : files) names.push_back(f.filename().string());
  j["outputs"] = names;
  const auto path = cfg.out_dir / "manifest.json";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

RunSummary finish(const RunConfig& cfg, std::vector<fs::path> files) {
  write_manifest(cfg, files);
  files.push_back(cfg.out_dir / "manifest.json");
  return {0, std::move(files), 0};
}

IntegratorConfig integrator_for(const RunConfig& cfg) {
  IntegratorConfig ic = cfg.integrator;
  ic.rewards.mc_seed = 0;
  return ic;
}

struct RunResult {
  Trajectory traj;
  double seconds = 0.0;
};

std::string run_id(RewardScheme scheme, std::size_t n, InitKind init, std::uint64_t seed) {
  return std::string(to_string(scheme)) + "-n" + std::to_string(n) + "-" + std::string(to_string(init)) + "-s" +
         std::to_string(seed);
}

Trajectory simulate_one(const RunConfig& cfg, RewardScheme scheme, std::size_t n, InitKind init,
                        std::uint64_t seed) {
  const auto model = sample_factor_weights(n, seed);
  return integrate(model, RewardSpec{scheme, cfg.epsilon}, initial_allocation(n, init), integrator_for(cfg));
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

RunSummary run_trajectory(const RunConfig& cfg, std::ostream& log) {
  prepare_out_dir(cfg.out_dir);
  struct Job {
    RewardScheme scheme;
    std::size_t n;
    InitKind init;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto scheme : cfg.schemes) {
    for (auto n : cfg.n_values) {
      for (auto init : cfg.inits) {
        for (auto seed : cfg.seeds) jobs.push_back({scheme, n, init, seed});
      }
    }
  }
  std::vector<Trajectory> results(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t k) {
    const auto& j = jobs[k];
    results[k] = simulate_one(cfg, j.scheme, j.n, j.init, j.seed);
  });

  const auto traj_path = cfg.out_dir / "trajectory.csv";
  const auto eq_path = cfg.out_dir / "trajectory_equilibrium.csv";
  CsvWriter traj(traj_path, {"run_id", "scheme", "n", "init", "seed", "t", "accuracy", "diversity", "converged"});
  CsvWriter eq(eq_path, {"run_id", "scheme", "n", "init", "seed", "factor_index", "beta", "rho_eq"});
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto& j = jobs[k];
    const auto& tr = results[k];
    const auto id = run_id(j.scheme, j.n, j.init, j.seed);
    const int converged = tr.converged_at ? 1 : 0;
    for (std::size_t r = 0; r < tr.size(); ++r) {
      traj.field(id).field(to_string(j.scheme)).field(j.n).field(to_string(j.init)).field(std::size_t{j.seed});
      traj.field(tr.times[r]).field(tr.accuracy[r]).field(tr.diversity[r]).field(converged);
      traj.end_row();
    }
    const auto model = sample_factor_weights(j.n, j.seed);
    const auto& final_state = tr.final_state();
    for (std::size_t i = 0; i < j.n; ++i) {
      eq.field(id).field(to_string(j.scheme)).field(j.n).field(to_string(j.init)).field(std::size_t{j.seed});
      eq.field(i).field(model.beta(i)).field(final_state[i]);
      eq.end_row();
    }
    log << id << ": t_end=" << format_double(tr.times.back()) << " accuracy=" << format_double(tr.accuracy.back())
        << " diversity=" << format_double(tr.diversity.back()) << (converged ? "" : " (not converged)") << '\n';
  }
  traj.close();
  eq.close();
  return finish(cfg, {traj_path, eq_path});
}

RunSummary run_sweep(const RunConfig& cfg, std::ostream& log) {
  prepare_out_dir(cfg.out_dir);
  struct Job {
    std::size_t n;
    RewardScheme scheme;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto n : cfg.n_values) {
    for (auto scheme : cfg.schemes) {
      for (auto seed : cfg.seeds) jobs.push_back({n, scheme, seed});
    }
  }
  std::vector<double> accuracy(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t k) {
    const auto& j = jobs[k];
    accuracy[k] = simulate_one(cfg, j.scheme, j.n, InitKind::uniform, j.seed).accuracy.back();
  });

  const auto path = cfg.out_dir / "sweep.csv";
  CsvWriter csv(path, {"kind", "scheme", "n", "seed", "accuracy", "stddev", "runs"});
  struct Group {
    std::string scheme;
    std::size_t n;
    std::vector<double> values;
  };
  std::vector<Group> groups;
  std::size_t k = 0;
  for (auto n : cfg.n_values) {
    for (auto scheme : cfg.schemes) {
      Group g{std::string(to_string(scheme)), n, {}};
      for (auto seed : cfg.seeds) {
        csv.field("run").field(g.scheme).field(n).field(std::size_t{seed}).field(accuracy[k]).empty().empty();
        csv.end_row();
        g.values.push_back(accuracy[k++]);
      }
      groups.push_back(std::move(g));
    }
    Group base{"uniform-baseline", n, {}};
    for (auto seed : cfg.seeds) {
      const auto model = sample_factor_weights(n, seed);
      const double c = collective_accuracy(model, Attention::uniform(n));
      csv.field("run").field(base.scheme).field(n).field(std::size_t{seed}).field(c).empty().empty();
      csv.end_row();
      base.values.push_back(c);
    }
    groups.push_back(std::move(base));
  }
  for (const auto& g : groups) {
    const double m = mean_of(g.values);
    const double sd = sample_stddev(g.values);
    csv.field("summary").field(g.scheme).field(g.n).empty().field(m).field(sd).field(g.values.size());
    csv.end_row();
    log << g.scheme << " n=" << g.n << ": mean accuracy " << format_double(m) << " (sd " << format_double(sd) << ")\n";
  }
  csv.close();
  return finish(cfg, {path});
}

RunSummary run_scatter(const RunConfig& cfg, std::ostream& log) {
  prepare_out_dir(cfg.out_dir);
  struct Job {
    RewardScheme scheme;
    std::size_t n;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (auto scheme : cfg.schemes) {
    for (auto n : cfg.n_values) {
      for (auto seed : cfg.seeds) jobs.push_back({scheme, n, seed});
    }
  }
  std::vector<Trajectory> results(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t k) {
    const auto& j = jobs[k];
    results[k] = simulate_one(cfg, j.scheme, j.n, InitKind::uniform, j.seed);
  });

  const auto path = cfg.out_dir / "equilibrium.csv";
  const auto summary_path = cfg.out_dir / "equilibrium_summary.csv";
  CsvWriter csv(path, {"scheme", "n", "seed", "factor_index", "beta", "rho_eq"});
  CsvWriter summary(summary_path, {"scheme", "n", "seed", "accuracy", "diversity", "converged", "t_end"});
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const auto& j = jobs[k];
    const auto& tr = results[k];
    const auto model = sample_factor_weights(j.n, j.seed);
    for (std::size_t i = 0; i < j.n; ++i) {
      csv.field(to_string(j.scheme)).field(j.n).field(std::size_t{j.seed}).field(i).field(model.beta(i));
      csv.field(tr.final_state()[i]).end_row();
    }
    summary.field(to_string(j.scheme)).field(j.n).field(std::size_t{j.seed}).field(tr.accuracy.back());
    summary.field(tr.diversity.back()).field(tr.converged_at ? 1 : 0).field(tr.times.back()).end_row();
    log << to_string(j.scheme) << " n=" << j.n << " seed=" << j.seed
        << ": accuracy=" << format_double(tr.accuracy.back()) << '\n';
  }
  for (auto n : cfg.n_values) {
    for (auto seed : cfg.seeds) {
      const auto model = sample_factor_weights(n, seed);
      const auto rho = Attention::uniform(n);
      for (std::size_t i = 0; i < n; ++i) {
        csv.field("uniform").field(n).field(std::size_t{seed}).field(i).field(model.beta(i)).field(rho[i]).end_row();
      }
      summary.field("uniform").field(n).field(std::size_t{seed}).field(collective_accuracy(model, rho));
      summary.field(diversity(rho)).field(1).field(0.0).end_row();
    }
  }
  csv.close();
  summary.close();
  return finish(cfg, {path, summary_path});
}

namespace {

std::string params_text(std::initializer_list<std::pair<const char*, std::string>> items) {
  std::string out;
  for (const auto& [k, v] : items) {
    if (!out.empty()) out += ';';
    out += k;
    out += '=';
    out += v;
  }
  return out;
}

// Ten (or `count`) factor pairs spread over the ranks of those with
// beta_j > 1.2 delta, so that moving delta away from j keeps rho_j positive.
std::vector<std::pair<std::size_t, std::size_t>> stability_pairs(const FactorModel& model, double delta,
                                                                  std::size_t count) {
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (model.beta(i) > 1.2 * delta) eligible.push_back(i);
  }
  if (eligible.size() < 2) throw Error("too few factors with beta > 1.2 delta for the two-factor experiment");
  const std::size_t m = eligible.size();
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t a = (k * m) / count;
    const std::size_t b = (a + m / 2 + k) % m;
    if (a == b) continue;
    out.emplace_back(eligible[a], eligible[b]);
  }
  return out;
}

}  // namespace

RunSummary run_stability(const RunConfig& cfg, std::ostream& log) {
  prepare_out_dir(cfg.out_dir);
  const auto path = cfg.out_dir / "stability.csv";
  CsvWriter csv(path, {"experiment", "scheme", "n", "seed", "params", "predicted_rate", "measured_rate",
                       "relative_error", "passed"});
  std::size_t failures = 0;
  for (auto seed : cfg.seeds) {
    for (auto n : cfg.n_values) {
      const auto model = sample_factor_weights(n, seed);
      const auto pairs = stability_pairs(model, cfg.delta, cfg.pairs);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        McFieldOptions opt{cfg.mc_samples, derive_seed(seed, {kStabilityTag, 1, n, p}), cfg.tolerance, cfg.threads};
        const auto res = two_factor_perturbation(model, i, j, cfg.delta, opt);
        const bool ok = res.report.passed && res.restoring && res.bystander_ratio <= 0.1;
        failures += ok ? 0 : 1;
        csv.field("two_factor").field("minority").field(n).field(std::size_t{seed});
        csv.field(params_text({{"i", std::to_string(i)},
                               {"j", std::to_string(j)},
                               {"delta", format_double(cfg.delta)},
                               {"std_error", format_double(res.measured_std_error)},
                               {"bystander_ratio", format_double(res.bystander_ratio)}}));
        csv.field(res.report.predicted_rate).field(res.report.measured_rate).field(res.report.relative_error);
        csv.field(ok ? 1 : 0).end_row();
        log << "two_factor n=" << n << " i=" << i << " j=" << j << ": rel.err "
            << format_double(res.report.relative_error) << (ok ? "" : " FAILED") << '\n';
      }
    }

    const auto big = sample_factor_weights(cfg.extensive_n, seed);
    const std::pair<const char*, std::vector<double>> shapes[] = {
        {"random", random_sign_shape(big, derive_seed(seed, {kStabilityTag, 2}))},
        {"beta", beta_correlated_shape(big)}};
    for (std::size_t s = 0; s < std::size(shapes); ++s) {
      McFieldOptions opt{cfg.mc_samples, derive_seed(seed, {kStabilityTag, 3, s}), cfg.tolerance, cfg.threads};
      const auto reports = extensive_perturbation(big, shapes[s].second, cfg.k_values, opt);
      for (std::size_t r = 0; r < reports.size(); ++r) {
        const auto& rep = reports[r];
        const bool improving = r == 0 || rep.componentwise_error <= reports[r - 1].componentwise_error;
        const bool ok = rep.report.passed && improving;
        failures += ok ? 0 : 1;
        csv.field("extensive").field("minority").field(cfg.extensive_n).field(std::size_t{seed});
        csv.field(params_text({{"shape", shapes[s].first},
                               {"k", format_double(rep.k)},
                               {"samples", std::to_string(rep.samples)},
                               {"ratio", format_double(rep.ratio)},
                               {"max_share", format_double(rep.max_share)}}));
        csv.field(rep.report.predicted_rate).field(rep.report.measured_rate).field(rep.componentwise_error);
        csv.field(ok ? 1 : 0).end_row();
        log << "extensive shape=" << shapes[s].first << " k=" << format_double(rep.k) << ": rel.err "
            << format_double(rep.componentwise_error) << (ok ? "" : " FAILED") << '\n';
      }
    }

    const std::size_t cn = std::max<std::size_t>(cfg.block_size * 20, 200);
    const auto base = sample_factor_weights(cn, seed);
    const std::size_t samples = std::min<std::size_t>(cfg.mc_samples, 200000);
    const std::pair<RewardScheme, double> cases[] = {
        {RewardScheme::minority, cfg.block_c}, {RewardScheme::minority, 0.0}, {RewardScheme::binary, cfg.block_c}};
    for (std::size_t c = 0; c < std::size(cases); ++c) {
      const auto [scheme, corr] = cases[c];
      const auto model = base.with_covariance(Covariance::block_equicorrelated(cn, cfg.block_size, corr));
      const auto res = correlated_stationarity_check(model, RewardSpec{scheme, cfg.epsilon}, samples,
                                                     derive_seed(seed, {kStabilityTag, 4, c}), cfg.threads);
      double worst = 0.0;
      for (std::size_t i = 0; i < res.field.size(); ++i) {
        const double z = res.std_error[i] > 0.0 ? std::abs(res.field[i]) / res.std_error[i]
                                                : (res.field[i] == 0.0 ? 0.0 : INFINITY);
        worst = std::max(worst, z);
      }
      const bool control = scheme != RewardScheme::minority;
      const bool ok = res.outliers == 0;
      // The control is expected to fail; only an unexpected pass counts.
      failures += (control ? ok : !ok) ? 1 : 0;
      csv.field(control ? "correlated_stationarity_control" : "correlated_stationarity").field(to_string(scheme));
      csv.field(cn).field(std::size_t{seed});
      csv.field(params_text({{"block_size", std::to_string(cfg.block_size)},
                             {"c", format_double(corr)},
                             {"samples", std::to_string(samples)},
                             {"outliers", std::to_string(res.outliers)},
                             {"expected", control ? "fail" : "pass"}}));
      csv.field(0.0).field(res.max_abs).field(worst / 3.0).field(ok ? 1 : 0).end_row();
      log << "correlated " << to_string(scheme) << " c=" << format_double(corr) << ": max |field| "
          << format_double(res.max_abs) << ", outliers " << res.outliers << '\n';
    }
  }
  csv.close();
  auto summary = finish(cfg, {path});
  summary.failed_checks = failures;
  return summary;
}

namespace {

Attention random_attention(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed, {0xa77});
  std::vector<double> w(n);
  for (auto& v : w) v = -std::log(uniform_open(rng));
  return Attention::normalized(std::move(w));
}

}  // namespace

RunSummary run_oracle(const RunConfig& cfg, std::ostream& log) {
  prepare_out_dir(cfg.out_dir);
  const auto path = cfg.out_dir / "oracle.csv";
  CsvWriter csv(path, {"check", "scheme", "n", "seed", "instance", "index", "value", "reference", "error_bar",
                       "passed"});
  std::size_t failures = 0;
  auto row = [&](std::string_view check, std::string_view scheme, std::size_t n, std::uint64_t seed,
                 std::size_t instance, std::size_t index, double value, double reference, double bar, bool ok) {
    failures += ok ? 0 : 1;
    csv.field(check).field(scheme).field(n).field(std::size_t{seed}).field(instance).field(index);
    csv.field(value).field(reference).field(bar).field(ok ? 1 : 0).end_row();
  };

  for (auto seed : cfg.seeds) {
    // Exact enumeration against Monte Carlo on small instances.
    for (std::size_t inst = 0; inst < cfg.oracle_instances; ++inst) {
      const auto model = sample_factor_weights(cfg.oracle_n, derive_seed(seed, {kOracleTag, 1, inst}));
      const auto rho = random_attention(cfg.oracle_n, derive_seed(seed, {kOracleTag, 2, inst}));
      for (auto scheme : {RewardScheme::binary, RewardScheme::market, RewardScheme::minority}) {
        const RewardSpec spec{scheme, cfg.epsilon};
        const auto exact = expected_rewards_exact(model, rho, spec);
        const auto mc = mc_expected_rewards(model, rho, spec, cfg.mc_samples,
                                            derive_seed(seed, {kOracleTag, 3, inst, static_cast<std::uint64_t>(scheme)}),
                                            cfg.threads);
        for (std::size_t i = 0; i < cfg.oracle_n; ++i) {
          const double bar = 4.0 * mc[i].std_error;
          const bool ok = std::abs(mc[i].value - exact.values[i]) <= std::max(bar, 1e-12);
          row("exact_vs_mc_reward", to_string(scheme), cfg.oracle_n, seed, inst, i, mc[i].value, exact.values[i], bar,
              ok);
        }
      }
      const double c_exact = collective_accuracy_exact(model, rho);
      const auto c_mc = mc_accuracy(model, rho, cfg.mc_samples, derive_seed(seed, {kOracleTag, 4, inst}), cfg.threads);
      const double bar = 4.0 * c_mc.std_error;
      row("exact_vs_mc_accuracy", "-", cfg.oracle_n, seed, inst, 0, c_mc.value, c_exact, bar,
          std::abs(c_mc.value - c_exact) <= std::max(bar, 1e-12));
    }
    log << "exact vs Monte Carlo: " << cfg.oracle_instances << " instances at n=" << cfg.oracle_n << '\n';

    // Accuracy triple check: orthant identity, double integral, Monte Carlo.
    const std::size_t acc_samples = std::max<std::size_t>(cfg.mc_samples / 10, 2);
    for (auto n : cfg.n_values) {
      const auto model = sample_factor_weights(n, seed);
      const Attention rhos[] = {Attention::uniform(n), random_attention(n, derive_seed(seed, {kOracleTag, 5, n}))};
      for (std::size_t r = 0; r < std::size(rhos); ++r) {
        const double approx = collective_accuracy_approx(model, rhos[r]);
        const double dbl = collective_accuracy_double_integral(model, rhos[r]);
        const auto mc = mc_accuracy(model, rhos[r], acc_samples, derive_seed(seed, {kOracleTag, 6, n, r}), cfg.threads);
        const double bar = std::max(3.0 * mc.std_error, 0.01);
        row("accuracy_approx_vs_mc", "-", n, seed, r, 0, approx, mc.value, bar, std::abs(approx - mc.value) <= bar);
        row("accuracy_approx_vs_integral", "-", n, seed, r, 0, approx, dbl, 1e-6, std::abs(approx - dbl) <= 1e-6);
        log << "accuracy n=" << n << (r ? " random" : " uniform") << ": approx " << format_double(approx) << ", MC "
            << format_double(mc.value) << '\n';
      }
    }

    // Finite population against the mean-field picture.
    {
      const auto model = sample_factor_weights(5, seed);
      FinitePopulationConfig fp{cfg.population, cfg.rounds, cfg.imitation_rate,
                                derive_seed(seed, {kOracleTag, 7})};
      const auto tr = finite_population_run(model, RewardSpec{RewardScheme::binary, cfg.epsilon}, fp);
      const double top = tr.final_state()[0];
      row("finite_population_vertex", "binary", 5, seed, 0, 0, top, 0.95, 0.0, top > 0.95);
      log << "finite population binary n=5: share on top factor " << format_double(top) << '\n';
    }
    {
      const auto model = sample_factor_weights(50, seed);
      FinitePopulationConfig fp{cfg.population, cfg.rounds, cfg.imitation_rate,
                                derive_seed(seed, {kOracleTag, 8})};
      const auto tr = finite_population_run(model, RewardSpec{RewardScheme::minority, cfg.epsilon}, fp);
      const auto avg = average_state(tr, 0.75 * static_cast<double>(cfg.rounds));
      double l1 = 0.0;
      for (std::size_t i = 0; i < avg.size(); ++i) l1 += std::abs(avg[i] - model.beta(i));
      row("finite_population_minority", "minority", 50, seed, 0, 0, l1, 0.1, 0.0, l1 < 0.1);
      log << "finite population minority n=50: L1 distance to beta " << format_double(l1) << '\n';
    }
  }
  csv.close();
  auto summary = finish(cfg, {path});
  summary.failed_checks = failures;
  summary.exit_code = failures ? 3 : 0;
  log << (failures ? std::to_string(failures) + " oracle checks failed" : std::string("all oracle checks passed"))
      << '\n';
  return summary;
}

RunSummary run_command(const RunConfig& cfg, std::ostream& log) {
  switch (cfg.command) {
    case Command::simulate: return run_trajectory(cfg, log);
    case Command::sweep: return run_sweep(cfg, log);
    case Command::scatter: return run_scatter(cfg, log);
    case Command::stability: return run_stability(cfg, log);
    case Command::oracle: return run_oracle(cfg, log);
  }
  throw ConfigError("unknown command");
}

}  // namespace cilab
