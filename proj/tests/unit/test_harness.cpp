#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cilab/harness.hpp"

using namespace cilab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const char* name) {
  const auto dir = fs::temp_directory_path() / "cilab_unit" / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("settings text") {
  const auto s = parse_settings("# comment\nscheme = market, minority\n\nn-grid=3:30  # trailing\n");
  CHECK(s.size() == 2);
  CHECK(s.at("scheme") == "market, minority");
  CHECK(s.at("n_grid") == "3:30");
  CHECK_THROWS_AS(parse_settings("just words\n"), ConfigError);
  CHECK_THROWS_AS(parse_settings("=3\n"), ConfigError);
  CHECK_THROWS_AS(load_settings("/nonexistent/cilab.conf"), ConfigError);
}

TEST_CASE("n grids") {
  const std::vector<std::size_t> want{3, 4, 5, 6, 7, 8, 9, 10, 20, 30};
  CHECK(decade_grid(3, 30) == want);
  CHECK(parse_n_grid("3:30") == want);
  CHECK(parse_n_grid("5, 50,500") == std::vector<std::size_t>{5, 50, 500});
  CHECK(decade_grid(3, 1000).back() == 1000);
  CHECK_THROWS_AS(parse_n_grid("30:3"), ConfigError);
  CHECK_THROWS_AS(parse_n_grid("a,b"), ConfigError);
}

TEST_CASE("command defaults") {
  const auto sweep = resolve_config(Command::sweep, {});
  CHECK(sweep.seeds.size() == 10);
  CHECK(sweep.seeds.front() == 1);
  CHECK(sweep.n_values.back() == 1000);
  CHECK(resolve_config(Command::sweep, {{"full", "true"}}).n_values.back() == 10000);
  const auto stab = resolve_config(Command::stability, {});
  CHECK(stab.schemes == std::vector<RewardScheme>{RewardScheme::minority});
  const auto sim = resolve_config(Command::simulate, {});
  CHECK(sim.inits.size() == 2);
}

TEST_CASE("settings override defaults") {
  const auto cfg = resolve_config(Command::simulate, {{"scheme", "binary"},
                                                      {"n", "5,7"},
                                                      {"seed_list", "4,9"},
                                                      {"init", "concentrated"},
                                                      {"threads", "3"},
                                                      {"rel_tol", "1e-8"}});
  CHECK(cfg.schemes == std::vector<RewardScheme>{RewardScheme::binary});
  CHECK(cfg.n_values == std::vector<std::size_t>{5, 7});
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 9});
  CHECK(cfg.inits == std::vector<InitKind>{InitKind::concentrated});
  CHECK(cfg.threads == 3);
  CHECK(cfg.integrator.rel_tol == 1e-8);
  CHECK(cfg.resolved().at("scheme") == "binary");
}

TEST_CASE("bad settings") {
  CHECK_THROWS_AS(resolve_config(Command::sweep, {{"colour", "red"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Command::sweep, {{"n", "5"}, {"n_grid", "3:10"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Command::sweep, {{"seeds", "2"}, {"seed_list", "1"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Command::sweep, {{"scheme", "lottery"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Command::sweep, {{"n", "1"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Command::sweep, {{"threads", "0"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Command::sweep, {{"delta", "0.5"}}), ConfigError);
  CHECK_THROWS_AS(resolve_config(Command::sweep, {{"command", "oracle"}}), ConfigError);
  CHECK_THROWS_AS(parse_command("plot"), ConfigError);
}

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0 / 3.0) == "0.333333333333");
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(-0.0) == "0");
  CHECK(format_double(1e-20) == "1e-20");
}

TEST_CASE("csv writer checks the column count") {
  const auto dir = scratch("csv");
  fs::create_directories(dir);
  CsvWriter w(dir / "t.csv", {"a", "b"});
  w.field(std::string_view("x")).field(0.5).end_row();
  w.field(std::size_t{3});
  CHECK_THROWS_AS(w.end_row(), Error);
  w.empty().end_row();
  w.close();
  CHECK(slurp(dir / "t.csv") == "a,b\nx,0.5\n3,\n");
}

TEST_CASE("small sweep is reproducible and writes a manifest") {
  Settings s{{"scheme", "binary,minority"}, {"n", "3,5"}, {"seeds", "2"}};
  auto a = resolve_config(Command::sweep, s);
  auto b = a;
  a.out_dir = scratch("sweep_a");
  b.out_dir = scratch("sweep_b");
  std::ostringstream log;
  const auto ra = run_command(a, log);
  const auto rb = run_command(b, log);
  CHECK(ra.exit_code == 0);
  const auto text = slurp(a.out_dir / "sweep.csv");
  CHECK(text == slurp(b.out_dir / "sweep.csv"));
  CHECK(text.rfind("kind,scheme,n,seed,accuracy,stddev,runs\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);

  const auto manifest = nlohmann::json::parse(slurp(a.out_dir / "manifest.json"));
  CHECK(manifest["command"] == "sweep");
  CHECK(manifest["seeds"].size() == 2);
  CHECK(manifest["config"]["scheme"] == "binary,minority");
  CHECK(manifest["version"] == std::string(version()));
}
