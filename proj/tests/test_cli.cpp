#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

#include "qdecay/config.hpp"
#include "qdecay/pipeline.hpp"

using namespace qdecay;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qdecay_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

// rows of a CSV with '#' comments and one header line
std::vector<std::vector<double>> rows(const fs::path& p) {
  std::ifstream f(p);
  std::string line;
  std::vector<std::vector<double>> out;
  bool header = true;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(cell.empty() ? std::nan("") : std::strtod(cell.c_str(), nullptr));
    out.push_back(r);
  }
  return out;
}

#ifdef QDECAY_CLI_PATH
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(QDECAY_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}
#endif

RunConfig quick_decay(double lambda) {
  RunConfig c = parse_config("{}");
  c.potential.lambda = lambda;
  c.time = {1e2, 1e4, 4};
  c.fit = {1e2, 1e4};
  return c;
}

}  // namespace

TEST_CASE("config round trip") {
  const RunConfig def;
  const std::string text = dump_config(def);
  const RunConfig back = parse_config(text);
  CHECK(dump_config(back) == text);

  const RunConfig c = parse_config(R"({"potential": {"lambda": -1.5, "a": 2.0}, "state": {"family": "gaussian_bump",
      "r0": 0.8, "sigma": 0.15, "R": 1.6}, "grid": {"r_max": 5, "n_points": 5001}, "region_R": 1.6,
      "time": {"t_min": 2, "t_max": 2000, "per_decade": 5}})");
  CHECK(c.potential.lambda == -1.5);
  CHECK(c.potential.a == 2.0);
  CHECK(c.state.family == "gaussian_bump");
  CHECK(c.grid.n_points == 5001);
  CHECK(c.time.per_decade == 5);
  CHECK(parse_config(dump_config(c)).potential.a == 2.0);
  CHECK(dump_config(parse_config(dump_config(c))) == dump_config(c));
}

TEST_CASE("config errors name the offending field") {
  auto field_of = [](const std::string& text) {
    try {
      (void)parse_config(text);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  CHECK(field_of(R"({"potential": {"lamda": 1}})") == "potential.lamda");
  CHECK(field_of(R"({"region_R": 5})") == "region_R");
  CHECK(field_of(R"({"grid": {"n_points": "many"}})") == "grid.n_points");
  CHECK(field_of(R"({"engine": "magic"})") == "engine");
  CHECK(field_of(R"({"state": {"family": "sine_box", "n": 0}})") == "state.n");
  CHECK(field_of("{not json") != "<none>");
  CHECK_THROWS_AS(load_config("/nonexistent/qdecay.json"), ConfigError);
}

#ifdef QDECAY_CLI_PATH
TEST_CASE("CLI exit codes for bad configs") {
  const auto dir = scratch("bad");
  spit(dir / "unknown.json", R"({"potential": {"family": "delta_shell", "lambda": 6, "colour": 1}})");
  CHECK(run_cli("decay --config " + (dir / "unknown.json").string() + " --out " + dir.string(), dir / "log1") == 2);
  CHECK(slurp(dir / "log1").find("potential.colour") != std::string::npos);

  spit(dir / "far.json", R"({"region_R": 3.0})");
  CHECK(run_cli("decay --config " + (dir / "far.json").string() + " --out " + dir.string(), dir / "log2") == 2);
  CHECK(slurp(dir / "log2").find("region_R") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "decay.csv"));

  CHECK(run_cli("decay --no-such-flag", dir / "log3") == 2);
  CHECK(run_cli("", dir / "log4") == 2);
}

TEST_CASE("CLI print-config and poles") {
  const auto dir = scratch("poles");
  CHECK(run_cli("poles --print-config", dir / "cfg.json") == 0);
  CHECK(dump_config(parse_config(slurp(dir / "cfg.json"))) == dump_config(RunConfig{}));

  spit(dir / "free.json", R"({"potential": {"family": "free"}})");
  CHECK(run_cli("poles --config " + (dir / "free.json").string() + " --out " + (dir / "free").string(), dir / "l1") == 0);
  const json jf = load(dir / "free" / "poles.json");
  CHECK(jf["poles"].empty());
  CHECK(jf["bound_states"].empty());
  CHECK(jf["jost_at_zero"].get<double>() == 1.0);
  CHECK(jf["tool"] == "qdecay");
  CHECK(jf["version"] == version());

  spit(dir / "attr.json", R"({"potential": {"lambda": -2}, "grid": {"r_max": 20, "n_points": 20001}})");
  CHECK(run_cli("poles --config " + (dir / "attr.json").string() + " --out " + (dir / "attr").string(), dir / "l2") == 0);
  const json ja = load(dir / "attr" / "poles.json");
  REQUIRE(ja["bound_states"].size() == 1);
  CHECK(ja["bound_states"][0]["kappa"].get<double>() == doctest::Approx(oracle::delta_shell_kappa(-2.0, 1.0)).epsilon(1e-10));
  CHECK(ja["jost_at_zero"].get<double>() == doctest::Approx(-1.0));
  CHECK(ja["zero_count"].get<int>() == static_cast<int>(ja["poles"].size()));
  CHECK(ja["config"]["potential"]["lambda"].get<double>() == -2.0);
}
#endif

TEST_CASE("evolve at t = 0 returns the initial samples") {
  const auto dir = scratch("evolve0");
  RunConfig c = parse_config(R"({"evolve": {"times": [0]}, "tolerances": {"tail_tol": 1e-13}})");
  REQUIRE(run_command("evolve", c, {dir.string(), 0}) == kOk);
  const auto r = rows(dir / "evolve_000.csv");
  const auto st = build_initial_state(make_family(c.state), make_grid(c.grid));
  REQUIRE(r.size() == st.grid().nearest(c.region_R) + 1);
  std::vector<cplx> got(r.size());
  double worst_r = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    worst_r = std::max(worst_r, std::abs(r[i][0] - st.grid().r(i)));
    got[i] = cplx(r[i][1], r[i][2]);
  }
  CHECK(worst_r < 1e-15);
  CHECK(oracle::l2(got, st.samples(), st.grid().spacing(), r.size()) < 1e-6);
  const json j = load(dir / "evolve.json");
  CHECK(j["snapshots"][0]["P_region"].get<double>() == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("evolve of a free Gaussian matches the closed form") {
  const auto dir = scratch("evolve_free");
  const RunConfig c = parse_config(R"({"potential": {"family": "free"},
      "state": {"family": "gaussian_bump", "r0": 1.5, "sigma": 0.2, "R": 3},
      "grid": {"r_max": 8, "n_points": 8001}, "region_R": 3, "evolve": {"times": [0.5, 5], "r_eval": 6}})");
  REQUIRE(run_command("evolve", c, {dir.string(), 0}) == kOk);
  const auto st = build_initial_state(make_family(c.state), make_grid(c.grid));
  const double scale = st.samples()[st.grid().nearest(1.5)].real() / family_shape(make_family(c.state), 1.5);
  const double ts[] = {0.5, 5.0};
  const char* files[] = {"evolve_000.csv", "evolve_001.csv"};
  for (int s = 0; s < 2; ++s) {
    const auto r = rows(dir / files[s]);
    REQUIRE(r.size() == 6001);
    std::vector<cplx> got(r.size()), ref(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      got[i] = cplx(r[i][1], r[i][2]);
      ref[i] = scale * oracle::free_half_line_bump(r[i][0], ts[s], 1.5, 0.2);
    }
    CAPTURE(ts[s]);
    CHECK(oracle::l2(got, ref, 1e-3, r.size()) < 1e-6);
  }
}

TEST_CASE("decay exponents from the pipeline") {
  const auto dir = scratch("decay");
  REQUIRE(run_command("decay", quick_decay(6.0), {(dir / "generic").string(), 0}) == kOk);
  const json g = load(dir / "generic" / "fit.json");
  CHECK(g["exponent"].get<double>() == doctest::Approx(-3.0).epsilon(0.03));
  CHECK_FALSE(g["truncated"].get<bool>());
  CHECK(g["parseval"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));

  REQUIRE(run_command("decay", quick_decay(-1.0), {(dir / "resonant").string(), 0}) == kOk);
  const json r = load(dir / "resonant" / "fit.json");
  CHECK(r["exponent"].get<double>() == doctest::Approx(-1.0).epsilon(0.05));

  const auto curve = rows(dir / "generic" / "decay.csv");
  REQUIRE(curve.size() == 9);
  CHECK(curve.front()[0] == 100.0);
  CHECK(curve.back()[0] == 1e4);
  for (const auto& row : curve) {
    CHECK(row[1] > 0.0);
    CHECK(row[3] < 1e-8);
    CHECK(row[4] == 1.0);
  }
}

TEST_CASE("a starved quadrature budget degrades the run") {
  const auto dir = scratch("budget");
  RunConfig c = quick_decay(6.0);
  c.time = {1.0, 1e4, 4};
  c.tolerances.max_nodes = 3000;
  c.fit = {0.0, 0.0};
  const int code = run_command("decay", c, {dir.string(), 0});
  CHECK(code == kDegraded);
  const json j = load(dir / "fit.json");
  CHECK(j["truncated"].get<bool>());
  CHECK_FALSE(j["truncation_reason"].get<std::string>().empty());
}

TEST_CASE("grid engine past its safe window is reported") {
  const auto dir = scratch("grid");
  RunConfig c = parse_config(R"({"engine": "grid", "time": {"t_min": 0.01, "t_max": 10, "per_decade": 3}})");
  const int code = run_command("decay", c, {dir.string(), 0});
  CHECK(code == kDegraded);
  CHECK(load(dir / "fit.json")["engine"] == "grid");
  CHECK(run_command("nonsense", c, {dir.string(), 0}) == kConfigError);
}

TEST_CASE("outputs are byte-identical across runs") {
  const auto dir = scratch("determinism");
  const RunConfig c = quick_decay(4.0);
  REQUIRE(run_command("decay", c, {(dir / "a").string(), 7}) == kOk);
  REQUIRE(run_command("decay", c, {(dir / "b").string(), 7}) == kOk);
  for (const char* f : {"decay.csv", "fit.json"}) {
    const std::string a = slurp(dir / "a" / f), b = slurp(dir / "b" / f);
    CHECK_FALSE(a.empty());
    CHECK(a == b);
  }
  const std::string csv = slurp(dir / "a" / "decay.csv");
  CHECK(csv.rfind(std::string("# qdecay ") + version() + " decay", 0) == 0);
  CHECK(csv.find("# seed: 7") != std::string::npos);
  CHECK(csv.find("# config: {") != std::string::npos);
}

TEST_CASE("scan writes one row per coupling") {
  const auto dir = scratch("scan");
  RunConfig c = quick_decay(0.0);
  c.scan.lambdas = {2.0, 8.0};
  REQUIRE(run_command("scan", c, {dir.string(), 0}) == kOk);
  const auto r = rows(dir / "scan.csv");
  REQUIRE(r.size() == 2);
  CHECK(r[0][0] == 2.0);
  CHECK(r[1][0] == 8.0);
  for (const auto& row : r) CHECK(row[1] == doctest::Approx(-3.0).epsilon(0.03));
}
