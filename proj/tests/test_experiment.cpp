#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rarelaw/experiment.hpp"

using namespace rarelaw;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "rarelaw_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSmallEvl = R"(
[experiment]
map = doubling:2
noise = uniform:epsilon=0.25:boundary=wrap
seed = 77
grid_m = 128
scenario = evl

[evl]
taus = 0.5,1
n = 200
trials = 400
zeta = 0.3
)";

}  // namespace

TEST_CASE("config parsing and field-path errors") {
  const auto cfg = ExperimentConfig::parse_text(kSmallEvl, "inline");
  CHECK(cfg.get_str("experiment", "map") == "doubling:2");
  CHECK(cfg.get_u64("experiment", "seed") == 77);
  CHECK(cfg.get_int("evl", "n", 0) == 200);
  CHECK(cfg.get_list("evl", "taus").size() == 2);
  CHECK(cfg.get_num("evl", "zeta", 0.0) == 0.3);
  CHECK_FALSE(cfg.has("evl", "oracle"));

  CHECK_THROWS_AS(cfg.get_str("experiment", "missing"), ConfigError);
  try {
    cfg.get_str("hts", "mass");
  } catch (const ConfigError& e) {
    CHECK(e.field == "hts.mass");
  }
  CHECK_THROWS_AS(ExperimentConfig::parse_text("key = 1\n", "inline"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse_text("[a\n", "inline"), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::parse_text("[a]\nnovalue\n", "inline"), ConfigError);
}

TEST_CASE("markov scenario runs end to end and passes") {
  const auto dir = fresh_dir("markov");
  auto cfg = ExperimentConfig::parse_text(R"(
[experiment]
map = doubling:2
noise = uniform:epsilon=0.25:boundary=wrap
seed = 1
grid_m = 128
scenario = markov

[markov]
gamma = 0.75
k = 1
)",
                                          "inline");
  RunOptions opt;
  opt.threads = 2;
  opt.out_dir = dir.string();
  const auto rr = run_experiment(cfg, opt);
  CHECK(rr.exit_code == 0);
  CHECK(rr.pass);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(fs::exists(dir / "markov.csv"));
  const std::string manifest = slurp(dir / "manifest.json");
  CHECK(manifest.find("\"pass\": true") != std::string::npos);
  CHECK(manifest.find("uniform_density") != std::string::npos);
}

TEST_CASE("invalid scenario parameters give a usage error with manifest") {
  const auto dir = fresh_dir("usage");
  auto cfg = ExperimentConfig::parse_text(R"(
[experiment]
map = doubling:2
noise = uniform:epsilon=0.25:boundary=wrap
seed = 1
grid_m = 128
scenario = evl

[evl]
taus = 1
n = 200
trials = 0
)",
                                          "inline");
  RunOptions opt;
  opt.out_dir = dir.string();
  const auto rr = run_experiment(cfg, opt);
  CHECK(rr.exit_code == 2);
  CHECK(fs::exists(dir / "manifest.json"));
  CHECK(slurp(dir / "manifest.json").find("evl.trials") != std::string::npos);
}

TEST_CASE("unknown scenario is a usage error") {
  const auto dir = fresh_dir("unknown");
  auto cfg = ExperimentConfig::parse_text(R"(
[experiment]
map = doubling:2
noise = uniform:epsilon=0.25:boundary=wrap
seed = 1
scenario = frobnicate
)",
                                          "inline");
  RunOptions opt;
  opt.out_dir = dir.string();
  CHECK(run_experiment(cfg, opt).exit_code == 2);
}

TEST_CASE("reruns are byte-identical regardless of worker count") {
  const auto cfg = ExperimentConfig::parse_text(kSmallEvl, "inline");
  const auto d1 = fresh_dir("det1");
  const auto d2 = fresh_dir("det2");
  RunOptions o1, o2;
  o1.out_dir = d1.string();
  o1.threads = 1;
  o2.out_dir = d2.string();
  o2.threads = 4;
  const auto r1 = run_experiment(cfg, o1);
  const auto r2 = run_experiment(cfg, o2);
  CHECK(r1.exit_code == r2.exit_code);
  CHECK(slurp(d1 / "evl.csv") == slurp(d2 / "evl.csv"));
  CHECK(slurp(d1 / "schedule.json") == slurp(d2 / "schedule.json"));
}

TEST_CASE("seed override changes the estimates") {
  const auto cfg = ExperimentConfig::parse_text(kSmallEvl, "inline");
  const auto d1 = fresh_dir("seed1");
  const auto d2 = fresh_dir("seed2");
  RunOptions o1, o2;
  o1.out_dir = d1.string();
  o2.out_dir = d2.string();
  o2.has_seed_override = true;
  o2.seed_override = 78;
  run_experiment(cfg, o1);
  run_experiment(cfg, o2);
  CHECK(slurp(d1 / "evl.csv") != slurp(d2 / "evl.csv"));
}

TEST_CASE("kernel export writes triplets, header and stationary density") {
  const auto dir = fresh_dir("kexp");
  auto cfg = ExperimentConfig::parse_text(R"(
[experiment]
map = doubling:2
noise = uniform:epsilon=0.25:boundary=wrap
seed = 5
grid_m = 64
scenario = markov
)",
                                          "inline");
  RunOptions opt;
  opt.out_dir = dir.string();
  CHECK(export_kernel(cfg, opt) == 0);
  const std::string kernel = slurp(dir / "kernel.csv");
  CHECK(kernel.rfind("i,j,value\n", 0) == 0);
  // 64 rows x 32 covered cells: reconstruct row sums from the triplets
  std::istringstream in(kernel);
  std::string line;
  std::getline(in, line);
  std::vector<double> row_sum(64, 0.0);
  long triplets = 0;
  while (std::getline(in, line)) {
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    row_sum[static_cast<std::size_t>(std::stol(line.substr(0, c1)))] +=
        std::stod(line.substr(c2 + 1));
    ++triplets;
  }
  CHECK(triplets == 64 * 32);
  for (double s : row_sum) CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  const std::string header = slurp(dir / "kernel_header.json");
  CHECK(header.find("\"map\": \"doubling:2\"") != std::string::npos);
  CHECK(header.find("seed") == std::string::npos);
  CHECK(slurp(dir / "stationary.csv").rfind("cell_midpoint,h\n", 0) == 0);
}

TEST_CASE("shipped configs parse and name known scenarios") {
  for (const char* name :
       {"markov_doubling.cfg", "decay_doubling.cfg", "decay_quadratic.cfg", "evl_doubling.cfg",
        "evl_oracle.cfg", "hts_doubling.cfg", "repp_doubling.cfg", "dprime_doubling.cfg"}) {
    const fs::path p = fs::path(PROJECT_CONFIG_DIR) / name;
    REQUIRE(fs::exists(p));
    const auto cfg = ExperimentConfig::parse_file(p.string());
    const std::string scenario = cfg.get_str("experiment", "scenario");
    CHECK((scenario == "markov" || scenario == "decay" || scenario == "evl" ||
           scenario == "hts" || scenario == "repp" || scenario == "dprime"));
    CHECK(cfg.get_u64("experiment", "seed") > 0);
  }
}

TEST_CASE("selftest battery passes") { CHECK(selftest(2) == 0); }

TEST_CASE("map id listing is populated") { CHECK(list_map_ids().size() == 4); }
