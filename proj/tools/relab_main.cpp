// relab: config-driven runner for the perturbed-map rare event laboratory.
//
//   relab run <config> [--seed S] [--threads N] [--out DIR]
//   relab kernel-export <config> [--out DIR]
//   relab list-maps
//   relab selftest
//
// Exit codes: 0 pass, 1 criterion failure, 2 usage error.

#include <CLI11.hpp>

#include <cstdio>
#include <thread>

#include "rarelaw/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"rare event laws for randomly perturbed transitive maps"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;

  auto* run = app.add_subcommand("run", "run one experiment scenario");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });
  run->add_option("--threads", threads, "worker threads (does not change results)");
  run->add_option("--out", out_dir, "artifact directory");

  auto* kexp = app.add_subcommand("kernel-export", "write kernel and stationary density CSVs");
  kexp->add_option("config", config_path, "config file")->required();
  kexp->add_option("--out", out_dir, "artifact directory");

  auto* lm = app.add_subcommand("list-maps", "list map ids usable in configs");
  auto* st = app.add_subcommand("selftest", "run the built-in quick checks");
  st->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (lm->parsed()) {
      for (const auto& id : rarelaw::list_map_ids()) std::printf("%s\n", id.c_str());
      return 0;
    }
    if (st->parsed()) return rarelaw::selftest(threads);

    const auto cfg = rarelaw::ExperimentConfig::parse_file(config_path);
    rarelaw::RunOptions opt;
    opt.has_seed_override = seed_set;
    opt.seed_override = seed;
    opt.threads = threads;
    opt.out_dir = out_dir;

    if (kexp->parsed()) return rarelaw::export_kernel(cfg, opt);

    const auto rr = rarelaw::run_experiment(cfg, opt);
    for (const auto& c : rr.criteria)
      std::printf("%-28s %-4s value=%.6g threshold=%.6g %s\n", c.name.c_str(),
                  c.pass ? "pass" : "FAIL", c.value, c.threshold, c.detail.c_str());
    if (!rr.error.empty()) std::fprintf(stderr, "error: %s\n", rr.error.c_str());
    std::printf("scenario=%s pass=%s wall=%.2fs out=%s\n", rr.scenario.c_str(),
                rr.pass ? "true" : "false", rr.wall_time_s, out_dir.c_str());
    return rr.exit_code;
  } catch (const rarelaw::ConfigError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
