// Command-line driver: scenario configs in, coverings / classifications /
// extension grids / reports out. Exit code 0 iff all enabled checks pass.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "holex/report.hpp"
#include "holex/runner.hpp"

namespace fs = std::filesystem;
using namespace holex;

namespace {

struct GlobalOpts {
  std::string config;
  std::string builtin;
  std::string out = "holex-out";
  std::int64_t seed = -1;
  int workers = 0;
};

ScenarioConfig load_config(const GlobalOpts& g) {
  ScenarioConfig cfg;
  if (!g.config.empty())
    cfg = load_scenario(g.config);
  else if (!g.builtin.empty())
    cfg = builtin_scenario(g.builtin);
  else
    throw HolexError("no config: pass --config PATH or --builtin NAME");
  if (g.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(g.seed);
    cfg.cover.seed = cfg.seed;
  }
  if (g.workers > 0) cfg.workers = g.workers;
  return cfg;
}

void require_artifact(const std::string& out, const std::string& name) {
  if (!fs::exists(fs::path(out) / name))
    throw HolexError("missing prior artifact '" + name + "' in " + out +
                     " (run the earlier stage first)");
}

void load_covering_artifact(Pipeline& p, const std::string& out) {
  require_artifact(out, "covering.txt");
  std::ifstream f(fs::path(out) / "covering.txt");
  p.covering = read_covering(f);
}

int finish(const Report& rep, const GlobalOpts& g, const std::string& name) {
  fs::create_directories(g.out);
  rep.write((fs::path(g.out) / (name + "_report.json")).string());
  std::cout << rep.summary();
  return rep.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"holex: holomorphic extension from singular hypersurfaces"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config, "scenario config (JSON)");
  app.add_option("--builtin", g.builtin,
                 "built-in scenario: smooth-hyperplane | cusp-boundary");
  app.add_option("--seed", g.seed, "override the config seed");
  app.add_option("--workers", g.workers, "worker threads");
  app.add_option("--out", g.out, "artifact directory");

  auto* cover = app.add_subcommand("cover", "build and check the covering");
  auto* classify =
      app.add_subcommand("classify", "classify the covering balls against X");
  auto* extend =
      app.add_subcommand("extend", "build the glued extension and check it");
  auto* kernel = app.add_subcommand(
      "kernel-check", "Hefer/support/kernel identities and calibration");
  auto* verify =
      app.add_subcommand("verify", "re-derive the covering and compare hashes");
  auto* run = app.add_subcommand("run", "full pipeline with report");

  CLI11_PARSE(app, argc, argv);

  try {
    const ScenarioConfig cfg = load_config(g);
    if (run->parsed()) {
      const Report rep = run_scenario(cfg, g.out);
      std::cout << rep.summary();
      return rep.pass() ? 0 : 1;
    }

    Report rep(hash_hex(cfg.to_canonical_json()), cfg.seed);
    Pipeline p = make_pipeline(cfg);
    if (cover->parsed()) {
      stage_cover(p, g.out, rep);
      return finish(rep, g, "cover");
    }
    if (classify->parsed()) {
      load_covering_artifact(p, g.out);
      stage_classify(p, g.out, rep);
      return finish(rep, g, "classify");
    }
    if (extend->parsed()) {
      load_covering_artifact(p, g.out);
      require_artifact(g.out, "classify.csv");
      stage_classify(p, g.out, rep);  // deterministic, consistent with the csv
      stage_extend(p, g.out, rep);
      return finish(rep, g, "extend");
    }
    if (kernel->parsed()) {
      stage_kernel_check(p, g.out, rep);
      return finish(rep, g, "kernel");
    }
    if (verify->parsed()) {
      stage_verify(p, g.out, rep);
      return finish(rep, g, "verify");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
