#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "nbw/config.hpp"
#include "nbw/runner.hpp"

namespace {

/// --workers, else NBW_WORKERS, else 1.
std::size_t resolve_workers(std::size_t flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("NBW_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "ignoring invalid NBW_WORKERS='" << env << "'\n";
  }
  return 1;
}

nbw::ExperimentConfig load(const std::string& path, const nbw::Overrides& o) {
  auto cfg = nbw::load_config(path);
  if (o.trials || o.seed || o.out) cfg = nbw::apply_overrides(cfg, o);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"N-body random Schroedinger operator experiments"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 0;

  auto add_common = [&](CLI::App* sub, bool need_config) {
    auto* c = sub->add_option("--config", config, "experiment config (JSON)");
    if (need_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory override");
    sub->add_option("--trials", trials, "trial count override")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "disorder seed override");
    sub->add_option("--workers", workers, "worker threads (default: NBW_WORKERS or 1)");
  };
  auto* run = app.add_subcommand("run", "run an experiment and write its artifacts");
  add_common(run, true);
  auto* desc = app.add_subcommand("describe", "print the plan of an experiment without solving");
  add_common(desc, true);
  auto* self = app.add_subcommand("selftest", "run the invariant suite");
  add_common(self, false);
  app.add_subcommand("version", "print the version");

  CLI11_PARSE(app, argc, argv);

  nbw::Overrides o;
  if (trials > 0) o.trials = trials;
  if (!out.empty()) o.out = out;
  for (auto* sub : {run, desc, self}) {
    if (sub->parsed() && sub->count("--seed") > 0) o.seed = seed;
  }

  try {
    if (app.got_subcommand("version")) {
      std::cout << "nbw " << nbw::kVersion << " (config schema " << nbw::kSchemaVersion << ")\n";
      return 0;
    }
    if (*desc) {
      std::cout << nbw::describe(load(config, o));
      return 0;
    }
    if (*self && config.empty()) {
      const auto checks = nbw::run_selftest(resolve_workers(workers));
      bool ok = true;
      for (const auto& c : checks) {
        std::cout << (c.ok ? "ok    " : "FAIL  ") << c.name << ": " << c.detail << "\n";
        ok = ok && c.ok;
      }
      return ok ? 0 : 1;
    }
    const auto cfg = load(config, o);
    const auto summary = nbw::run_experiment(cfg, resolve_workers(workers), &std::cout);
    for (const auto& f : summary.files) std::cout << "wrote " << f << "\n";
    return summary.ok ? 0 : 1;
  } catch (const nbw::ConfigError& e) {
    std::cerr << "config error at " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
