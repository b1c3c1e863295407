#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "nbw/config.hpp"
#include "nbw/runner.hpp"

using namespace nbw;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_wegner(const std::string& out) {
  return json::parse(R"({
    "schema_version": 1,
    "system": { "dim": 1, "particles": 1, "points_per_unit": 2 },
    "disorder": { "distribution": { "kind": "uniform" }, "seed": 5 },
    "experiment": { "kind": "wegner1", "trials": 40, "volumes": [8, 12],
                    "windows": { "center": 0.6, "widths": [0.1, 0.2] } },
    "output": { "directory": ")" + out + R"(" }
  })");
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string error_path(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("nbw_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("validation reports the offending key path") {
  json d = small_wegner("x");
  d["potential"]["delta"] = 0.9;
  try {
    parse_config(d);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "potential.delta");
    CHECK(std::string(e.what()).find("(0, 1/2]") != std::string::npos);
  }

  json u = small_wegner("x");
  u["system"]["colour"] = 1;
  CHECK(error_path(u) == "system.colour");

  json w = small_wegner("x");
  w["system"]["E0"] = 0.5;
  CHECK(error_path(w).rfind("experiment.windows", 0) == 0);

  json r = json::parse(R"({"schema_version": 1, "system": {"particles": 2},
    "experiment": {"kind": "wegner2", "A": [{"lower":[0],"side":2},{"lower":[0],"side":2}],
                   "B": [{"lower":[0],"side":2},{"lower":[9],"side":2}], "windows": [[1,2]], "eps": [0.1]}})");
  CHECK(error_path(r) == "experiment.R");

  json v = small_wegner("x");
  v["schema_version"] = 2;
  CHECK(error_path(v) == "schema_version");

  json l = small_wegner("x");
  l["potential"]["ell"] = 0.4;
  l["potential"]["delta"] = 0.3;
  CHECK(error_path(l) == "potential.delta");
}

TEST_CASE("config hash ignores the output block and round-trips through the summary") {
  const auto a = parse_config(small_wegner("one"));
  const auto b = parse_config(small_wegner("two"));
  CHECK(a.hash == b.hash);
  json c = small_wegner("one");
  c["disorder"]["seed"] = 6;
  CHECK(parse_config(c).hash != a.hash);
  const auto again = parse_config(a.document);
  CHECK(again.hash == a.hash);
  CHECK(again.document == a.document);
  const auto o = apply_overrides(a, Overrides{std::size_t{7}, std::uint64_t{9}, std::string("z")});
  CHECK(o.experiment.trials == 7);
  CHECK(o.system.seed == 9);
  CHECK(o.output.directory == "z");
  CHECK(o.hash != a.hash);
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"selftest", "wegner1", "wegner2", "wegner2_disjoint", "ids_conv", "lipschitz_uniform",
                           "lipschitz_atomic", "ucp_n1", "ucp_n2", "delone"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_config(std::string(NBW_CONFIG_DIR) + "/" + name + ".json"));
  }
  CHECK_THROWS_AS(load_config(std::string(NBW_CONFIG_DIR) + "/bad_delta.json"), ConfigError);
}

TEST_CASE("describe reports dimensions, witnesses and refusals") {
  json d = small_wegner("x");
  d["system"]["particles"] = 2;
  d["experiment"]["volumes"] = {10};
  const auto text = describe(parse_config(d));
  CHECK(text.find("matrix dimension 361") != std::string::npos);
  CHECK(text.find("sub-threshold volume: L=10") != std::string::npos);

  d["system"]["max_dimension"] = 100;
  CHECK(describe(parse_config(d)).find("refusal") != std::string::npos);

  const auto two = describe(load_config(std::string(NBW_CONFIG_DIR) + "/wegner2.json"));
  CHECK(two.find("witness J = {2}") != std::string::npos);
}

TEST_CASE("number formatting round-trips") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("runs write hash-tagged artifacts and are byte-reproducible") {
  const auto dir = scratch("repro");
  const auto cfg = parse_config(small_wegner(dir.string()));
  const auto s1 = run_experiment(cfg, 1);
  const std::string agg1 = slurp(dir / "aggregate.csv");
  CHECK(agg1.rfind("# config_hash=" + cfg.hash + "\n", 0) == 0);
  for (const char* f : {"raw.csv", "summary.json", "warnings.json", "report.txt", "plot_trace_vs_levy.csv"}) {
    CAPTURE(f);
    CHECK(fs::exists(dir / f));
    CHECK(slurp(dir / f).find(cfg.hash) != std::string::npos);
  }
  CHECK_FALSE(fs::exists(dir / "checkpoint.csv"));
  const auto summary = json::parse(slurp(dir / "summary.json"));
  CHECK(parse_config(summary["config"]).hash == cfg.hash);
  CHECK(summary["warnings"].size() == 2);
  CHECK(slurp(dir / "report.txt").find("sub-threshold volume") != std::string::npos);

  run_experiment(cfg, 2);
  CHECK(slurp(dir / "aggregate.csv") == agg1);
}

TEST_CASE("resumed ensembles match uninterrupted runs") {
  const auto dir = scratch("resume");
  const auto cfg = parse_config(small_wegner(dir.string()));
  run_experiment(cfg, 1);
  const std::string full = slurp(dir / "aggregate.csv");
  const std::string raw = slurp(dir / "raw.csv");

  // Recreate a partial checkpoint holding the first 15 trials.
  const auto res = wegner_one_volume(cfg.system, cfg.experiment.windows, cfg.experiment.volumes,
                                     RunOptions{15, 1, nullptr});
  {
    FileTrialStore store((dir / "checkpoint.csv").string(), cfg.hash);
    for (std::size_t t = 0; t < 15; ++t) store.save(t, res.records[t]);
  }
  {
    FileTrialStore reopened((dir / "checkpoint.csv").string(), cfg.hash);
    CHECK(reopened.loaded() == 15);
    FileTrialStore other((dir / "checkpoint.csv").string(), "different");
    CHECK(other.loaded() == 0);
  }
  {
    FileTrialStore store((dir / "checkpoint.csv").string(), cfg.hash);
    for (std::size_t t = 0; t < 15; ++t) store.save(t, res.records[t]);
  }
  std::ostringstream log;
  run_experiment(cfg, 1, &log);
  CHECK(log.str().find("resuming: 15 trials") != std::string::npos);
  CHECK(slurp(dir / "aggregate.csv") == full);
  CHECK(slurp(dir / "raw.csv") == raw);
}

TEST_CASE("selftest and delone-check runs") {
  const auto dir = scratch("selftest");
  json d = json::parse(R"({"schema_version": 1, "experiment": {"kind": "selftest"}})");
  d["output"]["directory"] = dir.string();
  const auto s = run_experiment(parse_config(d), 1);
  CHECK(s.ok);
  CHECK(s.summary["results"]["passed"] == s.summary["results"]["total"]);

  const auto ddir = scratch("delone");
  json e = json::parse(R"({"schema_version": 1, "experiment": {"kind": "delone-check", "trials": 6}})");
  e["output"]["directory"] = ddir.string();
  CHECK(run_experiment(parse_config(e), 1).ok);
}

TEST_CASE("every selftest check passes") {
  for (const auto& c : run_selftest(2)) {
    CAPTURE(c.name);
    CAPTURE(c.detail);
    CHECK(c.ok);
  }
}
