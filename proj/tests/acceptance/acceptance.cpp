// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: nbw_acceptance [--only N] [--out DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nbw/config.hpp"
#include "nbw/experiments.hpp"
#include "nbw/rng.hpp"
#include "nbw/runner.hpp"

using namespace nbw;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path g_out = "acceptance_out";

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

/// Minimal CSV reader for the artifacts: skips the hash line, no quoting needed.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error("missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
  double at(std::size_t r, const std::string& name) const { return std::stod(rows[r][col(name)]); }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

Csv read_csv(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  Csv csv;
  std::string line;
  std::getline(is, line);
  if (line.rfind("# config_hash=", 0) != 0) throw std::runtime_error("missing hash line in " + p.string());
  std::getline(is, line);
  csv.header = split(line);
  while (std::getline(is, line)) {
    if (!line.empty()) csv.rows.push_back(split(line));
  }
  return csv;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Runs a shipped config into g_out/<dir> and returns the summary.
RunSummary run_config(const std::string& name, const std::string& dir) {
  auto cfg = load_config(std::string(NBW_CONFIG_DIR) + "/" + name + ".json");
  const fs::path out = g_out / dir;
  fs::remove_all(out);
  cfg = apply_overrides(cfg, Overrides{std::nullopt, std::nullopt, out.string()});
  return run_experiment(cfg, 1);
}

/// Slope and centered R² of y = a·x.
std::pair<double, double> origin_fit(const std::vector<double>& x, const std::vector<double>& y) {
  double sxy = 0, sxx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
    my += y[i];
  }
  my /= static_cast<double>(y.size());
  const double a = sxy / sxx;
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ss_res += (y[i] - a * x[i]) * (y[i] - a * x[i]);
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  return {a, 1.0 - ss_res / ss_tot};
}

double chain_eigenvalue(std::size_t k, std::size_t n) {
  return 2 - 2 * std::cos(static_cast<double>(k) * std::numbers::pi / static_cast<double>(n + 1));
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const auto t0 = Clock::now();
  double worst = 0;
  bool counts = true;
  for (std::size_t n : {3u, 10u, 50u}) {
    const Mesh mesh(NRectangle::cube(1, Box1::from_lower({0.0}, static_cast<double>(n + 1))), 1,
                    Boundary::dirichlet);
    const auto H = assemble_laplacian(mesh);
    const auto ev = all_eigenvalues(H);
    if (ev.size() != n) return {false, "wrong eigenvalue count"};
    for (std::size_t k = 1; k <= n; ++k) worst = std::max(worst, std::abs(ev[k - 1] - chain_eigenvalue(k, n)));
    // Energies between and around the analytic eigenvalues.
    std::vector<double> probes{-1.0, 5.0};
    for (std::size_t k = 1; k < n; ++k) probes.push_back(0.5 * (chain_eigenvalue(k, n) + chain_eigenvalue(k + 1, n)));
    for (double E : probes) {
      std::size_t tally = 0;
      for (std::size_t k = 1; k <= n; ++k) tally += chain_eigenvalue(k, n) < E;
      if (count_below(H, E) != tally) counts = false;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && counts && secs < 1.0,
          "max |error| " + num(worst) + (counts ? ", counts exact" : ", count mismatch") + ", " + num(secs) + " s"};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  std::size_t failures = 0, failures_half = 0, points = 0;
  double worst = std::numeric_limits<double>::infinity();
  std::map<std::string, std::size_t> fails_by_profile;
  for (std::uint64_t k = 0; k < 200; ++k) {
    CounterRng rng(stream_key({static_cast<std::uint64_t>(StreamDomain::fuzz), 2, k}));
    const std::size_t d = 1 + rng.below(2);
    const std::size_t N = 1 + rng.below(3);
    const double ell = 0.05 + 0.95 * rng.uniform();
    const double delta = std::min(ell, 0.5);
    const double amplitude = (0.5 - delta) * rng.uniform();
    const auto layout = SiteLayout::crooked(d, amplitude, rng());
    const std::size_t kind = rng.below(3);
    const double sd = std::sqrt(static_cast<double>(d));
    const SingleSite profile = kind == 0   ? SingleSite::cube(ell, d)
                               : kind == 1 ? SingleSite::ball(ell, ell * sd / 2 + 0.2 * rng.uniform(), d)
                                           : SingleSite::tent(ell, ell / 2 + 0.3 * rng.uniform(), d);
    std::vector<Box1> factors;
    for (std::size_t i = 0; i < N; ++i) {
      RealPoint c(d);
      for (auto& x : c) x = static_cast<double>(static_cast<std::int64_t>(rng.below(5)) - 2);
      factors.push_back(Box1(c, static_cast<double>(2 + rng.below(2))));
    }
    const NRectangle rect(factors);
    // Uniform points over the rectangle plus points inside the comparison balls.
    std::vector<RealPoint> grid;
    for (int s = 0; s < 150; ++s) {
      RealPoint x;
      for (const auto& f : factors) {
        for (std::size_t a = 0; a < d; ++a) x.push_back(rng.uniform(f.lower(a), f.upper(a)));
      }
      grid.push_back(x);
    }
    std::vector<std::vector<IntPoint>> skel(N);
    for (std::size_t i = 0; i < N; ++i) skel[i] = layout.skeleton(factors[i]);
    for (int s = 0; s < 150; ++s) {
      RealPoint dir(N * d), x;
      double norm = 0;
      for (auto& c : dir) {
        c = rng.uniform(-1, 1);
        norm += c * c;
      }
      const double r = delta * 0.999 * rng.uniform() / std::sqrt(norm);
      for (std::size_t i = 0; i < N; ++i) {
        const auto y = layout.position(skel[i][rng.below(skel[i].size())]);
        for (std::size_t a = 0; a < d; ++a) x.push_back(y[a] + r * dir[i * d + a]);
      }
      grid.push_back(x);
    }
    points += grid.size();
    const PotentialSpec spec{profile, layout, Background{}, delta};
    const auto rep = check_lower_bound(spec, rect, grid);
    worst = std::min(worst, rep.worst_margin);
    if (!rep.pass) {
      ++failures;
      ++fails_by_profile[profile.kind_name()];
    }
    // Diagnostic: same configuration with the comparison radius inside the plateau.
    const PotentialSpec half{profile, layout, Background{}, std::min(delta, ell / 2)};
    if (!check_lower_bound(half, rect, grid).pass) ++failures_half;
  }
  const double secs = seconds_since(t0);
  std::string by;
  for (const auto& [k, v] : fails_by_profile) by += " " + k + "=" + std::to_string(v);
  return {failures == 0 && secs < 30.0,
          std::to_string(failures) + "/200 configurations with negative margin (worst " + num(worst) + ";" +
              (by.empty() ? " none" : by) + "), " + std::to_string(points) + " points; with delta<=ell/2: " +
              std::to_string(failures_half) + "/200; " + num(secs) + " s"};
}

Outcome criteria34(bool linearity) {
  static std::optional<Csv> agg, raw;
  if (!agg) {
    run_config("wegner1", "wegner1");
    agg = read_csv(g_out / "wegner1" / "aggregate.csv");
    raw = read_csv(g_out / "wegner1" / "raw.csv");
  }
  if (linearity) {
    std::vector<double> x, y;
    for (std::size_t r = 0; r < agg->rows.size(); ++r) {
      if (agg->at(r, "L") != 40) continue;
      x.push_back(agg->at(r, "window_hi") - agg->at(r, "window_lo"));
      y.push_back(agg->at(r, "mean_trace"));
    }
    const auto [slope, r2] = origin_fit(x, y);
    // Paired-seed monotonicity: per trial and L, traces never decrease as windows widen.
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, double>>> by_trial;
    for (const auto& row : raw->rows) {
      by_trial[{row[raw->col("trial")], row[raw->col("L")]}].push_back(
          {std::stod(row[raw->col("window_hi")]) - std::stod(row[raw->col("window_lo")]),
           std::stod(row[raw->col("trace")])});
    }
    std::size_t violations = 0;
    for (auto& [key, v] : by_trial) {
      std::sort(v.begin(), v.end());
      for (std::size_t i = 1; i < v.size(); ++i) violations += v[i].second < v[i - 1].second;
    }
    return {x.size() == 5 && r2 >= 0.98 && violations == 0,
            "L=40: R^2 " + num(r2) + ", empirical slope " + num(slope) + "; monotonicity violations " +
                std::to_string(violations) + " over " + std::to_string(by_trial.size()) + " trial/volume pairs"};
  }
  std::vector<double> per_volume;
  std::string detail = "E[Tr]/|L| at |I|=0.02:";
  for (std::size_t r = 0; r < agg->rows.size(); ++r) {
    const double w = agg->at(r, "window_hi") - agg->at(r, "window_lo");
    if (std::abs(w - 0.02) > 1e-9) continue;
    per_volume.push_back(agg->at(r, "mean_trace") / agg->at(r, "volume"));
    detail += " L=" + num(agg->at(r, "L")) + ":" + num(per_volume.back());
  }
  double mean = 0;
  for (double v : per_volume) mean += v;
  mean /= static_cast<double>(per_volume.size());
  double dev = 0;
  for (double v : per_volume) dev = std::max(dev, std::abs(v - mean) / mean);
  return {per_volume.size() == 3 && dev <= 0.15, detail + "; max deviation from mean " + num(100 * dev) + "%"};
}

Outcome criterion5() {
  // Exhaustive sumset oracle without disorder.
  SystemSpec s = default_system(1, 1, 2);
  s.disorder = DisorderModel(CouplingDistribution::degenerate(0.0));
  std::size_t mismatches = 0, probes = 0;
  std::string sizes;
  for (double L : {3.0, 12.0, 25.5}) {
    s.particles = 1;
    const auto one = all_eigenvalues(s.hamiltonian(s.cube(L), 0));
    sizes += (sizes.empty() ? "" : ",") + std::to_string(one.size());
    std::vector<double> sums;
    for (double a : one) {
      for (double b : one) sums.push_back(a + b);
    }
    std::sort(sums.begin(), sums.end());
    s.particles = 2;
    const auto H = s.hamiltonian(s.cube(L), 0);
    InertiaCounter counter(H);
    std::vector<double> energies{sums.front() - 1, sums.back() + 1};
    for (std::size_t i = 1; i < sums.size(); ++i) {
      if (sums[i] - sums[i - 1] > 1e-7) energies.push_back(0.5 * (sums[i] + sums[i - 1]));
    }
    const std::size_t stride = std::max<std::size_t>(1, energies.size() / 300);
    for (std::size_t i = 0; i < energies.size(); i += stride) {
      const double E = energies[i];
      const auto tally = static_cast<std::size_t>(std::upper_bound(sums.begin(), sums.end(), E) - sums.begin());
      ++probes;
      if (counter.count_at_most(E) != tally) ++mismatches;
    }
  }
  const auto run = run_config("ids_conv", "ids_conv");
  const double sup_i = run.summary["results"]["sup_independent"].get<double>();
  const double sup_s = run.summary["results"]["sup_shared"].get<double>();
  return {mismatches == 0 && sup_i <= 0.05,
          "sumset oracle n=" + sizes + ": " + std::to_string(mismatches) + "/" + std::to_string(probes) +
              " mismatches; L=12 sup discrepancy independent " + num(sup_i) + ", shared " + num(sup_s)};
}

Outcome criterion6() {
  run_config("lipschitz_uniform", "lipschitz_uniform");
  const auto atomic = run_config("lipschitz_atomic", "lipschitz_atomic");
  auto rows = [](const std::string& dir) {
    const auto csv = read_csv(g_out / dir / "aggregate.csv");
    std::vector<std::pair<double, double>> out;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) out.push_back({csv.at(r, "max_slope"), csv.at(r, "slope_se")});
    return out;
  };
  const auto u = rows("lipschitz_uniform");
  const auto a = rows("lipschitz_atomic");
  bool flat = true;
  std::string du = "uniform slopes";
  for (std::size_t i = 0; i < u.size(); ++i) {
    du += " " + num(u[i].first);
    if (i > 0 && u[i].first - u[i - 1].first > 1.96 * std::hypot(u[i].second, u[i - 1].second)) flat = false;
  }
  const bool grows = a.back().first - a.front().first > 1.96 * std::hypot(a.back().second, a.front().second);
  bool warned = false;
  for (const auto& w : atomic.warnings) warned = warned || w.find("hypothesis violation") != std::string::npos;
  std::string da = "atomic slopes";
  for (const auto& r : a) da += " " + num(r.first);
  return {flat && grows && warned, du + (flat ? " (no growth)" : " (GROWTH)") + "; " + da +
                                       (grows ? " (grows)" : " (no growth)") +
                                       (warned ? ", warning present" : ", warning MISSING")};
}

Outcome criterion7() {
  bool ok = true;
  std::string detail;
  for (const char* name : {"ucp_n1", "ucp_n2"}) {
    run_config(name, name);
    const auto csv = read_csv(g_out / name / "aggregate.csv");
    std::vector<double> mins;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) mins.push_back(csv.at(r, "min_ratio"));
    const bool positive = std::all_of(mins.begin(), mins.end(), [](double m) { return m > 0 && std::isfinite(m); });
    const double ratio = mins.back() / mins.front();
    ok = ok && positive && ratio >= 0.5;
    detail += std::string(detail.empty() ? "" : "; ") + name + " minima";
    for (double m : mins) detail += " " + num(m);
    detail += " (last/first " + num(ratio) + ")";
  }
  return {ok, detail};
}

Outcome criterion8() {
  const auto main = run_config("wegner2", "wegner2");
  const auto& sep = main.summary["results"]["separation"];
  const bool witness = sep["separated"].get<bool>() && sep["witness"] == json::array({2}) &&
                       sep["condition"].get<int>() == 2;
  const auto csv = read_csv(g_out / "wegner2" / "aggregate.csv");
  std::vector<double> x, y;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    x.push_back(csv.at(r, "eps"));
    y.push_back(csv.at(r, "p_hat"));
  }
  const auto [slope, r2] = origin_fit(x, y);
  const bool range = x.size() == 8 && x.front() == 0.002 && x.back() == 0.05;

  const auto control = run_config("wegner2_disjoint", "wegner2_disjoint");
  const auto& ev = control.summary["results"]["events"];
  const double product = ev["product_A_B"].get<double>();
  const double lo = ev["AB"]["ci"][0].get<double>();
  const double hi = ev["AB"]["ci"][1].get<double>();
  const bool product_law = product >= lo && product <= hi;
  return {witness && range && r2 >= 0.95 && product_law,
          std::string("witness J=") + sep["witness"].dump() + " (condition " + std::to_string(sep["condition"].get<int>()) +
              "); P(dist<eps) R^2 " + num(r2) + "; control P(A)P(B)=" + num(product) + " in Wilson CI [" + num(lo) +
              ", " + num(hi) + "]: " + (product_law ? "yes" : "no")};
}

Outcome criterion9() {
  const auto t0 = Clock::now();
  double worst = 0;
  for (double B : {0.5, 1.0, 2.0, 10.0}) {
    for (std::size_t m = 1; m <= 10; ++m) {
      const double closed = s_sum_closed(B, m);
      worst = std::max(worst, std::abs(s_sum(m, s_sum_sequence(B, m)) - closed) / std::abs(closed));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-14 && secs < 1.0, "max relative error " + num(worst) + ", " + num(secs) + " s"};
}

Outcome criterion10() {
  const auto t0 = Clock::now();
  struct Cell {
    double m, M;
  };
  const std::vector<Cell> cells{{1.0, 2.0}, {0.5, 2.0}, {1.0, 3.0}, {0.8, 1.5}};
  std::size_t total = 0, passed = 0;
  std::string first_failure;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    DeloneCheckParams p;
    p.m = cells[c].m;
    p.M = cells[c].M;
    p.box_side = 6 * cells[c].M;
    p.dims = {1, 2, 3};
    p.extra_per_cell = c % 2 ? 1.0 : 0.0;
    for (const auto& row : delone_pipeline_check(p, 25, 100 + c)) {
      ++total;
      if (row.ok()) ++passed;
      else if (first_failure.empty()) first_failure = "; first failure: " + row.message;
    }
  }
  const double secs = seconds_since(t0);
  return {passed == total && total == 100 && secs < 30.0,
          std::to_string(passed) + "/" + std::to_string(total) + " sets over d in {1,2,3} and 4 (m,M) pairs, " +
              num(secs) + " s" + first_failure};
}

Outcome criterion11() {
  std::size_t same = 0;
  std::string detail;
  const std::vector<std::string> names{"wegner1", "wegner2", "wegner2_disjoint", "lipschitz_uniform", "delone"};
  for (const auto& name : names) {
    run_config(name, "repeat_a/" + name);
    run_config(name, "repeat_b/" + name);
    const std::string a = slurp(g_out / "repeat_a" / name / "aggregate.csv");
    const std::string b = slurp(g_out / "repeat_b" / name / "aggregate.csv");
    const bool eq = !a.empty() && a == b;
    same += eq;
    detail += std::string(detail.empty() ? "" : ", ") + name + (eq ? " identical" : " DIFFERS");
  }
  return {same == names.size(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) only = std::stoi(argv[++i]);
    else if (a == "--out" && i + 1 < argc) g_out = argv[++i];
    else {
      std::cerr << "usage: nbw_acceptance [--only N] [--out DIR]\n";
      return 2;
    }
  }
  fs::create_directories(g_out);

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, criterion1},  {2, criterion2},  {3, [] { return criteria34(true); }}, {4, [] { return criteria34(false); }},
      {5, criterion5},  {6, criterion6},  {7, criterion7},                      {8, criterion8},
      {9, criterion9},  {10, criterion10}, {11, criterion11}};

  int failed = 0;
  for (const auto& [id, fn] : criteria) {
    if (only != 0 && only != id) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << " [" << num(seconds_since(t0))
              << " s]" << std::endl;
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
