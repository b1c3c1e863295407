#include "nbw/runner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "nbw/delone.hpp"
#include "nbw/rng.hpp"

namespace nbw {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace {

std::string fmt(double x) { return format_number(x); }
std::string fmt(std::size_t x) { return std::to_string(x); }
std::string fmt(bool x) { return x ? "1" : "0"; }

/// JSON cannot hold infinities; they are written as strings.
json jnum(double x) {
  if (std::isfinite(x)) return x;
  return format_number(x);
}

json interval_json(const Interval& i) { return json::array({jnum(i.lo), jnum(i.hi)}); }

json fit_json(const WegnerFit& f) {
  json r = json::array();
  for (double x : f.residuals) r.push_back(jnum(x));
  return {{"label", f.label}, {"slope_empirical", jnum(f.slope)}, {"r_squared", jnum(f.r_squared)}, {"residuals", r}};
}

void append_unique(std::vector<std::string>& out, const std::vector<std::string>& in) {
  for (const auto& w : in) {
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  }
}

std::vector<double> parse_row(const std::string& line, std::size_t& trial) {
  std::vector<double> values;
  std::size_t pos = 0;
  bool first = true;
  while (pos <= line.size()) {
    std::size_t end = line.find(',', pos);
    if (end == std::string::npos) end = line.size();
    const std::string cell = line.substr(pos, end - pos);
    if (first) {
      trial = std::stoull(cell);
      first = false;
    } else {
      double v = 0.0;
      const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (r.ec != std::errc() || r.ptr != cell.data() + cell.size()) {
        throw std::runtime_error("bad checkpoint cell '" + cell + "'");
      }
      values.push_back(v);
    }
    pos = end + 1;
  }
  return values;
}

struct Artifacts {
  Table raw;
  Table aggregate;
  std::vector<std::pair<std::string, Table>> plots;
  json results;
  std::vector<std::string> warnings;
  std::vector<std::string> report;
  bool ok = true;
};

Table plot_table() { return Table{{"series", "x", "y", "ci_lo", "ci_hi"}, {}}; }

void plot_row(Table& t, const std::string& series, double x, double y, double lo, double hi) {
  t.rows.push_back({series, fmt(x), fmt(y), fmt(lo), fmt(hi)});
}

std::string window_label(const SpectrumWindow& w) { return "[" + fmt(w.lo) + "," + fmt(w.hi) + "]"; }

// ---------------------------------------------------------------------------

Artifacts do_wegner1(const ExperimentConfig& cfg, const RunOptions& run) {
  const auto& ex = cfg.experiment;
  const auto res = wegner_one_volume(cfg.system, ex.windows, ex.volumes, run);
  Artifacts a;
  a.warnings = res.warnings;
  const std::size_t nw = ex.windows.size();
  a.raw.header = {"trial", "L", "window_lo", "window_hi", "trace"};
  for (std::size_t t = 0; t < res.records.size(); ++t) {
    for (std::size_t v = 0; v < ex.volumes.size(); ++v) {
      for (std::size_t w = 0; w < nw; ++w) {
        a.raw.rows.push_back({fmt(t), fmt(ex.volumes[v]), fmt(ex.windows[w].lo), fmt(ex.windows[w].hi),
                              fmt(res.records[t][v * nw + w])});
      }
    }
  }
  a.aggregate.header = {"L",      "volume", "dimension", "window_lo", "window_hi",  "levy",    "trials",
                        "hits",   "p_hat",  "p_lo",      "p_hi",      "mean_trace", "se_trace"};
  Table by_levy = plot_table();
  Table by_volume = plot_table();
  json rows = json::array();
  for (const auto& r : res.rows) {
    a.aggregate.rows.push_back({fmt(r.L), fmt(r.volume), fmt(r.dimension), fmt(r.window.lo), fmt(r.window.hi),
                                fmt(r.levy), fmt(r.trials), fmt(r.hits), fmt(r.p_hat), fmt(r.p_ci.lo),
                                fmt(r.p_ci.hi), fmt(r.mean_trace), fmt(r.se_trace)});
    const double lo = r.mean_trace - 1.96 * r.se_trace;
    const double hi = r.mean_trace + 1.96 * r.se_trace;
    plot_row(by_levy, "L=" + fmt(r.L), r.levy, r.mean_trace, lo, hi);
    plot_row(by_volume, "I=" + window_label(r.window), r.volume, r.mean_trace, lo, hi);
  }
  a.plots.emplace_back("plot_trace_vs_levy.csv", std::move(by_levy));
  a.plots.emplace_back("plot_trace_vs_volume.csv", std::move(by_volume));
  json fv = json::array(), fw = json::array();
  for (const auto& f : res.fits_by_volume) fv.push_back(fit_json(f));
  for (const auto& f : res.fits_by_window) fw.push_back(fit_json(f));
  a.results = {{"fits_by_volume", fv}, {"fits_by_window", fw}, {"global_fit", fit_json(res.global_fit)}};
  a.report.push_back("Expected trace against s(|I|) at fixed L, fit through the origin (slope is empirical):");
  for (const auto& f : res.fits_by_volume) {
    a.report.push_back("  " + f.label + ": slope " + fmt(f.slope) + ", R^2 " + fmt(f.r_squared));
  }
  a.report.push_back("Expected trace against |Lambda| at fixed window:");
  for (const auto& f : res.fits_by_window) {
    a.report.push_back("  " + f.label + ": slope " + fmt(f.slope) + ", R^2 " + fmt(f.r_squared));
  }
  a.report.push_back("Empirical Wegner constant (global fit): " + fmt(res.global_fit.slope) + ", R^2 " +
                     fmt(res.global_fit.r_squared));
  return a;
}

Artifacts do_wegner2(const ExperimentConfig& cfg, const RunOptions& run) {
  const auto& tv = *cfg.experiment.two_volume;
  const auto res = wegner_two_volume(cfg.system, tv, run);
  Artifacts a;
  a.warnings = res.warnings;
  a.raw.header = {"trial", "distance", "hit_A", "hit_B"};
  for (std::size_t t = 0; t < res.records.size(); ++t) {
    const auto& r = res.records[t];
    a.raw.rows.push_back({fmt(t), fmt(r[0]), fmt(r[1]), fmt(r[2])});
  }
  a.aggregate.header = {"eps", "trials", "hits", "p_hat", "p_lo", "p_hi"};
  Table plot = plot_table();
  for (const auto& r : res.rows) {
    a.aggregate.rows.push_back({fmt(r.eps), fmt(res.trials), fmt(r.hits), fmt(r.p_hat), fmt(r.p_ci.lo),
                                fmt(r.p_ci.hi)});
    plot_row(plot, "P(dist<eps)", r.eps, r.p_hat, r.p_ci.lo, r.p_ci.hi);
  }
  a.plots.emplace_back("plot_distance.csv", std::move(plot));
  json witness = json::array();
  for (auto j : res.separation.witness) witness.push_back(j + 1);
  const double n = static_cast<double>(res.trials);
  a.results = {{"separation",
                {{"separated", res.separation.separated},
                 {"witness", witness},
                 {"condition", static_cast<int>(res.separation.condition)},
                 {"witness_distance", jnum(res.separation.witness_distance)}}},
               {"fit", fit_json(res.fit)},
               {"trials", res.trials},
               {"events",
                {{"A", {{"hits", res.hits_A}, {"p_hat", res.hits_A / n}, {"ci", interval_json(res.ci_A)}}},
                 {"B", {{"hits", res.hits_B}, {"p_hat", res.hits_B / n}, {"ci", interval_json(res.ci_B)}}},
                 {"AB", {{"hits", res.hits_AB}, {"p_hat", res.hits_AB / n}, {"ci", interval_json(res.ci_AB)}}},
                 {"product_A_B", (res.hits_A / n) * (res.hits_B / n)}}}};
  std::string w;
  for (auto j : res.separation.witness) w += (w.empty() ? "" : ",") + std::to_string(j + 1);
  a.report.push_back("R-separation witness J = {" + w + "} (condition " +
                     std::to_string(static_cast<int>(res.separation.condition)) + ")");
  a.report.push_back("P(dist < eps) against eps, fit through the origin: slope " + fmt(res.fit.slope) +
                     " (empirical), R^2 " + fmt(res.fit.r_squared));
  a.report.push_back("Window events: P(A)=" + fmt(res.hits_A / n) + " P(B)=" + fmt(res.hits_B / n) +
                     " P(AB)=" + fmt(res.hits_AB / n) + " in [" + fmt(res.ci_AB.lo) + ", " + fmt(res.ci_AB.hi) +
                     "], P(A)P(B)=" + fmt((res.hits_A / n) * (res.hits_B / n)));
  return a;
}

void ids_tables(const IdsResult& ids, const std::vector<double>& volumes, Artifacts& a, Table& agg) {
  const std::size_t ne = ids.curves.empty() ? 0 : ids.curves.front().energies.size();
  a.raw.header = {"trial", "L", "E", "count"};
  for (std::size_t t = 0; t < ids.records.size(); ++t) {
    for (std::size_t v = 0; v < volumes.size(); ++v) {
      for (std::size_t k = 0; k < ne; ++k) {
        a.raw.rows.push_back(
            {fmt(t), fmt(volumes[v]), fmt(ids.curves[v].energies[k]), fmt(ids.records[t][v * ne + k])});
      }
    }
  }
  agg.header = {"L", "volume", "dimension", "E", "ids", "ids_se", "dos"};
  Table plot = plot_table();
  for (const auto& c : ids.curves) {
    for (std::size_t k = 0; k < c.energies.size(); ++k) {
      agg.rows.push_back({fmt(c.L), fmt(c.volume), fmt(c.dimension), fmt(c.energies[k]), fmt(c.ids[k]),
                          fmt(c.ids_se[k]), fmt(c.dos[k])});
      plot_row(plot, "L=" + fmt(c.L), c.energies[k], c.ids[k], c.ids[k] - 1.96 * c.ids_se[k],
               c.ids[k] + 1.96 * c.ids_se[k]);
    }
  }
  a.plots.emplace_back("plot_ids.csv", std::move(plot));
}

Artifacts do_ids(const ExperimentConfig& cfg, const RunOptions& run) {
  const auto& ex = cfg.experiment;
  const auto res = ids_estimate(cfg.system, *ex.grid, ex.volumes, run);
  Artifacts a;
  a.warnings = res.warnings;
  ids_tables(res, ex.volumes, a, a.aggregate);
  json curves = json::array();
  for (const auto& c : res.curves) {
    curves.push_back({{"L", c.L}, {"volume", c.volume}, {"dimension", c.dimension}, {"top", jnum(c.ids.back())}});
  }
  a.results = {{"curves", curves}};
  a.report.push_back("IDS estimated on " + std::to_string(ex.grid->size()) + " grid energies for " +
                     std::to_string(ex.volumes.size()) + " volumes");
  return a;
}

Artifacts do_lipschitz(const ExperimentConfig& cfg, const RunOptions& run) {
  const auto& ex = cfg.experiment;
  const auto res = ids_lipschitz_check(cfg.system, *ex.grid, ex.volumes, run);
  Artifacts a;
  a.warnings = res.warnings;
  Table curves;
  ids_tables(res.ids, ex.volumes, a, curves);
  a.plots.emplace_back("ids_curves.csv", std::move(curves));
  a.aggregate.header = {"L", "max_slope", "slope_se", "argmax_energy"};
  Table plot = plot_table();
  json rows = json::array();
  for (const auto& r : res.rows) {
    a.aggregate.rows.push_back({fmt(r.L), fmt(r.max_slope), fmt(r.slope_se), fmt(r.argmax_energy)});
    plot_row(plot, "max_slope", r.L, r.max_slope, r.max_slope - 1.96 * r.slope_se, r.max_slope + 1.96 * r.slope_se);
    rows.push_back({{"L", r.L}, {"max_slope", r.max_slope}, {"slope_se", r.slope_se}, {"argmax_energy", r.argmax_energy}});
  }
  a.plots.emplace_back("plot_max_slope.csv", std::move(plot));
  a.results = {{"rows", rows}, {"non_growing", res.non_growing}};
  a.report.push_back(std::string("Max finite-difference IDS slope ") +
                     (res.non_growing ? "does not grow" : "grows") + " with L beyond 1.96 combined SE");
  for (const auto& r : res.rows) {
    a.report.push_back("  L=" + fmt(r.L) + ": " + fmt(r.max_slope) + " +- " + fmt(r.slope_se) + " at E=" +
                       fmt(r.argmax_energy));
  }
  return a;
}

Artifacts do_ids_conv(const ExperimentConfig& cfg, const RunOptions& run) {
  const auto& ex = cfg.experiment;
  SystemSpec one = cfg.system;
  one.particles = 1;
  const auto res = ids_convolution_check(one, ex.conv_particles, ex.conv_L, *ex.grid, run);
  Artifacts a;
  a.warnings = res.warnings;
  const std::size_t ne = res.energies.size();
  a.raw.header = {"trial", "E", "count_one_body", "count_shared", "count_independent"};
  for (std::size_t t = 0; t < res.records.size(); ++t) {
    for (std::size_t k = 0; k < ne; ++k) {
      const auto& r = res.records[t];
      a.raw.rows.push_back({fmt(t), fmt(res.energies[k]), fmt(r[k]), fmt(r[ne + k]), fmt(r[2 * ne + k])});
    }
  }
  a.aggregate.header = {"E", "one_body_ids", "one_body_dos", "convolved", "direct_shared", "direct_independent"};
  Table plot = plot_table();
  for (std::size_t k = 0; k < ne; ++k) {
    a.aggregate.rows.push_back({fmt(res.energies[k]), fmt(res.one_body_ids[k]), fmt(res.one_body_dos[k]),
                                fmt(res.convolved[k]), fmt(res.direct_shared[k]), fmt(res.direct_independent[k])});
    const double e = res.energies[k];
    plot_row(plot, "convolved", e, res.convolved[k], res.convolved[k], res.convolved[k]);
    plot_row(plot, "direct_shared", e, res.direct_shared[k], res.direct_shared[k], res.direct_shared[k]);
    plot_row(plot, "direct_independent", e, res.direct_independent[k], res.direct_independent[k],
             res.direct_independent[k]);
  }
  a.plots.emplace_back("plot_convolution.csv", std::move(plot));
  a.results = {{"sup_shared", res.sup_shared},
               {"l1_shared", res.l1_shared},
               {"sup_independent", res.sup_independent},
               {"l1_independent", res.l1_independent}};
  a.report.push_back("Discrepancy between the direct N-body IDS and the convolution:");
  a.report.push_back("  independent fields: sup " + fmt(res.sup_independent) + ", L1 " + fmt(res.l1_independent));
  a.report.push_back("  shared field:       sup " + fmt(res.sup_shared) + ", L1 " + fmt(res.l1_shared));
  return a;
}

Artifacts do_ucp(const ExperimentConfig& cfg, const RunOptions& run) {
  const auto& ex = cfg.experiment;
  const auto res = ucp_experiment(cfg.system, ex.windows, ex.volumes, ex.M_D, run);
  Artifacts a;
  a.warnings = res.warnings;
  const std::size_t nw = ex.windows.size();
  a.raw.header = {"trial", "L", "window_lo", "window_hi", "ratio"};
  for (std::size_t t = 0; t < res.records.size(); ++t) {
    for (std::size_t v = 0; v < ex.volumes.size(); ++v) {
      for (std::size_t w = 0; w < nw; ++w) {
        a.raw.rows.push_back({fmt(t), fmt(ex.volumes[v]), fmt(ex.windows[w].lo), fmt(ex.windows[w].hi),
                              fmt(res.records[t][v * nw + w])});
      }
    }
  }
  a.aggregate.header = {"L", "dimension", "min_ratio", "mean_ratio", "nonempty", "samples", "sub_threshold"};
  Table plot = plot_table();
  json rows = json::array();
  for (const auto& r : res.rows) {
    a.aggregate.rows.push_back({fmt(r.L), fmt(r.dimension), fmt(r.min_ratio), fmt(r.mean_ratio), fmt(r.nonempty),
                                fmt(r.samples), fmt(r.sub_threshold)});
    plot_row(plot, "min_ratio", r.L, r.min_ratio, r.min_ratio, r.mean_ratio);
    rows.push_back({{"L", r.L}, {"min_ratio", jnum(r.min_ratio)}, {"mean_ratio", jnum(r.mean_ratio)},
                    {"sub_threshold", r.sub_threshold}});
  }
  a.plots.emplace_back("plot_ucp.csv", std::move(plot));
  a.results = {{"rows", rows}, {"K", res.K}, {"gamma_formula", jnum(res.gamma)}};
  a.report.push_back("Unique continuation ratio lambda_min(P W P) per L (K=" + fmt(res.K) +
                     ", formula gamma^2=" + fmt(res.gamma * res.gamma) + "):");
  for (const auto& r : res.rows) {
    a.report.push_back("  L=" + fmt(r.L) + ": min " + fmt(r.min_ratio) + ", mean " + fmt(r.mean_ratio) + " over " +
                       fmt(r.nonempty) + " nonempty slices");
  }
  return a;
}

Artifacts do_delone(const ExperimentConfig& cfg) {
  const auto& ex = cfg.experiment;
  const auto rows = delone_pipeline_check(ex.delone, ex.trials, cfg.system.seed);
  Artifacts a;
  a.aggregate.header = {"index", "dim", "seed", "points", "gamma1", "gamma2", "verified", "partition",
                        "gamma1_spacing", "gamma1_delone", "message"};
  std::size_t passed = 0;
  for (const auto& r : rows) {
    a.aggregate.rows.push_back({fmt(r.index), fmt(r.dim), std::to_string(r.seed), fmt(r.points), fmt(r.gamma1),
                                fmt(r.gamma2), fmt(r.verified), fmt(r.partition), fmt(r.gamma1_spacing),
                                fmt(r.gamma1_delone), r.message});
    if (r.ok()) ++passed;
    else a.warnings.push_back("delone set " + std::to_string(r.index) + " failed: " + r.message);
  }
  a.ok = passed == rows.size();
  a.results = {{"sets", rows.size()}, {"passed", passed}};
  a.report.push_back("Delone pipeline: " + std::to_string(passed) + "/" + std::to_string(rows.size()) +
                     " sets passed every check");
  return a;
}

Artifacts do_selftest(std::size_t workers) {
  Artifacts a;
  const auto checks = run_selftest(workers);
  a.aggregate.header = {"check", "ok", "detail"};
  json list = json::array();
  std::size_t passed = 0;
  for (const auto& c : checks) {
    a.aggregate.rows.push_back({c.name, fmt(c.ok), c.detail});
    list.push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    a.report.push_back(std::string(c.ok ? "  ok    " : "  FAIL  ") + c.name + ": " + c.detail);
    if (c.ok) ++passed;
  }
  a.ok = passed == checks.size();
  a.results = {{"checks", list}, {"passed", passed}, {"total", checks.size()}};
  a.report.insert(a.report.begin(),
                  "Self-test: " + std::to_string(passed) + "/" + std::to_string(checks.size()) + " checks passed");
  return a;
}

// ---------------------------------------------------------------------------
// Self-test helpers

/// Regular grid of points over the rectangle with `per_axis` points per axis.
std::vector<RealPoint> rect_grid(const NRectangle& rect, std::size_t per_axis) {
  std::vector<double> lo, hi;
  for (const auto& f : rect.factors) {
    for (std::size_t a = 0; a < f.dim(); ++a) {
      lo.push_back(f.lower(a));
      hi.push_back(f.upper(a));
    }
  }
  const std::size_t D = lo.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < D; ++i) total *= per_axis;
  std::vector<RealPoint> pts;
  pts.reserve(total);
  for (std::size_t k = 0; k < total; ++k) {
    RealPoint x(D);
    std::size_t r = k;
    for (std::size_t i = 0; i < D; ++i) {
      const std::size_t c = r % per_axis;
      r /= per_axis;
      x[i] = lo[i] + (hi[i] - lo[i]) * (static_cast<double>(c) + 0.5) / static_cast<double>(per_axis);
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

template <class F>
SelfTestCheck check(const std::string& name, F&& fn) {
  SelfTestCheck c{name, false, ""};
  try {
    c.detail = fn(c.ok);
  } catch (const std::exception& e) {
    c.ok = false;
    c.detail = std::string("exception: ") + e.what();
  }
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------

void write_csv(const std::string& path, const std::string& hash, const Table& table) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  os << "# config_hash=" << hash << "\n";
  for (std::size_t i = 0; i < table.header.size(); ++i) os << (i ? "," : "") << table.header[i];
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << quote(row[i]);
    os << "\n";
  }
}

FileTrialStore::FileTrialStore(std::string path, std::string hash) : path_(std::move(path)), hash_(std::move(hash)) {
  std::ifstream is(path_);
  std::string line;
  if (!is || !std::getline(is, line) || line != "# config_hash=" + hash_) {
    std::ofstream os(path_, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write checkpoint '" + path_ + "'");
    os << "# config_hash=" << hash_ << "\n";
    return;
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      std::size_t trial = 0;
      auto rec = parse_row(line, trial);
      records_[trial] = std::move(rec);
    } catch (const std::exception&) {
      break;  // a torn final line from an interrupted write
    }
  }
}

std::optional<std::vector<double>> FileTrialStore::load(std::size_t trial) {
  auto it = records_.find(trial);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void FileTrialStore::save(std::size_t trial, const std::vector<double>& record) {
  std::ofstream os(path_, std::ios::app);
  os << trial;
  for (double x : record) os << ',' << format_number(x);
  os << '\n';
  os.flush();
}

// ---------------------------------------------------------------------------

std::vector<SelfTestCheck> run_selftest(std::size_t workers) {
  std::vector<SelfTestCheck> out;

  out.push_back(check("laplacian-oracle", [](bool& ok) {
    double worst = 0.0;
    bool counts = true;
    for (std::size_t n : {3u, 10u, 50u}) {
      const Mesh mesh(NRectangle::cube(1, Box1::from_lower({0.0}, static_cast<double>(n + 1))), 1,
                      Boundary::dirichlet);
      const auto H = assemble_laplacian(mesh);
      const auto ev = all_eigenvalues(H);
      for (std::size_t k = 1; k <= n; ++k) {
        const double exact = 2 - 2 * std::cos(static_cast<double>(k) * std::numbers::pi / static_cast<double>(n + 1));
        worst = std::max(worst, std::abs(ev[k - 1] - exact));
      }
      for (double E : {0.5, 1.3, 2.7, 3.5}) {
        std::size_t tally = 0;
        for (std::size_t k = 1; k <= n; ++k) {
          if (2 - 2 * std::cos(static_cast<double>(k) * std::numbers::pi / static_cast<double>(n + 1)) <= E) ++tally;
        }
        if (count_below(H, E) != tally) counts = false;
      }
    }
    ok = worst <= 1e-10 && counts;
    return "max error " + format_number(worst) + (counts ? ", counts exact" : ", count mismatch");
  }));

  out.push_back(check("inertia-vs-dense", [](bool& ok) {
    SystemSpec s = default_system(1, 2, 2);
    const auto H = s.hamiltonian(s.cube(4), 3);
    const auto ev = all_eigenvalues(H);
    InertiaCounter counter(H);
    ok = true;
    for (double E = -1.0; E < 30.0; E += 0.73) {
      const auto dense = static_cast<std::size_t>(std::upper_bound(ev.begin(), ev.end(), E) - ev.begin());
      if (counter.count_at_most(E) != dense) ok = false;
    }
    return "dimension " + std::to_string(H.dimension());
  }));

  out.push_back(check("lower-bound", [](bool& ok) {
    double worst = std::numeric_limits<double>::infinity();
    ok = true;
    for (std::uint64_t k = 0; k < 12; ++k) {
      CounterRng rng(stream_key({static_cast<std::uint64_t>(StreamDomain::fuzz), 99, k}));
      const std::size_t d = 1 + k % 2;
      const std::size_t N = 1 + (k / 2) % 2;
      const double ell = 0.2 + 0.8 * to_unit_open(rng());
      PotentialSpec pot{SingleSite::cube(ell, d), SiteLayout::crooked(d, 0.5 * (1 - ell), rng()), Background{},
                        default_delta(ell)};
      std::vector<Box1> f;
      for (std::size_t i = 0; i < N; ++i) f.push_back(Box1(RealPoint(d, static_cast<double>(i)), 3.0));
      const auto rep = check_lower_bound(pot, NRectangle(f), rect_grid(NRectangle(f), N * d > 2 ? 7 : 13));
      worst = std::min(worst, rep.worst_margin);
      if (!rep.pass) ok = false;
    }
    return "worst margin " + format_number(worst);
  }));

  out.push_back(check("s-sum-closed-form", [](bool& ok) {
    double worst = 0.0;
    for (double B : {0.5, 1.0, 2.0, 10.0}) {
      for (std::size_t m = 1; m <= 10; ++m) {
        const double closed = s_sum_closed(B, m);
        worst = std::max(worst, std::abs(s_sum(m, s_sum_sequence(B, m)) - closed) / std::abs(closed));
      }
    }
    ok = worst <= 1e-14;
    return "max relative error " + format_number(worst);
  }));

  out.push_back(check("delone-pipeline", [](bool& ok) {
    const auto rows = delone_pipeline_check(DeloneCheckParams{}, 6, 5);
    std::size_t good = 0;
    std::string msg;
    for (const auto& r : rows) {
      if (r.ok()) ++good;
      else if (msg.empty()) msg = "; " + r.message;
    }
    ok = good == rows.size();
    return std::to_string(good) + "/" + std::to_string(rows.size()) + " sets" + msg;
  }));

  out.push_back(check("field-extension", [](bool& ok) {
    const DisorderModel model(CouplingDistribution::uniform(0, 1));
    const auto small = sample_field(model, lattice_sites(Box1({0.0, 0.0}, 4)), 11, 2);
    const auto big = sample_field(model, lattice_sites(Box1({0.0, 0.0}, 10)), 11, 2);
    ok = true;
    for (std::size_t i = 0; i < small.sites.size(); ++i) {
      const auto it = std::find(big.sites.begin(), big.sites.end(), small.sites[i]);
      if (it == big.sites.end() || big.values[static_cast<std::size_t>(it - big.sites.begin())] != small.values[i]) {
        ok = false;
      }
    }
    return std::to_string(small.sites.size()) + " shared sites compared";
  }));

  out.push_back(check("sumset-convolution", [](bool& ok) {
    // With zero disorder the two-particle spectrum is the sumset of the one-particle one.
    SystemSpec s = default_system(1, 1, 2);
    s.disorder = DisorderModel(CouplingDistribution::degenerate(0.0));
    const auto one = all_eigenvalues(s.hamiltonian(s.cube(5), 0));
    s.particles = 2;
    const auto H2 = s.hamiltonian(s.cube(5), 0);
    InertiaCounter counter(H2);
    ok = true;
    for (double E = 0.0; E < 35.0; E += 0.37) {
      std::size_t tally = 0;
      for (double a : one) {
        for (double b : one) {
          if (a + b <= E) ++tally;
        }
      }
      if (counter.count_at_most(E) != tally) ok = false;
    }
    return "dimension " + std::to_string(H2.dimension());
  }));

  out.push_back(check("separation-witness", [](bool& ok) {
    const NRectangle A({Box1::from_lower({0.0}, 1), Box1::from_lower({0.0}, 1)});
    const NRectangle B({Box1::from_lower({0.0}, 1), Box1::from_lower({6.0}, 1)});
    const auto r = r_separated(A, B, 1.0);
    ok = r.separated && r.witness == std::vector<std::size_t>{1};
    std::string w;
    for (auto j : r.witness) w += std::to_string(j + 1) + " ";
    return "witness { " + w + "}";
  }));

  out.push_back(check("wilson-interval", [](bool& ok) {
    const auto ci = wilson_interval(5, 10);
    ok = ci.lo < 0.5 && ci.hi > 0.5 && std::abs((ci.lo + ci.hi) - 1.0) < 1e-12;
    return "[" + format_number(ci.lo) + ", " + format_number(ci.hi) + "]";
  }));

  out.push_back(check("worker-determinism", [workers](bool& ok) {
    SystemSpec s = default_system(1, 1, 2);
    const std::vector<SpectrumWindow> ws{{0.5, 0.7}};
    const auto a = wegner_one_volume(s, ws, {10.0}, RunOptions{40, 1, nullptr});
    const auto b = wegner_one_volume(s, ws, {10.0}, RunOptions{40, std::max<std::size_t>(workers, 2), nullptr});
    ok = a.records == b.records;
    return "40 trials, 1 vs " + std::to_string(std::max<std::size_t>(workers, 2)) + " workers";
  }));

  return out;
}

// ---------------------------------------------------------------------------

RunSummary run_experiment(const ExperimentConfig& cfg, std::size_t workers, std::ostream* log) {
  const fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  const std::string hash = cfg.hash;
  const auto kind = cfg.experiment.kind;

  std::unique_ptr<FileTrialStore> store;
  const bool checkpointed = kind != ExperimentKind::selftest && kind != ExperimentKind::delone_check;
  if (checkpointed) {
    store = std::make_unique<FileTrialStore>((dir / "checkpoint.csv").string(), hash);
    if (log && store->loaded() > 0) *log << "resuming: " << store->loaded() << " trials loaded from checkpoint\n";
  }
  RunOptions run{cfg.experiment.trials, std::max<std::size_t>(workers, 1), store.get()};

  if (log) *log << "running " << to_string(kind) << " (" << cfg.experiment.trials << " trials, " << run.workers
                << " workers)\n";
  Artifacts a;
  switch (kind) {
    case ExperimentKind::wegner1: a = do_wegner1(cfg, run); break;
    case ExperimentKind::wegner2: a = do_wegner2(cfg, run); break;
    case ExperimentKind::ids: a = do_ids(cfg, run); break;
    case ExperimentKind::ids_conv: a = do_ids_conv(cfg, run); break;
    case ExperimentKind::lipschitz: a = do_lipschitz(cfg, run); break;
    case ExperimentKind::ucp: a = do_ucp(cfg, run); break;
    case ExperimentKind::delone_check: a = do_delone(cfg); break;
    case ExperimentKind::selftest: a = do_selftest(run.workers); break;
  }

  RunSummary out;
  append_unique(out.warnings, a.warnings);
  out.ok = a.ok;

  auto emit = [&](const std::string& name, const Table& t) {
    const std::string path = (dir / name).string();
    write_csv(path, hash, t);
    out.files.push_back(path);
  };
  if (cfg.output.raw && !a.raw.header.empty()) emit("raw.csv", a.raw);
  emit("aggregate.csv", a.aggregate);
  if (cfg.output.plot) {
    for (const auto& [name, t] : a.plots) emit(name, t);
  }

  out.summary = {{"schema_version", kSchemaVersion},
                 {"config_hash", hash},
                 {"config", cfg.document},
                 {"experiment", to_string(kind)},
                 {"results", a.results},
                 {"warnings", out.warnings}};
  const std::string summary_path = (dir / "summary.json").string();
  {
    std::ofstream os(summary_path, std::ios::binary);
    os << out.summary.dump(2) << "\n";
  }
  out.files.push_back(summary_path);

  const std::string warn_path = (dir / "warnings.json").string();
  {
    std::ofstream os(warn_path, std::ios::binary);
    os << json{{"config_hash", hash}, {"warnings", out.warnings}}.dump(2) << "\n";
  }
  out.files.push_back(warn_path);

  const std::string report_path = (dir / "report.txt").string();
  {
    std::ofstream os(report_path, std::ios::binary);
    os << "experiment: " << to_string(kind) << "\nconfig_hash: " << hash << "\ntrials: " << cfg.experiment.trials
       << "\n\n";
    for (const auto& line : a.report) os << line << "\n";
    os << "\nwarnings (" << out.warnings.size() << "):\n";
    for (const auto& w : out.warnings) os << "  - " << w << "\n";
    if (out.warnings.empty()) os << "  none\n";
  }
  out.files.push_back(report_path);

  if (store) fs::remove(store->path());
  if (log) {
    for (const auto& line : a.report) *log << line << "\n";
    for (const auto& w : out.warnings) *log << "warning: " << w << "\n";
  }
  return out;
}

std::string describe(const ExperimentConfig& cfg) {
  std::ostringstream os;
  const auto& s = cfg.system;
  const auto& ex = cfg.experiment;
  os << "experiment: " << to_string(ex.kind) << "\n";
  os << "config_hash: " << cfg.hash << "\n";
  os << "system: d=" << s.dim << " N=" << s.particles << " p=" << s.points_per_unit
     << " boundary=" << to_string(s.boundary) << "\n";
  os << "trials: " << ex.trials << "\n";

  std::vector<std::string> warnings;
  auto rect_line = [&](const std::string& label, const NRectangle& rect) {
    const std::size_t n = mesh_dimension(rect, s.points_per_unit, s.boundary);
    os << "  " << label << ": matrix dimension " << n << ", method "
       << (n <= s.solver.dense_threshold ? "dense" : "shift-invert Lanczos") << "\n";
    if (n > s.assembly.max_dimension) {
      warnings.push_back("refusal: " + label + " needs dimension " + std::to_string(n) +
                         " above the cap system.max_dimension=" + std::to_string(s.assembly.max_dimension));
    }
  };
  auto threshold = [&](double L) {
    if (L <= s.side_threshold()) {
      warnings.push_back("sub-threshold volume: L=" + format_number(L) + " is not above 72*sqrt(Nd)=" +
                         format_number(s.side_threshold()));
    }
  };

  switch (ex.kind) {
    case ExperimentKind::wegner1:
    case ExperimentKind::ids:
    case ExperimentKind::lipschitz:
    case ExperimentKind::ucp:
      for (double L : ex.volumes) {
        rect_line("L=" + format_number(L), s.cube(L));
        threshold(L);
      }
      if (!ex.windows.empty()) os << "windows: " << ex.windows.size() << "\n";
      if (ex.grid) os << "energy grid: " << ex.grid->size() << " points, step " << format_number(ex.grid->step) << "\n";
      if (ex.kind == ExperimentKind::lipschitz && !s.disorder.base.has_bounded_density()) {
        warnings.push_back("hypothesis violation: coupling law '" + s.disorder.base.kind() +
                           "' has no bounded density; this run is a contrast case");
      }
      break;
    case ExperimentKind::ids_conv: {
      SystemSpec one = s;
      one.particles = 1;
      rect_line("one-body L=" + format_number(ex.conv_L), one.cube(ex.conv_L));
      rect_line("N-body L=" + format_number(ex.conv_L), s.cube(ex.conv_L));
      os << "energy grid: " << ex.grid->size() << " points\n";
      threshold(ex.conv_L);
      break;
    }
    case ExperimentKind::wegner2: {
      const auto& tv = *ex.two_volume;
      rect_line("A", tv.A);
      rect_line("B", tv.B);
      const auto sep = r_separated(tv.A, tv.B, tv.R);
      if (sep.separated) {
        std::string w;
        for (auto j : sep.witness) w += (w.empty() ? "" : ",") + std::to_string(j + 1);
        os << "R-separation witness J = {" << w << "} (condition " << static_cast<int>(sep.condition)
           << ", distance " << format_number(sep.witness_distance) << ")\n";
      } else {
        warnings.push_back("A and B are not " + format_number(tv.R) + "-separated; run would be refused");
      }
      for (const auto& rect : {tv.A, tv.B}) {
        for (const auto& f : rect.factors) threshold(f.side);
      }
      break;
    }
    case ExperimentKind::delone_check:
      os << "delone sets: " << ex.trials << " (m=" << format_number(ex.delone.m) << ", M=" << format_number(ex.delone.M)
         << ", box side " << format_number(ex.delone.box_side) << ")\n";
      break;
    case ExperimentKind::selftest:
      os << "self-test invariant suite\n";
      break;
  }
  std::vector<std::string> unique;
  append_unique(unique, warnings);
  os << "warnings (" << unique.size() << "):\n";
  for (const auto& w : unique) os << "  - " << w << "\n";
  return os.str();
}

}  // namespace nbw
