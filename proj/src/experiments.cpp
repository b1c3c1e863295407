#include "nbw/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "nbw/delone.hpp"
#include "nbw/rng.hpp"

namespace nbw {

NRectangle SystemSpec::cube(double L) const {
  return NRectangle::cube(particles, Box1(RealPoint(dim, 0.0), L));
}

Mesh SystemSpec::mesh(const NRectangle& rect) const { return Mesh(rect, points_per_unit, boundary); }

DisorderField SystemSpec::field(const NRectangle& rect, std::uint64_t trial) const {
  return sample_field(disorder, potential.required_sites(rect), seed, trial);
}

HamiltonianMatrix SystemSpec::hamiltonian(const NRectangle& rect, std::uint64_t trial) const {
  return assemble(mesh(rect), potential, interaction, field(rect, trial), assembly);
}

SystemSpec default_system(std::size_t dim, std::size_t particles, int points_per_unit) {
  PotentialSpec pot{SingleSite::cube(1.0, dim), SiteLayout::regular(dim), Background{}, default_delta(1.0)};
  SystemSpec s(std::move(pot), DisorderModel(CouplingDistribution::uniform(0.0, 1.0)));
  s.dim = dim;
  s.particles = particles;
  s.points_per_unit = points_per_unit;
  return s;
}

std::vector<std::vector<double>> run_trials(const RunOptions& options,
                                            const std::function<std::vector<double>(std::size_t)>& fn) {
  std::vector<std::vector<double>> out(options.trials);
  std::vector<std::size_t> todo;
  for (std::size_t t = 0; t < options.trials; ++t) {
    if (options.store) {
      if (auto rec = options.store->load(t)) {
        out[t] = std::move(*rec);
        continue;
      }
    }
    todo.push_back(t);
  }

  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= todo.size()) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (failure) return;
      }
      try {
        std::vector<double> rec = fn(todo[k]);
        std::lock_guard<std::mutex> lock(mu);
        if (options.store) options.store->save(todo[k], rec);
        out[todo[k]] = std::move(rec);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(options.workers, todo.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

namespace {

std::string format_L(double L) {
  std::ostringstream os;
  os << L;
  return os.str();
}

void threshold_warning(const SystemSpec& system, double L, std::vector<std::string>& warnings) {
  const double thr = system.side_threshold();
  if (L <= thr) {
    std::ostringstream os;
    os << "sub-threshold volume: L=" << L << " is not above 72*sqrt(Nd)=" << thr
       << "; scaling trends are measured but the bound's hypothesis is not met";
    warnings.push_back(os.str());
  }
}

WegnerFit make_fit(std::string label, const std::vector<double>& x, const std::vector<double>& y) {
  WegnerFit f;
  f.label = std::move(label);
  bool any = false;
  for (double v : x) any = any || v != 0.0;
  if (x.empty() || !any) return f;
  const LineFit lf = fit_through_origin(x, y);
  f.slope = lf.slope;
  f.r_squared = lf.r_squared;
  f.residuals = lf.residuals;
  return f;
}

// Sorted eigenvalues; dense when affordable, otherwise inertia at the grid.
std::vector<double> grid_counts(const HamiltonianMatrix& H, const std::vector<double>& energies,
                                const SolverOptions& solver) {
  if (H.dimension() <= solver.dense_threshold) {
    return counts_on_grid(all_eigenvalues(H), energies, tie_tolerance(H));
  }
  InertiaCounter counter(H);
  std::vector<double> out;
  out.reserve(energies.size());
  for (double E : energies) out.push_back(static_cast<double>(counter.count_at_most(E)));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

WegnerOneVolumeResult wegner_one_volume(const SystemSpec& system, const std::vector<SpectrumWindow>& windows,
                                        const std::vector<double>& volumes, const RunOptions& run) {
  if (windows.empty() || volumes.empty()) throw std::invalid_argument("wegner: need windows and volumes");
  for (const auto& w : windows) {
    if (system.E0 && w.hi > *system.E0) throw std::invalid_argument("wegner: window above E0");
  }
  const std::size_t nw = windows.size();
  const std::size_t nv = volumes.size();

  WegnerOneVolumeResult res;
  res.records = run_trials(run, [&](std::size_t trial) {
    std::vector<double> rec;
    rec.reserve(nv * nw);
    for (double L : volumes) {
      const HamiltonianMatrix H = system.hamiltonian(system.cube(L), trial);
      InertiaCounter counter(H);
      for (const auto& w : windows) rec.push_back(static_cast<double>(counter.count_in(w)));
    }
    return rec;
  });

  for (std::size_t v = 0; v < nv; ++v) {
    const NRectangle rect = system.cube(volumes[v]);
    threshold_warning(system, volumes[v], res.warnings);
    for (std::size_t w = 0; w < nw; ++w) {
      std::vector<double> tr;
      tr.reserve(run.trials);
      std::size_t hits = 0;
      for (const auto& rec : res.records) {
        const double x = rec.at(v * nw + w);
        tr.push_back(x);
        if (x > 0) ++hits;
      }
      const MeanStats ms = mean_stats(tr);
      WegnerRow row;
      row.L = volumes[v];
      row.volume = rect.volume();
      row.dimension = mesh_dimension(rect, system.points_per_unit, system.boundary);
      row.window = windows[w];
      row.levy = levy_concentration(system.disorder, windows[w].width());
      row.trials = run.trials;
      row.hits = hits;
      row.p_hat = run.trials ? static_cast<double>(hits) / static_cast<double>(run.trials) : 0.0;
      row.p_ci = wilson_interval(hits, run.trials);
      row.mean_trace = ms.mean;
      row.se_trace = ms.std_error;
      res.rows.push_back(row);
    }
  }

  std::vector<double> gx, gy;
  for (std::size_t v = 0; v < nv; ++v) {
    std::vector<double> x, y;
    for (std::size_t w = 0; w < nw; ++w) {
      const WegnerRow& r = res.rows[v * nw + w];
      x.push_back(r.levy);
      y.push_back(r.mean_trace);
      gx.push_back(r.levy * r.volume);
      gy.push_back(r.mean_trace);
    }
    res.fits_by_volume.push_back(make_fit("L=" + format_L(volumes[v]), x, y));
  }
  for (std::size_t w = 0; w < nw; ++w) {
    std::vector<double> x, y;
    for (std::size_t v = 0; v < nv; ++v) {
      const WegnerRow& r = res.rows[v * nw + w];
      x.push_back(r.volume);
      y.push_back(r.mean_trace);
    }
    std::ostringstream os;
    os << "I=[" << windows[w].lo << "," << windows[w].hi << "]";
    res.fits_by_window.push_back(make_fit(os.str(), x, y));
  }
  res.global_fit = make_fit("empirical Wegner constant", gx, gy);
  return res;
}

// ---------------------------------------------------------------------------

double min_pair_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t j = 0;
  for (double x : a) {
    while (j < b.size() && b[j] < x) ++j;
    if (j < b.size()) best = std::min(best, b[j] - x);
    if (j > 0) best = std::min(best, x - b[j - 1]);
  }
  return best;
}

TwoVolumeResult wegner_two_volume(const SystemSpec& system, const TwoVolumeSpec& spec, const RunOptions& run) {
  TwoVolumeResult res;
  res.separation = r_separated(spec.A, spec.B, spec.R);
  if (!res.separation.separated) {
    throw std::invalid_argument("two-volume experiment: the rectangles are not R-separated for R=" +
                                format_L(spec.R));
  }
  if (spec.R < system.potential.profile.support_radius()) {
    res.warnings.push_back("R is smaller than the support radius of the single-site profile");
  }
  if (system.E0 && spec.window.hi > *system.E0) throw std::invalid_argument("two-volume: window above E0");
  for (const auto* rect : {&spec.A, &spec.B}) {
    for (const auto& f : rect->factors) threshold_warning(system, f.side, res.warnings);
  }

  const Mesh meshA = system.mesh(spec.A);
  const Mesh meshB = system.mesh(spec.B);
  std::vector<IntPoint> sitesA = system.potential.required_sites(spec.A);
  std::vector<IntPoint> sitesB = system.potential.required_sites(spec.B);
  std::vector<IntPoint> all = sitesA;
  all.insert(all.end(), sitesB.begin(), sitesB.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  const std::uint64_t seedB = spec.policy == FieldPolicy::shared ? system.seed : stream_key({system.seed, 0xB});

  auto window_values = [&](const HamiltonianMatrix& H) {
    return eigen_window(H, spec.window, system.solver).eigenvalues;
  };

  res.records = run_trials(run, [&](std::size_t trial) {
    HamiltonianMatrix HA, HB;
    if (spec.policy == FieldPolicy::shared) {
      // One field over the union of sites; shared sites see identical values.
      const DisorderField f = sample_field(system.disorder, all, system.seed, trial);
      HA = assemble(meshA, system.potential, system.interaction, f, system.assembly);
      HB = assemble(meshB, system.potential, system.interaction, f, system.assembly);
    } else {
      const DisorderField fA = sample_field(system.disorder, sitesA, system.seed, trial);
      const DisorderField fB = sample_field(system.disorder, sitesB, seedB, trial);
      HA = assemble(meshA, system.potential, system.interaction, fA, system.assembly);
      HB = assemble(meshB, system.potential, system.interaction, fB, system.assembly);
    }
    const std::vector<double> a = window_values(HA);
    const std::vector<double> b = window_values(HB);
    return std::vector<double>{min_pair_distance(a, b), a.empty() ? 0.0 : 1.0, b.empty() ? 0.0 : 1.0};
  });

  res.trials = run.trials;
  for (const auto& rec : res.records) {
    const bool ha = rec[1] > 0, hb = rec[2] > 0;
    res.hits_A += ha;
    res.hits_B += hb;
    res.hits_AB += ha && hb;
  }
  res.ci_A = wilson_interval(res.hits_A, run.trials);
  res.ci_B = wilson_interval(res.hits_B, run.trials);
  res.ci_AB = wilson_interval(res.hits_AB, run.trials);

  std::vector<double> x, y;
  for (double eps : spec.eps) {
    TwoVolumeRow row;
    row.eps = eps;
    for (const auto& rec : res.records) row.hits += rec[0] < eps;
    row.p_hat = run.trials ? static_cast<double>(row.hits) / static_cast<double>(run.trials) : 0.0;
    row.p_ci = wilson_interval(row.hits, run.trials);
    res.rows.push_back(row);
    x.push_back(eps);
    y.push_back(row.p_hat);
  }
  res.fit = make_fit("P(dist < eps) vs eps", x, y);
  return res;
}

// ---------------------------------------------------------------------------

EnergyGrid EnergyGrid::covering(double lo, double hi, double step) {
  if (!(step > 0.0) || !(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("energy grid needs step > 0 and lo <= hi");
  }
  EnergyGrid g;
  g.step = step;
  g.first = static_cast<std::int64_t>(std::floor(lo / step + 1e-9));
  g.last = static_cast<std::int64_t>(std::ceil(hi / step - 1e-9));
  if (g.last < g.first) g.last = g.first;
  return g;
}

std::vector<double> EnergyGrid::energies() const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = at(k);
  return out;
}

std::vector<double> counts_on_grid(const std::vector<double>& sorted_eigenvalues, const std::vector<double>& energies,
                                   double tau) {
  std::vector<double> out;
  out.reserve(energies.size());
  for (double E : energies) {
    const auto it = std::upper_bound(sorted_eigenvalues.begin(), sorted_eigenvalues.end(), E + tau);
    out.push_back(static_cast<double>(it - sorted_eigenvalues.begin()));
  }
  return out;
}

std::vector<double> increments(const std::vector<double>& F) {
  std::vector<double> nu(F.size());
  for (std::size_t k = 0; k < F.size(); ++k) nu[k] = k == 0 ? F[0] : F[k] - F[k - 1];
  return nu;
}

std::vector<double> convolve_ids(const std::vector<double>& F, const std::vector<double>& nu, std::int64_t first) {
  if (F.size() != nu.size()) throw std::invalid_argument("convolution needs F and nu on one grid");
  const auto K = static_cast<std::int64_t>(F.size());
  std::vector<double> out(F.size());
  for (std::int64_t k = 0; k < K; ++k) {
    CompensatedSum s;
    for (std::int64_t m = 0; m < K; ++m) {
      if (nu[static_cast<std::size_t>(m)] == 0.0) continue;
      // E_k - E_m = (k - m)·step sits at grid index k - m - first.
      const std::int64_t i = k - m - first;
      if (i < 0) continue;
      const double f = F[static_cast<std::size_t>(std::min(i, K - 1))];
      s.add(f * nu[static_cast<std::size_t>(m)]);
    }
    out[static_cast<std::size_t>(k)] = s.value();
  }
  return out;
}

IdsResult ids_estimate(const SystemSpec& system, const EnergyGrid& grid, const std::vector<double>& volumes,
                       const RunOptions& run) {
  if (volumes.empty()) throw std::invalid_argument("ids: need at least one volume");
  const std::vector<double> energies = grid.energies();
  const std::size_t ne = energies.size();

  IdsResult res;
  res.records = run_trials(run, [&](std::size_t trial) {
    std::vector<double> rec;
    rec.reserve(volumes.size() * ne);
    for (double L : volumes) {
      const HamiltonianMatrix H = system.hamiltonian(system.cube(L), trial);
      const auto c = grid_counts(H, energies, system.solver);
      rec.insert(rec.end(), c.begin(), c.end());
    }
    return rec;
  });

  for (std::size_t v = 0; v < volumes.size(); ++v) {
    const NRectangle rect = system.cube(volumes[v]);
    IdsCurve c;
    c.L = volumes[v];
    c.volume = rect.volume();
    c.dimension = mesh_dimension(rect, system.points_per_unit, system.boundary);
    c.energies = energies;
    std::vector<double> col(res.records.size());
    for (std::size_t k = 0; k < ne; ++k) {
      for (std::size_t t = 0; t < res.records.size(); ++t) col[t] = res.records[t][v * ne + k] / c.volume;
      const MeanStats ms = mean_stats(col);
      c.ids.push_back(ms.mean);
      c.ids_se.push_back(ms.std_error);
    }
    c.dos = increments(c.ids);
    if (!c.ids.empty() && c.ids.back() * c.volume < static_cast<double>(c.dimension) - 0.5) {
      res.warnings.push_back("energy grid ends below the top of the spectrum for L=" + format_L(c.L));
    }
    res.curves.push_back(std::move(c));
  }
  return res;
}

ConvolutionResult ids_convolution_check(const SystemSpec& one_body, std::size_t particles, double L,
                                        const EnergyGrid& grid, const RunOptions& run) {
  if (!one_body.interaction.is_none()) {
    throw std::invalid_argument("convolution identity holds for non-interacting systems only (interaction must be none)");
  }
  if (particles < 1) throw std::invalid_argument("convolution check needs at least one particle");
  SystemSpec one = one_body;
  one.particles = 1;
  const NRectangle rect1 = one.cube(L);
  const NRectangle rectN = NRectangle::cube(particles, rect1.factors.front());
  const Mesh mesh1 = one.mesh(rect1);
  const Mesh meshN(rectN, one.points_per_unit, one.boundary);
  const std::vector<IntPoint> sites = one.potential.required_sites(rect1);
  const std::vector<double> energies = grid.energies();
  const std::size_t ne = energies.size();

  // Particle i's independent field uses its own seed; particle 0 keeps the
  // shared field so every variant sees the one-body realization.
  auto seed_of = [&](std::size_t i) { return i == 0 ? one.seed : stream_key({one.seed, 0xF1E1D, i}); };

  ConvolutionResult res;
  res.energies = energies;
  res.records = run_trials(run, [&](std::size_t trial) {
    std::vector<DisorderField> fields;
    for (std::size_t i = 0; i < particles; ++i) fields.push_back(sample_field(one.disorder, sites, seed_of(i), trial));
    std::vector<double> rec;
    rec.reserve(3 * ne);
    const HamiltonianMatrix H1 = assemble(mesh1, one.potential, one.interaction, fields[0], one.assembly);
    const auto c1 = grid_counts(H1, energies, one.solver);
    rec.insert(rec.end(), c1.begin(), c1.end());
    const HamiltonianMatrix Hs = assemble(meshN, one.potential, one.interaction, fields[0], one.assembly);
    const auto cs = grid_counts(Hs, energies, one.solver);
    rec.insert(rec.end(), cs.begin(), cs.end());
    std::vector<const DisorderField*> ptrs;
    for (const auto& f : fields) ptrs.push_back(&f);
    const HamiltonianMatrix Hi = assemble_per_particle(meshN, one.potential, one.interaction, ptrs, one.assembly);
    const auto ci = grid_counts(Hi, energies, one.solver);
    rec.insert(rec.end(), ci.begin(), ci.end());
    return rec;
  });

  const double vol1 = rect1.volume();
  const double volN = rectN.volume();
  auto mean_col = [&](std::size_t offset, double vol) {
    std::vector<double> out(ne);
    std::vector<double> col(res.records.size());
    for (std::size_t k = 0; k < ne; ++k) {
      for (std::size_t t = 0; t < res.records.size(); ++t) col[t] = res.records[t][offset + k] / vol;
      out[k] = mean_stats(col).mean;
    }
    return out;
  };
  res.one_body_ids = mean_col(0, vol1);
  res.direct_shared = mean_col(ne, volN);
  res.direct_independent = mean_col(2 * ne, volN);
  res.one_body_dos = increments(res.one_body_ids);
  res.convolved = res.one_body_ids;
  for (std::size_t i = 1; i < particles; ++i) res.convolved = convolve_ids(res.convolved, res.one_body_dos, grid.first);

  auto discrepancy = [&](const std::vector<double>& direct, double& sup, double& l1) {
    CompensatedSum s;
    sup = 0.0;
    for (std::size_t k = 0; k < ne; ++k) {
      const double e = std::abs(direct[k] - res.convolved[k]);
      sup = std::max(sup, e);
      s.add(e * grid.step);
    }
    l1 = s.value();
  };
  discrepancy(res.direct_shared, res.sup_shared, res.l1_shared);
  discrepancy(res.direct_independent, res.sup_independent, res.l1_independent);

  if (!res.one_body_ids.empty() && res.one_body_ids.front() > 0.0 && grid.first > 0) {
    res.warnings.push_back("energy grid starts above the bottom of the one-body spectrum; low mass is lumped");
  }
  const double total1 = static_cast<double>(mesh1.size()) / vol1;
  if (!res.one_body_ids.empty() && res.one_body_ids.back() < total1 - 1e-12) {
    res.warnings.push_back("energy grid ends below the top of the one-body spectrum");
  }
  const double totalN = static_cast<double>(meshN.size()) / volN;
  if (!res.direct_independent.empty() && res.direct_independent.back() < totalN - 1e-12) {
    res.warnings.push_back("energy grid ends below the top of the N-body spectrum");
  }
  threshold_warning(one, L, res.warnings);
  return res;
}

LipschitzResult ids_lipschitz_check(const SystemSpec& system, const EnergyGrid& grid,
                                    const std::vector<double>& volumes, const RunOptions& run) {
  LipschitzResult res;
  if (!system.disorder.base.has_bounded_density()) {
    res.warnings.push_back("hypothesis violation: coupling law '" + system.disorder.base.kind() +
                           "' has no bounded density; this run is a contrast case");
  }
  for (const auto& [site, dist] : system.disorder.overrides) {
    if (!dist.has_bounded_density()) {
      res.warnings.push_back("hypothesis violation: a per-site coupling law has no bounded density");
      break;
    }
  }
  res.ids = ids_estimate(system, grid, volumes, run);
  const std::size_t ne = grid.size();
  for (std::size_t v = 0; v < volumes.size(); ++v) {
    const IdsCurve& c = res.ids.curves[v];
    LipschitzRow row;
    row.L = c.L;
    std::vector<double> col(res.ids.records.size());
    for (std::size_t k = 0; k + 1 < ne; ++k) {
      for (std::size_t t = 0; t < res.ids.records.size(); ++t) {
        const auto& r = res.ids.records[t];
        col[t] = (r[v * ne + k + 1] - r[v * ne + k]) / (c.volume * grid.step);
      }
      const MeanStats ms = mean_stats(col);
      if (k == 0 || ms.mean > row.max_slope) {
        row.max_slope = ms.mean;
        row.slope_se = ms.std_error;
        row.argmax_energy = grid.at(k);
      }
    }
    res.rows.push_back(row);
  }
  std::vector<std::size_t> order(res.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return res.rows[a].L < res.rows[b].L; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    const auto& a = res.rows[order[i - 1]];
    const auto& b = res.rows[order[i]];
    if (b.max_slope > a.max_slope + 1.96 * std::hypot(a.slope_se, b.slope_se)) res.non_growing = false;
  }
  for (const auto& w : res.ids.warnings) res.warnings.push_back(w);
  return res;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd comparison_on_mesh(const SystemSpec& system, const Mesh& mesh) {
  return sample_on_mesh(mesh, [&](std::span<const double> x) {
    return comparison_potential_W(system.potential.layout, system.potential.delta, mesh.rect(), x);
  });
}

UcpResult ucp_experiment(const SystemSpec& system, const std::vector<SpectrumWindow>& windows,
                         const std::vector<double>& volumes, double M_D, const RunOptions& run) {
  if (windows.empty() || volumes.empty()) throw std::invalid_argument("ucp: need windows and volumes");
  if (!system.E0) throw std::invalid_argument("ucp: E0 is required");
  double lo = windows.front().lo, hi = windows.front().hi;
  for (const auto& w : windows) {
    if (w.hi > *system.E0) throw std::invalid_argument("ucp: window above E0");
    lo = std::min(lo, w.lo);
    hi = std::max(hi, w.hi);
  }
  const SpectrumWindow hull(lo, hi);
  const std::size_t nw = windows.size();

  UcpResult res;
  const double vmax = std::max(std::abs(system.disorder.base.support_lower()),
                               std::abs(system.disorder.base.support_upper()));
  // ‖V‖∞ bounded by the per-particle coupling bound (profiles ≤ 1) plus U.
  const double vbound = static_cast<double>(system.particles) * vmax + system.interaction.bound(system.particles);
  res.K = 2.0 * vbound + *system.E0;
  res.gamma = gamma_formula(M_D, res.K, system.potential.delta);
  if (system.potential.profile.kind() != ProfileKind::ball && system.potential.layout.kind() != LayoutKind::delone &&
      system.potential.profile.support_halfwidth() + system.potential.layout.max_offset() > 0.5) {
    res.warnings.push_back("single-site supports overlap neighboring cells; ‖V‖∞ bound may be exceeded");
  }

  std::vector<Mesh> meshes;
  std::vector<Eigen::VectorXd> Ws;
  for (double L : volumes) {
    meshes.push_back(system.mesh(system.cube(L)));
    Ws.push_back(comparison_on_mesh(system, meshes.back()));
    threshold_warning(system, L, res.warnings);
    const std::string hyp = check_hypotheses(system.potential, system.potential.required_sites(system.cube(L)));
    if (!hyp.empty()) res.warnings.push_back("hypothesis violation: " + hyp);
  }

  res.records = run_trials(run, [&](std::size_t trial) {
    std::vector<double> rec;
    rec.reserve(volumes.size() * nw);
    for (std::size_t v = 0; v < volumes.size(); ++v) {
      const DisorderField f = system.field(meshes[v].rect(), trial);
      const HamiltonianMatrix H = assemble(meshes[v], system.potential, system.interaction, f, system.assembly);
      const SpectralSlice all = eigen_window(H, hull, system.solver);
      const double tau = tie_tolerance(H);
      for (const auto& w : windows) rec.push_back(ucp_ratio(sub_slice(all, w, tau), Ws[v]));
    }
    return rec;
  });

  for (std::size_t v = 0; v < volumes.size(); ++v) {
    UcpRow row;
    row.L = volumes[v];
    row.dimension = meshes[v].size();
    row.min_ratio = std::numeric_limits<double>::infinity();
    row.sub_threshold = volumes[v] <= system.side_threshold();
    CompensatedSum s;
    for (const auto& rec : res.records) {
      for (std::size_t w = 0; w < nw; ++w) {
        ++row.samples;
        const double r = rec[v * nw + w];
        if (!std::isfinite(r)) continue;
        ++row.nonempty;
        s.add(r);
        row.min_ratio = std::min(row.min_ratio, r);
      }
    }
    row.mean_ratio = row.nonempty ? s.value() / static_cast<double>(row.nonempty) : 0.0;
    if (row.nonempty == 0) res.warnings.push_back("no eigenvalues in any window for L=" + format_L(row.L));
    res.rows.push_back(row);
  }
  return res;
}

// ---------------------------------------------------------------------------

std::vector<DeloneCheckRow> delone_pipeline_check(const DeloneCheckParams& params, std::size_t sets,
                                                  std::uint64_t seed) {
  if (params.dims.empty()) throw std::invalid_argument("delone check needs at least one dimension");
  std::vector<DeloneCheckRow> rows;
  for (std::size_t k = 0; k < sets; ++k) {
    DeloneCheckRow row;
    row.index = k;
    row.dim = params.dims[k % params.dims.size()];
    row.seed = stream_key({static_cast<std::uint64_t>(StreamDomain::delone), seed, k});
    const Box1 box(RealPoint(row.dim, 0.0), params.box_side);
    DeloneOptions opts;
    opts.jitter = params.jitter;
    opts.extra_per_cell = params.extra_per_cell;
    DeloneSet set;
    try {
      set = generate_delone(params.m, params.M, box, row.seed, opts);
    } catch (const std::exception& e) {
      row.message = e.what();
      rows.push_back(row);
      continue;
    }
    row.points = set.points.size();
    const DeloneCheck check = verify_delone(set);
    row.verified = check.ok;
    if (!check.ok) row.message = check.message;

    const DeloneSplit split = split_delone(set);
    row.gamma1 = split.gamma1.size();
    row.gamma2 = split.gamma2.size();
    std::vector<RealPoint> joined = split.gamma1;
    joined.insert(joined.end(), split.gamma2.begin(), split.gamma2.end());
    std::vector<RealPoint> original = set.points;
    std::sort(joined.begin(), joined.end());
    std::sort(original.begin(), original.end());
    bool part = joined == original && split.cells.size() == split.gamma1.size();
    std::vector<IntPoint> cells = split.cells;
    std::sort(cells.begin(), cells.end());
    part = part && std::adjacent_find(cells.begin(), cells.end()) == cells.end();
    for (std::size_t i = 0; part && i < split.cells.size(); ++i) {
      for (std::size_t a = 0; a < row.dim; ++a) {
        const double c = set.M * static_cast<double>(split.cells[i][a]);
        if (split.gamma1[i][a] < c - set.M / 2 || split.gamma1[i][a] > c + set.M / 2) part = false;
      }
    }
    // Every cell fully inside the box must be represented.
    std::size_t expected = 1;
    for (std::size_t a = 0; a < row.dim; ++a) {
      const auto lo = static_cast<std::int64_t>(std::ceil((box.lower(a) + set.M / 2) / set.M - 1e-12));
      const auto hi = static_cast<std::int64_t>(std::floor((box.upper(a) - set.M / 2) / set.M + 1e-12));
      expected *= hi >= lo ? static_cast<std::size_t>(hi - lo + 1) : 0;
    }
    part = part && split.gamma1.size() == expected;
    row.partition = part;
    if (!part && row.message.empty()) row.message = "split is not a partition with one point per cell";

    row.gamma1_spacing = true;
    for (std::size_t i = 0; i < split.gamma1.size(); ++i) {
      for (std::size_t j = i + 1; j < split.gamma1.size(); ++j) {
        double dist = 0.0;
        for (std::size_t a = 0; a < row.dim; ++a) {
          dist = std::max(dist, std::abs(split.gamma1[i][a] - split.gamma1[j][a]));
        }
        if (dist < set.m) row.gamma1_spacing = false;
      }
    }
    const DeloneCheck g1 = verify_delone(split.gamma1, set.m, 2 * set.M, box, set.M);
    row.gamma1_delone = g1.ok;
    if (!g1.ok && row.message.empty()) row.message = "gamma1: " + g1.message;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

double s_sum(std::size_t m, const std::vector<long double>& sigma) {
  if (m < 1) throw std::invalid_argument("s_sum needs m >= 1");
  if (sigma.size() < m + 1) throw std::invalid_argument("s_sum needs sigma_0..sigma_m");
  for (std::size_t j = 0; j <= m; ++j) {
    if (!(sigma[j] > 0.0L)) throw std::invalid_argument("s_sum needs positive sigma");
  }
  long double sum = 0.0L;
  long double prod = 1.0L;
  for (std::size_t j = 1; j <= m; ++j) {
    prod *= 2.0L * sigma[j - 1];
    sum += sigma[j] / prod;
  }
  return static_cast<double>(sum);
}

double s_sum_closed(double B, std::size_t m) {
  if (!(B > 0.0)) throw std::invalid_argument("s_sum_closed needs B > 0");
  if (m < 1) throw std::invalid_argument("s_sum_closed needs m >= 1");
  return (1.0 - std::ldexp(1.0, -static_cast<int>(m))) / B;
}

std::vector<long double> s_sum_sequence(double B, std::size_t m) {
  if (!(B > 0.0)) throw std::invalid_argument("s_sum_sequence needs B > 0");
  std::vector<long double> sigma{1.0L};
  for (std::size_t j = 1; j <= m; ++j) {
    sigma.push_back(std::pow(static_cast<long double>(B), -std::ldexp(1.0L, static_cast<int>(j) - 1)));
  }
  return sigma;
}

}  // namespace nbw
