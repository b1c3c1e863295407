#include "nbw/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "nbw/rng.hpp"

namespace nbw {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

CouplingDistribution::CouplingDistribution(Params p) : params_(std::move(p)) {
  std::visit(overloaded{
                 [](const UniformDist& u) {
                   if (!(u.b > u.a) || !std::isfinite(u.a) || !std::isfinite(u.b)) {
                     throw std::invalid_argument("uniform distribution needs finite a < b");
                   }
                 },
                 [this](PiecewiseDensity& d) {
                   if (d.edges.size() < 2 || d.weights.size() + 1 != d.edges.size()) {
                     throw std::invalid_argument("piecewise density needs k+1 edges for k weights");
                   }
                   for (std::size_t k = 0; k + 1 < d.edges.size(); ++k) {
                     if (!(d.edges[k + 1] > d.edges[k])) {
                       throw std::invalid_argument("piecewise density edges must increase");
                     }
                   }
                   double total = 0.0;
                   for (double w : d.weights) {
                     if (w < 0 || !std::isfinite(w)) throw std::invalid_argument("negative density weight");
                     total += w;
                   }
                   if (!(total > 0)) throw std::invalid_argument("density weights sum to zero");
                   cumulative_.assign(1, 0.0);
                   for (double& w : d.weights) {
                     w /= total;
                     cumulative_.push_back(cumulative_.back() + w);
                   }
                   cumulative_.back() = 1.0;
                 },
                 [this](AtomicDist& a) {
                   if (a.atoms.empty() || a.atoms.size() != a.probs.size()) {
                     throw std::invalid_argument("atomic distribution needs matching atoms and probabilities");
                   }
                   std::vector<std::size_t> order(a.atoms.size());
                   std::iota(order.begin(), order.end(), 0);
                   std::sort(order.begin(), order.end(),
                             [&](auto i, auto j) { return a.atoms[i] < a.atoms[j]; });
                   AtomicDist sorted;
                   double total = 0.0;
                   for (auto i : order) {
                     if (a.probs[i] < 0 || !std::isfinite(a.probs[i]) || !std::isfinite(a.atoms[i])) {
                       throw std::invalid_argument("atomic distribution needs finite atoms and nonnegative masses");
                     }
                     sorted.atoms.push_back(a.atoms[i]);
                     sorted.probs.push_back(a.probs[i]);
                     total += a.probs[i];
                   }
                   if (!(total > 0)) throw std::invalid_argument("atomic masses sum to zero");
                   for (auto& p : sorted.probs) p /= total;
                   a = std::move(sorted);
                   cumulative_.clear();
                   double c = 0.0;
                   for (double p : a.probs) cumulative_.push_back(c += p);
                   cumulative_.back() = 1.0;
                 },
             },
             params_);
}

CouplingDistribution CouplingDistribution::atomic(std::vector<double> atoms, std::vector<double> probs) {
  return CouplingDistribution(AtomicDist{std::move(atoms), std::move(probs)});
}

CouplingDistribution CouplingDistribution::piecewise(std::vector<double> edges, std::vector<double> weights) {
  return CouplingDistribution(PiecewiseDensity{std::move(edges), std::move(weights)});
}

std::string CouplingDistribution::kind() const {
  return std::visit(overloaded{[](const UniformDist&) { return std::string("uniform"); },
                               [](const PiecewiseDensity&) { return std::string("density"); },
                               [](const AtomicDist&) { return std::string("atomic"); }},
                    params_);
}

bool CouplingDistribution::has_bounded_density() const {
  return !std::holds_alternative<AtomicDist>(params_);
}

double CouplingDistribution::density_sup() const {
  return std::visit(overloaded{
                        [](const UniformDist& u) { return 1.0 / (u.b - u.a); },
                        [](const PiecewiseDensity& d) {
                          double m = 0.0;
                          for (std::size_t k = 0; k < d.weights.size(); ++k) {
                            m = std::max(m, d.weights[k] / (d.edges[k + 1] - d.edges[k]));
                          }
                          return m;
                        },
                        [](const AtomicDist&) { return std::numeric_limits<double>::infinity(); },
                    },
                    params_);
}

double CouplingDistribution::support_lower() const {
  return std::visit(overloaded{[](const UniformDist& u) { return u.a; },
                               [](const PiecewiseDensity& d) { return d.edges.front(); },
                               [](const AtomicDist& a) { return a.atoms.front(); }},
                    params_);
}

double CouplingDistribution::support_upper() const {
  return std::visit(overloaded{[](const UniformDist& u) { return u.b; },
                               [](const PiecewiseDensity& d) { return d.edges.back(); },
                               [](const AtomicDist& a) { return a.atoms.back(); }},
                    params_);
}

double CouplingDistribution::mean() const {
  return std::visit(overloaded{
                        [](const UniformDist& u) { return 0.5 * (u.a + u.b); },
                        [](const PiecewiseDensity& d) {
                          double m = 0.0;
                          for (std::size_t k = 0; k < d.weights.size(); ++k) {
                            m += d.weights[k] * 0.5 * (d.edges[k] + d.edges[k + 1]);
                          }
                          return m;
                        },
                        [](const AtomicDist& a) {
                          double m = 0.0;
                          for (std::size_t k = 0; k < a.atoms.size(); ++k) m += a.atoms[k] * a.probs[k];
                          return m;
                        },
                    },
                    params_);
}

double CouplingDistribution::quantile(double u) const {
  return std::visit(overloaded{
                        [u](const UniformDist& d) { return d.a + (d.b - d.a) * u; },
                        [u, this](const PiecewiseDensity& d) {
                          auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
                          std::size_t k = std::clamp<std::ptrdiff_t>(it - cumulative_.begin() - 1, 0,
                                                                     static_cast<std::ptrdiff_t>(d.weights.size()) - 1);
                          while (d.weights[k] == 0.0 && k + 1 < d.weights.size()) ++k;
                          const double frac = d.weights[k] > 0 ? (u - cumulative_[k]) / d.weights[k] : 0.0;
                          return d.edges[k] + std::clamp(frac, 0.0, 1.0) * (d.edges[k + 1] - d.edges[k]);
                        },
                        [u, this](const AtomicDist& a) {
                          auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
                          std::size_t k = std::min<std::size_t>(it - cumulative_.begin(), a.atoms.size() - 1);
                          return a.atoms[k];
                        },
                    },
                    params_);
}

double CouplingDistribution::cdf(double x) const {
  return std::visit(overloaded{
                        [x](const UniformDist& d) { return std::clamp((x - d.a) / (d.b - d.a), 0.0, 1.0); },
                        [x, this](const PiecewiseDensity& d) {
                          if (x <= d.edges.front()) return 0.0;
                          if (x >= d.edges.back()) return 1.0;
                          auto it = std::upper_bound(d.edges.begin(), d.edges.end(), x);
                          const std::size_t k = (it - d.edges.begin()) - 1;
                          return cumulative_[k] + d.weights[k] * (x - d.edges[k]) / (d.edges[k + 1] - d.edges[k]);
                        },
                        [x](const AtomicDist& a) {
                          double c = 0.0;
                          for (std::size_t k = 0; k < a.atoms.size() && a.atoms[k] <= x; ++k) c += a.probs[k];
                          return std::min(c, 1.0);
                        },
                    },
                    params_);
}

double CouplingDistribution::levy(double h) const {
  if (h < 0) throw std::invalid_argument("Levy concentration needs h >= 0");
  return std::visit(overloaded{
                        [h](const UniformDist& d) { return std::min(h / (d.b - d.a), 1.0); },
                        [h, this](const PiecewiseDensity& d) {
                          // F(E+h) - F(E) is piecewise linear in E; its maximum sits at a breakpoint.
                          double best = 0.0;
                          for (double e : d.edges) {
                            best = std::max(best, cdf(e + h) - cdf(e));
                            best = std::max(best, cdf(e) - cdf(e - h));
                          }
                          return std::min(best, 1.0);
                        },
                        [h](const AtomicDist& a) {
                          double best = 0.0;
                          std::size_t hi = 0;
                          double window = 0.0;
                          for (std::size_t lo = 0; lo < a.atoms.size(); ++lo) {
                            while (hi < a.atoms.size() && a.atoms[hi] <= a.atoms[lo] + h) window += a.probs[hi++];
                            best = std::max(best, window);
                            window -= a.probs[lo];
                          }
                          return std::min(best, 1.0);
                        },
                    },
                    params_);
}

const CouplingDistribution& DisorderModel::at(const IntPoint& site) const {
  auto it = overrides.find(site);
  return it == overrides.end() ? base : it->second;
}

double DisorderField::at(const IntPoint& site) const {
  auto it = index_.find(site);
  if (it == index_.end()) throw std::out_of_range("disorder field does not cover the requested site");
  return values[it->second];
}

DisorderField make_field(std::vector<IntPoint> sites, std::vector<double> values) {
  if (sites.size() != values.size()) throw std::invalid_argument("site/value length mismatch");
  DisorderField f;
  f.sites = std::move(sites);
  f.values = std::move(values);
  for (std::size_t i = 0; i < f.sites.size(); ++i) f.index_.emplace(f.sites[i], i);
  return f;
}

DisorderField DisorderField::constant(const std::vector<IntPoint>& sites, double value) {
  return make_field(sites, std::vector<double>(sites.size(), value));
}

double sample_site(const CouplingDistribution& dist, const IntPoint& site, std::uint64_t master_seed,
                   std::uint64_t trial) {
  const std::uint64_t prefix =
      stream_key({static_cast<std::uint64_t>(StreamDomain::disorder), master_seed, trial});
  CounterRng rng(stream_key(prefix, site));
  return dist.quantile(rng.uniform());
}

DisorderField sample_field(const DisorderModel& model, const std::vector<IntPoint>& sites,
                           std::uint64_t master_seed, std::uint64_t trial) {
  if (sites.empty()) throw std::invalid_argument("disorder field needs at least one site");
  std::vector<double> values;
  values.reserve(sites.size());
  for (const auto& s : sites) values.push_back(sample_site(model.at(s), s, master_seed, trial));
  DisorderField f = make_field(sites, std::move(values));
  f.master_seed = master_seed;
  f.trial = trial;
  return f;
}

double levy_concentration(const CouplingDistribution& dist, double h) { return dist.levy(h); }

double levy_concentration(const DisorderModel& model, double h) {
  double s = model.base.levy(h);
  for (const auto& [site, dist] : model.overrides) s = std::max(s, dist.levy(h));
  return s;
}

std::size_t max_window_count(const std::vector<double>& sorted, double h) {
  std::size_t best = 0;
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < sorted.size(); ++lo) {
    hi = std::max(hi, lo);
    while (hi < sorted.size() && sorted[hi] <= sorted[lo] + h) ++hi;
    best = std::max(best, hi - lo);
  }
  return best;
}

namespace {

// Window maximum for a weighted (multiplicity-count) resample of sorted data.
std::size_t max_window_weighted(const std::vector<double>& sorted, const std::vector<std::uint32_t>& mult,
                                double h) {
  std::size_t best = 0;
  std::size_t window = 0;
  std::size_t hi = 0;
  for (std::size_t lo = 0; lo < sorted.size(); ++lo) {
    if (hi < lo) {
      hi = lo;
      window = 0;
    }
    while (hi < sorted.size() && sorted[hi] <= sorted[lo] + h) window += mult[hi++];
    best = std::max(best, window);
    window -= mult[lo];
  }
  return best;
}

}  // namespace

Estimate levy_concentration_empirical(const CouplingDistribution& dist, double h, std::size_t n_samples,
                                      std::uint64_t seed, std::size_t n_boot) {
  if (h < 0) throw std::invalid_argument("Levy concentration needs h >= 0");
  if (n_samples < 100) throw std::invalid_argument("empirical Levy concentration needs at least 100 samples");

  CounterRng rng(stream_key({static_cast<std::uint64_t>(StreamDomain::levy), seed}));
  std::vector<double> xs(n_samples);
  for (auto& x : xs) x = dist.quantile(rng.uniform());
  std::sort(xs.begin(), xs.end());

  const double n = static_cast<double>(n_samples);
  const double est = static_cast<double>(max_window_count(xs, h)) / n;

  CounterRng boot(stream_key({static_cast<std::uint64_t>(StreamDomain::bootstrap), seed}));
  std::vector<double> reps;
  reps.reserve(n_boot);
  std::vector<std::uint32_t> mult(n_samples);
  for (std::size_t b = 0; b < n_boot; ++b) {
    std::fill(mult.begin(), mult.end(), 0u);
    for (std::size_t i = 0; i < n_samples; ++i) ++mult[boot.below(n_samples)];
    reps.push_back(static_cast<double>(max_window_weighted(xs, mult, h)) / n);
  }
  std::sort(reps.begin(), reps.end());
  Estimate out;
  out.value = est;
  if (reps.empty()) {
    out.lo = out.hi = est;
    return out;
  }
  auto q = [&](double p) {
    const std::size_t k = std::min(reps.size() - 1, static_cast<std::size_t>(p * (reps.size() - 1) + 0.5));
    return reps[k];
  };
  // Basic bootstrap reflects the bootstrap spread around the estimate, which
  // removes the upward bias a sup-type statistic picks up under resampling.
  out.lo = std::clamp(2 * est - q(0.975), 0.0, 1.0);
  out.hi = std::clamp(2 * est - q(0.025), 0.0, 1.0);
  out.lo = std::min(out.lo, est);
  out.hi = std::max(out.hi, est);
  return out;
}

}  // namespace nbw
