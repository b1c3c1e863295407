#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "nbw/geometry.hpp"

namespace nbw {

struct UniformDist {
  double a = 0.0;
  double b = 1.0;
};

/// Piecewise-constant density on consecutive bins [edges[k], edges[k+1]).
/// Weights are normalized on construction.
struct PiecewiseDensity {
  std::vector<double> edges;
  std::vector<double> weights;
};

struct AtomicDist {
  std::vector<double> atoms;
  std::vector<double> probs;
};

/// Law of a single coupling ω_j.
class CouplingDistribution {
 public:
  using Params = std::variant<UniformDist, PiecewiseDensity, AtomicDist>;

  explicit CouplingDistribution(Params p);

  static CouplingDistribution uniform(double a, double b) { return CouplingDistribution(UniformDist{a, b}); }
  static CouplingDistribution atomic(std::vector<double> atoms, std::vector<double> probs);
  /// Point mass at `value`.
  static CouplingDistribution degenerate(double value) { return atomic({value}, {1.0}); }
  static CouplingDistribution piecewise(std::vector<double> edges, std::vector<double> weights);

  const Params& params() const { return params_; }
  std::string kind() const;
  bool has_bounded_density() const;
  /// ‖ρ‖_∞; +inf for atomic laws.
  double density_sup() const;
  double support_lower() const;
  double support_upper() const;
  double mean() const;

  /// Inverse CDF, u ∈ (0,1).
  double quantile(double u) const;
  double cdf(double x) const;

  /// Exact Levy concentration s(h) = sup_E μ([E, E+h]).
  double levy(double h) const;

 private:
  Params params_;
  std::vector<double> cumulative_;  // CDF at bin edges / atoms
};

/// Independent couplings with a common law plus optional per-site overrides.
/// Without overrides the model is the iid (ergodic) case.
struct DisorderModel {
  CouplingDistribution base;
  std::map<IntPoint, CouplingDistribution> overrides;

  explicit DisorderModel(CouplingDistribution b) : base(std::move(b)) {}
  bool ergodic() const { return overrides.empty(); }
  const CouplingDistribution& at(const IntPoint& site) const;
};

/// One realization {ω_j}, keyed by lattice site.
struct DisorderField {
  std::vector<IntPoint> sites;
  std::vector<double> values;
  std::uint64_t master_seed = 0;
  std::uint64_t trial = 0;

  bool covers(const IntPoint& site) const { return index_.count(site) > 0; }
  /// Throws std::out_of_range for sites outside the realization.
  double at(const IntPoint& site) const;
  /// Overrides every value with a constant (used for the ω ≡ 1 comparison potential).
  static DisorderField constant(const std::vector<IntPoint>& sites, double value);

 private:
  friend DisorderField sample_field(const DisorderModel&, const std::vector<IntPoint>&,
                                    std::uint64_t, std::uint64_t);
  friend DisorderField make_field(std::vector<IntPoint>, std::vector<double>);
  std::map<IntPoint, std::size_t> index_;
};

DisorderField make_field(std::vector<IntPoint> sites, std::vector<double> values);

/// Draws ω_j for every site. The value at a site depends only on
/// (master_seed, trial, site), so enlarging the site list leaves old values intact.
DisorderField sample_field(const DisorderModel& model, const std::vector<IntPoint>& sites,
                           std::uint64_t master_seed, std::uint64_t trial);

/// Single coupling draw for a site, the primitive behind sample_field.
double sample_site(const CouplingDistribution& dist, const IntPoint& site,
                   std::uint64_t master_seed, std::uint64_t trial);

/// Exact s(h). For independent couplings the conditional measure μ_j of a
/// site equals its marginal, so the sup over sites of the marginal value is exact.
double levy_concentration(const CouplingDistribution& dist, double h);
double levy_concentration(const DisorderModel& model, double h);

struct Estimate {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Empirical s(h): largest fraction of n samples in a closed window of width h,
/// with a basic (bias-reflected) bootstrap interval at 95%.
Estimate levy_concentration_empirical(const CouplingDistribution& dist, double h,
                                      std::size_t n_samples, std::uint64_t seed,
                                      std::size_t n_boot = 200);

/// Sliding-window maximum count over sorted samples.
std::size_t max_window_count(const std::vector<double>& sorted, double h);

}  // namespace nbw
