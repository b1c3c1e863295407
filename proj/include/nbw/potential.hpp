#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nbw/disorder.hpp"
#include "nbw/geometry.hpp"

namespace nbw {

enum class ProfileKind { cube, ball, tent };

/// Single-site profile u: R^d → [0, 1] with χ_{Λ_ℓ(0)} ≤ u ≤ 1.
///
/// - cube: indicator of the half-open cube [-ℓ/2, ℓ/2)^d.
/// - ball: indicator of the open ball B(0, radius); needs radius ≥ ℓ·√d/2.
/// - tent: 1 on the closed plateau cube of side ℓ, decaying linearly in the
///   sup-norm to 0 at half-width `radius`.
class SingleSite {
 public:
  SingleSite(ProfileKind kind, double ell, double radius, std::size_t dim);

  static SingleSite cube(double ell, std::size_t dim) { return {ProfileKind::cube, ell, ell / 2, dim}; }
  static SingleSite ball(double ell, double radius, std::size_t dim) { return {ProfileKind::ball, ell, radius, dim}; }
  static SingleSite tent(double ell, double halfwidth, std::size_t dim) {
    return {ProfileKind::tent, ell, halfwidth, dim};
  }

  double operator()(std::span<const double> x) const;

  ProfileKind kind() const { return kind_; }
  double ell() const { return ell_; }
  std::size_t dim() const { return dim_; }
  /// Smallest R with supp u ⊆ B(0, R).
  double support_radius() const;
  /// Half-width of the smallest centered cube containing supp u.
  double support_halfwidth() const;
  /// supp u ⊆ Λ_1(0).
  bool small_support() const { return support_halfwidth() <= 0.5; }
  /// Radius of the largest centered open ball on which u ≡ 1.
  double plateau_inradius() const;
  std::string kind_name() const;

 private:
  ProfileKind kind_;
  double ell_;
  double radius_;
  std::size_t dim_;
};

enum class LayoutKind { regular, crooked, delone };

/// Placement y_j of the single-site bumps.
///
/// Regular and crooked layouts index sites by j ∈ Z^d with y_j ∈ Λ_1(j). Crooked
/// offsets are drawn per site from a counter stream keyed by (seed, j), so a
/// site's point does not depend on which box asked for it. Delone layouts index
/// sites by their cell j of the grid M·Z^d (Γ1), and carry Γ2 as a fixed
/// background with unit coupling.
class SiteLayout {
 public:
  static SiteLayout regular(std::size_t dim);
  /// Offsets uniform in [-amplitude, amplitude]^d; amplitude ≤ 1/2.
  static SiteLayout crooked(std::size_t dim, double amplitude, std::uint64_t seed);
  /// Explicit offsets; sites not listed sit at j.
  static SiteLayout crooked_explicit(std::size_t dim, std::map<IntPoint, RealPoint> points);
  static SiteLayout delone(double cell, std::vector<IntPoint> cells, std::vector<RealPoint> gamma1,
                           std::vector<RealPoint> gamma2);

  LayoutKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  /// Lattice spacing of the site index (1, or M for Delone layouts).
  double cell() const { return cell_; }
  double amplitude() const { return amplitude_; }
  std::uint64_t seed() const { return seed_; }

  /// y_j. Throws std::out_of_range for Delone cells without a point.
  RealPoint position(const IntPoint& site) const;
  bool has_site(const IntPoint& site) const;

  /// Sites whose bump of sup-norm half-width `reach` can meet `box`.
  std::vector<IntPoint> sites_near(const Box1& box, double reach) const;
  /// Same, for a point.
  std::vector<IntPoint> sites_near(std::span<const double> x, double reach) const;
  /// Lattice skeleton Λ̃ of a box: sites whose index center cell()·j lies in the
  /// closed box (lattice_sites for unit cells).
  std::vector<IntPoint> skeleton(const Box1& box) const;
  /// Largest sup-norm distance between y_j and the cell center cell()·j.
  double max_offset() const;

  const std::vector<RealPoint>& background_points() const { return gamma2_; }
  std::string kind_name() const;

 private:
  LayoutKind kind_ = LayoutKind::regular;
  std::size_t dim_ = 1;
  double cell_ = 1.0;
  double amplitude_ = 0.0;
  std::uint64_t seed_ = 0;
  std::map<IntPoint, RealPoint> explicit_;
  std::vector<RealPoint> gamma2_;
};

/// Pair profile Ũ(r) = A·max(0, 1 - r/ρ₀).
struct PairProfile {
  double amplitude = 1.0;
  double range = 1.0;
  double operator()(double r) const;
};

/// Interaction U(x_1, ..., x_N) ≥ 0, bounded.
class Interaction {
 public:
  using Custom = std::function<double(std::span<const double> x, std::size_t n_particles, std::size_t dim)>;

  static Interaction none() { return Interaction(); }
  static Interaction pair(PairProfile profile);
  static Interaction custom(Custom fn, double bound);

  bool is_none() const { return kind_ == Kind::none; }
  std::string kind_name() const;
  double operator()(std::span<const double> x, std::size_t n_particles, std::size_t dim) const;
  /// Upper bound on U.
  double bound(std::size_t n_particles) const;
  const PairProfile& pair_profile() const { return pair_; }

 private:
  enum class Kind { none, pair, custom };
  Kind kind_ = Kind::none;
  PairProfile pair_;
  Custom custom_;
  double custom_bound_ = 0.0;
};

/// Z^d-periodic background V₀(x) = offset + amplitude·Σ_k cos(2π x_k).
struct Background {
  double offset = 0.0;
  double amplitude = 0.0;
  double operator()(std::span<const double> x) const;
  double minimum(std::size_t dim) const;
  bool is_zero() const { return offset == 0.0 && amplitude == 0.0; }
};

/// Everything needed to evaluate the one-body potential at a point.
struct PotentialSpec {
  SingleSite profile;
  SiteLayout layout;
  Background background;
  /// Ball radius δ of the comparison potential W.
  double delta = 0.5;

  /// Sites of the field needed for evaluating the potential on `box`.
  std::vector<IntPoint> required_sites(const Box1& box) const;
  std::vector<IntPoint> required_sites(const NRectangle& rect) const;
  /// Sup-norm reach of one bump measured from its site index center.
  double reach() const;
};

/// Default comparison radius: the largest δ ≤ 1/2 with B(0, δ) inside the
/// plateau cube of side ℓ, i.e. δ = ℓ/2.
double default_delta(double ell);

/// V_ω^(1)(x) = Σ_j ω_j u(x - y_j) (+ Γ2 background for Delone layouts, + V₀).
double one_body_potential(const PotentialSpec& spec, const DisorderField& field, std::span<const double> x);

/// V_ω^(N)(x_1, ..., x_N) = Σ_i V_ω^(1)(x_i), same field in every block.
double n_body_potential(const PotentialSpec& spec, const DisorderField& field, std::span<const double> x,
                        std::size_t n_particles);

/// W(x) = Σ_{j ∈ Λ̃} χ_{B(y_j, δ)}(x) with y_j = (y_{j_1}, ..., y_{j_N}) and the
/// Euclidean ball in R^{Nd}; j_i ranges over lattice_sites(rect.factors[i]).
double comparison_potential_W(const SiteLayout& layout, double delta, const NRectangle& rect,
                              std::span<const double> x);

struct LowerBoundReport {
  bool pass = true;
  double worst_margin = 0.0;
  RealPoint worst_point;
  std::size_t points_checked = 0;
};

/// Checks Ṽ_Λ^(N)(x) ≥ N·W(x) with ω ≡ 1, where Ṽ_Λ^(N) sums only over the
/// lattice skeleton Λ̃ of each factor. Reports min(LHS - RHS).
LowerBoundReport check_lower_bound(const PotentialSpec& spec, const NRectangle& rect,
                                   const std::vector<RealPoint>& grid);

/// Checks the layout/profile hypotheses: B(y_j, δ) ⊆ Λ_1(j), δ ∈ (0, 1/2],
/// δ ≤ ℓ/2. Returns an empty string when they hold, else the first violation.
std::string check_hypotheses(const PotentialSpec& spec, const std::vector<IntPoint>& sites);

}  // namespace nbw
