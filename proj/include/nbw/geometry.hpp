#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace nbw {

using RealPoint = std::vector<double>;
using IntPoint = std::vector<std::int64_t>;

/// Closed axis-aligned cube Λ_L(z) ⊂ R^d of side `side` centered at `center`.
///
/// Sides and centers are real so that boxes such as [0,1] (center 1/2) can be
/// expressed; meshing requires integer sides, which is checked by the mesh.
struct Box1 {
  RealPoint center;
  double side = 1.0;

  Box1() = default;
  Box1(RealPoint c, double s);

  /// Box with the given lower corner, convenient for [a, a+s]^d.
  static Box1 from_lower(const RealPoint& lower, double side);

  std::size_t dim() const { return center.size(); }
  double lower(std::size_t axis) const { return center[axis] - side / 2; }
  double upper(std::size_t axis) const { return center[axis] + side / 2; }
  bool contains(const RealPoint& x, double slack = 0.0) const;
  bool contains(const Box1& other) const;
};

/// Euclidean distance between two closed boxes.
double distance(const Box1& a, const Box1& b);

/// N-particle rectangle Λ = Λ_{L_1} × ... × Λ_{L_N} ⊂ R^{Nd}.
struct NRectangle {
  std::vector<Box1> factors;

  NRectangle() = default;
  explicit NRectangle(std::vector<Box1> f);

  /// N-particle cube: N copies of the same box.
  static NRectangle cube(std::size_t n_particles, const Box1& box);

  std::size_t particles() const { return factors.size(); }
  std::size_t dim() const { return factors.empty() ? 0 : factors.front().dim(); }
  /// Continuum volume Π_i side_i^d.
  double volume() const;
  bool is_cube() const;
  bool contains(const NRectangle& other) const;
};

/// Integer points of Z^d inside the closed box.
std::vector<IntPoint> lattice_sites(const Box1& box);

/// Fattened rectangle Λ̂: every factor side grows by 2R, centers fixed.
NRectangle extend(const NRectangle& rect, double R);

/// Π_J Λ as a union of d-dimensional boxes. Indices are zero-based.
struct ProjectionSet {
  std::vector<std::size_t> indices;
  std::vector<Box1> boxes;

  bool empty() const { return boxes.empty(); }
  bool contains(const RealPoint& x) const;
};

ProjectionSet projection(const NRectangle& rect, const std::vector<std::size_t>& J);
/// Π Λ: union over all particle coordinates.
ProjectionSet full_projection(const NRectangle& rect);
ProjectionSet set_union(const ProjectionSet& a, const ProjectionSet& b);
/// Euclidean set distance; +inf when either side is empty.
double distance(const ProjectionSet& a, const ProjectionSet& b);

enum class SeparationCondition { none = 0, first = 1, second = 2 };

struct SeparationResult {
  bool separated = false;
  std::vector<std::size_t> witness;  ///< zero-based particle indices
  SeparationCondition condition = SeparationCondition::none;
  double witness_distance = 0.0;
};

/// Checks one disjunct of the R-separation condition for a given index set.
/// `first` tests dist[Π_J Â, Π_{J^c} Â ∪ Π B̂] > 2R, `second` the same with
/// the roles of A and B exchanged.
bool separated_by(const NRectangle& A, const NRectangle& B, double R,
                  const std::vector<std::size_t>& J, SeparationCondition cond);

/// Exhaustive search over the 2^N - 1 nonempty index sets, smallest sets
/// first, testing the first disjunct before the second for each set.
SeparationResult r_separated(const NRectangle& A, const NRectangle& B, double R);

}  // namespace nbw
