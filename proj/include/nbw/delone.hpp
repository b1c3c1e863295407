#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nbw/geometry.hpp"

namespace nbw {

/// Finite (m, M)-Delone set clipped to a working box.
///
/// Conventions: "at most one point per cube of side m" is tested on half-open
/// cubes [t, t+m)^d, which is the same as pairwise sup-norm distance >= m.
/// "At least one point per cube of side M" is tested on closed cubes.
struct DeloneSet {
  double m = 0.0;
  double M = 0.0;
  Box1 working_box;
  std::vector<RealPoint> points;

  std::size_t dim() const { return working_box.dim(); }
};

struct DeloneOptions {
  /// Fraction of the admissible jitter amplitude (M - m)/4 actually used, in [0, 1].
  double jitter = 1.0;
  /// Extra points attempted per anchor; accepted only when they keep the m-spacing.
  double extra_per_cell = 0.0;
  std::size_t max_rounds = 64;
};

/// Jittered anchor grid of spacing M - 2a with per-coordinate jitter |ξ| <= a,
/// a = jitter·(M - m)/4, so that sup-norm spacing >= M - 4a >= m and every closed
/// cube of side M inside the box contains an anchor. Optional extra points are
/// rejection-sampled against the m-spacing. Throws std::runtime_error if the
/// result fails verification.
DeloneSet generate_delone(double m, double M, const Box1& working_box, std::uint64_t seed,
                          const DeloneOptions& options = {});

enum class DeloneViolation { none, spacing, covering };

struct DeloneCheck {
  bool ok = true;
  DeloneViolation violation = DeloneViolation::none;
  /// Lower corner and side of the first violating cube.
  RealPoint cube_lower;
  double cube_side = 0.0;
  std::string message;
};

/// Exhaustive check on the working box shrunk by `margin` on every side
/// (default margin M). The spacing test is exact over all point pairs; the
/// covering test scans a lattice of cube positions at resolution min(m, M)/2 and
/// additionally every critical position where a cube face touches a point
/// coordinate, which makes it exact.
DeloneCheck verify_delone(const std::vector<RealPoint>& points, double m, double M, const Box1& working_box,
                          std::optional<double> margin = std::nullopt);
DeloneCheck verify_delone(const DeloneSet& set, std::optional<double> margin = std::nullopt);

struct DeloneSplit {
  /// One representative y_j per cell Λ_M(M·j); `cells[k]` is the index j of `gamma1[k]`.
  std::vector<IntPoint> cells;
  std::vector<RealPoint> gamma1;
  std::vector<RealPoint> gamma2;
};

/// Γ = Γ1 ⊔ Γ2. Cells are the half-open cubes [M·j - M/2, M·j + M/2)^d lying
/// entirely inside the working box; the representative is the point closest to
/// the cell center. Points outside every complete cell go to Γ2.
DeloneSplit split_delone(const DeloneSet& set);

/// Point-list format: header `# delone m=<m> M=<M> d=<d>`, then one point per line.
/// The working box is written on a second comment line `# box <center...> <side>`.
void write_delone(std::ostream& os, const DeloneSet& set);
DeloneSet read_delone(std::istream& is);

}  // namespace nbw
