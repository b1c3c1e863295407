#include "nbw/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace nbw {

Box1::Box1(RealPoint c, double s) : center(std::move(c)), side(s) {
  if (!(side > 0.0) || !std::isfinite(side)) {
    throw std::invalid_argument("box side must be positive and finite");
  }
  if (center.empty()) {
    throw std::invalid_argument("box dimension must be at least 1");
  }
}

Box1 Box1::from_lower(const RealPoint& lower, double side) {
  RealPoint c(lower);
  for (auto& v : c) v += side / 2;
  return Box1(std::move(c), side);
}

bool Box1::contains(const RealPoint& x, double slack) const {
  if (x.size() != dim()) return false;
  for (std::size_t a = 0; a < dim(); ++a) {
    if (x[a] < lower(a) - slack || x[a] > upper(a) + slack) return false;
  }
  return true;
}

bool Box1::contains(const Box1& other) const {
  if (other.dim() != dim()) return false;
  for (std::size_t a = 0; a < dim(); ++a) {
    if (other.lower(a) < lower(a) || other.upper(a) > upper(a)) return false;
  }
  return true;
}

double distance(const Box1& a, const Box1& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("box dimension mismatch");
  double sq = 0.0;
  for (std::size_t k = 0; k < a.dim(); ++k) {
    const double gap = std::max({0.0, b.lower(k) - a.upper(k), a.lower(k) - b.upper(k)});
    sq += gap * gap;
  }
  return std::sqrt(sq);
}

NRectangle::NRectangle(std::vector<Box1> f) : factors(std::move(f)) {
  if (factors.empty()) throw std::invalid_argument("N-rectangle needs at least one particle");
  for (const auto& b : factors) {
    if (b.dim() != factors.front().dim()) {
      throw std::invalid_argument("all factors of an N-rectangle must share the dimension d");
    }
  }
}

NRectangle NRectangle::cube(std::size_t n_particles, const Box1& box) {
  return NRectangle(std::vector<Box1>(n_particles, box));
}

double NRectangle::volume() const {
  double v = 1.0;
  for (const auto& b : factors) v *= std::pow(b.side, static_cast<double>(b.dim()));
  return v;
}

bool NRectangle::is_cube() const {
  return std::all_of(factors.begin(), factors.end(),
                     [&](const Box1& b) { return b.side == factors.front().side; });
}

bool NRectangle::contains(const NRectangle& other) const {
  if (other.particles() != particles()) return false;
  for (std::size_t i = 0; i < particles(); ++i) {
    if (!factors[i].contains(other.factors[i])) return false;
  }
  return true;
}

std::vector<IntPoint> lattice_sites(const Box1& box) {
  if (!(box.side > 0.0)) throw std::invalid_argument("box side must be positive");
  const std::size_t d = box.dim();
  std::vector<std::int64_t> lo(d), hi(d);
  for (std::size_t a = 0; a < d; ++a) {
    lo[a] = static_cast<std::int64_t>(std::ceil(box.lower(a)));
    hi[a] = static_cast<std::int64_t>(std::floor(box.upper(a)));
    if (hi[a] < lo[a]) return {};
  }
  std::vector<IntPoint> out;
  IntPoint cur(lo);
  while (true) {
    out.push_back(cur);
    std::size_t a = d;
    for (;;) {
      if (a == 0) return out;
      --a;
      if (++cur[a] <= hi[a]) break;
      cur[a] = lo[a];
    }
  }
}

NRectangle extend(const NRectangle& rect, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("extension length R must be positive");
  std::vector<Box1> f;
  f.reserve(rect.particles());
  for (const auto& b : rect.factors) f.emplace_back(b.center, b.side + 2 * R);
  return NRectangle(std::move(f));
}

bool ProjectionSet::contains(const RealPoint& x) const {
  return std::any_of(boxes.begin(), boxes.end(), [&](const Box1& b) { return b.contains(x); });
}

ProjectionSet projection(const NRectangle& rect, const std::vector<std::size_t>& J) {
  if (J.empty()) throw std::invalid_argument("projection index set must be nonempty");
  ProjectionSet out;
  for (auto j : J) {
    if (j >= rect.particles()) throw std::invalid_argument("projection index out of range");
    if (std::find(out.indices.begin(), out.indices.end(), j) != out.indices.end()) continue;
    out.indices.push_back(j);
    out.boxes.push_back(rect.factors[j]);
  }
  return out;
}

ProjectionSet full_projection(const NRectangle& rect) {
  std::vector<std::size_t> all(rect.particles());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return projection(rect, all);
}

ProjectionSet set_union(const ProjectionSet& a, const ProjectionSet& b) {
  ProjectionSet out = a;
  out.indices.clear();
  out.boxes.insert(out.boxes.end(), b.boxes.begin(), b.boxes.end());
  return out;
}

double distance(const ProjectionSet& a, const ProjectionSet& b) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x : a.boxes) {
    for (const auto& y : b.boxes) best = std::min(best, distance(x, y));
  }
  return best;
}

namespace {

void check_compatible(const NRectangle& A, const NRectangle& B) {
  if (A.particles() != B.particles()) {
    throw std::invalid_argument("R-separation requires equal particle numbers");
  }
  if (A.dim() != B.dim()) throw std::invalid_argument("R-separation requires equal dimensions");
}

std::vector<std::size_t> complement(const std::vector<std::size_t>& J, std::size_t n) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::find(J.begin(), J.end(), i) == J.end()) out.push_back(i);
  }
  return out;
}

double disjunct_distance(const NRectangle& own_hat, const NRectangle& other_hat,
                         const std::vector<std::size_t>& J) {
  ProjectionSet rest = full_projection(other_hat);
  const auto Jc = complement(J, own_hat.particles());
  if (!Jc.empty()) rest = set_union(projection(own_hat, Jc), rest);
  return distance(projection(own_hat, J), rest);
}

}  // namespace

bool separated_by(const NRectangle& A, const NRectangle& B, double R,
                  const std::vector<std::size_t>& J, SeparationCondition cond) {
  check_compatible(A, B);
  const NRectangle Ah = extend(A, R);
  const NRectangle Bh = extend(B, R);
  switch (cond) {
    case SeparationCondition::first:
      return disjunct_distance(Ah, Bh, J) > 2 * R;
    case SeparationCondition::second:
      return disjunct_distance(Bh, Ah, J) > 2 * R;
    case SeparationCondition::none:
      break;
  }
  return false;
}

SeparationResult r_separated(const NRectangle& A, const NRectangle& B, double R) {
  check_compatible(A, B);
  const std::size_t n = A.particles();
  if (n >= 63) throw std::invalid_argument("particle number too large for exhaustive search");
  const NRectangle Ah = extend(A, R);
  const NRectangle Bh = extend(B, R);

  std::vector<std::uint64_t> masks;
  for (std::uint64_t m = 1; m < (std::uint64_t{1} << n); ++m) masks.push_back(m);
  std::stable_sort(masks.begin(), masks.end(), [](std::uint64_t x, std::uint64_t y) {
    return __builtin_popcountll(x) < __builtin_popcountll(y);
  });

  for (auto mask : masks) {
    std::vector<std::size_t> J;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::uint64_t{1} << i)) J.push_back(i);
    }
    const double d1 = disjunct_distance(Ah, Bh, J);
    if (d1 > 2 * R) return {true, J, SeparationCondition::first, d1};
    const double d2 = disjunct_distance(Bh, Ah, J);
    if (d2 > 2 * R) return {true, J, SeparationCondition::second, d2};
  }
  return {};
}

}  // namespace nbw
