#include "nbw/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "nbw/rng.hpp"

namespace nbw {

SingleSite::SingleSite(ProfileKind kind, double ell, double radius, std::size_t dim)
    : kind_(kind), ell_(ell), radius_(radius), dim_(dim) {
  if (!(ell > 0.0) || ell > 1.0) throw std::invalid_argument("plateau scale ell must lie in (0, 1]");
  if (dim == 0) throw std::invalid_argument("profile dimension must be at least 1");
  switch (kind) {
    case ProfileKind::cube:
      radius_ = ell / 2;
      break;
    case ProfileKind::ball:
      if (radius < ell * std::sqrt(static_cast<double>(dim)) / 2) {
        throw std::invalid_argument("ball profile radius must cover the plateau cube (radius >= ell*sqrt(d)/2)");
      }
      break;
    case ProfileKind::tent:
      if (!(radius > ell / 2)) throw std::invalid_argument("tent half-width must exceed ell/2");
      break;
  }
}

double SingleSite::operator()(std::span<const double> x) const {
  switch (kind_) {
    case ProfileKind::cube: {
      const double h = ell_ / 2;
      for (double v : x) {
        if (v < -h || v >= h) return 0.0;
      }
      return 1.0;
    }
    case ProfileKind::ball: {
      double s = 0.0;
      for (double v : x) s += v * v;
      return s < radius_ * radius_ ? 1.0 : 0.0;
    }
    case ProfileKind::tent: {
      double m = 0.0;
      for (double v : x) m = std::max(m, std::abs(v));
      const double h = ell_ / 2;
      if (m <= h) return 1.0;
      return std::clamp((radius_ - m) / (radius_ - h), 0.0, 1.0);
    }
  }
  return 0.0;
}

double SingleSite::support_halfwidth() const { return radius_; }

double SingleSite::support_radius() const {
  if (kind_ == ProfileKind::ball) return radius_;
  return radius_ * std::sqrt(static_cast<double>(dim_));
}

double SingleSite::plateau_inradius() const {
  if (kind_ == ProfileKind::ball) return radius_;
  return ell_ / 2;
}

std::string SingleSite::kind_name() const {
  switch (kind_) {
    case ProfileKind::cube: return "cube";
    case ProfileKind::ball: return "ball";
    case ProfileKind::tent: return "tent";
  }
  return "?";
}

SiteLayout SiteLayout::regular(std::size_t dim) {
  SiteLayout l;
  l.kind_ = LayoutKind::regular;
  l.dim_ = dim;
  return l;
}

SiteLayout SiteLayout::crooked(std::size_t dim, double amplitude, std::uint64_t seed) {
  if (amplitude < 0.0 || amplitude > 0.5) throw std::invalid_argument("crooked amplitude must lie in [0, 1/2]");
  SiteLayout l;
  l.kind_ = LayoutKind::crooked;
  l.dim_ = dim;
  l.amplitude_ = amplitude;
  l.seed_ = seed;
  return l;
}

SiteLayout SiteLayout::crooked_explicit(std::size_t dim, std::map<IntPoint, RealPoint> points) {
  SiteLayout l;
  l.kind_ = LayoutKind::crooked;
  l.dim_ = dim;
  for (const auto& [j, y] : points) {
    if (j.size() != dim || y.size() != dim) throw std::invalid_argument("crooked point dimension mismatch");
    for (std::size_t a = 0; a < dim; ++a) {
      const double off = std::abs(y[a] - static_cast<double>(j[a]));
      if (off > 0.5) throw std::invalid_argument("crooked point y_j must lie in the unit cube around j");
      l.amplitude_ = std::max(l.amplitude_, off);
    }
  }
  l.explicit_ = std::move(points);
  return l;
}

SiteLayout SiteLayout::delone(double cell, std::vector<IntPoint> cells, std::vector<RealPoint> gamma1,
                              std::vector<RealPoint> gamma2) {
  if (cells.size() != gamma1.size()) throw std::invalid_argument("Delone cells and points differ in length");
  if (!(cell > 0)) throw std::invalid_argument("Delone cell size must be positive");
  SiteLayout l;
  l.kind_ = LayoutKind::delone;
  l.dim_ = gamma1.empty() ? 1 : gamma1.front().size();
  l.cell_ = cell;
  l.amplitude_ = cell / 2;
  for (std::size_t k = 0; k < cells.size(); ++k) l.explicit_.emplace(cells[k], gamma1[k]);
  l.gamma2_ = std::move(gamma2);
  return l;
}

RealPoint SiteLayout::position(const IntPoint& site) const {
  if (site.size() != dim_) throw std::invalid_argument("site dimension mismatch");
  if (auto it = explicit_.find(site); it != explicit_.end()) return it->second;
  if (kind_ == LayoutKind::delone) throw std::out_of_range("Delone layout has no point in this cell");
  RealPoint y(dim_);
  for (std::size_t a = 0; a < dim_; ++a) y[a] = static_cast<double>(site[a]);
  if (kind_ == LayoutKind::crooked && amplitude_ > 0.0 && explicit_.empty()) {
    CounterRng rng(stream_key(stream_key({static_cast<std::uint64_t>(StreamDomain::layout), seed_}), site));
    for (std::size_t a = 0; a < dim_; ++a) y[a] += rng.uniform(-amplitude_, amplitude_);
  }
  return y;
}

bool SiteLayout::has_site(const IntPoint& site) const {
  if (kind_ == LayoutKind::delone) return explicit_.count(site) > 0;
  return site.size() == dim_;
}

double SiteLayout::max_offset() const {
  if (kind_ == LayoutKind::regular) return 0.0;
  return amplitude_;
}

namespace {

template <class Fn>
void for_each_index(const std::vector<std::int64_t>& lo, const std::vector<std::int64_t>& hi, Fn&& fn) {
  const std::size_t d = lo.size();
  for (std::size_t a = 0; a < d; ++a) {
    if (hi[a] < lo[a]) return;
  }
  IntPoint cur(lo);
  for (;;) {
    fn(cur);
    std::size_t a = d;
    for (;;) {
      if (a == 0) return;
      --a;
      if (++cur[a] <= hi[a]) break;
      cur[a] = lo[a];
    }
  }
}

}  // namespace

std::vector<IntPoint> SiteLayout::sites_near(const Box1& box, double reach) const {
  const double slack = reach + max_offset();
  std::vector<std::int64_t> lo(dim_), hi(dim_);
  for (std::size_t a = 0; a < dim_; ++a) {
    lo[a] = static_cast<std::int64_t>(std::ceil((box.lower(a) - slack) / cell_ - 1e-12));
    hi[a] = static_cast<std::int64_t>(std::floor((box.upper(a) + slack) / cell_ + 1e-12));
  }
  std::vector<IntPoint> out;
  for_each_index(lo, hi, [&](const IntPoint& j) {
    if (has_site(j)) out.push_back(j);
  });
  return out;
}

std::vector<IntPoint> SiteLayout::sites_near(std::span<const double> x, double reach) const {
  const double slack = reach + max_offset();
  std::vector<std::int64_t> lo(dim_), hi(dim_);
  for (std::size_t a = 0; a < dim_; ++a) {
    lo[a] = static_cast<std::int64_t>(std::ceil((x[a] - slack) / cell_ - 1e-12));
    hi[a] = static_cast<std::int64_t>(std::floor((x[a] + slack) / cell_ + 1e-12));
  }
  std::vector<IntPoint> out;
  for_each_index(lo, hi, [&](const IntPoint& j) {
    if (has_site(j)) out.push_back(j);
  });
  return out;
}

std::vector<IntPoint> SiteLayout::skeleton(const Box1& box) const {
  std::vector<std::int64_t> lo(dim_), hi(dim_);
  for (std::size_t a = 0; a < dim_; ++a) {
    lo[a] = static_cast<std::int64_t>(std::ceil(box.lower(a) / cell_ - 1e-12));
    hi[a] = static_cast<std::int64_t>(std::floor(box.upper(a) / cell_ + 1e-12));
  }
  std::vector<IntPoint> out;
  for_each_index(lo, hi, [&](const IntPoint& j) {
    if (has_site(j)) out.push_back(j);
  });
  return out;
}

std::string SiteLayout::kind_name() const {
  switch (kind_) {
    case LayoutKind::regular: return "regular";
    case LayoutKind::crooked: return "crooked";
    case LayoutKind::delone: return "delone";
  }
  return "?";
}

double PairProfile::operator()(double r) const {
  return amplitude * std::max(0.0, 1.0 - std::abs(r) / range);
}

Interaction Interaction::pair(PairProfile profile) {
  if (profile.amplitude < 0.0 || !(profile.range > 0.0)) {
    throw std::invalid_argument("pair interaction needs amplitude >= 0 and range > 0");
  }
  Interaction i;
  i.kind_ = Kind::pair;
  i.pair_ = profile;
  return i;
}

Interaction Interaction::custom(Custom fn, double bound) {
  if (!fn) throw std::invalid_argument("custom interaction needs a callable");
  Interaction i;
  i.kind_ = Kind::custom;
  i.custom_ = std::move(fn);
  i.custom_bound_ = bound;
  return i;
}

std::string Interaction::kind_name() const {
  switch (kind_) {
    case Kind::none: return "none";
    case Kind::pair: return "pair";
    case Kind::custom: return "custom";
  }
  return "?";
}

double Interaction::operator()(std::span<const double> x, std::size_t n_particles, std::size_t dim) const {
  switch (kind_) {
    case Kind::none:
      return 0.0;
    case Kind::pair: {
      double u = 0.0;
      for (std::size_t i = 0; i < n_particles; ++i) {
        for (std::size_t k = i + 1; k < n_particles; ++k) {
          double s = 0.0;
          for (std::size_t a = 0; a < dim; ++a) {
            const double r = x[i * dim + a] - x[k * dim + a];
            s += r * r;
          }
          u += pair_(std::sqrt(s));
        }
      }
      return u;
    }
    case Kind::custom:
      return custom_(x, n_particles, dim);
  }
  return 0.0;
}

double Interaction::bound(std::size_t n_particles) const {
  switch (kind_) {
    case Kind::none: return 0.0;
    case Kind::pair: return pair_.amplitude * static_cast<double>(n_particles * (n_particles - 1) / 2);
    case Kind::custom: return custom_bound_;
  }
  return 0.0;
}

double Background::operator()(std::span<const double> x) const {
  if (amplitude == 0.0) return offset;
  double v = offset;
  for (double c : x) v += amplitude * std::cos(2 * std::numbers::pi * c);
  return v;
}

double Background::minimum(std::size_t dim) const {
  return offset - std::abs(amplitude) * static_cast<double>(dim);
}

double PotentialSpec::reach() const { return profile.support_halfwidth(); }

std::vector<IntPoint> PotentialSpec::required_sites(const Box1& box) const {
  return layout.sites_near(box, reach());
}

std::vector<IntPoint> PotentialSpec::required_sites(const NRectangle& rect) const {
  std::vector<IntPoint> out;
  for (const auto& f : rect.factors) {
    auto s = required_sites(f);
    out.insert(out.end(), s.begin(), s.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double default_delta(double ell) { return std::min(ell / 2, 0.5); }

double one_body_potential(const PotentialSpec& spec, const DisorderField& field, std::span<const double> x) {
  const std::size_t d = spec.layout.dim();
  if (x.size() != d) throw std::invalid_argument("one-body potential: point dimension mismatch");
  double v = 0.0;
  RealPoint shifted(d);
  for (const auto& j : spec.layout.sites_near(x, spec.reach())) {
    const RealPoint y = spec.layout.position(j);
    for (std::size_t a = 0; a < d; ++a) shifted[a] = x[a] - y[a];
    const double u = spec.profile(shifted);
    if (u == 0.0) continue;
    if (!field.covers(j)) throw std::invalid_argument("disorder field does not cover a site whose bump reaches x");
    v += field.at(j) * u;
  }
  for (const auto& z : spec.layout.background_points()) {
    for (std::size_t a = 0; a < d; ++a) shifted[a] = x[a] - z[a];
    v += spec.profile(shifted);
  }
  if (!spec.background.is_zero()) v += spec.background(x);
  return v;
}

double n_body_potential(const PotentialSpec& spec, const DisorderField& field, std::span<const double> x,
                        std::size_t n_particles) {
  const std::size_t d = spec.layout.dim();
  if (x.size() != d * n_particles) throw std::invalid_argument("N-body potential: point dimension mismatch");
  double v = 0.0;
  for (std::size_t i = 0; i < n_particles; ++i) v += one_body_potential(spec, field, x.subspan(i * d, d));
  return v;
}

namespace {

bool in_closed_box(const Box1& box, const IntPoint& j, double cell) {
  for (std::size_t a = 0; a < box.dim(); ++a) {
    const double c = cell * static_cast<double>(j[a]);
    if (c < box.lower(a) - 1e-12 || c > box.upper(a) + 1e-12) return false;
  }
  return true;
}

}  // namespace

double comparison_potential_W(const SiteLayout& layout, double delta, const NRectangle& rect,
                              std::span<const double> x) {
  const std::size_t d = layout.dim();
  const std::size_t n = rect.particles();
  if (x.size() != n * d) throw std::invalid_argument("comparison potential: point dimension mismatch");

  // Per block, squared distances to skeleton points closer than δ.
  std::vector<std::vector<double>> near(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.subspan(i * d, d);
    for (const auto& j : layout.sites_near(xi, delta)) {
      if (!in_closed_box(rect.factors[i], j, layout.cell())) continue;
      const RealPoint y = layout.position(j);
      double s = 0.0;
      for (std::size_t a = 0; a < d; ++a) s += (xi[a] - y[a]) * (xi[a] - y[a]);
      if (s < delta * delta) near[i].push_back(s);
    }
    if (near[i].empty()) return 0.0;
  }

  double count = 0.0;
  std::vector<std::size_t> pick(n, 0);
  for (;;) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += near[i][pick[i]];
    if (s < delta * delta) count += 1.0;
    std::size_t i = n;
    for (;;) {
      if (i == 0) return count;
      --i;
      if (++pick[i] < near[i].size()) break;
      pick[i] = 0;
    }
  }
}

LowerBoundReport check_lower_bound(const PotentialSpec& spec, const NRectangle& rect,
                                   const std::vector<RealPoint>& grid) {
  const std::size_t d = spec.layout.dim();
  const std::size_t n = rect.particles();
  LowerBoundReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();

  std::vector<std::vector<IntPoint>> skeleton(n);
  for (std::size_t i = 0; i < n; ++i) skeleton[i] = spec.layout.skeleton(rect.factors[i]);

  RealPoint shifted(d);
  for (const auto& x : grid) {
    if (x.size() != n * d) throw std::invalid_argument("lower-bound grid point dimension mismatch");
    const std::span<const double> xs(x);
    double lhs = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto xi = xs.subspan(i * d, d);
      for (const auto& j : spec.layout.sites_near(xi, spec.reach())) {
        if (!in_closed_box(rect.factors[i], j, spec.layout.cell())) continue;
        const RealPoint y = spec.layout.position(j);
        for (std::size_t a = 0; a < d; ++a) shifted[a] = xi[a] - y[a];
        lhs += spec.profile(shifted);
      }
    }
    const double rhs = static_cast<double>(n) * comparison_potential_W(spec.layout, spec.delta, rect, xs);
    const double margin = lhs - rhs;
    ++rep.points_checked;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_point = x;
    }
  }
  if (rep.points_checked == 0) rep.worst_margin = 0.0;
  rep.pass = rep.worst_margin >= 0.0;
  return rep;
}

std::string check_hypotheses(const PotentialSpec& spec, const std::vector<IntPoint>& sites) {
  const double delta = spec.delta;
  if (!(delta > 0.0) || delta > 0.5) {
    return "delta must lie in (0, 1/2] (comparison balls B(y_j, delta) inside unit cells)";
  }
  if (delta > spec.profile.plateau_inradius() + 1e-15) {
    return "delta must not exceed the plateau inradius of u (ell/2 for cube and tent profiles), "
           "otherwise u(x - y_j) >= 1 fails on B(y_j, delta)";
  }
  const double half = spec.layout.cell() / 2;
  for (const auto& j : sites) {
    if (!spec.layout.has_site(j)) continue;
    const RealPoint y = spec.layout.position(j);
    for (std::size_t a = 0; a < y.size(); ++a) {
      const double off = std::abs(y[a] - spec.layout.cell() * static_cast<double>(j[a]));
      if (off + delta > half + 1e-12) {
        return "ball B(y_j, delta) leaves the cell of site j: need |y_j - j|_inf + delta <= cell/2";
      }
    }
  }
  return {};
}

}  // namespace nbw
