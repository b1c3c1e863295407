#include "nbw/delone.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "nbw/rng.hpp"

namespace nbw {

namespace {

double sup_distance(const RealPoint& a, const RealPoint& b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

double euclid_sq(const RealPoint& a, const RealPoint& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

std::string format_point(const RealPoint& p) {
  std::ostringstream os;
  os << "(";
  for (std::size_t k = 0; k < p.size(); ++k) os << (k ? ", " : "") << p[k];
  os << ")";
  return os.str();
}

struct Region {
  RealPoint lo;
  RealPoint hi;
};

// Searches for an empty closed cube [t, t+M]^d inside the region. A candidate
// lower face is either the region boundary (closed) or a point coordinate, in
// which case the face sits just above it (open). Slab filtering keeps the
// search local: along axis a only points inside the current slab can block.
class CoveringSearch {
 public:
  CoveringSearch(const std::vector<RealPoint>& pts, double M, Region region)
      : pts_(pts), M_(M), region_(std::move(region)), d_(region_.lo.size()) {}

  std::optional<RealPoint> find_empty() {
    std::vector<std::size_t> all(pts_.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    RealPoint t(d_);
    if (recurse(0, all, t)) return t;
    return std::nullopt;
  }

 private:
  bool recurse(std::size_t axis, const std::vector<std::size_t>& active, RealPoint& t) {
    if (axis == d_) return active.empty();
    const double lo = region_.lo[axis];
    const double hi = region_.hi[axis];
    if (lo + M_ > hi) return false;

    std::vector<std::pair<double, bool>> candidates{{lo, false}};
    for (auto i : active) {
      const double c = pts_[i][axis];
      if (c >= lo && c + M_ < hi) candidates.emplace_back(c, true);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<std::size_t> slab;
    for (const auto& [start, open] : candidates) {
      slab.clear();
      for (auto i : active) {
        const double c = pts_[i][axis];
        const bool above = open ? c > start : c >= start;
        if (above && c <= start + M_) slab.push_back(i);
      }
      if (slab.empty()) {
        // Nudge open faces inward so the reported cube is genuinely closed and empty.
        t[axis] = open ? start + 1e-9 * std::max(1.0, M_) : start;
        for (std::size_t a = axis + 1; a < d_; ++a) t[a] = region_.lo[a];
        return true;
      }
      t[axis] = open ? start + 1e-9 * std::max(1.0, M_) : start;
      if (recurse(axis + 1, slab, t)) return true;
    }
    return false;
  }

  const std::vector<RealPoint>& pts_;
  double M_;
  Region region_;
  std::size_t d_;
};

bool cube_empty_closed(const std::vector<RealPoint>& pts, const RealPoint& t, double side) {
  for (const auto& p : pts) {
    bool inside = true;
    for (std::size_t a = 0; a < t.size() && inside; ++a) inside = p[a] >= t[a] && p[a] <= t[a] + side;
    if (inside) return false;
  }
  return true;
}

}  // namespace

DeloneSet generate_delone(double m, double M, const Box1& working_box, std::uint64_t seed,
                          const DeloneOptions& options) {
  if (!(m > 0.0) || !(M > m) || !std::isfinite(M)) {
    throw std::invalid_argument("Delone parameters need 0 < m < M < inf");
  }
  if (working_box.side < 2 * M) throw std::invalid_argument("working box side must be at least 2M");
  if (options.jitter < 0.0 || options.jitter > 1.0) throw std::invalid_argument("jitter fraction must lie in [0, 1]");

  const std::size_t d = working_box.dim();
  const double amp = options.jitter * (M - m) / 4;
  const double g = M - 2 * amp;

  DeloneSet out{m, M, working_box, {}};
  CounterRng rng(stream_key({static_cast<std::uint64_t>(StreamDomain::delone), seed}));

  std::vector<std::int64_t> klo(d), khi(d);
  for (std::size_t a = 0; a < d; ++a) {
    klo[a] = static_cast<std::int64_t>(std::floor((working_box.lower(a) - amp) / g)) - 1;
    khi[a] = static_cast<std::int64_t>(std::ceil((working_box.upper(a) + amp) / g)) + 1;
  }
  IntPoint k(klo);
  for (;;) {
    RealPoint p(d);
    for (std::size_t a = 0; a < d; ++a) {
      const double xi = amp > 0 ? rng.uniform(-amp, amp) : 0.0;
      p[a] = static_cast<double>(k[a]) * g + xi;
    }
    if (working_box.contains(p)) out.points.push_back(std::move(p));
    std::size_t a = d;
    bool done = false;
    for (;;) {
      if (a == 0) {
        done = true;
        break;
      }
      --a;
      if (++k[a] <= khi[a]) break;
      k[a] = klo[a];
    }
    if (done) break;
  }

  const auto attempts = static_cast<std::size_t>(options.extra_per_cell * static_cast<double>(out.points.size()));
  for (std::size_t i = 0; i < attempts; ++i) {
    RealPoint p(d);
    for (std::size_t a = 0; a < d; ++a) p[a] = rng.uniform(working_box.lower(a), working_box.upper(a));
    const bool spaced = std::all_of(out.points.begin(), out.points.end(),
                                    [&](const RealPoint& q) { return sup_distance(p, q) >= m; });
    if (spaced) out.points.push_back(std::move(p));
  }

  auto check = verify_delone(out, 0.0);
  if (!check.ok) {
    throw std::runtime_error("Delone generation failed verification: " + check.message);
  }
  return out;
}

DeloneCheck verify_delone(const std::vector<RealPoint>& points, double m, double M, const Box1& working_box,
                          std::optional<double> margin) {
  DeloneCheck out;
  const std::size_t d = working_box.dim();
  const double mg = margin.value_or(M);

  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return points[i][0] < points[j][0]; });
  for (std::size_t ii = 0; ii < order.size(); ++ii) {
    const auto& p = points[order[ii]];
    for (std::size_t jj = ii + 1; jj < order.size(); ++jj) {
      const auto& q = points[order[jj]];
      if (q[0] - p[0] >= m) break;
      if (sup_distance(p, q) < m) {
        out.ok = false;
        out.violation = DeloneViolation::spacing;
        out.cube_lower.resize(d);
        for (std::size_t a = 0; a < d; ++a) out.cube_lower[a] = std::min(p[a], q[a]);
        out.cube_side = m;
        out.message = "points " + format_point(p) + " and " + format_point(q) +
                      " share a half-open cube of side m";
        return out;
      }
    }
  }

  Region region{RealPoint(d), RealPoint(d)};
  for (std::size_t a = 0; a < d; ++a) {
    region.lo[a] = working_box.lower(a) + mg;
    region.hi[a] = working_box.upper(a) - mg;
  }

  auto report_cover = [&](const RealPoint& t) {
    out.ok = false;
    out.violation = DeloneViolation::covering;
    out.cube_lower = t;
    out.cube_side = M;
    out.message = "closed cube of side M at " + format_point(t) + " contains no point";
  };

  // Lattice sweep of cube positions at resolution min(m, M)/2.
  const double res = std::min(m, M) / 2;
  bool fits = true;
  std::vector<std::size_t> steps(d);
  for (std::size_t a = 0; a < d; ++a) {
    const double span = region.hi[a] - region.lo[a] - M;
    if (span < 0) fits = false;
    else steps[a] = static_cast<std::size_t>(std::floor(span / res + 1e-12));
  }
  if (!fits) return out;
  std::vector<std::size_t> idx(d, 0);
  for (;;) {
    RealPoint t(d);
    for (std::size_t a = 0; a < d; ++a) t[a] = region.lo[a] + static_cast<double>(idx[a]) * res;
    if (cube_empty_closed(points, t, M)) {
      report_cover(t);
      return out;
    }
    std::size_t a = d;
    bool done = false;
    for (;;) {
      if (a == 0) {
        done = true;
        break;
      }
      --a;
      if (++idx[a] <= steps[a]) break;
      idx[a] = 0;
    }
    if (done) break;
  }

  // Critical positions catch empty cubes that fall between lattice positions.
  CoveringSearch search(points, M, region);
  if (auto t = search.find_empty()) report_cover(*t);
  return out;
}

DeloneCheck verify_delone(const DeloneSet& set, std::optional<double> margin) {
  return verify_delone(set.points, set.m, set.M, set.working_box, margin);
}

DeloneSplit split_delone(const DeloneSet& set) {
  const std::size_t d = set.dim();
  const double M = set.M;
  std::vector<std::int64_t> jlo(d), jhi(d);
  for (std::size_t a = 0; a < d; ++a) {
    jlo[a] = static_cast<std::int64_t>(std::ceil((set.working_box.lower(a) + M / 2) / M - 1e-12));
    jhi[a] = static_cast<std::int64_t>(std::floor((set.working_box.upper(a) - M / 2) / M + 1e-12));
  }

  auto cell_of = [&](const RealPoint& p) {
    IntPoint j(d);
    for (std::size_t a = 0; a < d; ++a) j[a] = static_cast<std::int64_t>(std::floor((p[a] + M / 2) / M));
    return j;
  };
  auto complete = [&](const IntPoint& j) {
    for (std::size_t a = 0; a < d; ++a) {
      if (j[a] < jlo[a] || j[a] > jhi[a]) return false;
    }
    return true;
  };

  std::map<IntPoint, std::size_t> chosen;
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    const IntPoint j = cell_of(set.points[i]);
    if (!complete(j)) continue;
    RealPoint c(d);
    for (std::size_t a = 0; a < d; ++a) c[a] = M * static_cast<double>(j[a]);
    auto it = chosen.find(j);
    if (it == chosen.end() || euclid_sq(set.points[i], c) < euclid_sq(set.points[it->second], c)) {
      chosen[j] = i;
    }
  }

  std::vector<bool> used(set.points.size(), false);
  for (const auto& [j, i] : chosen) used[i] = true;

  // Every complete cell must be represented; a closed-cube point on the upper
  // face is accepted when the half-open cell is empty.
  bool all_cells = jlo.empty() ? false : true;
  for (std::size_t a = 0; a < d; ++a) all_cells = all_cells && jlo[a] <= jhi[a];
  if (all_cells) {
    IntPoint j(jlo);
    for (;;) {
      if (!chosen.count(j)) {
        bool found = false;
        for (std::size_t i = 0; i < set.points.size() && !found; ++i) {
          if (used[i]) continue;
          bool inside = true;
          for (std::size_t a = 0; a < d && inside; ++a) {
            const double c = M * static_cast<double>(j[a]);
            inside = set.points[i][a] >= c - M / 2 && set.points[i][a] <= c + M / 2;
          }
          if (inside) {
            chosen[j] = i;
            used[i] = true;
            found = true;
          }
        }
        if (!found) throw std::runtime_error("Delone split: cell without a point; set is not M-covering");
      }
      std::size_t a = d;
      bool done = false;
      for (;;) {
        if (a == 0) {
          done = true;
          break;
        }
        --a;
        if (++j[a] <= jhi[a]) break;
        j[a] = jlo[a];
      }
      if (done) break;
    }
  }

  DeloneSplit out;
  for (const auto& [j, i] : chosen) {
    out.cells.push_back(j);
    out.gamma1.push_back(set.points[i]);
  }
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    if (!used[i]) out.gamma2.push_back(set.points[i]);
  }
  return out;
}

void write_delone(std::ostream& os, const DeloneSet& set) {
  os.precision(17);
  os << "# delone m=" << set.m << " M=" << set.M << " d=" << set.dim() << "\n";
  os << "# box";
  for (double c : set.working_box.center) os << " " << c;
  os << " " << set.working_box.side << "\n";
  for (const auto& p : set.points) {
    for (std::size_t a = 0; a < p.size(); ++a) os << (a ? " " : "") << p[a];
    os << "\n";
  }
}

DeloneSet read_delone(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty Delone point list");
  DeloneSet out;
  std::size_t d = 0;
  {
    std::istringstream hs(line);
    std::string hash, tag;
    hs >> hash >> tag;
    if (hash != "#" || tag != "delone") throw std::runtime_error("missing '# delone' header");
    std::string kv;
    while (hs >> kv) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw std::runtime_error("malformed header field: " + kv);
      const std::string key = kv.substr(0, eq);
      const double value = std::stod(kv.substr(eq + 1));
      if (key == "m") out.m = value;
      else if (key == "M") out.M = value;
      else if (key == "d") d = static_cast<std::size_t>(value);
      else throw std::runtime_error("unknown header field: " + key);
    }
  }
  if (d == 0) throw std::runtime_error("Delone header lacks d");

  bool have_box = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, tag;
      ls >> hash >> tag;
      if (tag == "box") {
        RealPoint c(d);
        double side = 0.0;
        for (auto& v : c) ls >> v;
        ls >> side;
        if (!ls) throw std::runtime_error("malformed box line");
        out.working_box = Box1(std::move(c), side);
        have_box = true;
      }
      continue;
    }
    RealPoint p(d);
    for (auto& v : p) {
      if (!(ls >> v)) throw std::runtime_error("point line has fewer than d coordinates: " + line);
    }
    double extra;
    if (ls >> extra) throw std::runtime_error("point line has more than d coordinates: " + line);
    out.points.push_back(std::move(p));
  }
  if (!have_box) {
    // Bounding box of the points when the file carries none.
    RealPoint lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
    for (const auto& p : out.points) {
      for (std::size_t a = 0; a < d; ++a) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
      }
    }
    double side = 0.0;
    RealPoint c(d, 0.0);
    for (std::size_t a = 0; a < d; ++a) {
      side = std::max(side, hi[a] - lo[a]);
      c[a] = 0.5 * (lo[a] + hi[a]);
    }
    out.working_box = Box1(std::move(c), std::max(side, 1e-9));
  }
  return out;
}

}  // namespace nbw
