#include "nbw/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "nbw/delone.hpp"

namespace nbw {

using nlohmann::json;

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::wegner1: return "wegner1";
    case ExperimentKind::wegner2: return "wegner2";
    case ExperimentKind::ids: return "ids";
    case ExperimentKind::ids_conv: return "ids-conv";
    case ExperimentKind::lipschitz: return "lipschitz";
    case ExperimentKind::ucp: return "ucp";
    case ExperimentKind::delone_check: return "delone-check";
    case ExperimentKind::selftest: return "selftest";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::wegner1, ExperimentKind::wegner2, ExperimentKind::ids, ExperimentKind::ids_conv,
                 ExperimentKind::lipschitz, ExperimentKind::ucp, ExperimentKind::delone_check,
                 ExperimentKind::selftest}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown experiment kind '" + s + "'");
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

/// Strict reader over one JSON object. Every value read (or defaulted) is
/// mirrored into `out`, and keys never read are reported as unknown.
class Node {
 public:
  Node(const json& in, json& out, std::string path) : in_(in), out_(out), path_(std::move(path)) {
    if (!in_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    out_ = json::object();
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return in_.contains(key) && !in_.at(key).is_null(); }

  template <class T>
  T get(const std::string& key, const T& fallback) {
    seen_.insert(key);
    T v = has(key) ? convert<T>(key) : fallback;
    out_[key] = v;
    return v;
  }

  template <class T>
  T require(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) throw ConfigError(at(key), "required key is missing");
    T v = convert<T>(key);
    out_[key] = v;
    return v;
  }

  template <class T>
  std::optional<T> optional(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) {
      out_[key] = nullptr;
      return std::nullopt;
    }
    T v = convert<T>(key);
    out_[key] = v;
    return v;
  }

  /// Raw access for structured values; the caller writes the normalized form.
  const json* raw(const std::string& key) {
    seen_.insert(key);
    return has(key) ? &in_.at(key) : nullptr;
  }
  json& out(const std::string& key) { return out_[key]; }

  Node child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Node(has(key) ? in_.at(key) : empty, out_[key], at(key));
  }

  void finish() const {
    for (auto it = in_.begin(); it != in_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }
  }

 private:
  template <class T>
  T convert(const std::string& key) const {
    const json& v = in_.at(key);
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::invalid_argument("expected a number");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
        if (std::is_unsigned_v<T> && v.get<long long>() < 0 && !v.is_number_unsigned()) {
          throw std::invalid_argument("expected a nonnegative integer");
        }
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw std::invalid_argument("expected true or false");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::invalid_argument("expected a string");
      }
      return v.get<T>();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(at(key), e.what());
    }
  }

  const json& in_;
  json& out_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

CouplingDistribution parse_distribution(Node n) {
  const std::string kind = n.get<std::string>("kind", "uniform");
  try {
    if (kind == "uniform") {
      const double a = n.get<double>("a", 0.0);
      const double b = n.get<double>("b", 1.0);
      n.finish();
      if (!(b > a)) throw ConfigError(n.at("b"), "uniform distribution needs b > a");
      return CouplingDistribution::uniform(a, b);
    }
    if (kind == "atomic") {
      const json* atoms = n.raw("atoms");
      const json* probs = n.raw("probs");
      if (!atoms) throw ConfigError(n.at("atoms"), "required key is missing");
      if (!probs) throw ConfigError(n.at("probs"), "required key is missing");
      auto a = number_list(*atoms, n.at("atoms"));
      auto p = number_list(*probs, n.at("probs"));
      n.out("atoms") = a;
      n.out("probs") = p;
      n.finish();
      return CouplingDistribution::atomic(a, p);
    }
    if (kind == "density") {
      const json* edges = n.raw("edges");
      const json* weights = n.raw("weights");
      if (!edges) throw ConfigError(n.at("edges"), "required key is missing");
      if (!weights) throw ConfigError(n.at("weights"), "required key is missing");
      auto e = number_list(*edges, n.at("edges"));
      auto w = number_list(*weights, n.at("weights"));
      n.out("edges") = e;
      n.out("weights") = w;
      n.finish();
      return CouplingDistribution::piecewise(e, w);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    throw ConfigError(n.at("kind"), ex.what());
  }
  throw ConfigError(n.at("kind"), "unknown distribution kind '" + kind + "' (uniform, atomic, density)");
}

Box1 parse_box(const json& v, const std::string& path, std::size_t d) {
  if (!v.is_object()) throw ConfigError(path, "expected an object with 'lower' and 'side'");
  for (auto it = v.begin(); it != v.end(); ++it) {
    if (it.key() != "lower" && it.key() != "side") throw ConfigError(path + "." + it.key(), "unknown key");
  }
  if (!v.contains("lower")) throw ConfigError(path + ".lower", "required key is missing");
  if (!v.contains("side") || !v.at("side").is_number()) throw ConfigError(path + ".side", "expected a number");
  auto lower = number_list(v.at("lower"), path + ".lower");
  if (lower.size() != d) throw ConfigError(path + ".lower", "expected " + std::to_string(d) + " coordinates");
  const double side = v.at("side").get<double>();
  if (!(side > 0)) throw ConfigError(path + ".side", "side must be positive");
  return Box1::from_lower(lower, side);
}

NRectangle parse_rect(Node& n, const std::string& key, std::size_t N, std::size_t d) {
  const json* v = n.raw(key);
  if (!v) throw ConfigError(n.at(key), "required key is missing");
  if (!v->is_array() || v->size() != N) {
    throw ConfigError(n.at(key), "expected a list of " + std::to_string(N) + " factor boxes");
  }
  std::vector<Box1> f;
  json norm = json::array();
  for (std::size_t i = 0; i < N; ++i) {
    f.push_back(parse_box((*v)[i], n.at(key) + "[" + std::to_string(i) + "]", d));
    json b;
    RealPoint lower(d);
    for (std::size_t a = 0; a < d; ++a) lower[a] = f.back().lower(a);
    b["lower"] = lower;
    b["side"] = f.back().side;
    norm.push_back(b);
  }
  n.out(key) = norm;
  return NRectangle(f);
}

std::vector<SpectrumWindow> parse_windows(Node& n, std::optional<double> E0) {
  const json* v = n.raw("windows");
  if (!v) throw ConfigError(n.at("windows"), "required key is missing");
  const std::string path = n.at("windows");
  std::vector<std::pair<double, double>> raw;
  if (v->is_array()) {
    for (std::size_t i = 0; i < v->size(); ++i) {
      const auto p = number_list((*v)[i], path + "[" + std::to_string(i) + "]");
      if (p.size() != 2) throw ConfigError(path + "[" + std::to_string(i) + "]", "expected [lo, hi]");
      raw.emplace_back(p[0], p[1]);
    }
  } else if (v->is_object() && v->contains("center")) {
    for (auto it = v->begin(); it != v->end(); ++it) {
      if (it.key() != "center" && it.key() != "widths") throw ConfigError(path + "." + it.key(), "unknown key");
    }
    if (!v->at("center").is_number()) throw ConfigError(path + ".center", "expected a number");
    if (!v->contains("widths")) throw ConfigError(path + ".widths", "required key is missing");
    const double c = v->at("center").get<double>();
    for (double w : number_list(v->at("widths"), path + ".widths")) raw.emplace_back(c - w / 2, c + w / 2);
  } else if (v->is_object() && v->contains("from")) {
    for (auto it = v->begin(); it != v->end(); ++it) {
      if (it.key() != "from" && it.key() != "to" && it.key() != "width") {
        throw ConfigError(path + "." + it.key(), "unknown key");
      }
    }
    for (const char* k : {"from", "to", "width"}) {
      if (!v->contains(k) || !v->at(k).is_number()) throw ConfigError(path + "." + k, "expected a number");
    }
    const double from = v->at("from").get<double>();
    const double to = v->at("to").get<double>();
    const double width = v->at("width").get<double>();
    if (!(width > 0) || !(to > from)) throw ConfigError(path, "tiling needs width > 0 and to > from");
    const auto n_tiles = static_cast<std::size_t>(std::llround((to - from) / width));
    if (n_tiles == 0 || std::abs(static_cast<double>(n_tiles) * width - (to - from)) > 1e-9 * (1 + to - from)) {
      throw ConfigError(path, "width must divide to - from");
    }
    for (std::size_t k = 0; k < n_tiles; ++k) {
      raw.emplace_back(from + width * static_cast<double>(k),
                       k + 1 == n_tiles ? to : from + width * static_cast<double>(k + 1));
    }
  } else {
    throw ConfigError(path, "expected a list of [lo, hi] pairs, {center, widths} or {from, to, width}");
  }
  if (raw.empty()) throw ConfigError(path, "at least one window is required");
  std::vector<SpectrumWindow> out;
  json norm = json::array();
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto [lo, hi] = raw[i];
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (!(lo <= hi)) throw ConfigError(p, "window needs lo <= hi");
    if (E0 && hi > *E0) {
      std::ostringstream os;
      os << "window [" << lo << ", " << hi << "] lies above E0 = " << *E0;
      throw ConfigError(p, os.str());
    }
    out.emplace_back(lo, hi, E0);
    norm.push_back({lo, hi});
  }
  n.out("windows") = norm;
  return out;
}

std::vector<double> parse_volumes(Node& n, int p) {
  const json* v = n.raw("volumes");
  if (!v) throw ConfigError(n.at("volumes"), "required key is missing");
  auto vols = number_list(*v, n.at("volumes"));
  if (vols.empty()) throw ConfigError(n.at("volumes"), "at least one volume is required");
  for (std::size_t i = 0; i < vols.size(); ++i) {
    const std::string path = n.at("volumes") + "[" + std::to_string(i) + "]";
    if (!(vols[i] > 0)) throw ConfigError(path, "cube side must be positive");
    const double cells = vols[i] * p;
    if (std::abs(cells - std::round(cells)) > 1e-9) {
      throw ConfigError(path, "points_per_unit * L must be an integer");
    }
  }
  n.out("volumes") = vols;
  return vols;
}

EnergyGrid parse_grid(Node n) {
  const double lo = n.require<double>("lo");
  const double hi = n.require<double>("hi");
  const double step = n.require<double>("step");
  n.finish();
  if (!(step > 0)) throw ConfigError(n.at("step"), "step must be positive");
  if (!(hi > lo)) throw ConfigError(n.at("hi"), "hi must exceed lo");
  return EnergyGrid::covering(lo, hi, step);
}

SiteLayout parse_layout(Node n, std::size_t d) {
  const std::string kind = n.get<std::string>("kind", "regular");
  if (kind == "regular") {
    n.finish();
    return SiteLayout::regular(d);
  }
  if (kind == "crooked") {
    const double amp = n.get<double>("amplitude", 0.25);
    const auto seed = n.get<std::uint64_t>("seed", 0);
    n.finish();
    if (!(amp >= 0.0) || amp > 0.5) throw ConfigError(n.at("amplitude"), "crooked amplitude must lie in [0, 1/2]");
    return SiteLayout::crooked(d, amp, seed);
  }
  if (kind == "delone") {
    DeloneSet set;
    if (n.has("points_file")) {
      const auto file = n.get<std::string>("points_file", "");
      n.finish();
      std::ifstream is(file);
      if (!is) throw ConfigError(n.at("points_file"), "cannot open '" + file + "'");
      try {
        set = read_delone(is);
      } catch (const std::exception& e) {
        throw ConfigError(n.at("points_file"), e.what());
      }
      if (set.dim() != d) throw ConfigError(n.at("points_file"), "point dimension does not match system.dim");
    } else {
      const double m = n.require<double>("m");
      const double M = n.require<double>("M");
      const double side = n.require<double>("box_side");
      const auto seed = n.get<std::uint64_t>("seed", 0);
      DeloneOptions opts;
      opts.jitter = n.get<double>("jitter", 1.0);
      n.finish();
      if (!(m > 0) || !(M > m)) throw ConfigError(n.at("M"), "Delone parameters need 0 < m < M");
      try {
        set = generate_delone(m, M, Box1(RealPoint(d, 0.0), side), seed, opts);
      } catch (const std::exception& e) {
        throw ConfigError(n.at("kind"), e.what());
      }
    }
    const DeloneSplit split = split_delone(set);
    return SiteLayout::delone(set.M, split.cells, split.gamma1, split.gamma2);
  }
  throw ConfigError(n.at("kind"), "unknown layout kind '" + kind + "' (regular, crooked, delone)");
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  json norm;
  Node root(doc, norm, "");
  const int version = root.require<int>("schema_version");
  if (version != kSchemaVersion) {
    throw ConfigError("schema_version", "unsupported schema version " + std::to_string(version));
  }

  // system
  Node sys = root.child("system");
  const auto d = sys.get<std::size_t>("dim", 1);
  const auto N = sys.get<std::size_t>("particles", 1);
  const std::string bc = sys.get<std::string>("boundary", "dirichlet");
  const int p = sys.get<int>("points_per_unit", 2);
  const auto E0 = sys.optional<double>("E0");
  AssemblyOptions assembly;
  assembly.max_dimension = sys.get<std::size_t>("max_dimension", assembly.max_dimension);
  SolverOptions solver;
  solver.dense_threshold = sys.get<std::size_t>("dense_threshold", solver.dense_threshold);
  solver.tolerance = sys.get<double>("solver_tolerance", solver.tolerance);
  sys.finish();
  if (d < 1) throw ConfigError("system.dim", "dimension must be at least 1");
  if (N < 1) throw ConfigError("system.particles", "particle count must be at least 1");
  if (p < 1) throw ConfigError("system.points_per_unit", "points_per_unit must be at least 1");
  Boundary boundary;
  try {
    boundary = boundary_from_string(bc);
  } catch (const std::exception& e) {
    throw ConfigError("system.boundary", e.what());
  }

  // potential
  Node pot = root.child("potential");
  const std::string profile = pot.get<std::string>("profile", "cube");
  const double ell = pot.get<double>("ell", 1.0);
  if (!(ell > 0.0) || ell > 1.0) throw ConfigError("potential.ell", "ell must lie in (0, 1]");
  std::optional<SingleSite> site;
  try {
    if (profile == "cube") {
      site = SingleSite::cube(ell, d);
    } else if (profile == "ball") {
      site = SingleSite::ball(ell, pot.get<double>("radius", ell * std::sqrt(static_cast<double>(d)) / 2), d);
    } else if (profile == "tent") {
      site = SingleSite::tent(ell, pot.get<double>("radius", 0.5), d);
    } else {
      throw ConfigError("potential.profile", "unknown profile '" + profile + "' (cube, ball, tent)");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("potential.radius", e.what());
  }
  const double delta = pot.get<double>("delta", default_delta(ell));
  if (!(delta > 0.0) || delta > 0.5) {
    throw ConfigError("potential.delta",
                      "delta must lie in (0, 1/2]: the unique continuation bound requires δ ∈ (0, 1/2]");
  }
  if (delta > ell / 2 + 1e-15) {
    throw ConfigError("potential.delta",
                      "delta exceeds ell/2: the ball B(0, δ) must fit inside the plateau cube of side ell");
  }
  SiteLayout layout = parse_layout(pot.child("layout"), d);
  Node inter = pot.child("interaction");
  const std::string ikind = inter.get<std::string>("kind", "none");
  Interaction interaction;
  if (ikind == "pair") {
    PairProfile pp;
    pp.amplitude = inter.get<double>("amplitude", 1.0);
    pp.range = inter.get<double>("range", 1.0);
    if (!(pp.amplitude >= 0)) throw ConfigError("potential.interaction.amplitude", "amplitude must be nonnegative");
    if (!(pp.range > 0)) throw ConfigError("potential.interaction.range", "range must be positive");
    interaction = Interaction::pair(pp);
  } else if (ikind != "none") {
    throw ConfigError("potential.interaction.kind", "unknown interaction '" + ikind + "' (none, pair)");
  }
  inter.finish();
  Node bg = pot.child("background");
  Background background{bg.get<double>("offset", 0.0), bg.get<double>("amplitude", 0.0)};
  bg.finish();
  pot.finish();

  // disorder
  Node dis = root.child("disorder");
  DisorderModel model(parse_distribution(dis.child("distribution")));
  const auto seed = dis.get<std::uint64_t>("seed", 0);
  if (const json* ov = dis.raw("overrides")) {
    if (!ov->is_array()) throw ConfigError("disorder.overrides", "expected a list of {site, distribution}");
    json norm_ov = json::array();
    for (std::size_t i = 0; i < ov->size(); ++i) {
      const std::string path = "disorder.overrides[" + std::to_string(i) + "]";
      json item;
      Node o((*ov)[i], item, path);
      const json* s = o.raw("site");
      if (!s || !s->is_array() || s->size() != d) throw ConfigError(path + ".site", "expected an integer point");
      IntPoint pt;
      for (const auto& c : *s) {
        if (!c.is_number_integer()) throw ConfigError(path + ".site", "expected integer coordinates");
        pt.push_back(c.get<std::int64_t>());
      }
      o.out("site") = pt;
      model.overrides.emplace(pt, parse_distribution(o.child("distribution")));
      o.finish();
      norm_ov.push_back(item);
    }
    dis.out("overrides") = norm_ov;
  }
  dis.finish();

  PotentialSpec pspec{*site, layout, background, delta};
  SystemSpec system(std::move(pspec), std::move(model));
  system.dim = d;
  system.particles = N;
  system.boundary = boundary;
  system.points_per_unit = p;
  system.interaction = interaction;
  system.seed = seed;
  system.E0 = E0;
  system.assembly = assembly;
  system.solver = solver;

  // experiment
  Node ex = root.child("experiment");
  ExperimentParams params;
  const std::string kind = ex.require<std::string>("kind");
  try {
    params.kind = experiment_kind_from_string(kind);
  } catch (const std::exception& e) {
    throw ConfigError("experiment.kind", e.what());
  }
  params.trials = ex.get<std::size_t>("trials", 100);
  if (params.trials < 1) throw ConfigError("experiment.trials", "trials must be at least 1");
  switch (params.kind) {
    case ExperimentKind::wegner1:
      params.volumes = parse_volumes(ex, p);
      params.windows = parse_windows(ex, E0);
      break;
    case ExperimentKind::wegner2: {
      if (!ex.has("R")) throw ConfigError("experiment.R", "two-volume experiments require the separation length R");
      TwoVolumeSpec tv;
      tv.R = ex.require<double>("R");
      if (!(tv.R > 0)) throw ConfigError("experiment.R", "R must be positive");
      tv.A = parse_rect(ex, "A", N, d);
      tv.B = parse_rect(ex, "B", N, d);
      const std::string policy = ex.get<std::string>("policy", "shared");
      if (policy == "shared") tv.policy = FieldPolicy::shared;
      else if (policy == "independent") tv.policy = FieldPolicy::independent;
      else throw ConfigError("experiment.policy", "policy must be 'shared' or 'independent'");
      auto ws = parse_windows(ex, E0);
      if (ws.size() != 1) throw ConfigError("experiment.windows", "two-volume experiments use exactly one window");
      tv.window = ws.front();
      const json* eps = ex.raw("eps");
      if (!eps) throw ConfigError("experiment.eps", "required key is missing");
      tv.eps = number_list(*eps, "experiment.eps");
      for (double e : tv.eps) {
        if (!(e > 0)) throw ConfigError("experiment.eps", "eps values must be positive");
      }
      ex.out("eps") = tv.eps;
      params.two_volume = tv;
      break;
    }
    case ExperimentKind::ids:
    case ExperimentKind::lipschitz:
      params.volumes = parse_volumes(ex, p);
      params.grid = parse_grid(ex.child("energy_grid"));
      break;
    case ExperimentKind::ids_conv:
      params.conv_L = ex.require<double>("L");
      if (!(params.conv_L > 0) || std::abs(params.conv_L * p - std::round(params.conv_L * p)) > 1e-9) {
        throw ConfigError("experiment.L", "L must be positive with points_per_unit * L an integer");
      }
      params.conv_particles = N;
      params.grid = parse_grid(ex.child("energy_grid"));
      if (!interaction.is_none()) {
        throw ConfigError("potential.interaction.kind",
                          "the convolution identity is for non-interacting systems; interaction must be none");
      }
      break;
    case ExperimentKind::ucp:
      if (!E0) throw ConfigError("system.E0", "ucp experiments require E0");
      params.volumes = parse_volumes(ex, p);
      params.windows = parse_windows(ex, E0);
      params.M_D = ex.get<double>("M_D", 1.0);
      if (!(params.M_D > 0)) throw ConfigError("experiment.M_D", "M_D must be positive");
      break;
    case ExperimentKind::delone_check: {
      auto& dc = params.delone;
      dc.m = ex.get<double>("m", dc.m);
      dc.M = ex.get<double>("M", dc.M);
      dc.box_side = ex.get<double>("box_side", dc.box_side);
      dc.jitter = ex.get<double>("jitter", dc.jitter);
      dc.extra_per_cell = ex.get<double>("extra_per_cell", dc.extra_per_cell);
      dc.dims = ex.get<std::vector<std::size_t>>("dims", dc.dims);
      if (!(dc.m > 0) || !(dc.M > dc.m)) throw ConfigError("experiment.M", "Delone parameters need 0 < m < M");
      if (dc.box_side < 2 * dc.M) throw ConfigError("experiment.box_side", "box side must be at least 2M");
      if (dc.dims.empty()) throw ConfigError("experiment.dims", "at least one dimension is required");
      break;
    }
    case ExperimentKind::selftest:
      break;
  }
  ex.finish();

  Node out = root.child("output");
  OutputOptions output;
  output.directory = out.get<std::string>("directory", output.directory);
  output.raw = out.get<bool>("raw", output.raw);
  output.plot = out.get<bool>("plot", output.plot);
  out.finish();
  root.finish();

  // The output block does not affect results, so it stays out of the hash.
  json hashed = norm;
  hashed.erase("output");
  ExperimentConfig cfg{norm, fnv1a_hex(hashed.dump()), std::move(system), std::move(params), output};
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("<file>", "cannot read config '" + path + "'");
  json doc;
  try {
    doc = json::parse(is, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig apply_overrides(const ExperimentConfig& cfg, const Overrides& o) {
  json doc = cfg.document;
  if (o.trials) doc["experiment"]["trials"] = *o.trials;
  if (o.seed) doc["disorder"]["seed"] = *o.seed;
  if (o.out) doc["output"]["directory"] = *o.out;
  return parse_config(doc);
}

}  // namespace nbw
