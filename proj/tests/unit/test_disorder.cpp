#include <doctest.h>

#include <cmath>
#include <sstream>

#include "nbw/delone.hpp"
#include "nbw/disorder.hpp"
#include "nbw/statistics.hpp"

using namespace nbw;

TEST_CASE("degenerate law reproduces the deterministic field") {
  const DisorderModel model(CouplingDistribution::degenerate(1.0));
  const auto f = sample_field(model, lattice_sites(Box1({0.0, 0.0}, 6)), 3, 0);
  for (double v : f.values) CHECK(v == 1.0);
}

TEST_CASE("fields are a pure function of (seed, trial, site)") {
  const DisorderModel model(CouplingDistribution::uniform(0, 1));
  const auto sites = lattice_sites(Box1({0.0}, 20));
  const auto a = sample_field(model, sites, 5, 9);
  const auto b = sample_field(model, sites, 5, 9);
  CHECK(a.values == b.values);
  const auto c = sample_field(model, sites, 5, 10);
  CHECK(a.values != c.values);
  std::vector<IntPoint> reversed(sites.rbegin(), sites.rend());
  const auto r = sample_field(model, reversed, 5, 9);
  for (std::size_t i = 0; i < sites.size(); ++i) CHECK(r.values[sites.size() - 1 - i] == a.values[i]);
}

TEST_CASE("uniform draws have mean 1/2 within 3 sigma") {
  const DisorderModel model(CouplingDistribution::uniform(0, 1));
  const auto f = sample_field(model, lattice_sites(Box1({49.5, 49.5}, 99)), 17, 0);
  REQUIRE(f.values.size() == 10000);
  const auto ms = mean_stats(f.values);
  CHECK(std::abs(ms.mean - 0.5) <= 3 * std::sqrt(1.0 / 12.0 / 10000.0));
}

TEST_CASE("exact Levy concentration") {
  const auto u = CouplingDistribution::uniform(0, 1);
  CHECK(levy_concentration(u, 0.1) == doctest::Approx(0.1));
  CHECK(levy_concentration(u, 0.0) == 0.0);
  CHECK(levy_concentration(u, 2.0) == doctest::Approx(1.0));
  const auto a = CouplingDistribution::atomic({0, 1}, {0.5, 0.5});
  CHECK(levy_concentration(a, 0.0) == doctest::Approx(0.5));
  CHECK(levy_concentration(a, 1.0) == doctest::Approx(1.0));
  const auto p = CouplingDistribution::piecewise({0, 1, 2}, {3, 1});
  CHECK(levy_concentration(p, 0.5) == doctest::Approx(0.375));
}

TEST_CASE("empirical Levy concentration agrees with the exact value") {
  const auto u = CouplingDistribution::uniform(0, 1);
  const auto e = levy_concentration_empirical(u, 0.2, 100000, 1);
  CHECK(std::abs(e.value - 0.2) <= 0.01);
  CHECK(e.lo <= e.value);
  CHECK(e.hi >= e.value);
  const auto a = CouplingDistribution::atomic({0, 1}, {0.5, 0.5});
  CHECK(std::abs(levy_concentration_empirical(a, 0.0, 20000, 2).value - 0.5) < 0.02);
  CHECK(levy_concentration_empirical(u, 1.5, 1000, 3).value == doctest::Approx(1.0));
}

TEST_CASE("sliding window count") {
  CHECK(max_window_count({0.0, 0.1, 0.2, 0.9, 1.0}, 0.2) == 3);
  CHECK(max_window_count({}, 1.0) == 0);
}

TEST_CASE("Delone generation without jitter gives the even integers") {
  DeloneOptions opts;
  opts.jitter = 0.0;
  const auto set = generate_delone(1, 2, Box1({0.0}, 10), 1, opts);
  for (const auto& p : set.points) {
    CHECK(std::abs(std::fmod(std::abs(p[0]), 2.0)) < 1e-12);
  }
  CHECK(verify_delone(set).ok);
}

TEST_CASE("generated Delone sets verify") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (std::size_t d : {1u, 2u}) {
      const auto set = generate_delone(0.8, 2.0, Box1(RealPoint(d, 0.0), 10), seed);
      CHECK(verify_delone(set).ok);
    }
  }
}

TEST_CASE("verify_delone reports violations") {
  std::vector<RealPoint> z;
  for (int k = -10; k <= 10; ++k) z.push_back({static_cast<double>(k)});
  CHECK(verify_delone(z, 1.0, 1.5, Box1({0.0}, 20)).ok);

  auto close = z;
  close.push_back({0.5});
  const auto c1 = verify_delone(close, 1.0, 1.5, Box1({0.0}, 20));
  CHECK_FALSE(c1.ok);
  CHECK(c1.violation == DeloneViolation::spacing);

  auto holed = z;
  holed.erase(holed.begin() + 10);
  const auto c2 = verify_delone(holed, 1.0, 1.5, Box1({0.0}, 20));
  CHECK_FALSE(c2.ok);
  CHECK(c2.violation == DeloneViolation::covering);
  // The reported cube lies in the gap around 0.
  CHECK(c2.cube_lower[0] > -1.0);
  CHECK(c2.cube_lower[0] + c2.cube_side < 1.0 + 1e-9);
}

TEST_CASE("split of a regular lattice puts everything in the first part") {
  DeloneSet set;
  set.m = 1;
  set.M = 2;
  set.working_box = Box1({0.0, 0.0}, 8);
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) set.points.push_back({2.0 * i, 2.0 * j});
  }
  const auto s = split_delone(set);
  CHECK(s.gamma1.size() == 9);
  CHECK(s.gamma2.empty());

  set.points.push_back({0.6, 0.0});
  const auto t = split_delone(set);
  CHECK(t.gamma1.size() == 9);
  REQUIRE(t.gamma2.size() == 1);
  CHECK(t.gamma2[0] == RealPoint{0.6, 0.0});
}

TEST_CASE("split partitions random sets cell by cell") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DeloneOptions opts;
    opts.extra_per_cell = 1.0;
    const auto set = generate_delone(0.5, 2.0, Box1({0.0, 0.0}, 12), seed, opts);
    const auto s = split_delone(set);
    CHECK(s.gamma1.size() + s.gamma2.size() == set.points.size());
    // Per-cell recount: every cell holds its representative.
    for (std::size_t k = 0; k < s.cells.size(); ++k) {
      for (std::size_t a = 0; a < 2; ++a) {
        const double c = set.M * static_cast<double>(s.cells[k][a]);
        CHECK(s.gamma1[k][a] >= c - set.M / 2);
        CHECK(s.gamma1[k][a] < c + set.M / 2);
      }
    }
  }
}

TEST_CASE("Delone point-list round trip") {
  const auto set = generate_delone(1, 2, Box1({0.0, 0.0}, 8), 4);
  std::stringstream ss;
  write_delone(ss, set);
  const auto back = read_delone(ss);
  CHECK(back.m == set.m);
  CHECK(back.M == set.M);
  CHECK(back.points == set.points);
}

TEST_CASE("Wilson interval and compensated sums") {
  const auto ci = wilson_interval(0, 100);
  CHECK(ci.lo == doctest::Approx(0.0));
  CHECK(ci.hi > 0.0);
  const auto all = wilson_interval(100, 100);
  CHECK(all.hi == doctest::Approx(1.0));
  std::vector<double> xs{1e16, 1.0, -1e16, 1.0};
  CHECK(compensated_sum(xs) == 2.0);
}

TEST_CASE("fit through the origin recovers an exact line") {
  std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8};
  const auto f = fit_through_origin(x, y);
  CHECK(f.slope == doctest::Approx(2));
  CHECK(f.r_squared == doctest::Approx(1));
}
