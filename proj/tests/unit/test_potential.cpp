#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "nbw/disorder.hpp"
#include "nbw/potential.hpp"
#include "nbw/rng.hpp"

using namespace nbw;

namespace {

DisorderField constant_field(const std::vector<IntPoint>& sites, double v) {
  return make_field(sites, std::vector<double>(sites.size(), v));
}

PotentialSpec unit_cube_spec(std::size_t d) {
  return PotentialSpec{SingleSite::cube(1.0, d), SiteLayout::regular(d), Background{}, 0.5};
}

}  // namespace

TEST_CASE("zero couplings give zero potential") {
  const auto spec = unit_cube_spec(1);
  const auto f = constant_field(lattice_sites(Box1({0.0}, 10)), 0.0);
  for (double x = -3; x <= 3; x += 0.37) CHECK(one_body_potential(spec, f, std::vector<double>{x}) == 0.0);
}

TEST_CASE("unit couplings with the unit cube profile cover space") {
  for (std::size_t d : {1u, 2u}) {
    const auto spec = unit_cube_spec(d);
    const auto f = constant_field(lattice_sites(Box1(RealPoint(d, 0.0), 12)), 1.0);
    CounterRng rng(d);
    for (int k = 0; k < 200; ++k) {
      RealPoint x(d);
      for (auto& c : x) c = rng.uniform(-4, 4);
      CHECK(one_body_potential(spec, f, x) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("single site inside its ball") {
  const PotentialSpec spec{SingleSite::ball(0.4, 0.2, 1), SiteLayout::regular(1), Background{}, 0.2};
  std::vector<IntPoint> sites{{-2}, {-1}, {0}, {1}, {2}};
  const auto f = make_field(sites, {0, 0, 2, 0, 0});
  CHECK(one_body_potential(spec, f, std::vector<double>{0.1}) == doctest::Approx(2.0));
  CHECK(one_body_potential(spec, f, std::vector<double>{0.3}) == 0.0);
}

TEST_CASE("two particles in one covered cell") {
  const auto spec = unit_cube_spec(1);
  const auto f = constant_field(lattice_sites(Box1({0.0}, 10)), 1.0);
  CHECK(n_body_potential(spec, f, std::vector<double>{0.1, 0.2}, 2) == doctest::Approx(2.0));
}

TEST_CASE("comparison potential at centers and far away") {
  const auto layout = SiteLayout::regular(1);
  const NRectangle rect({Box1({0.0}, 4), Box1({0.0}, 4)});
  CHECK(comparison_potential_W(layout, 0.3, rect, std::vector<double>{1.0, -1.0}) == 1.0);
  CHECK(comparison_potential_W(layout, 0.3, rect, std::vector<double>{0.5, 0.5}) == 0.0);
  const auto crooked = SiteLayout::crooked(1, 0.3, 5);
  const auto y0 = crooked.position({0});
  const auto y1 = crooked.position({1});
  CHECK(comparison_potential_W(crooked, 0.2, rect, std::vector<double>{y0[0], y1[0]}) == 1.0);
}

TEST_CASE("crooked offsets do not depend on the requesting box") {
  const auto layout = SiteLayout::crooked(2, 0.4, 77);
  const auto a = layout.position({3, -2});
  const auto near = layout.sites_near(Box1({3.0, -2.0}, 1), 1.0);
  CHECK(std::find(near.begin(), near.end(), IntPoint{3, -2}) != near.end());
  CHECK(layout.position({3, -2}) == a);
  CHECK(std::abs(a[0] - 3) <= 0.4);
  CHECK(std::abs(a[1] + 2) <= 0.4);
}

TEST_CASE("lower bound holds away from the balls with margin equal to the potential") {
  const PotentialSpec spec{SingleSite::cube(0.5, 1), SiteLayout::regular(1), Background{}, 0.25};
  const NRectangle rect({Box1({0.0}, 4)});
  const auto rep = check_lower_bound(spec, rect, {{0.5}});
  CHECK(rep.pass);
  CHECK(rep.worst_margin == doctest::Approx(0.0));
  const auto inside = check_lower_bound(spec, rect, {{0.1}});
  CHECK(inside.pass);
  CHECK(inside.worst_margin == doctest::Approx(0.0));
}

TEST_CASE("lower bound fuzz over crooked layouts") {
  for (std::uint64_t k = 0; k < 30; ++k) {
    CounterRng rng(stream_key({static_cast<std::uint64_t>(StreamDomain::fuzz), 1, k}));
    const std::size_t d = 1 + k % 2;
    const std::size_t N = 1 + (k / 2) % 2;
    const double ell = 0.2 + 0.8 * rng.uniform();
    const PotentialSpec spec{SingleSite::cube(ell, d), SiteLayout::crooked(d, 0.5 * (1 - ell), rng()), Background{},
                             default_delta(ell)};
    std::vector<Box1> f;
    for (std::size_t i = 0; i < N; ++i) f.push_back(Box1(RealPoint(d, 0.0), 3.0));
    std::vector<RealPoint> grid;
    for (int s = 0; s < 400; ++s) {
      RealPoint x(N * d);
      for (auto& c : x) c = rng.uniform(-1.5, 1.5);
      grid.push_back(x);
    }
    const auto rep = check_lower_bound(spec, NRectangle(f), grid);
    CHECK(rep.pass);
    CHECK(rep.worst_margin >= 0.0);
  }
}

TEST_CASE("hypothesis checks") {
  const PotentialSpec good{SingleSite::cube(1.0, 1), SiteLayout::regular(1), Background{}, 0.5};
  CHECK(check_hypotheses(good, lattice_sites(Box1({0.0}, 4))).empty());
  const PotentialSpec big{SingleSite::cube(0.4, 1), SiteLayout::regular(1), Background{}, 0.3};
  CHECK_FALSE(check_hypotheses(big, lattice_sites(Box1({0.0}, 4))).empty());
  CHECK(default_delta(0.4) == doctest::Approx(0.2));
  CHECK(default_delta(1.0) == doctest::Approx(0.5));
}

TEST_CASE("pair interaction is nonnegative, bounded and vanishing far away") {
  const auto U = Interaction::pair(PairProfile{2.0, 1.5});
  CHECK(U(std::vector<double>{0.0, 0.0}, 2, 1) == doctest::Approx(2.0));
  CHECK(U(std::vector<double>{0.0, 100.0}, 2, 1) == 0.0);
  CHECK(U.bound(2) >= 2.0);
  for (double r = 0; r < 5; r += 0.1) CHECK(U(std::vector<double>{0.0, r}, 2, 1) >= 0.0);
}
