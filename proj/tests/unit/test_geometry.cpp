#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "nbw/geometry.hpp"
#include "nbw/rng.hpp"

using namespace nbw;

TEST_CASE("lattice sites of centered and shifted boxes") {
  CHECK(lattice_sites(Box1({0.0}, 3)) == std::vector<IntPoint>{{-1}, {0}, {1}});
  CHECK(lattice_sites(Box1({0.0, 0.0}, 3)).size() == 9);
  CHECK(lattice_sites(Box1({5.0}, 5)) == std::vector<IntPoint>{{3}, {4}, {5}, {6}, {7}});
}

TEST_CASE("lattice sites match an exhaustive scan") {
  CounterRng rng(42);
  for (int k = 0; k < 50; ++k) {
    const double c = rng.uniform(-10, 10);
    const double s = rng.uniform(0.1, 8);
    std::vector<IntPoint> expected;
    for (std::int64_t z = -30; z <= 30; ++z) {
      if (z >= c - s / 2 && z <= c + s / 2) expected.push_back({z});
    }
    CHECK(lattice_sites(Box1({c}, s)) == expected);
  }
}

TEST_CASE("extend grows every side by 2R") {
  const NRectangle one({Box1({0.0}, 3)});
  CHECK(extend(one, 1).factors[0].side == doctest::Approx(5));
  const NRectangle two({Box1({0.0}, 3), Box1({4.0}, 7)});
  const auto e = extend(two, 2);
  CHECK(e.factors[0].side == doctest::Approx(7));
  CHECK(e.factors[1].side == doctest::Approx(11));
  CHECK(e.factors[1].center[0] == doctest::Approx(4));
}

TEST_CASE("extended rectangles contain the original") {
  CounterRng rng(7);
  for (int k = 0; k < 100; ++k) {
    std::vector<Box1> f;
    for (int i = 0; i < 3; ++i) f.push_back(Box1({rng.uniform(-5, 5), rng.uniform(-5, 5)}, rng.uniform(0.5, 4)));
    const NRectangle r(f);
    const NRectangle e = extend(r, rng.uniform(0.1, 3));
    CHECK(e.contains(r));
    for (std::size_t i = 0; i < f.size(); ++i) {
      for (std::size_t a = 0; a < 2; ++a) {
        CHECK(e.factors[i].lower(a) <= r.factors[i].lower(a));
        CHECK(e.factors[i].upper(a) >= r.factors[i].upper(a));
      }
    }
  }
}

TEST_CASE("projections of product rectangles") {
  const NRectangle L({Box1::from_lower({0.0}, 1), Box1::from_lower({6.0}, 1)});
  const auto p2 = projection(L, {1});
  REQUIRE(p2.boxes.size() == 1);
  CHECK(p2.boxes[0].lower(0) == doctest::Approx(6));
  CHECK(p2.boxes[0].upper(0) == doctest::Approx(7));
  const NRectangle U({Box1::from_lower({0.0}, 1), Box1::from_lower({0.0}, 1)});
  const auto p1 = projection(U, {0});
  REQUIRE(p1.boxes.size() == 1);
  CHECK(p1.boxes[0].lower(0) == doctest::Approx(0));
  CHECK(p1.boxes[0].upper(0) == doctest::Approx(1));
  const auto full = full_projection(L);
  CHECK(full.contains({0.5}));
  CHECK(full.contains({6.5}));
  CHECK_FALSE(full.contains({3.0}));
}

TEST_CASE("R-separation on reference geometries") {
  const NRectangle A({Box1::from_lower({0.0}, 1), Box1::from_lower({0.0}, 1)});
  const NRectangle B({Box1::from_lower({0.0}, 1), Box1::from_lower({6.0}, 1)});
  const auto r = r_separated(A, B, 1);
  CHECK(r.separated);
  CHECK(r.witness == std::vector<std::size_t>{1});
  CHECK(r.condition == SeparationCondition::second);

  CHECK_FALSE(r_separated(A, A, 1).separated);

  const NRectangle far({Box1::from_lower({100.0}, 1), Box1::from_lower({100.0}, 1)});
  CHECK(r_separated(A, far, 1).separated);
}

TEST_CASE("R-separation agrees with a brute-force scan of index subsets") {
  CounterRng rng(99);
  for (int k = 0; k < 200; ++k) {
    std::vector<Box1> fa, fb;
    for (int i = 0; i < 3; ++i) {
      fa.push_back(Box1::from_lower({std::floor(rng.uniform(0, 30))}, 1 + std::floor(rng.uniform(0, 3))));
      fb.push_back(Box1::from_lower({std::floor(rng.uniform(0, 30))}, 1 + std::floor(rng.uniform(0, 3))));
    }
    const NRectangle A(fa), B(fb);
    const double R = rng.uniform(0.5, 3);
    const NRectangle Ah = extend(A, R), Bh = extend(B, R);
    // Interval oracle in d=1: distance between unions of intervals.
    auto dist = [](const std::vector<Box1>& s, const std::vector<Box1>& t) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& a : s) {
        for (const auto& b : t) {
          best = std::min(best, std::max({0.0, b.lower(0) - a.upper(0), a.lower(0) - b.upper(0)}));
        }
      }
      return best;
    };
    bool expected = false;
    for (unsigned mask = 1; mask < 8; ++mask) {
      for (int cond = 0; cond < 2; ++cond) {
        const auto& X = cond == 0 ? Ah : Bh;
        const auto& Y = cond == 0 ? Bh : Ah;
        std::vector<Box1> in, out;
        for (int i = 0; i < 3; ++i) (mask >> i & 1 ? in : out).push_back(X.factors[i]);
        for (const auto& f : Y.factors) out.push_back(f);
        if (dist(in, out) > 2 * R) expected = true;
      }
    }
    CHECK(r_separated(A, B, R).separated == expected);
  }
}
