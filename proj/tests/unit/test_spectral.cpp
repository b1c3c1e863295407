#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nbw/experiments.hpp"
#include "nbw/spectral.hpp"

using namespace nbw;

namespace {

HamiltonianMatrix chain(std::size_t n) {
  const Mesh mesh(NRectangle::cube(1, Box1::from_lower({0.0}, static_cast<double>(n + 1))), 1,
                  Boundary::dirichlet);
  return assemble_laplacian(mesh);
}

double chain_eigenvalue(std::size_t k, std::size_t n) {
  return 2 - 2 * std::cos(static_cast<double>(k) * std::numbers::pi / static_cast<double>(n + 1));
}

}  // namespace

TEST_CASE("analytic chain spectrum") {
  for (std::size_t n : {3u, 10u, 50u}) {
    const auto ev = all_eigenvalues(chain(n));
    REQUIRE(ev.size() == n);
    for (std::size_t k = 1; k <= n; ++k) CHECK(std::abs(ev[k - 1] - chain_eigenvalue(k, n)) <= 1e-10);
  }
}

TEST_CASE("count below on the chain") {
  const auto H = chain(10);
  CHECK(count_below(H, 2.0) == 5);
  CHECK(count_below(H, -1.0) == 0);
  CHECK(count_below(H, 5.0) == 10);
}

TEST_CASE("eigen window on reference spectra") {
  const auto slice = eigen_window(chain(3), SpectrumWindow(1.9, 2.1));
  REQUIRE(slice.eigenvalues.size() == 1);
  CHECK(slice.eigenvalues[0] == doctest::Approx(2.0));
  CHECK(eigen_window(chain(3), SpectrumWindow(-2, -1)).eigenvalues.empty());

  HamiltonianMatrix zero;
  zero.matrix = SparseMatrix(5, 5);
  zero.potential = Eigen::VectorXd::Zero(5);
  const auto zs = eigen_window(zero, SpectrumWindow(-1, 1));
  CHECK(zs.eigenvalues.size() == 5);
  for (double e : zs.eigenvalues) CHECK(std::abs(e) < 1e-12);
}

TEST_CASE("trace projector is additive and matches dense tallies") {
  SystemSpec s = default_system(1, 2, 2);
  for (std::uint64_t t = 0; t < 5; ++t) {
    const auto H = s.hamiltonian(s.cube(4), t);
    const auto ev = all_eigenvalues(H);
    const std::size_t n = H.dimension();
    CHECK(trace_projector(H, SpectrumWindow(-1, 1e3)) == n);
    const SpectrumWindow a(2.0, 7.5), b(7.6, 13.0), ab(2.0, 13.0);
    const auto in = [&](const SpectrumWindow& w) {
      return static_cast<std::size_t>(std::count_if(ev.begin(), ev.end(),
                                                    [&](double e) { return e >= w.lo && e <= w.hi; }));
    };
    CHECK(trace_projector(H, a) == in(a));
    CHECK(trace_projector(H, b) == in(b));
    const auto gap = static_cast<std::size_t>(std::count_if(ev.begin(), ev.end(),
                                                            [](double e) { return e > 7.5 && e < 7.6; }));
    CHECK(trace_projector(H, a) + trace_projector(H, b) + gap == trace_projector(H, ab));
  }
}

TEST_CASE("shift-invert path agrees with the dense path") {
  SystemSpec s = default_system(1, 2, 2);
  const auto H = s.hamiltonian(s.cube(8), 3);
  SolverOptions dense;
  SolverOptions sparse;
  sparse.dense_threshold = 10;
  const SpectrumWindow w(4.0, 5.0);
  const auto a = eigen_window(H, w, dense);
  const auto b = eigen_window(H, w, sparse);
  REQUIRE(a.eigenvalues.size() == b.eigenvalues.size());
  CHECK(a.eigenvalues.size() == trace_projector(H, w));
  for (std::size_t i = 0; i < a.eigenvalues.size(); ++i) CHECK(a.eigenvalues[i] == doctest::Approx(b.eigenvalues[i]));
}

TEST_CASE("ucp ratio edge cases") {
  SystemSpec s = default_system(1, 1, 2);
  const auto H = s.hamiltonian(s.cube(10), 0);
  const SpectrumWindow w(0.0, 3.0);
  CHECK(ucp_ratio(H, w, Eigen::VectorXd::Ones(H.dimension())) == doctest::Approx(1.0));
  CHECK(ucp_ratio(H, w, Eigen::VectorXd::Zero(H.dimension())) == doctest::Approx(0.0));
  CHECK(std::isinf(ucp_ratio(H, SpectrumWindow(-5, -4), Eigen::VectorXd::Ones(H.dimension()))));
}

TEST_CASE("sub slice keeps the matching columns") {
  const auto all = eigen_window(chain(10), SpectrumWindow(0, 4));
  const auto part = sub_slice(all, SpectrumWindow(0, 2), 1e-12);
  CHECK(part.eigenvalues.size() == 5);
  CHECK(part.eigenvectors.cols() == 5);
}

TEST_CASE("gamma formula and threshold") {
  CHECK(gamma_formula(1.0, 0.0, 0.5) * gamma_formula(1.0, 0.0, 0.5) == doctest::Approx(0.25));
  CHECK(ucp_side_threshold(1) == doctest::Approx(72.0));
  CHECK(ucp_side_threshold(4) == doctest::Approx(144.0));
}
