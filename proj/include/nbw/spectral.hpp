#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nbw/hamiltonian.hpp"

namespace nbw {

/// Closed energy window [lo, hi], optionally capped by E0.
struct SpectrumWindow {
  double lo = 0.0;
  double hi = 0.0;
  std::optional<double> E0;

  SpectrumWindow() = default;
  SpectrumWindow(double l, double h, std::optional<double> cap = std::nullopt);
  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
};

struct SolverOptions {
  /// Dimensions up to this use a dense solve; larger ones use shift-invert Lanczos.
  std::size_t dense_threshold = 3000;
  /// Relative residual tolerance ‖Hv - λv‖ ≤ tol·‖H‖.
  double tolerance = 1e-10;
  std::size_t max_restarts = 50;
};

/// Eigenpairs of H with eigenvalues in a window.
struct SpectralSlice {
  std::vector<double> eigenvalues;
  Eigen::MatrixXd eigenvectors;  ///< one orthonormal column per eigenvalue
  std::string method;
  double tolerance = 0.0;
  std::vector<double> residuals;

  std::size_t size() const { return eigenvalues.size(); }
  bool empty() const { return eigenvalues.empty(); }
};

/// Tie tolerance at window endpoints: 1e-12·‖H‖.
double tie_tolerance(const HamiltonianMatrix& H);

/// Sylvester-inertia eigenvalue counter. The sparsity pattern is analyzed once;
/// each query factors H - E·I as P^T L D L^T P and counts negative pivots.
class InertiaCounter {
 public:
  /// Keeps a reference to H, which must outlive the counter.
  explicit InertiaCounter(const HamiltonianMatrix& H);
  InertiaCounter(HamiltonianMatrix&&) = delete;
  ~InertiaCounter();
  InertiaCounter(InertiaCounter&&) noexcept;
  InertiaCounter& operator=(InertiaCounter&&) noexcept;

  /// #{λ ≤ E}: negatives of H - (E + τ)I.
  std::size_t count_at_most(double E);
  /// #{λ < E}: negatives of H - (E - τ)I.
  std::size_t count_below_strict(double E);
  /// count_at_most(hi) - count_below_strict(lo).
  std::size_t count_in(const SpectrumWindow& w);

  std::size_t dimension() const { return n_; }

 private:
  std::size_t negatives(double shift, double nudge_direction);

  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t n_ = 0;
  double tau_ = 0.0;
  double scale_ = 1.0;
};

/// N_Λ(E) = #{eigenvalues ≤ E} by inertia.
std::size_t count_below(const HamiltonianMatrix& H, double E);

/// Tr E_Λ([lo, hi]) = count(≤ hi) - count(< lo).
std::size_t trace_projector(const HamiltonianMatrix& H, const SpectrumWindow& window);

/// All eigenvalues, ascending (dense).
std::vector<double> all_eigenvalues(const HamiltonianMatrix& H);

/// Eigenpairs in the window, certified against the inertia count.
SpectralSlice eigen_window(const HamiltonianMatrix& H, const SpectrumWindow& window,
                           const SolverOptions& options = {});

/// Columns of a slice whose eigenvalues lie in the window, widened by τ.
SpectralSlice sub_slice(const SpectralSlice& slice, const SpectrumWindow& window, double tau);

/// λ_min of G_ab = ⟨v_a, W v_b⟩ on an orthonormal slice; W is a nonnegative
/// diagonal potential on the mesh nodes. Returns +inf for an empty slice and
/// throws std::runtime_error if the basis is not orthonormal to 1e-8.
double ucp_ratio(const SpectralSlice& slice, const Eigen::VectorXd& W);
double ucp_ratio(const HamiltonianMatrix& H, const SpectrumWindow& window, const Eigen::VectorXd& W,
                 const SolverOptions& options = {});

/// γ = sqrt((1/2)·δ^{M_D(1 + K^{2/3})}), the sfUCPSP constant for a given M_D.
double gamma_formula(double M_D, double K, double delta);

/// Lower threshold of the sfUCPSP hypothesis, 72·√D.
double ucp_side_threshold(std::size_t D);

}  // namespace nbw
