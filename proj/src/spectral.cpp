#include "nbw/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "nbw/rng.hpp"

namespace nbw {

SpectrumWindow::SpectrumWindow(double l, double h, std::optional<double> cap) : lo(l), hi(h), E0(cap) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("spectrum window needs finite lo <= hi");
  }
  if (E0 && hi > *E0) throw std::invalid_argument("spectrum window must lie below E0");
}

double tie_tolerance(const HamiltonianMatrix& H) { return 1e-12 * std::max(H.norm_bound, 1.0); }

using Ldlt = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::NaturalOrdering<std::ptrdiff_t>>;

struct InertiaCounter::Impl {
  const SparseMatrix* matrix = nullptr;
  Ldlt solver;
};

InertiaCounter::InertiaCounter(const HamiltonianMatrix& H)
    : impl_(std::make_unique<Impl>()), n_(H.dimension()), tau_(tie_tolerance(H)),
      scale_(std::max(H.norm_bound, 1.0)) {
  impl_->matrix = &H.matrix;
  if (n_ > 0) impl_->solver.analyzePattern(H.matrix);
}

InertiaCounter::~InertiaCounter() = default;
InertiaCounter::InertiaCounter(InertiaCounter&&) noexcept = default;
InertiaCounter& InertiaCounter::operator=(InertiaCounter&&) noexcept = default;

std::size_t InertiaCounter::negatives(double shift, double nudge_direction) {
  if (n_ == 0) return 0;
  // A pivot that vanishes to rounding means `shift` is (numerically) an
  // eigenvalue; moving it by a fraction of τ in the requested direction keeps
  // the tie-break semantics of the caller.
  for (int attempt = 0; attempt < 8; ++attempt) {
    const double s = shift + nudge_direction * tau_ * 0.25 * attempt;
    impl_->solver.setShift(-s);
    impl_->solver.factorize(*impl_->matrix);
    if (impl_->solver.info() != Eigen::Success) continue;
    const auto& D = impl_->solver.vectorD();
    bool degenerate = false;
    std::size_t neg = 0;
    for (Eigen::Index i = 0; i < D.size(); ++i) {
      const double v = D[i];
      if (!std::isfinite(v) || std::abs(v) < 1e-14 * scale_) {
        degenerate = true;
        break;
      }
      if (v < 0) ++neg;
    }
    if (!degenerate) return neg;
  }
  std::ostringstream os;
  os << "inertia count failed near E=" << shift << " (singular factorization after nudging)";
  throw std::runtime_error(os.str());
}

std::size_t InertiaCounter::count_at_most(double E) { return negatives(E + tau_, +1.0); }

std::size_t InertiaCounter::count_below_strict(double E) { return negatives(E - tau_, -1.0); }

std::size_t InertiaCounter::count_in(const SpectrumWindow& w) {
  const std::size_t upper = count_at_most(w.hi);
  const std::size_t lower = count_below_strict(w.lo);
  return upper > lower ? upper - lower : 0;
}

std::size_t count_below(const HamiltonianMatrix& H, double E) {
  if (!std::isfinite(E)) throw std::invalid_argument("count_below needs a finite energy");
  InertiaCounter c(H);
  return c.count_at_most(E);
}

std::size_t trace_projector(const HamiltonianMatrix& H, const SpectrumWindow& window) {
  InertiaCounter c(H);
  return c.count_in(window);
}

std::vector<double> all_eigenvalues(const HamiltonianMatrix& H) {
  if (H.dimension() == 0) return {};
  Eigen::MatrixXd dense(H.matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw std::runtime_error("dense eigenvalue solve did not converge");
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

namespace {

SpectralSlice dense_window(const HamiltonianMatrix& H, const SpectrumWindow& w, double tau) {
  Eigen::MatrixXd dense(H.matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  if (es.info() != Eigen::Success) throw std::runtime_error("dense eigensolver did not converge");
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    const double l = es.eigenvalues()[k];
    if (l >= w.lo - tau && l <= w.hi + tau) keep.push_back(k);
  }
  SpectralSlice s;
  s.method = "dense";
  s.eigenvectors.resize(dense.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto k = keep[c];
    s.eigenvalues.push_back(es.eigenvalues()[k]);
    s.eigenvectors.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(k);
    s.residuals.push_back((H.matrix * es.eigenvectors().col(k) - es.eigenvalues()[k] * es.eigenvectors().col(k)).norm());
  }
  return s;
}

// Shift-invert Lanczos with full reorthogonalization and locking. Converged
// Ritz pairs in the window are locked; each restart begins from a fresh random
// vector orthogonal to the locked set, which also recovers multiplicities.
SpectralSlice lanczos_window(const HamiltonianMatrix& H, const SpectrumWindow& w, std::size_t target,
                             const SolverOptions& opt, double tau) {
  const auto n = static_cast<Eigen::Index>(H.dimension());
  const double scale = std::max(H.norm_bound, 1.0);

  double sigma = w.center();
  Ldlt solver;
  solver.analyzePattern(H.matrix);
  for (int attempt = 0; attempt < 8; ++attempt) {
    solver.setShift(-sigma);
    solver.factorize(H.matrix);
    bool ok = solver.info() == Eigen::Success;
    if (ok) {
      const auto& D = solver.vectorD();
      for (Eigen::Index i = 0; i < D.size() && ok; ++i) ok = std::isfinite(D[i]) && std::abs(D[i]) > 1e-13 * scale;
    }
    if (ok) break;
    sigma += (w.width() > 0 ? 0.0137 * w.width() : 1e-9 * scale) * (attempt + 1);
  }

  Eigen::MatrixXd locked(n, 0);
  std::vector<double> values;
  std::vector<double> residuals;
  CounterRng rng(stream_key({0x1a2c5ULL, static_cast<std::uint64_t>(n), target}));

  auto project_out = [&](Eigen::VectorXd& v, const Eigen::MatrixXd& basis, Eigen::Index cols) {
    for (int pass = 0; pass < 2; ++pass) {
      if (locked.cols() > 0) v -= locked * (locked.transpose() * v);
      if (cols > 0) v -= basis.leftCols(cols) * (basis.leftCols(cols).transpose() * v);
    }
  };

  std::size_t steps = std::max<std::size_t>(2 * target + 20, 40);
  for (std::size_t round = 0; round < opt.max_restarts && values.size() < target; ++round) {
    const auto m = static_cast<Eigen::Index>(std::min<std::size_t>(steps, static_cast<std::size_t>(n) - values.size()));
    if (m <= 0) break;
    Eigen::MatrixXd Q(n, m);
    Eigen::VectorXd alpha(m), beta(m);
    Eigen::VectorXd q(n);
    for (Eigen::Index i = 0; i < n; ++i) q[i] = rng.uniform(-1.0, 1.0);
    project_out(q, Q, 0);
    q.normalize();
    Eigen::Index built = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
      Q.col(j) = q;
      built = j + 1;
      Eigen::VectorXd z = solver.solve(q);
      project_out(z, Q, 0);
      alpha[j] = q.dot(z);
      project_out(z, Q, j + 1);
      beta[j] = z.norm();
      if (beta[j] < 1e-12 * std::abs(alpha[j]) || j + 1 == m) break;
      q = z / beta[j];
    }
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(built, built);
    for (Eigen::Index j = 0; j < built; ++j) {
      T(j, j) = alpha[j];
      if (j + 1 < built) T(j, j + 1) = T(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
    bool progress = false;
    for (Eigen::Index k = 0; k < built; ++k) {
      const double theta = es.eigenvalues()[k];
      if (std::abs(theta) < 1e-300) continue;
      const double lambda = sigma + 1.0 / theta;
      if (lambda < w.lo - tau || lambda > w.hi + tau) continue;
      Eigen::VectorXd y = Q.leftCols(built) * es.eigenvectors().col(k);
      project_out(y, Q, 0);
      const double nrm = y.norm();
      if (nrm < 1e-8) continue;
      y /= nrm;
      const double rq = y.dot(H.matrix * y);
      const double res = (H.matrix * y - rq * y).norm();
      if (res > opt.tolerance * scale) continue;
      locked.conservativeResize(n, locked.cols() + 1);
      locked.col(locked.cols() - 1) = y;
      values.push_back(rq);
      residuals.push_back(res);
      progress = true;
      if (values.size() == target) break;
    }
    if (!progress) steps = std::min<std::size_t>(steps * 2, static_cast<std::size_t>(n));
  }

  if (values.size() != target) {
    std::ostringstream os;
    os << "Lanczos window solve found " << values.size() << " of " << target << " eigenpairs in [" << w.lo << ", "
       << w.hi << "]";
    throw std::runtime_error(os.str());
  }

  std::vector<std::size_t> order(values.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
  SpectralSlice s;
  s.method = "lanczos-shift-invert";
  s.eigenvectors.resize(n, static_cast<Eigen::Index>(target));
  for (std::size_t c = 0; c < order.size(); ++c) {
    s.eigenvalues.push_back(values[order[c]]);
    s.residuals.push_back(residuals[order[c]]);
    s.eigenvectors.col(static_cast<Eigen::Index>(c)) = locked.col(static_cast<Eigen::Index>(order[c]));
  }
  return s;
}

}  // namespace

SpectralSlice eigen_window(const HamiltonianMatrix& H, const SpectrumWindow& window, const SolverOptions& options) {
  const double tau = tie_tolerance(H);
  InertiaCounter counter(H);
  const std::size_t certified = counter.count_in(window);

  SpectralSlice s;
  if (certified == 0) {
    s.method = "inertia";
    s.eigenvectors.resize(static_cast<Eigen::Index>(H.dimension()), 0);
  } else if (H.dimension() <= options.dense_threshold) {
    s = dense_window(H, window, tau);
  } else {
    s = lanczos_window(H, window, certified, options, tau);
  }
  s.tolerance = options.tolerance;
  if (s.size() != certified) {
    std::ostringstream os;
    os << "eigen_window: " << s.method << " found " << s.size() << " eigenvalues but inertia certifies "
       << certified;
    throw std::runtime_error(os.str());
  }
  return s;
}

SpectralSlice sub_slice(const SpectralSlice& slice, const SpectrumWindow& window, double tau) {
  SpectralSlice out;
  out.method = slice.method;
  out.tolerance = slice.tolerance;
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < slice.size(); ++i) {
    const double v = slice.eigenvalues[i];
    if (v >= window.lo - tau && v <= window.hi + tau) keep.push_back(static_cast<Eigen::Index>(i));
  }
  out.eigenvectors.resize(slice.eigenvectors.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    const auto i = static_cast<std::size_t>(keep[c]);
    out.eigenvalues.push_back(slice.eigenvalues[i]);
    if (i < slice.residuals.size()) out.residuals.push_back(slice.residuals[i]);
    out.eigenvectors.col(static_cast<Eigen::Index>(c)) = slice.eigenvectors.col(keep[c]);
  }
  return out;
}

double ucp_ratio(const SpectralSlice& slice, const Eigen::VectorXd& W) {
  if (slice.empty()) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd& V = slice.eigenvectors;
  if (V.rows() != W.size()) throw std::invalid_argument("W length does not match the eigenvector length");
  const auto k = V.cols();
  const Eigen::MatrixXd gram = V.transpose() * V;
  const double err = (gram - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  if (err > 1e-8) {
    std::ostringstream os;
    os << "slice basis is not orthonormal (max deviation " << err << ")";
    throw std::runtime_error(os.str());
  }
  const Eigen::MatrixXd G = V.transpose() * W.asDiagonal() * V;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues()[0]);
}

double ucp_ratio(const HamiltonianMatrix& H, const SpectrumWindow& window, const Eigen::VectorXd& W,
                 const SolverOptions& options) {
  return ucp_ratio(eigen_window(H, window, options), W);
}

double gamma_formula(double M_D, double K, double delta) {
  if (!(delta > 0.0) || delta > 0.5) throw std::invalid_argument("delta must lie in (0, 1/2]");
  if (!(M_D > 0.0)) throw std::invalid_argument("M_D must be positive");
  if (K < 0.0) throw std::invalid_argument("K must be nonnegative");
  const double exponent = M_D * (1.0 + std::cbrt(K * K));
  return std::sqrt(0.5 * std::pow(delta, exponent));
}

double ucp_side_threshold(std::size_t D) { return 72.0 * std::sqrt(static_cast<double>(D)); }

}  // namespace nbw
