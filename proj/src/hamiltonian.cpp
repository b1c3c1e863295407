#include "nbw/hamiltonian.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace nbw {

std::string to_string(Boundary b) { return b == Boundary::dirichlet ? "dirichlet" : "periodic"; }

Boundary boundary_from_string(const std::string& s) {
  if (s == "dirichlet") return Boundary::dirichlet;
  if (s == "periodic") return Boundary::periodic;
  throw std::invalid_argument("unknown boundary condition '" + s + "' (expected dirichlet or periodic)");
}

namespace {

std::size_t nodes_per_axis(double side, int p, Boundary bc) {
  const double cells = side * p;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9) {
    throw std::invalid_argument("mesh needs p*L to be an integer on every factor");
  }
  const auto n = static_cast<std::int64_t>(rounded);
  const std::int64_t nodes = bc == Boundary::dirichlet ? n - 1 : n;
  if (nodes < 1) throw std::invalid_argument("mesh has no nodes on some axis (p*L too small)");
  return static_cast<std::size_t>(nodes);
}

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) return std::numeric_limits<std::size_t>::max();
  return a * b;
}

}  // namespace

Mesh::Mesh(NRectangle rect, int points_per_unit, Boundary boundary)
    : rect_(std::move(rect)), p_(points_per_unit), bc_(boundary) {
  if (p_ < 1) throw std::invalid_argument("points per unit length must be at least 1");
  size_ = 1;
  for (const auto& f : rect_.factors) {
    const std::size_t n = nodes_per_axis(f.side, p_, bc_);
    for (std::size_t a = 0; a < f.dim(); ++a) {
      counts_.push_back(n);
      size_ = saturating_mul(size_, n);
    }
  }
  strides_.assign(counts_.size(), 1);
  for (std::size_t a = counts_.size(); a-- > 1;) strides_[a - 1] = saturating_mul(strides_[a], counts_[a]);
}

std::size_t mesh_dimension(const NRectangle& rect, int points_per_unit, Boundary boundary) {
  return Mesh(rect, points_per_unit, boundary).size();
}

std::size_t Mesh::index(std::span<const std::size_t> multi) const {
  if (multi.size() != counts_.size()) throw std::invalid_argument("multi-index length mismatch");
  std::size_t idx = 0;
  for (std::size_t a = 0; a < counts_.size(); ++a) {
    if (multi[a] >= counts_[a]) throw std::out_of_range("multi-index out of range");
    idx += multi[a] * strides_[a];
  }
  return idx;
}

std::vector<std::size_t> Mesh::multi_index(std::size_t index) const {
  if (index >= size_) throw std::out_of_range("mesh index out of range");
  std::vector<std::size_t> m(counts_.size());
  for (std::size_t a = 0; a < counts_.size(); ++a) {
    m[a] = index / strides_[a];
    index %= strides_[a];
  }
  return m;
}

double Mesh::coordinate(std::size_t axis, std::size_t k) const {
  const std::size_t particle = axis / dim();
  const std::size_t a = axis % dim();
  const double lo = rect_.factors[particle].lower(a);
  const double offset = bc_ == Boundary::dirichlet ? 1.0 : 0.0;
  return lo + (static_cast<double>(k) + offset) * spacing();
}

RealPoint Mesh::point(std::size_t index) const {
  const auto m = multi_index(index);
  RealPoint x(m.size());
  for (std::size_t a = 0; a < m.size(); ++a) x[a] = coordinate(a, m[a]);
  return x;
}

namespace {

void check_size(const Mesh& mesh, const AssemblyOptions& options) {
  if (mesh.size() > options.max_dimension) {
    std::ostringstream os;
    os << "matrix dimension " << mesh.size() << " exceeds the cap " << options.max_dimension
       << " (reduce L, p or N, or raise max_dimension)";
    throw std::length_error(os.str());
  }
}

// Laplacian stencil plus the given diagonal; duplicates (periodic axes with
// one or two nodes) are summed by setFromTriplets.
HamiltonianMatrix build(const Mesh& mesh, const Eigen::VectorXd& potential) {
  const std::size_t n = mesh.size();
  const std::size_t D = mesh.axes();
  const double inv_h2 = 1.0 / (mesh.spacing() * mesh.spacing());
  const bool periodic = mesh.boundary() == Boundary::periodic;

  std::vector<Eigen::Triplet<double, std::ptrdiff_t>> trips;
  trips.reserve(n * (2 * D + 1));
  std::vector<std::size_t> strides(D, 1);
  for (std::size_t a = D; a-- > 1;) strides[a - 1] = strides[a] * mesh.counts()[a];

  std::vector<std::size_t> m(D, 0);
  for (std::size_t row = 0; row < n; ++row) {
    const auto r = static_cast<std::ptrdiff_t>(row);
    trips.emplace_back(r, r, 2.0 * static_cast<double>(D) * inv_h2 + potential[r]);
    for (std::size_t a = 0; a < D; ++a) {
      const std::size_t na = mesh.counts()[a];
      if (m[a] + 1 < na) {
        trips.emplace_back(r, static_cast<std::ptrdiff_t>(row + strides[a]), -inv_h2);
      } else if (periodic) {
        trips.emplace_back(r, static_cast<std::ptrdiff_t>(row - m[a] * strides[a]), -inv_h2);
      }
      if (m[a] > 0) {
        trips.emplace_back(r, static_cast<std::ptrdiff_t>(row - strides[a]), -inv_h2);
      } else if (periodic) {
        trips.emplace_back(r, static_cast<std::ptrdiff_t>(row + (na - 1) * strides[a]), -inv_h2);
      }
    }
    for (std::size_t a = D; a-- > 0;) {
      if (++m[a] < mesh.counts()[a]) break;
      m[a] = 0;
    }
  }

  HamiltonianMatrix H;
  H.matrix.resize(static_cast<std::ptrdiff_t>(n), static_cast<std::ptrdiff_t>(n));
  H.matrix.setFromTriplets(trips.begin(), trips.end());
  H.matrix.makeCompressed();
  H.potential = potential;

  double norm = 0.0;
  for (std::ptrdiff_t c = 0; c < H.matrix.outerSize(); ++c) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(H.matrix, c); it; ++it) s += std::abs(it.value());
    norm = std::max(norm, s);
  }
  H.norm_bound = norm;
  const double vmin = potential.size() ? potential.minCoeff() : 0.0;
  H.lower_bound_M = std::max(0.0, -vmin);
  return H;
}

std::string mesh_tag(const Mesh& mesh) {
  std::ostringstream os;
  os << "mesh N=" << mesh.particles() << " d=" << mesh.dim() << " p=" << mesh.points_per_unit()
     << " bc=" << to_string(mesh.boundary()) << " dim=" << mesh.size();
  return os.str();
}

}  // namespace

Eigen::VectorXd sample_on_mesh(const Mesh& mesh, const std::function<double(std::span<const double>)>& fn) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.size()));
  for (std::size_t k = 0; k < mesh.size(); ++k) {
    const RealPoint x = mesh.point(k);
    out[static_cast<Eigen::Index>(k)] = fn(x);
  }
  return out;
}

HamiltonianMatrix assemble(const Mesh& mesh, const PotentialSpec& potential, const Interaction& interaction,
                           const DisorderField& field, const AssemblyOptions& options) {
  return assemble_per_particle(mesh, potential, interaction,
                               std::vector<const DisorderField*>(mesh.particles(), &field), options);
}

HamiltonianMatrix assemble_per_particle(const Mesh& mesh, const PotentialSpec& potential,
                                        const Interaction& interaction,
                                        const std::vector<const DisorderField*>& fields,
                                        const AssemblyOptions& options) {
  check_size(mesh, options);
  if (fields.size() != mesh.particles()) throw std::invalid_argument("need one field per particle");
  if (potential.layout.dim() != mesh.dim()) throw std::invalid_argument("potential and mesh dimensions differ");
  const std::size_t N = mesh.particles();
  const std::size_t d = mesh.dim();
  const std::size_t n = mesh.size();

  // One-body potential on each particle's own d-dimensional grid.
  std::vector<std::vector<double>> v1(N);
  std::vector<std::size_t> sub_counts(N, 1);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t a = 0; a < d; ++a) sub_counts[i] *= mesh.counts()[i * d + a];
    v1[i].resize(sub_counts[i]);
    std::vector<std::size_t> m(d, 0);
    RealPoint x(d);
    for (std::size_t k = 0; k < sub_counts[i]; ++k) {
      for (std::size_t a = 0; a < d; ++a) x[a] = mesh.coordinate(i * d + a, m[a]);
      v1[i][k] = one_body_potential(potential, *fields[i], x);
      for (std::size_t a = d; a-- > 0;) {
        if (++m[a] < mesh.counts()[i * d + a]) break;
        m[a] = 0;
      }
    }
  }

  Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
  for (std::size_t row = 0; row < n; ++row) {
    // Row-major flattening with particle-major axes: particle i's block index
    // is the row's digits in the mixed radix of the later particles.
    std::size_t rest = row;
    double v = 0.0;
    for (std::size_t i = N; i-- > 0;) {
      v += v1[i][rest % sub_counts[i]];
      rest /= sub_counts[i];
    }
    diag[static_cast<Eigen::Index>(row)] = v;
  }
  if (!interaction.is_none()) {
    for (std::size_t row = 0; row < n; ++row) {
      const RealPoint x = mesh.point(row);
      diag[static_cast<Eigen::Index>(row)] += interaction(x, N, d);
    }
  }

  HamiltonianMatrix H = build(mesh, diag);
  std::ostringstream os;
  os << mesh_tag(mesh) << "; u=" << potential.profile.kind_name() << " ell=" << potential.profile.ell()
     << " layout=" << potential.layout.kind_name() << " U=" << interaction.kind_name() << "; field seed="
     << fields.front()->master_seed << " trial=" << fields.front()->trial;
  if (fields.size() > 1 && fields[1] != fields[0]) os << " (independent per particle)";
  H.provenance = os.str();
  return H;
}

HamiltonianMatrix assemble_laplacian(const Mesh& mesh, const AssemblyOptions& options) {
  check_size(mesh, options);
  HamiltonianMatrix H = build(mesh, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.size())));
  H.provenance = mesh_tag(mesh) + "; laplacian";
  return H;
}

HamiltonianMatrix assemble_with_diagonal(const Mesh& mesh, const Eigen::VectorXd& diagonal,
                                         const AssemblyOptions& options) {
  check_size(mesh, options);
  if (static_cast<std::size_t>(diagonal.size()) != mesh.size()) {
    throw std::invalid_argument("diagonal length does not match the mesh");
  }
  HamiltonianMatrix H = build(mesh, diagonal);
  H.provenance = mesh_tag(mesh) + "; explicit diagonal";
  return H;
}

Eigen::VectorXd apply(const HamiltonianMatrix& H, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != H.dimension()) {
    throw std::invalid_argument("vector length does not match the matrix dimension");
  }
  return H.matrix * x;
}

void write_matrix_market(std::ostream& os, const HamiltonianMatrix& H) {
  std::size_t nnz = 0;
  for (std::ptrdiff_t c = 0; c < H.matrix.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(H.matrix, c); it; ++it) {
      if (it.row() >= it.col()) ++nnz;
    }
  }
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  os << "% " << H.provenance << "\n";
  os << H.matrix.rows() << " " << H.matrix.cols() << " " << nnz << "\n";
  os.precision(17);
  for (std::ptrdiff_t c = 0; c < H.matrix.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(H.matrix, c); it; ++it) {
      if (it.row() >= it.col()) os << it.row() + 1 << " " << it.col() + 1 << " " << it.value() << "\n";
    }
  }
}

}  // namespace nbw
