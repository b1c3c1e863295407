#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nbw/disorder.hpp"
#include "nbw/geometry.hpp"
#include "nbw/potential.hpp"

namespace nbw {

enum class Boundary { dirichlet, periodic };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, std::ptrdiff_t>;

/// Uniform grid on an N-particle rectangle, spacing h = 1/p on every axis.
///
/// Node counts per axis of a factor with side L:
///   Dirichlet: p·L - 1 interior nodes at lower + k·h, k = 1..p·L-1
///   periodic:  p·L nodes at lower + k·h, k = 0..p·L-1, wrapped
/// Axes are ordered particle-major (axis i·d + a is coordinate a of particle i);
/// the flattening is row-major with the last axis fastest.
class Mesh {
 public:
  Mesh(NRectangle rect, int points_per_unit, Boundary boundary);

  const NRectangle& rect() const { return rect_; }
  int points_per_unit() const { return p_; }
  double spacing() const { return 1.0 / p_; }
  Boundary boundary() const { return bc_; }
  std::size_t particles() const { return rect_.particles(); }
  std::size_t dim() const { return rect_.dim(); }
  std::size_t axes() const { return counts_.size(); }
  const std::vector<std::size_t>& counts() const { return counts_; }
  /// Total node count; saturates at SIZE_MAX on overflow.
  std::size_t size() const { return size_; }

  std::size_t index(std::span<const std::size_t> multi) const;
  std::vector<std::size_t> multi_index(std::size_t index) const;
  /// Coordinate of node k along axis a.
  double coordinate(std::size_t axis, std::size_t k) const;
  RealPoint point(std::size_t index) const;

 private:
  NRectangle rect_;
  int p_;
  Boundary bc_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Node count formula without building a mesh; used by dry runs.
std::size_t mesh_dimension(const NRectangle& rect, int points_per_unit, Boundary boundary);

struct AssemblyOptions {
  std::size_t max_dimension = 200000;
};

/// Sparse symmetric finite-difference discretization of
/// H = -Σ_i Δ_i + U + Σ_i V_ω^(1)(x_i) on a mesh.
struct HamiltonianMatrix {
  SparseMatrix matrix;
  /// Potential part of the diagonal (U + V), energy units.
  Eigen::VectorXd potential;
  /// Computable lower bound H ≥ -M; zero for nonnegative potentials.
  double lower_bound_M = 0.0;
  /// Gershgorin bound on ‖H‖.
  double norm_bound = 0.0;
  std::string provenance;

  std::size_t dimension() const { return static_cast<std::size_t>(matrix.rows()); }
};

/// Assembles the (2·Nd+1)-point stencil plus the diagonal potential sampled at
/// the nodes. Throws std::length_error when the node count exceeds the cap.
HamiltonianMatrix assemble(const Mesh& mesh, const PotentialSpec& potential, const Interaction& interaction,
                           const DisorderField& field, const AssemblyOptions& options = {});

/// Same, with particle i seeing its own field; used to build non-interacting
/// systems whose factors are statistically independent.
HamiltonianMatrix assemble_per_particle(const Mesh& mesh, const PotentialSpec& potential,
                                        const Interaction& interaction,
                                        const std::vector<const DisorderField*>& fields,
                                        const AssemblyOptions& options = {});

/// Pure discrete Laplacian -Σ Δ_i on the mesh.
HamiltonianMatrix assemble_laplacian(const Mesh& mesh, const AssemblyOptions& options = {});

/// Matrix from an explicit diagonal potential on the mesh nodes.
HamiltonianMatrix assemble_with_diagonal(const Mesh& mesh, const Eigen::VectorXd& diagonal,
                                         const AssemblyOptions& options = {});

/// y = H x.
Eigen::VectorXd apply(const HamiltonianMatrix& H, const Eigen::VectorXd& x);

/// Samples a point function on every mesh node.
Eigen::VectorXd sample_on_mesh(const Mesh& mesh, const std::function<double(std::span<const double>)>& fn);

/// MatrixMarket coordinate dump (symmetric, lower triangle).
void write_matrix_market(std::ostream& os, const HamiltonianMatrix& H);

}  // namespace nbw
