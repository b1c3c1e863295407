#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nbw/disorder.hpp"
#include "nbw/geometry.hpp"
#include "nbw/hamiltonian.hpp"
#include "nbw/potential.hpp"
#include "nbw/spectral.hpp"
#include "nbw/statistics.hpp"

namespace nbw {

/// Physical system shared by all experiments: N particles in R^d, cubes
/// centered at the origin unless rectangles are given explicitly.
struct SystemSpec {
  std::size_t dim = 1;
  std::size_t particles = 1;
  Boundary boundary = Boundary::dirichlet;
  int points_per_unit = 2;
  PotentialSpec potential;
  Interaction interaction;
  DisorderModel disorder;
  std::uint64_t seed = 0;
  std::optional<double> E0;
  AssemblyOptions assembly;
  SolverOptions solver;

  SystemSpec(PotentialSpec p, DisorderModel m) : potential(std::move(p)), disorder(std::move(m)) {}

  NRectangle cube(double L) const;
  Mesh mesh(const NRectangle& rect) const;
  /// Field over every site a bump from `rect` can reach.
  DisorderField field(const NRectangle& rect, std::uint64_t trial) const;
  HamiltonianMatrix hamiltonian(const NRectangle& rect, std::uint64_t trial) const;
  /// Threshold 72·√(Nd) below which the scale-free UCP hypothesis is not met.
  double side_threshold() const { return ucp_side_threshold(particles * dim); }
};

/// Builds a system with the defaults used throughout: cube profile of side ℓ,
/// regular layout, uniform[0,1] couplings, no interaction.
SystemSpec default_system(std::size_t dim, std::size_t particles, int points_per_unit);

/// Per-trial record storage for checkpoint/resume.
class TrialStore {
 public:
  virtual ~TrialStore() = default;
  virtual std::optional<std::vector<double>> load(std::size_t trial) = 0;
  virtual void save(std::size_t trial, const std::vector<double>& record) = 0;
};

struct RunOptions {
  std::size_t trials = 100;
  std::size_t workers = 1;
  TrialStore* store = nullptr;
};

/// Runs `fn(trial)` for trial = 0..trials-1 over a worker pool. Records come
/// back in trial order regardless of scheduling.
std::vector<std::vector<double>> run_trials(const RunOptions& options,
                                            const std::function<std::vector<double>(std::size_t)>& fn);

// ---------------------------------------------------------------------------
// One-volume Wegner scaling

struct WegnerRow {
  double L = 0.0;
  double volume = 0.0;
  std::size_t dimension = 0;
  SpectrumWindow window;
  double levy = 0.0;
  std::size_t trials = 0;
  std::size_t hits = 0;
  double p_hat = 0.0;
  Interval p_ci;
  double mean_trace = 0.0;
  double se_trace = 0.0;
};

struct WegnerFit {
  std::string label;
  double slope = 0.0;
  double r_squared = 0.0;
  std::vector<double> residuals;
};

struct WegnerOneVolumeResult {
  std::vector<WegnerRow> rows;
  /// Ê[Tr] vs s(|I|) at each fixed L.
  std::vector<WegnerFit> fits_by_volume;
  /// Ê[Tr] vs |Λ| at each fixed window.
  std::vector<WegnerFit> fits_by_window;
  /// Ê[Tr] vs s(|I|)·|Λ| over all cells: the empirical Wegner constant.
  WegnerFit global_fit;
  std::vector<std::vector<double>> records;  ///< per trial: traces, volume-major
  std::vector<std::string> warnings;
};

WegnerOneVolumeResult wegner_one_volume(const SystemSpec& system, const std::vector<SpectrumWindow>& windows,
                                        const std::vector<double>& volumes, const RunOptions& run);

// ---------------------------------------------------------------------------
// Two-volume eigenvalue distances

enum class FieldPolicy { shared, independent };

struct TwoVolumeSpec {
  NRectangle A;
  NRectangle B;
  double R = 1.0;
  FieldPolicy policy = FieldPolicy::shared;
  SpectrumWindow window;
  std::vector<double> eps;
};

struct TwoVolumeRow {
  double eps = 0.0;
  std::size_t hits = 0;
  double p_hat = 0.0;
  Interval p_ci;
};

struct TwoVolumeResult {
  SeparationResult separation;
  std::vector<TwoVolumeRow> rows;
  WegnerFit fit;
  std::size_t trials = 0;
  /// Events σ_A ∩ I ≠ ∅, σ_B ∩ I ≠ ∅ and both.
  std::size_t hits_A = 0, hits_B = 0, hits_AB = 0;
  Interval ci_A, ci_B, ci_AB;
  std::vector<std::vector<double>> records;  ///< per trial: [distance, hitA, hitB]
  std::vector<std::string> warnings;
};

/// Throws std::invalid_argument if A and B are not R-separated.
TwoVolumeResult wegner_two_volume(const SystemSpec& system, const TwoVolumeSpec& spec, const RunOptions& run);

/// Smallest |λ - μ| over λ ∈ a, μ ∈ b; +inf if either is empty. Inputs sorted.
double min_pair_distance(const std::vector<double>& a, const std::vector<double>& b);

// ---------------------------------------------------------------------------
// Integrated density of states

/// Energy grid E_k = k·step for k = first..last. Aligning the grid to multiples
/// of the step makes E_k - E_m a grid point, which the convolution needs.
struct EnergyGrid {
  double step = 0.01;
  std::int64_t first = 0;
  std::int64_t last = 0;

  static EnergyGrid covering(double lo, double hi, double step);
  std::size_t size() const { return static_cast<std::size_t>(last - first + 1); }
  double at(std::size_t k) const { return static_cast<double>(first + static_cast<std::int64_t>(k)) * step; }
  std::vector<double> energies() const;
};

struct IdsCurve {
  double L = 0.0;
  double volume = 0.0;
  std::size_t dimension = 0;
  std::vector<double> energies;
  std::vector<double> ids;     ///< N̂(E) = mean count(≤E)/|Λ|
  std::vector<double> ids_se;
  std::vector<double> dos;     ///< increments N̂(E_k) - N̂(E_{k-1}); first entry N̂(E_0)
};

struct IdsResult {
  std::vector<IdsCurve> curves;
  std::vector<std::vector<double>> records;
  std::vector<std::string> warnings;
};

/// Per-trial eigenvalue counts at every grid energy; |Λ| is the continuum volume.
IdsResult ids_estimate(const SystemSpec& system, const EnergyGrid& grid, const std::vector<double>& volumes,
                       const RunOptions& run);

/// Counts #{λ ≤ E_k} for sorted eigenvalues with the inertia tie tolerance.
std::vector<double> counts_on_grid(const std::vector<double>& sorted_eigenvalues, const std::vector<double>& energies,
                                   double tau);

/// Discrete measure convolution (F ∗ ν)(E_k) = Σ_m F(E_k - E_m) ν_m on an
/// aligned grid whose first point is first·step. F is right-continuous: 0
/// below the grid, F(E_last) above it.
std::vector<double> convolve_ids(const std::vector<double>& F, const std::vector<double>& nu, std::int64_t first);

/// Increment measure of a distribution function on the grid.
std::vector<double> increments(const std::vector<double>& F);

struct ConvolutionResult {
  std::vector<double> energies;
  std::vector<double> one_body_ids;
  std::vector<double> one_body_dos;
  std::vector<double> convolved;          ///< N̂^(1) ∗ ν̂₁ ∗ ... (N-1 times)
  std::vector<double> direct_shared;      ///< N-body IDS, one field in every factor
  std::vector<double> direct_independent; ///< N-body IDS, independent field per factor
  double sup_shared = 0.0, l1_shared = 0.0;
  double sup_independent = 0.0, l1_independent = 0.0;
  std::vector<std::vector<double>> records;
  std::vector<std::string> warnings;
};

/// Non-interacting identity N^(N) = N^(1) ∗ ν₁ ∗ ... ∗ ν₁ on cubes of side L.
/// Throws std::invalid_argument for an interacting system.
ConvolutionResult ids_convolution_check(const SystemSpec& one_body, std::size_t particles, double L,
                                        const EnergyGrid& grid, const RunOptions& run);

struct LipschitzRow {
  double L = 0.0;
  double max_slope = 0.0;
  double slope_se = 0.0;
  double argmax_energy = 0.0;
};

struct LipschitzResult {
  std::vector<LipschitzRow> rows;
  IdsResult ids;
  /// True when no volume's max slope exceeds the previous one by more than
  /// 1.96 combined standard errors.
  bool non_growing = true;
  std::vector<std::string> warnings;
};

LipschitzResult ids_lipschitz_check(const SystemSpec& system, const EnergyGrid& grid,
                                    const std::vector<double>& volumes, const RunOptions& run);

// ---------------------------------------------------------------------------
// Unique continuation ratio

struct UcpRow {
  double L = 0.0;
  std::size_t dimension = 0;
  double min_ratio = 0.0;
  double mean_ratio = 0.0;
  std::size_t nonempty = 0;
  std::size_t samples = 0;
  bool sub_threshold = false;
};

struct UcpResult {
  std::vector<UcpRow> rows;
  double K = 0.0;
  double gamma = 0.0;  ///< gamma_formula(M_D, K, δ) for the configured M_D; reporting only
  std::vector<std::vector<double>> records;
  std::vector<std::string> warnings;
};

UcpResult ucp_experiment(const SystemSpec& system, const std::vector<SpectrumWindow>& windows,
                         const std::vector<double>& volumes, double M_D, const RunOptions& run);

/// W sampled on the mesh nodes.
Eigen::VectorXd comparison_on_mesh(const SystemSpec& system, const Mesh& mesh);

// ---------------------------------------------------------------------------
// Delone pipeline

struct DeloneCheckParams {
  double m = 1.0;
  double M = 2.0;
  double box_side = 8.0;
  std::vector<std::size_t> dims{1, 2};
  double jitter = 1.0;
  double extra_per_cell = 0.0;
};

struct DeloneCheckRow {
  std::size_t index = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  std::size_t points = 0;
  std::size_t gamma1 = 0;
  std::size_t gamma2 = 0;
  bool verified = false;       ///< generated set passes verify_delone
  bool partition = false;      ///< Γ1 ⊔ Γ2 = Γ with one Γ1 point per complete cell
  bool gamma1_spacing = false; ///< Γ1 points pairwise at sup-distance ≥ m
  bool gamma1_delone = false;  ///< Γ1 is (m, 2M)-Delone on the box shrunk by M
  std::string message;

  bool ok() const { return verified && partition && gamma1_spacing && gamma1_delone; }
};

/// Generates `sets` Delone sets cycling through params.dims, seeds derived from
/// `seed`, and checks generation, the split and the Γ1 properties.
std::vector<DeloneCheckRow> delone_pipeline_check(const DeloneCheckParams& params, std::size_t sets,
                                                  std::uint64_t seed);

// ---------------------------------------------------------------------------

/// S(m; σ) = Σ_{j=1}^m σ_j / (2^j σ_0 ⋯ σ_{j-1}); σ[0] must be 1.
/// Extended precision because σ_j = B^{-2^{j-1}} leaves the double range
/// quickly (10^{-512} at j = 10).
double s_sum(std::size_t m, const std::vector<long double>& sigma);
/// B^{-1}(1 - 2^{-m}), the value of S for σ_j = B^{-2^{j-1}}.
double s_sum_closed(double B, std::size_t m);
/// σ_0 = 1, σ_j = B^{-2^{j-1}}.
std::vector<long double> s_sum_sequence(double B, std::size_t m);

}  // namespace nbw
