#pragma once
// Conditional and effective wave functions of the x-subsystem given the
// environment coordinate y, and the Monte Carlo check of
// P(X in dx | Y) = |psi(x)|^2 dx on equilibrium ensembles.

#include <span>
#include <vector>

#include "bohmlab/dynamics.hpp"
#include "bohmlab/lattice.hpp"

namespace bohmlab {

struct ConditionalWaveFunction {
  WaveFunction1 base;
  double y_anchor = 0.0;
  std::size_t column = 0;  // grid column actually sliced
  bool normalized = false;
};

/// psi(x) = Psi(x, Y) on the grid column nearest to Y. Throws domain if Y is
/// outside grid_y, conditional_undefined if the column mass is below
/// eps_node times the largest column mass.
ConditionalWaveFunction conditional_wavefunction(const WaveFunction2& psi, double y, bool normalize,
                                                 double eps_node = 1e-12);

struct FcpfOptions {
  std::size_t sample_floor = 200;
  double ks_threshold = 0.1;
};

struct FcpfBin {
  double y_lo = 0.0;
  double y_hi = 0.0;
  std::size_t n_samples = 0;
  double ks_bin = 0.0;     // against the bin-integrated conditional density
  double ks_center = 0.0;  // against |Psi(x, y)|^2 on the column nearest the bin centre
  bool pass = false;
};

struct FcpfReport {
  std::vector<FcpfBin> bins;  // populated bins only
  std::size_t n_samples = 0;
  std::size_t n_excluded = 0;  // node-flagged trajectories
  double max_ks = 0.0;
  double mean_ks = 0.0;
  double threshold = 0.1;
  bool pass = false;
};

/// Groups X by the y-bin of Y (bins of `y_bin_width`, rounded to whole grid
/// columns, aligned with the first cell) and KS-tests every bin holding at least
/// sample_floor samples against the normalized conditional density. Throws
/// insufficient_data if no bin reaches the floor.
FcpfReport verify_fcpf(const WaveFunction2& psi, std::span<const ParticleConfig> configs,
                       double y_bin_width, const FcpfOptions& options = {});

/// Same, reading the configurations recorded at time t; node-flagged
/// trajectories are excluded and counted.
FcpfReport verify_fcpf(const WaveFunction2& psi, std::span<const Trajectory> trajectories,
                       double y_bin_width, double t, const FcpfOptions& options = {});

struct YInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double y) const noexcept { return y >= lo && y < hi; }
};

struct EffectiveOptions {
  double eps_disjoint = 1e-6;
  double eps_rank = 1e-6;
  std::size_t guard_columns = 4;
  double eps_node = 1e-12;
};

struct EffectiveDecomposition {
  WaveFunction1 phi;         // system factor, unit norm
  WaveFunction1 Phi;         // environment factor, supported on the cell of Y
  std::size_t cell = 0;      // index into the partition
  double residual_mass = 0;  // ||Psi - phi Phi||^2
  double rank_residual = 0;  // in-cell rank-1 residual mass / in-cell mass
  double support_overlap = 0;  // |Psi|^2 mass within guard columns of the cell edges
  bool y_in_support = false;
  bool exists = false;
};

/// Restricts Psi to the partition cell containing Y and extracts the dominant
/// singular pair as phi(x) Phi(y). An effective wave function exists iff Y is
/// in the support of Phi, the cell edges carry less than eps_disjoint of
/// mass, and the in-cell rank-1 residual is below eps_rank. Throws domain if no
/// cell contains Y and precondition if the cells overlap.
EffectiveDecomposition effective_decomposition(const WaveFunction2& psi,
                                               std::span<const YInterval> partition, double y,
                                               const EffectiveOptions& options = {});

}  // namespace bohmlab
