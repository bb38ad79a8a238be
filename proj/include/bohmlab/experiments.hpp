#pragma once
// Named scenarios as runnable recipes. Each run_* returns a RunRecord whose
// checks are the invariants the scenario exercises.

#include <Eigen/Dense>
#include <cstdint>

#include "bohmlab/config.hpp"
#include "bohmlab/dynamics.hpp"
#include "bohmlab/povm.hpp"
#include "bohmlab/record.hpp"

namespace bohmlab {

/// Psi'(x, y) = exp(i theta sign(x)) Psi(x, y).
WaveFunction2 apply_phase_imprint(const WaveFunction2& psi, double theta);

/// (U (x) 1) Psi with U acting on span(basis) and the identity on its
/// orthogonal complement: Psi' = Psi + sum_k e_k (x) sum_j (U - I)_kj chi_j
/// with chi_j = <e_j|Psi>_x. U = I leaves Psi bitwise unchanged.
WaveFunction2 apply_local_x_unitary(const WaveFunction2& psi, const SystemBasis& basis,
                                    const Eigen::MatrixXcd& u);

/// exp(-i (theta/2) sigma_x) on a two-state basis.
Eigen::MatrixXcd branch_mixer(double theta);

struct WhichPathResult {
  std::size_t n_samples = 0;
  std::size_t n_flagged = 0;          // excluded from the velocity estimate
  std::size_t n_config_ties = 0;      // resolved by a seeded fair coin
  std::size_t n_velocity_ties = 0;
  double config_accuracy = 0.0;
  double velocity_accuracy = 0.0;
};

/// Samples the example state and compares the true branch sign(X) with a
/// likelihood-ratio guess from Y alone and with sign(dY/dt).
WhichPathResult which_path_accuracies(const Grid1& grid_x, const Grid1& grid_y,
                                      const ExampleStateParams& shape, const PhysicalParams& params,
                                      std::size_t n, std::uint64_t seed, double eps_node = 1e-12);

struct SensitivityResult {
  double tv_y_marginal = 0.0;
  double tv_ydot = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_flagged = 0;        // Psi ensemble
  std::size_t n_flagged_prime = 0;  // Psi' ensemble
  Grid1 ydot_bins{2, -1.0, 1.0};
  std::vector<double> ydot_density;
  std::vector<double> ydot_density_prime;
};

/// Total variation between the y-marginals of |Psi|^2 and |Psi'|^2, and between
/// the dY/dt histograms of equal-seed equilibrium ensembles of both.
/// Flagged samples are excluded; velocities beyond the histogram range land in
/// the edge bins.
SensitivityResult marginal_sensitivity(const WaveFunction2& psi, const WaveFunction2& psi_prime,
                                       const PhysicalParams& params, const Grid1& ydot_bins,
                                       std::size_t n, std::uint64_t seed, double eps_node = 1e-12);

RunRecord run_equivariance(const ExperimentConfig& config);
RunRecord run_fcpf(const ExperimentConfig& config);
RunRecord run_which_path(const ExperimentConfig& config);
RunRecord run_pointer_measurement(const ExperimentConfig& config);
RunRecord run_povm_reconstruct(const ExperimentConfig& config);
RunRecord run_velocity_record(const ExperimentConfig& config);
RunRecord run_measurability(const ExperimentConfig& config);
RunRecord run_marginal_sensitivity(const ExperimentConfig& config);

/// Validates, dispatches on config.scenario and fills the record's config
/// echo, seed and wall clock. Does not write anything.
RunRecord run_scenario(const ExperimentConfig& config);

}  // namespace bohmlab
