#pragma once
// Pointer measurements on a truncated system space, tomographic
// reconstruction of the effects {E_k} from outcome statistics, and the
// velocity-record counterpart whose statistics need not be quadratic.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bohmlab/conditional.hpp"
#include "bohmlab/dynamics.hpp"
#include "bohmlab/lattice.hpp"

namespace bohmlab {

class SystemBasis {
 public:
  /// Throws precondition unless the Gram matrix is the identity within 1e-8.
  explicit SystemBasis(std::vector<WaveFunction1> states);

  /// Hermite functions h_0..h_{dim-1} of length scale `scale` centred at
  /// `center`, Gram-Schmidt orthonormalized on the grid. The states overlap in x.
  static SystemBasis hermite(const Grid1& grid, std::size_t dim, double center, double scale);
  /// {phi_a, phi_-a}: Gaussians of width sigma at +-a (x-disjoint for a >= 6 sigma).
  static SystemBasis branches(const Grid1& grid, double a, double sigma,
                              const PhysicalParams& params = {});

  std::size_t dim() const noexcept { return states_.size(); }
  const Grid1& grid() const noexcept { return states_.front().grid(); }
  const WaveFunction1& state(std::size_t k) const { return states_.at(k); }
  Eigen::MatrixXcd gram() const;
  double gram_deviation() const;
  /// sum_k c_k e_k. Throws precondition on a length mismatch.
  WaveFunction1 compose(std::span<const cplx> coeffs) const;

 private:
  std::vector<WaveFunction1> states_;
};

struct OutcomePartition {
  std::vector<YInterval> regions;  // G_k, disjoint

  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
  /// F(y): index of the region containing y, or npos.
  std::size_t label(double y) const noexcept;
  /// Regions split at the midpoints between sorted pointer centres, the outer
  /// regions extending to the grid edges.
  static OutcomePartition around(std::span<const double> centers, const Grid1& grid_y);
};

enum class RecordMode { exact, sampled };

struct OutcomeDistribution {
  std::vector<double> probabilities;
  RecordMode mode = RecordMode::exact;
  std::size_t n_samples = 0;
  std::size_t n_flagged = 0;
  double flag_rate = 0.0;
  std::vector<std::string> warnings;

  double total() const noexcept;
};

/// Impulsive von Neumann coupling H = strength * A (x) p_y with A e_k =
/// eigenvalue_k e_k: held for t_meas it translates the pointer by
/// Delta_k = strength * eigenvalue_k * t_meas on the e_k component.
struct PointerCoupling {
  double strength = 1.0;
  std::vector<double> eigenvalues;
};

struct PointerSetup {
  SystemBasis basis;
  WaveFunction1 apparatus;  // momentum-zero pointer packet over grid_y
  PointerCoupling coupling;
  double t_meas = 1.0;
  OutcomePartition partition;
};

/// Standard geometry: basis state k shifts a pointer of width sigma_ptr by
/// (k - (dim-1)/2) * separation; regions split at the midpoints.
PointerSetup make_pointer_setup(SystemBasis basis, const Grid1& grid_y, double sigma_ptr,
                                double separation, double t_meas = 1.0);

/// Applies exp(-i t H) for the coupling above to an arbitrary Psi0(x, y):
/// components along e_k are shifted spectrally in y, the orthogonal
/// complement is untouched.
WaveFunction2 apply_pointer_coupling(const WaveFunction2& psi0, const SystemBasis& basis,
                                     std::span<const double> shifts);

class PointerExperiment {
 public:
  /// Throws disjointness if two pointer shifts are closer than 8 pointer widths
  /// or a shifted pointer leaks more than 1e-6 of mass out of its region.
  PointerExperiment(PointerSetup setup, RecordMode mode, std::size_t n_samples = 10000,
                    std::uint64_t seed = 1);

  std::vector<double> shifts() const;
  double pointer_width() const noexcept { return pointer_width_; }
  /// Largest mass of a shifted pointer outside its own region.
  double branch_leakage() const noexcept { return leakage_; }
  /// Psi_T for the system state sum_k c_k e_k (coefficients are normalized).
  WaveFunction2 final_state(std::span<const cplx> coeffs) const;
  OutcomeDistribution operator()(std::span<const cplx> coeffs) const;

 private:
  PointerSetup setup_;
  RecordMode mode_;
  std::size_t n_samples_;
  std::uint64_t seed_;
  double pointer_width_ = 0.0;
  double leakage_ = 0.0;
};

OutcomeDistribution run_pointer_experiment(const PointerSetup& setup,
                                           std::span<const cplx> coeffs, RecordMode mode,
                                           std::size_t n_samples = 10000, std::uint64_t seed = 1);

using Experiment = std::function<OutcomeDistribution(std::span<const cplx>)>;

struct ReconstructOptions {
  std::size_t n_holdout = 20;
  std::uint64_t seed = 2024;
  double normalization_tolerance = 1e-6;
};

struct PovmCandidate {
  std::vector<Eigen::MatrixXcd> effects;
  double completeness_residual = 0.0;  // ||sum_k E_k - I||_2
  double min_eigenvalue = 0.0;
  double holdout_residual = 0.0;       // max_k,state |<psi|E_k|psi> - p_k(psi)|
  std::size_t n_holdout = 0;
  std::size_t n_outcomes = 0;
};

/// Tomographic set {e_i, (e_i+e_j)/sqrt2, (e_i + i e_j)/sqrt2}.
std::vector<std::vector<cplx>> tomographic_states(std::size_t dim);

/// Recovers <e_i|E_k|e_j> by polarization from the outcome statistics on the
/// tomographic set, then scores the Hermitian forms on random validation
/// states. Throws normalization if a distribution does not sum to 1.
PovmCandidate reconstruct_povm(const Experiment& experiment, std::size_t dim,
                               const ReconstructOptions& options = {});

/// p_k(psi) = <psi|E_k|psi> for every effect.
std::vector<double> predict(const PovmCandidate& povm, std::span<const cplx> coeffs);

/// Velocity-coupled pointer: basis state e_0 gives the pointer momentum +p and
/// e_1 momentum -p, with one shared envelope of width sigma_y, so
/// Psi = c_0 e_0(x) phi_p(y) + c_1 e_1(x) phi_-p(y). The record is sign(dY/dt)
/// at t = 0 from the guiding field (outcome 0: +, outcome 1: -).
struct VelocityRecordSetup {
  SystemBasis basis;  // dim 2
  Grid1 grid_y;
  double p = 10.0;
  double sigma_y = 0.5;
  PhysicalParams params;
  double eps_node = 1e-12;
};

class VelocityRecordExperiment {
 public:
  VelocityRecordExperiment(VelocityRecordSetup setup, RecordMode mode,
                           std::size_t n_samples = 10000, std::uint64_t seed = 1);

  WaveFunction2 state(std::span<const cplx> coeffs) const;
  /// Node-flagged samples (and exact ties v_y = 0) are excluded and counted;
  /// a flag rate above 1% adds a warning.
  OutcomeDistribution operator()(std::span<const cplx> coeffs) const;

 private:
  VelocityRecordSetup setup_;
  RecordMode mode_;
  std::size_t n_samples_;
  std::uint64_t seed_;
  WaveFunction1 phi_plus_;
  WaveFunction1 phi_minus_;
};

struct MeasurabilityReport {
  double wavenumber = 0.0;
  double sup_real_part = 0.0;       // ||v[Re psi]||_inf
  double sup_imaginary_part = 0.0;  // ||v[i Im psi]||_inf
  double sup_full = 0.0;            // ||v[psi]||_inf
  bool degenerate = false;          // one part vanishes identically
  bool pass = false;
};

/// Splits psi = Re psi + i Im psi and evaluates the three guiding fields.
MeasurabilityReport measurability_report(const WaveFunction2& psi, const PhysicalParams& params,
                                         double eps_node = 1e-12);

/// Gaussian packet exp(i k x) in x times a real Gaussian in y.
MeasurabilityReport measurability_demo(const Grid1& grid_x, const Grid1& grid_y,
                                       double wavenumber = 5.0, double width = 1.0,
                                       const PhysicalParams& params = {});

}  // namespace bohmlab
