#pragma once
// Schroedinger evolution (Strang split-step) and the guiding-equation
// velocity field with RK4 trajectory integration.

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bohmlab/lattice.hpp"
#include "bohmlab/spectral.hpp"

namespace bohmlab {

struct FreePotential {};

/// V = k_x x^2 / 2 + k_y y^2 / 2.
struct HarmonicPotential {
  double k_x = 1.0;
  double k_y = 1.0;
};

/// V = height for x in [x0, x1], every y.
struct BarrierPotential {
  double height = 0.0;
  double x0 = 0.0;
  double x1 = 0.0;
};

/// V = strength on the x-window [x0, x1]; acts on the x-side only and, held for
/// a time tau, imprints the phase -strength tau / hbar there.
struct LocalXPhasePotential {
  double strength = 0.0;
  double x0 = 0.0;
  double x1 = 0.0;
};

using Potential =
    std::variant<FreePotential, HarmonicPotential, BarrierPotential, LocalXPhasePotential>;

/// Real field V(x_i, y_j), row-major like WaveFunction2.
std::vector<double> evaluate_potential(const Potential& potential, const Grid1& grid_x,
                                       const Grid1& grid_y);
std::string describe(const Potential& potential);

/// Strang splitting V/2 -> T -> V/2 with exact kinetic propagation in Fourier
/// space. Holds FFT plans and caches the phase tables of the last step size.
class SplitStepEvolver {
 public:
  SplitStepEvolver(const Grid1& grid_x, const Grid1& grid_y, const Potential& potential,
                   const PhysicalParams& params);

  /// Throws configuration if dt <= 0 or dt * max_kinetic_rate() >= pi.
  void step(WaveFunction2& psi, double dt);
  /// Largest kinetic phase rate hbar (kx^2 / 2 m_x + ky^2 / 2 m_y) on the grid.
  double max_kinetic_rate() const noexcept { return max_rate_; }
  /// <H> = <T> + <V>.
  double energy(const WaveFunction2& psi) const;

 private:
  void prepare(double dt);

  Grid1 gx_;
  Grid1 gy_;
  PhysicalParams params_;
  std::vector<double> potential_;
  std::vector<double> kinetic_;  // hbar-free kinetic energy per Fourier mode
  double max_rate_ = 0.0;
  Fft2 fft_;
  double cached_dt_ = 0.0;
  std::vector<cplx> half_v_phase_;
  std::vector<cplx> t_phase_;
};

/// One Strang step. Builds a fresh evolver; prefer SplitStepEvolver in loops.
WaveFunction2 step_splitstep(const WaveFunction2& psi, const Potential& potential,
                             const PhysicalParams& params, double dt);

struct ParticleConfig {
  double x = 0.0;
  double y = 0.0;
};

struct Velocity2 {
  double vx = 0.0;
  double vy = 0.0;
};

struct VelocitySample {
  Velocity2 v;
  bool flagged = false;  // interpolation stencil touches a node-masked point
};

struct VelocityField2 {
  Grid1 grid_x;
  Grid1 grid_y;
  std::vector<double> vx;
  std::vector<double> vy;
  std::vector<std::uint8_t> node_mask;  // 1 where |Psi|^2 < eps_node * max |Psi|^2
  std::size_t masked_count = 0;

  double mask_fraction() const noexcept {
    return static_cast<double>(masked_count) / static_cast<double>(node_mask.size());
  }
  /// Bilinear interpolation of the field (periodic wrap).
  VelocitySample at(const ParticleConfig& q) const noexcept;
  /// Largest |v| over unmasked nodes.
  double sup_norm() const noexcept;
};

/// v_k = (hbar / m_k) Im(d_k Psi / Psi), evaluated as
/// (hbar / m_k) (Re Psi d_k Im Psi - Im Psi d_k Re Psi) / |Psi|^2 with spectral
/// derivatives of the real and imaginary parts. Zero on masked nodes.
class VelocityEvaluator {
 public:
  VelocityEvaluator(const Grid1& grid_x, const Grid1& grid_y, const PhysicalParams& params);
  VelocityField2 operator()(const WaveFunction2& psi, double eps_node = 1e-12);

 private:
  Grid1 gx_;
  Grid1 gy_;
  PhysicalParams params_;
  AxisDerivative dx_;
  AxisDerivative dy_;
  std::vector<double> re_, im_, re_dx_, re_dy_, im_dx_, im_dy_;
};

VelocityField2 velocity_field(const WaveFunction2& psi, const PhysicalParams& params,
                              double eps_node = 1e-12);

struct Trajectory {
  std::vector<double> times;
  std::vector<ParticleConfig> configs;
  std::vector<Velocity2> velocities;
  bool node_flagged = false;
};

struct IntegrationOptions {
  double t_final = 1.0;
  double dt = 0.005;
  /// Recording cadence; 0 records every step. Must be a multiple of dt.
  double output_interval = 0.0;
  double eps_node = 1e-12;
  unsigned threads = 1;
};

struct EnsembleResult {
  std::vector<Trajectory> trajectories;
  WaveFunction2 final_state;
  std::size_t n_flagged = 0;
  double flag_rate = 0.0;
  std::vector<std::string> warnings;
};

/// Integrates all particles against one shared Psi_t. Each trajectory step dt
/// advances Psi by two Strang half steps, so the RK4 stages see the field at
/// t, t + dt/2 and t + dt without extrapolation. Results do not depend on the
/// thread count. Throws domain if a particle leaves the grid.
EnsembleResult evolve_ensemble(const WaveFunction2& psi0, std::span<const ParticleConfig> q0,
                               const Potential& potential, const PhysicalParams& params,
                               const IntegrationOptions& options);

Trajectory integrate_trajectory(const WaveFunction2& psi0, const ParticleConfig& q0,
                                const Potential& potential, const PhysicalParams& params,
                                const IntegrationOptions& options);

/// Runs fn(i) for i in [0, n) over `threads` workers with a static contiguous
/// partition. fn must only touch per-index state.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn);

}  // namespace bohmlab

#include "bohmlab/detail/parallel.hpp"
