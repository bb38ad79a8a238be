#include "bohmlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace bohmlab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

bool is_multiple(double value, double step) {
  const double r = value / step;
  return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, std::abs(r));
}

}  // namespace

std::vector<double> evaluate_potential(const Potential& potential, const Grid1& grid_x,
                                       const Grid1& grid_y) {
  const std::size_t nx = grid_x.size();
  const std::size_t ny = grid_y.size();
  std::vector<double> v(nx * ny, 0.0);
  std::visit(Overloaded{
                 [](const FreePotential&) {},
                 [&](const HarmonicPotential& h) {
                   for (std::size_t i = 0; i < nx; ++i) {
                     const double x = grid_x.coordinate(i);
                     for (std::size_t j = 0; j < ny; ++j) {
                       const double y = grid_y.coordinate(j);
                       v[i * ny + j] = 0.5 * h.k_x * x * x + 0.5 * h.k_y * y * y;
                     }
                   }
                 },
                 [&](const BarrierPotential& b) {
                   for (std::size_t i = 0; i < nx; ++i) {
                     const double x = grid_x.coordinate(i);
                     if (x < b.x0 || x > b.x1) continue;
                     std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(i * ny), ny, b.height);
                   }
                 },
                 [&](const LocalXPhasePotential& p) {
                   for (std::size_t i = 0; i < nx; ++i) {
                     const double x = grid_x.coordinate(i);
                     if (x < p.x0 || x > p.x1) continue;
                     std::fill_n(v.begin() + static_cast<std::ptrdiff_t>(i * ny), ny, p.strength);
                   }
                 },
             },
             potential);
  return v;
}

std::string describe(const Potential& potential) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const FreePotential&) { os << "free"; },
                 [&](const HarmonicPotential& h) {
                   os << "harmonic(k_x=" << h.k_x << ", k_y=" << h.k_y << ")";
                 },
                 [&](const BarrierPotential& b) {
                   os << "barrier(height=" << b.height << ", x0=" << b.x0 << ", x1=" << b.x1 << ")";
                 },
                 [&](const LocalXPhasePotential& p) {
                   os << "local_x_phase(strength=" << p.strength << ", x0=" << p.x0
                      << ", x1=" << p.x1 << ")";
                 },
             },
             potential);
  return os.str();
}

SplitStepEvolver::SplitStepEvolver(const Grid1& grid_x, const Grid1& grid_y,
                                   const Potential& potential, const PhysicalParams& params)
    : gx_(grid_x),
      gy_(grid_y),
      params_(params),
      potential_(evaluate_potential(potential, grid_x, grid_y)),
      fft_(grid_x.size(), grid_y.size()) {
  params_.validate();
  const std::size_t nx = gx_.size();
  const std::size_t ny = gy_.size();
  kinetic_.resize(nx * ny);
  const double h = params_.hbar;
  for (std::size_t i = 0; i < nx; ++i) {
    const double kx = gx_.wavenumber(i);
    for (std::size_t j = 0; j < ny; ++j) {
      const double ky = gy_.wavenumber(j);
      const double t = h * h * (kx * kx / (2.0 * params_.mass_x) + ky * ky / (2.0 * params_.mass_y));
      kinetic_[i * ny + j] = t;
      max_rate_ = std::max(max_rate_, t / h);
    }
  }
}

void SplitStepEvolver::prepare(double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::configuration, "split-step needs dt > 0");
  if (!(dt * max_rate_ < std::numbers::pi)) {
    std::ostringstream os;
    os << "dt = " << dt << " aliases the fastest retained mode: dt * max kinetic rate = "
       << dt * max_rate_ << " >= pi";
    throw Error(ErrorKind::configuration, os.str());
  }
  if (dt == cached_dt_) return;
  const double h = params_.hbar;
  const double inv_n = 1.0 / static_cast<double>(kinetic_.size());
  half_v_phase_.resize(potential_.size());
  t_phase_.resize(kinetic_.size());
  for (std::size_t j = 0; j < potential_.size(); ++j) {
    half_v_phase_[j] = std::polar(1.0, -0.5 * dt * potential_[j] / h);
  }
  // The inverse FFT normalization 1/N is folded into the kinetic phase.
  for (std::size_t j = 0; j < kinetic_.size(); ++j) {
    t_phase_[j] = std::polar(inv_n, -dt * kinetic_[j] / h);
  }
  cached_dt_ = dt;
}

void SplitStepEvolver::step(WaveFunction2& psi, double dt) {
  if (!(psi.grid_x() == gx_) || !(psi.grid_y() == gy_)) {
    throw Error(ErrorKind::grid_mismatch, "evolver and wave function grids differ");
  }
  prepare(dt);
  auto a = psi.amplitudes();
  for (std::size_t j = 0; j < a.size(); ++j) a[j] *= half_v_phase_[j];
  fft_.forward(a);
  for (std::size_t j = 0; j < a.size(); ++j) a[j] *= t_phase_[j];
  fft_.backward(a);
  for (std::size_t j = 0; j < a.size(); ++j) a[j] *= half_v_phase_[j];
}

double SplitStepEvolver::energy(const WaveFunction2& psi) const {
  std::vector<cplx> spec(psi.amplitudes().begin(), psi.amplitudes().end());
  fft_.forward(spec);
  double kinetic = 0.0;
  for (std::size_t j = 0; j < spec.size(); ++j) kinetic += std::norm(spec[j]) * kinetic_[j];
  kinetic /= static_cast<double>(spec.size());
  double pot = 0.0;
  const auto a = psi.amplitudes();
  for (std::size_t j = 0; j < a.size(); ++j) pot += std::norm(a[j]) * potential_[j];
  return (kinetic + pot) * psi.cell_area();
}

WaveFunction2 step_splitstep(const WaveFunction2& psi, const Potential& potential,
                             const PhysicalParams& params, double dt) {
  SplitStepEvolver evolver(psi.grid_x(), psi.grid_y(), potential, params);
  WaveFunction2 out = psi;
  evolver.step(out, dt);
  return out;
}

VelocitySample VelocityField2::at(const ParticleConfig& q) const noexcept {
  const std::size_t nx = grid_x.size();
  const std::size_t ny = grid_y.size();
  const double u = (q.x - grid_x.x_min()) / grid_x.spacing();
  const double w = (q.y - grid_y.x_min()) / grid_y.spacing();
  const double fu = std::floor(u);
  const double fw = std::floor(w);
  const double tx = u - fu;
  const double ty = w - fw;
  auto wrap = [](double i, std::size_t n) {
    auto k = static_cast<long long>(i) % static_cast<long long>(n);
    if (k < 0) k += static_cast<long long>(n);
    return static_cast<std::size_t>(k);
  };
  const std::size_t i0 = wrap(fu, nx);
  const std::size_t i1 = (i0 + 1) % nx;
  const std::size_t j0 = wrap(fw, ny);
  const std::size_t j1 = (j0 + 1) % ny;
  const std::size_t c00 = i0 * ny + j0, c01 = i0 * ny + j1, c10 = i1 * ny + j0,
                    c11 = i1 * ny + j1;
  const double w00 = (1.0 - tx) * (1.0 - ty), w01 = (1.0 - tx) * ty, w10 = tx * (1.0 - ty),
               w11 = tx * ty;
  VelocitySample s;
  s.v.vx = w00 * vx[c00] + w01 * vx[c01] + w10 * vx[c10] + w11 * vx[c11];
  s.v.vy = w00 * vy[c00] + w01 * vy[c01] + w10 * vy[c10] + w11 * vy[c11];
  s.flagged = node_mask[c00] || node_mask[c01] || node_mask[c10] || node_mask[c11];
  return s;
}

double VelocityField2::sup_norm() const noexcept {
  double m = 0.0;
  for (std::size_t j = 0; j < vx.size(); ++j) {
    if (node_mask[j]) continue;
    m = std::max(m, std::hypot(vx[j], vy[j]));
  }
  return m;
}

VelocityEvaluator::VelocityEvaluator(const Grid1& grid_x, const Grid1& grid_y,
                                     const PhysicalParams& params)
    : gx_(grid_x),
      gy_(grid_y),
      params_(params),
      dx_(grid_x, grid_y, Axis::x),
      dy_(grid_x, grid_y, Axis::y) {
  params_.validate();
  const std::size_t n = gx_.size() * gy_.size();
  for (auto* v : {&re_, &im_, &re_dx_, &re_dy_, &im_dx_, &im_dy_}) v->resize(n);
}

VelocityField2 VelocityEvaluator::operator()(const WaveFunction2& psi, double eps_node) {
  if (!(psi.grid_x() == gx_) || !(psi.grid_y() == gy_)) {
    throw Error(ErrorKind::grid_mismatch, "velocity evaluator and wave function grids differ");
  }
  if (!(eps_node > 0.0)) throw Error(ErrorKind::precondition, "eps_node must be positive");
  const auto a = psi.amplitudes();
  const std::size_t n = a.size();
  double max_density = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    re_[j] = a[j].real();
    im_[j] = a[j].imag();
    max_density = std::max(max_density, std::norm(a[j]));
  }
  dx_.apply(re_, re_dx_);
  dx_.apply(im_, im_dx_);
  dy_.apply(re_, re_dy_);
  dy_.apply(im_, im_dy_);

  VelocityField2 f{gx_, gy_, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0),
                   std::vector<std::uint8_t>(n, 0), 0};
  const double cx = params_.hbar / params_.mass_x;
  const double cy = params_.hbar / params_.mass_y;
  const double floor = eps_node * max_density;
  for (std::size_t j = 0; j < n; ++j) {
    const double rho = re_[j] * re_[j] + im_[j] * im_[j];
    if (!(rho >= floor) || rho == 0.0) {
      f.node_mask[j] = 1;
      ++f.masked_count;
      continue;
    }
    f.vx[j] = cx * (re_[j] * im_dx_[j] - im_[j] * re_dx_[j]) / rho;
    f.vy[j] = cy * (re_[j] * im_dy_[j] - im_[j] * re_dy_[j]) / rho;
  }
  return f;
}

VelocityField2 velocity_field(const WaveFunction2& psi, const PhysicalParams& params,
                              double eps_node) {
  VelocityEvaluator eval(psi.grid_x(), psi.grid_y(), params);
  return eval(psi, eps_node);
}

namespace {

struct ParticleState {
  ParticleConfig q;
  bool flagged = false;
};

ParticleConfig advance(const ParticleConfig& q, const Velocity2& v, double h) {
  return {q.x + h * v.vx, q.y + h * v.vy};
}

void check_inside(const ParticleConfig& q, const Grid1& gx, const Grid1& gy, std::size_t index,
                  double t) {
  if (gx.contains(q.x) && gy.contains(q.y)) return;
  std::ostringstream os;
  os << "particle " << index << " left the domain at t = " << t << " (x = " << q.x
     << ", y = " << q.y << ")";
  throw Error(ErrorKind::domain, os.str());
}

}  // namespace

EnsembleResult evolve_ensemble(const WaveFunction2& psi0, std::span<const ParticleConfig> q0,
                               const Potential& potential, const PhysicalParams& params,
                               const IntegrationOptions& options) {
  const double dt = options.dt;
  if (!(dt > 0.0) || !(options.t_final >= 0.0)) {
    throw Error(ErrorKind::configuration, "integration needs dt > 0 and t_final >= 0");
  }
  if (!is_multiple(options.t_final, dt)) {
    throw Error(ErrorKind::precondition, "t_final must be a multiple of dt");
  }
  const double cadence = options.output_interval > 0.0 ? options.output_interval : dt;
  if (!is_multiple(cadence, dt)) {
    throw Error(ErrorKind::precondition, "dt must divide the output interval");
  }
  const auto n_steps = static_cast<std::size_t>(std::llround(options.t_final / dt));
  const auto record_every = static_cast<std::size_t>(std::llround(cadence / dt));

  const Grid1& gx = psi0.grid_x();
  const Grid1& gy = psi0.grid_y();
  for (std::size_t i = 0; i < q0.size(); ++i) check_inside(q0[i], gx, gy, i, 0.0);

  SplitStepEvolver evolver(gx, gy, potential, params);
  VelocityEvaluator velocity(gx, gy, params);
  WaveFunction2 psi = psi0;

  const std::size_t n = q0.size();
  std::vector<ParticleState> state(n);
  std::vector<Trajectory> traj(n);
  const std::size_t n_records = n_steps / record_every + 1 + (n_steps % record_every ? 1 : 0);
  for (std::size_t i = 0; i < n; ++i) {
    state[i].q = q0[i];
    traj[i].times.reserve(n_records);
    traj[i].configs.reserve(n_records);
    traj[i].velocities.reserve(n_records);
  }

  VelocityField2 v_now = velocity(psi, options.eps_node);
  auto record = [&](double t) {
    parallel_for(n, options.threads, [&](std::size_t i) {
      const VelocitySample s = v_now.at(state[i].q);
      state[i].flagged = state[i].flagged || s.flagged;
      traj[i].times.push_back(t);
      traj[i].configs.push_back(state[i].q);
      traj[i].velocities.push_back(s.v);
    });
  };
  record(0.0);

  for (std::size_t s = 1; s <= n_steps; ++s) {
    const double t = static_cast<double>(s) * dt;
    evolver.step(psi, 0.5 * dt);
    const VelocityField2 v_mid = velocity(psi, options.eps_node);
    evolver.step(psi, 0.5 * dt);
    VelocityField2 v_end = velocity(psi, options.eps_node);

    parallel_for(n, options.threads, [&](std::size_t i) {
      ParticleState& p = state[i];
      const VelocitySample k1 = v_now.at(p.q);
      const VelocitySample k2 = v_mid.at(advance(p.q, k1.v, 0.5 * dt));
      const VelocitySample k3 = v_mid.at(advance(p.q, k2.v, 0.5 * dt));
      const VelocitySample k4 = v_end.at(advance(p.q, k3.v, dt));
      p.flagged = p.flagged || k1.flagged || k2.flagged || k3.flagged || k4.flagged;
      p.q.x += dt / 6.0 * (k1.v.vx + 2.0 * k2.v.vx + 2.0 * k3.v.vx + k4.v.vx);
      p.q.y += dt / 6.0 * (k1.v.vy + 2.0 * k2.v.vy + 2.0 * k3.v.vy + k4.v.vy);
      check_inside(p.q, gx, gy, i, t);
    });

    v_now = std::move(v_end);
    if (s % record_every == 0 || s == n_steps) record(t);
  }

  EnsembleResult result{std::move(traj), std::move(psi), 0, 0.0, {}};
  for (std::size_t i = 0; i < n; ++i) {
    result.trajectories[i].node_flagged = state[i].flagged;
    if (state[i].flagged) ++result.n_flagged;
  }
  result.flag_rate = n ? static_cast<double>(result.n_flagged) / static_cast<double>(n) : 0.0;
  if (result.flag_rate > 0.01) {
    std::ostringstream os;
    os << "node-flag rate " << result.flag_rate << " exceeds 1%";
    result.warnings.push_back(os.str());
  }
  return result;
}

Trajectory integrate_trajectory(const WaveFunction2& psi0, const ParticleConfig& q0,
                                const Potential& potential, const PhysicalParams& params,
                                const IntegrationOptions& options) {
  const ParticleConfig q[1] = {q0};
  auto result = evolve_ensemble(psi0, q, potential, params, options);
  return std::move(result.trajectories.front());
}

}  // namespace bohmlab
