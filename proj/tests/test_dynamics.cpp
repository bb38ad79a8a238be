#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bohmlab/dynamics.hpp"
#include "bohmlab/lattice.hpp"
#include "bohmlab/sampling.hpp"
#include "bohmlab/stats.hpp"

using namespace bohmlab;

namespace {

constexpr double pi = std::numbers::pi;

WaveFunction1 plane_wave(const Grid1& g, int mode) {
  WaveFunction1 f(g);
  const double k = 2 * pi * mode / g.length();
  for (std::size_t j = 0; j < g.size(); ++j) f[j] = std::polar(1.0, k * g.coordinate(j));
  f.normalize();
  return f;
}

WaveFunction1 standing_wave(const Grid1& g, int mode) {
  WaveFunction1 f(g);
  const double k = 2 * pi * mode / g.length();
  for (std::size_t j = 0; j < g.size(); ++j) f[j] = std::cos(k * g.coordinate(j));
  f.normalize();
  return f;
}

double x_width(const WaveFunction2& psi) {
  const auto m = marginal_density(psi, Axis::x);
  const Grid1& g = psi.grid_x();
  double mean = 0.0, second = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) mean += m[i] * g.coordinate(i) * g.spacing();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double u = g.coordinate(i) - mean;
    second += m[i] * u * u * g.spacing();
  }
  return std::sqrt(second);
}

double max_abs_diff(const WaveFunction2& a, const WaveFunction2& b) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.amplitudes().size(); ++k) {
    worst = std::max(worst, std::abs(a.amplitudes()[k] - b.amplitudes()[k]));
  }
  return worst;
}

WaveFunction2 evolve(WaveFunction2 psi, const Potential& v, double dt, std::size_t steps) {
  SplitStepEvolver ev(psi.grid_x(), psi.grid_y(), v, PhysicalParams{});
  for (std::size_t s = 0; s < steps; ++s) ev.step(psi, dt);
  return psi;
}

}  // namespace

TEST_CASE("potentials") {
  const Grid1 g(8, -4.0, 4.0);
  const auto v = evaluate_potential(HarmonicPotential{2.0, 0.5}, g, g);
  CHECK(v[0] == doctest::Approx(0.5 * 2.0 * 16 + 0.5 * 0.5 * 16));
  CHECK(v[4 * 8 + 4] == 0.0);
  const auto b = evaluate_potential(BarrierPotential{3.0, -1.0, 1.0}, g, g);
  CHECK(b[3 * 8 + 0] == 3.0);
  CHECK(b[2 * 8 + 7] == 0.0);
  CHECK(describe(FreePotential{}) == "free");
}

TEST_CASE("split step preserves the norm at every step") {
  const Grid1 g(128, -8.0, 8.0);
  auto psi = product_state(gaussian_packet(g, 1.0, 0.6, 2.0), gaussian_packet(g, -0.5, 0.8, -1.0));
  SplitStepEvolver ev(g, g, HarmonicPotential{}, PhysicalParams{});
  double worst = 0.0;
  for (int s = 0; s < 200; ++s) {
    const double before = psi.norm();
    ev.step(psi, 0.004);
    worst = std::max(worst, std::abs(psi.norm() - before));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("free gaussian spreads by the closed-form width law") {
  const Grid1 gx(256, -12.0, 12.0);
  const Grid1 gy(64, -8.0, 8.0);
  const double s0 = 0.5;
  auto psi = product_state(gaussian_packet(gx, 0.0, s0, 0.0), gaussian_packet(gy, 0.0, 1.0, 0.0));
  const double t = 1.0;
  psi = evolve(psi, FreePotential{}, 0.0025, 400);
  const double want = s0 * std::sqrt(1.0 + std::pow(t / (2.0 * s0 * s0), 2));
  CHECK(std::abs(x_width(psi) / want - 1.0) <= 1e-4);
}

TEST_CASE("harmonic ground state is stationary and conserves energy") {
  const Grid1 g(128, -8.0, 8.0);
  const double w = std::sqrt(0.5);  // density width of the k = m = 1 ground state
  auto psi = product_state(gaussian_packet(g, 0.0, w, 0.0), gaussian_packet(g, 0.0, w, 0.0));
  const auto rho0 = psi.density();
  SplitStepEvolver ev(g, g, HarmonicPotential{}, PhysicalParams{});
  const double e0 = ev.energy(psi);
  CHECK(e0 == doctest::Approx(1.0).epsilon(1e-8));
  const std::size_t steps = 4000;
  const double dt = 2 * pi / steps;
  double drift = 0.0;
  for (std::size_t s = 1; s <= steps; ++s) {
    ev.step(psi, dt);
    if (s % 500 == 0) {
      const auto rho = psi.density();
      for (std::size_t k = 0; k < rho.size(); ++k) drift = std::max(drift, std::abs(rho[k] - rho0[k]));
    }
  }
  CHECK(drift < 1e-6);
  CHECK(std::abs(ev.energy(psi) - e0) <= 1e-6);
}

TEST_CASE("Strang splitting converges at second order") {
  const Grid1 g(128, -8.0, 8.0);
  const auto psi0 = product_state(gaussian_packet(g, 1.5, 0.6, 1.0), gaussian_packet(g, -1.0, 0.7, 0.0));
  const HarmonicPotential v{1.0, 2.0};
  const auto ref = evolve(psi0, v, 0.0005, 1000);
  const double e1 = max_abs_diff(evolve(psi0, v, 0.004, 125), ref);
  const double e2 = max_abs_diff(evolve(psi0, v, 0.002, 250), ref);
  CHECK(e2 / e1 == doctest::Approx(0.25).epsilon(0.1));
}

TEST_CASE("step sizes that alias the kinetic phase are rejected") {
  const Grid1 g(256, -12.0, 12.0);
  auto psi = product_state(gaussian_packet(g, 0.0, 1.0, 0.0), gaussian_packet(g, 0.0, 1.0, 0.0));
  SplitStepEvolver ev(g, g, FreePotential{}, PhysicalParams{});
  CHECK(ev.max_kinetic_rate() == doctest::Approx(pi * pi / (0.09375 * 0.09375)));
  CHECK_THROWS_AS(ev.step(psi, 0.01), Error);
  CHECK_THROWS_AS(ev.step(psi, -0.001), Error);
  CHECK_NOTHROW(ev.step(psi, 0.0025));
}

TEST_CASE("standing wave has no velocity, plane wave has hbar k / m") {
  const Grid1 gx(128, -12.0, 12.0);
  const Grid1 gy(64, -8.0, 8.0);
  const auto env = gaussian_packet(gy, 0.0, 1.0, 0.0);
  const auto still = velocity_field(product_state(standing_wave(gx, 3), env), PhysicalParams{});
  CHECK(still.sup_norm() == 0.0);
  CHECK(still.masked_count > 0);

  PhysicalParams params;
  params.mass_x = 2.0;
  params.hbar = 0.7;
  const auto moving = velocity_field(product_state(plane_wave(gx, 4), env), params);
  const double want = params.hbar * (2 * pi * 4 / 24.0) / params.mass_x;
  double worst_x = 0.0, worst_y = 0.0;
  for (std::size_t k = 0; k < moving.vx.size(); ++k) {
    if (moving.node_mask[k]) continue;
    worst_x = std::max(worst_x, std::abs(moving.vx[k] - want));
    worst_y = std::max(worst_y, std::abs(moving.vy[k]));
  }
  CHECK(worst_x < 1e-10);
  CHECK(worst_y < 1e-8);
}

TEST_CASE("velocity of a complex combination of two real waves") {
  const Grid1 gx(128, -12.0, 12.0);
  const Grid1 gy(64, -8.0, 8.0);
  const auto env = gaussian_packet(gy, 0.0, 1.0, 0.0);
  const auto cpart = product_state(standing_wave(gx, 2), env);
  WaveFunction1 s(gx);
  const double k = 2 * pi * 2 / 24.0;
  for (std::size_t j = 0; j < gx.size(); ++j) s[j] = cplx(0.0, std::sin(k * gx.coordinate(j)));
  s.normalize();
  const auto spart = product_state(s, env);
  CHECK(velocity_field(cpart, {}).sup_norm() == 0.0);
  CHECK(velocity_field(spart, {}).sup_norm() == 0.0);
  WaveFunction2 sum = cpart;
  for (std::size_t q = 0; q < sum.amplitudes().size(); ++q) sum.amplitudes()[q] += spart.amplitudes()[q];
  const auto full = velocity_field(sum, {});
  CHECK(full.sup_norm() == doctest::Approx(k).epsilon(1e-9));
}

TEST_CASE("plane-wave trajectories are straight lines") {
  const Grid1 g(128, -12.0, 12.0);
  WaveFunction1 flat(g, std::vector<cplx>(g.size(), cplx(1.0)));
  flat.normalize();
  const auto psi = product_state(plane_wave(g, 4), flat);
  const double v = 2 * pi * 4 / 24.0;
  IntegrationOptions opt;
  opt.t_final = 1.0;
  opt.dt = 0.005;
  const auto tr = integrate_trajectory(psi, {-5.0, 1.3}, FreePotential{}, {}, opt);
  REQUIRE(tr.configs.size() == 201);
  double worst = 0.0;
  for (std::size_t s = 0; s < tr.configs.size(); ++s) {
    worst = std::max(worst, std::abs(tr.configs[s].x - (-5.0 + v * tr.times[s])));
    worst = std::max(worst, std::abs(tr.configs[s].y - 1.3));
  }
  CHECK(worst < 1e-6);
  CHECK_FALSE(tr.node_flagged);
}

TEST_CASE("a particle guided by a real standing wave does not move") {
  const Grid1 g(128, -12.0, 12.0);
  WaveFunction1 flat(g, std::vector<cplx>(g.size(), cplx(1.0)));
  flat.normalize();
  const auto psi = product_state(standing_wave(g, 3), flat);
  IntegrationOptions opt;
  opt.t_final = 1.0;
  const auto tr = integrate_trajectory(psi, {0.77, -0.4}, FreePotential{}, {}, opt);
  const auto& last = tr.configs.back();
  CHECK(std::hypot(last.x - 0.77, last.y + 0.4) < 1e-10);
}

TEST_CASE("example state: dY/dt is +p/m on the +a branch and -p/m on the -a branch") {
  const Grid1 g(256, -12.0, 12.0);
  PhysicalParams params;
  params.mass_y = 2.0;
  const ExampleStateParams shape;
  const auto psi = example_state(g, g, shape, params);
  IntegrationOptions opt;
  opt.t_final = 0.0;
  const auto plus = integrate_trajectory(psi, {5.1, 0.2}, FreePotential{}, params, opt);
  const auto minus = integrate_trajectory(psi, {-4.8, -0.3}, FreePotential{}, params, opt);
  CHECK(std::abs(plus.velocities.front().vy - shape.p / params.mass_y) < 1e-6);
  CHECK(std::abs(minus.velocities.front().vy + shape.p / params.mass_y) < 1e-6);
}

TEST_CASE("ensemble integration does not depend on the thread count") {
  const Grid1 g(64, -8.0, 8.0);
  const auto psi = product_state(gaussian_packet(g, 0.0, 1.0, 1.0), gaussian_packet(g, 0.5, 1.0, -0.5));
  SeededSampler sampler(9, 0);
  const auto q0 = sample_equilibrium(psi, 300, sampler);
  IntegrationOptions opt;
  opt.t_final = 0.2;
  opt.dt = 0.01;
  opt.output_interval = 0.1;
  const auto a = evolve_ensemble(psi, q0, FreePotential{}, {}, opt);
  opt.threads = 4;
  const auto b = evolve_ensemble(psi, q0, FreePotential{}, {}, opt);
  REQUIRE(a.trajectories.size() == b.trajectories.size());
  bool same = true;
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    CHECK(a.trajectories[i].times.size() == 3);
    for (std::size_t s = 0; s < a.trajectories[i].configs.size(); ++s) {
      same = same && a.trajectories[i].configs[s].x == b.trajectories[i].configs[s].x &&
             a.trajectories[i].configs[s].y == b.trajectories[i].configs[s].y;
    }
  }
  CHECK(same);
  CHECK(max_abs_diff(a.final_state, b.final_state) == 0.0);
}

TEST_CASE("particles leaving the grid raise a domain error") {
  const Grid1 g(128, -12.0, 12.0);
  WaveFunction1 flat(g, std::vector<cplx>(g.size(), cplx(1.0)));
  flat.normalize();
  const auto psi = product_state(plane_wave(g, 16), flat);
  IntegrationOptions opt;
  opt.t_final = 1.0;
  try {
    integrate_trajectory(psi, {11.0, 0.0}, FreePotential{}, {}, opt);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
  CHECK_THROWS_AS(integrate_trajectory(psi, {12.5, 0.0}, FreePotential{}, {}, opt), Error);
  opt.t_final = 0.0123;
  CHECK_THROWS_AS(integrate_trajectory(psi, {0.0, 0.0}, FreePotential{}, {}, opt), Error);
}

TEST_CASE("equivariance of a free gaussian ensemble") {
  const Grid1 g(256, -12.0, 12.0);
  const auto psi = product_state(gaussian_packet(g, -1.0, 0.6, 2.0), gaussian_packet(g, 0.0, 0.8, -1.0));
  SeededSampler sampler(5, 0);
  const auto q0 = sample_equilibrium(psi, 10000, sampler);
  IntegrationOptions opt;
  opt.t_final = 1.0;
  opt.dt = 0.005;
  opt.output_interval = 1.0;
  const auto res = evolve_ensemble(psi, q0, FreePotential{}, {}, opt);
  CHECK(res.n_flagged == 0);
  CHECK(res.warnings.empty());
  for (std::size_t rec : {std::size_t{0}, std::size_t{1}}) {
    const auto& state = rec == 0 ? psi : res.final_state;
    std::vector<double> xs, ys;
    for (const auto& tr : res.trajectories) {
      xs.push_back(tr.configs[rec].x);
      ys.push_back(tr.configs[rec].y);
    }
    CHECK(ks_statistic(xs, g, marginal_density(state, Axis::x)) < 0.02);
    CHECK(ks_statistic(ys, g, marginal_density(state, Axis::y)) < 0.02);
  }
}

TEST_CASE("particles started on a node are flagged and reported") {
  const Grid1 g(128, -12.0, 12.0);
  const auto psi = product_state(standing_wave(g, 2), gaussian_packet(g, 0.0, 1.0, 0.0));
  const std::vector<ParticleConfig> q0(10, ParticleConfig{3.0, 0.1});
  IntegrationOptions opt;
  opt.t_final = 0.01;
  const auto res = evolve_ensemble(psi, q0, FreePotential{}, {}, opt);
  CHECK(res.n_flagged == 10);
  CHECK(res.flag_rate == 1.0);
  REQUIRE(res.warnings.size() == 1);
  CHECK(res.warnings.front().find("node-flag") != std::string::npos);
}
