#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bohmlab/dynamics.hpp"
#include "bohmlab/lattice.hpp"
#include "bohmlab/spectral.hpp"

using namespace bohmlab;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::precondition;
}

double second_moment(const WaveFunction1& f, double center) {
  const auto d = f.density();
  double m = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    const double u = f.grid().coordinate(j) - center;
    m += d[j] * u * u * f.grid().spacing();
  }
  return m;
}

}  // namespace

TEST_CASE("grid geometry and periodic indexing") {
  const Grid1 g(8, -4.0, 4.0);
  CHECK(g.spacing() == 1.0);
  CHECK(g.coordinate(0) == -4.0);
  CHECK(g.coordinate(7) == 3.0);
  CHECK(g.nearest_index(-4.4) == 0);
  CHECK(g.nearest_index(-4.6) == 7);
  CHECK(g.nearest_index(-4.0) == 0);
  CHECK(g.nearest_index(3.49) == 7);
  CHECK(g.nearest_index(3.5) == 0);
  CHECK(g.nearest_index(12.2) == 0);
  CHECK(g.wavenumber(1) == doctest::Approx(2 * std::numbers::pi / 8.0));
  CHECK(g.wavenumber(4) == doctest::Approx(-std::numbers::pi));
  CHECK(g.wavenumber(7) == doctest::Approx(-2 * std::numbers::pi / 8.0));
  CHECK(g.contains(-4.0));
  CHECK_FALSE(g.contains(4.0));
}

TEST_CASE("grid rejects sizes that are not powers of two") {
  CHECK(kind_of([] { Grid1(100, 0.0, 1.0); }) == ErrorKind::precondition);
  CHECK(kind_of([] { Grid1(1, 0.0, 1.0); }) == ErrorKind::precondition);
  CHECK(kind_of([] { Grid1(64, 1.0, 1.0); }) == ErrorKind::precondition);
}

TEST_CASE("physical parameters must be positive") {
  PhysicalParams p;
  p.mass_y = 0.0;
  CHECK(kind_of([&] { p.validate(); }) == ErrorKind::precondition);
}

TEST_CASE("gaussian packet at rest is real, positive, even and has zero velocity") {
  const Grid1 gx(128, -8.0, 8.0);
  const auto f = gaussian_packet(gx, 0.0, 1.0, 0.0);
  CHECK(std::abs(f.norm() - 1.0) <= 1e-12);
  for (std::size_t j = 1; j < gx.size(); ++j) {
    CHECK(f[j].imag() == 0.0);
    CHECK(f[j].real() > 0.0);
    CHECK(f[j].real() == doctest::Approx(f[gx.size() - j].real()).epsilon(1e-14));
  }
  const auto field = velocity_field(product_state(f, f), PhysicalParams{});
  CHECK(field.sup_norm() == 0.0);
}

TEST_CASE("gaussian packet density has the requested width") {
  const Grid1 gx(256, -12.0, 12.0);
  const auto f = gaussian_packet(gx, 1.25, 0.8, 3.0);
  CHECK(std::sqrt(second_moment(f, 1.25)) == doctest::Approx(0.8).epsilon(1e-10));
}

TEST_CASE("moving gaussian packet has constant velocity p/m") {
  const Grid1 gx(256, -12.0, 12.0);
  const Grid1 gy(64, -8.0, 8.0);
  PhysicalParams params;
  params.mass_x = 2.0;
  const double p = 3.0;
  const auto fx = gaussian_packet(gx, 0.0, 1.0, p, params);
  const auto fy = gaussian_packet(gy, 0.0, 1.0, 0.0, params);
  const auto field = velocity_field(product_state(fx, fy), params);
  double worst = 0.0;
  for (std::size_t k = 0; k < field.vx.size(); ++k) {
    if (field.node_mask[k]) continue;
    worst = std::max(worst, std::abs(field.vx[k] - p / params.mass_x));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("gaussian packet preconditions") {
  const Grid1 gx(64, -8.0, 8.0);
  CHECK(kind_of([&] { gaussian_packet(gx, 0.0, 0.3, 0.0); }) == ErrorKind::resolution);
  CHECK(kind_of([&] { gaussian_packet(gx, 7.0, 1.0, 0.0); }) == ErrorKind::domain);
}

TEST_CASE("example state: half the x-mass per branch and a branch-blind y-marginal") {
  const Grid1 gx(256, -12.0, 12.0);
  const Grid1 gy(256, -12.0, 12.0);
  const ExampleStateParams shape;
  const auto psi = example_state(gx, gy, shape);
  CHECK(std::abs(psi.norm() - 1.0) <= 1e-12);

  const auto mx = marginal_density(psi, Axis::x);
  double right = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    if (gx.coordinate(i) > 0.0) right += mx[i] * gx.spacing();
  }
  CHECK(std::abs(right - 0.5) <= 1e-6);

  const auto envelope = gaussian_packet(gy, 0.0, shape.sigma_y, 0.0).density();
  const auto my = marginal_density(psi, Axis::y);
  double worst = 0.0;
  for (std::size_t j = 0; j < my.size(); ++j) worst = std::max(worst, std::abs(my[j] - envelope[j]));
  CHECK(worst <= 1e-9);

  // Conditional y-density per branch: identical for +a and -a.
  std::vector<double> plus(gy.size()), minus(gy.size());
  for (std::size_t i = 0; i < gx.size(); ++i) {
    auto& m = gx.coordinate(i) > 0.0 ? plus : minus;
    for (std::size_t j = 0; j < gy.size(); ++j) m[j] += std::norm(psi(i, j)) * gx.spacing() * 2.0;
  }
  worst = 0.0;
  for (std::size_t j = 0; j < gy.size(); ++j) worst = std::max(worst, std::abs(plus[j] - minus[j]));
  CHECK(worst <= 1e-9);
}

TEST_CASE("example state rejects overlapping branches") {
  const Grid1 g(256, -12.0, 12.0);
  ExampleStateParams shape;
  shape.a = 0.0;
  CHECK(kind_of([&] { example_state(g, g, shape); }) == ErrorKind::precondition);
  shape.a = 2.0;
  CHECK(kind_of([&] { example_state(g, g, shape); }) == ErrorKind::precondition);
}

TEST_CASE("marginals of a product state") {
  const Grid1 gx(128, -8.0, 8.0);
  const Grid1 gy(128, -8.0, 8.0);
  const auto fx = gaussian_packet(gx, 0.5, 0.7, 1.0);
  const auto fy = gaussian_packet(gy, -1.0, 0.9, 0.0);
  const auto psi = product_state(fx, fy);
  const auto mx = marginal_density(psi, Axis::x);
  const auto my = marginal_density(psi, Axis::y);
  const auto dx = fx.density();
  double sx = 0.0, sy = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    sx += mx[i] * gx.spacing();
    worst = std::max(worst, std::abs(mx[i] - dx[i]));
  }
  for (double v : my) sy += v * gy.spacing();
  CHECK(std::abs(sx - 1.0) <= 1e-10);
  CHECK(std::abs(sy - 1.0) <= 1e-10);
  CHECK(worst <= 1e-12);
}

TEST_CASE("inner products") {
  const Grid1 g(256, -12.0, 12.0);
  const auto f = gaussian_packet(g, 1.0, 0.5, 2.0);
  const auto h = gaussian_packet(g, -0.5, 0.7, -1.0);
  CHECK(std::abs(inner_product(f, f) - cplx(1.0)) <= 1e-12);
  const cplx fh = inner_product(f, h);
  const cplx hf = inner_product(h, f);
  CHECK(std::abs(fh - std::conj(hf)) <= 1e-15);

  // Analytic overlap of equal-width packets at rest: exp(-d^2 / (8 sigma^2)).
  const auto left = gaussian_packet(g, -1.0, 0.5, 0.0);
  const auto right = gaussian_packet(g, 1.0, 0.5, 0.0);
  CHECK(std::abs(inner_product(left, right) - cplx(std::exp(-2.0))) <= 1e-10);
  const auto far_l = gaussian_packet(g, -5.0, 0.5, 0.0);
  const auto far_r = gaussian_packet(g, 5.0, 0.5, 0.0);
  CHECK(std::abs(inner_product(far_l, far_r)) < 1e-8);

  const Grid1 other(128, -12.0, 12.0);
  CHECK(kind_of([&] { inner_product(f, gaussian_packet(other, 0.0, 1.0, 0.0)); }) ==
        ErrorKind::grid_mismatch);
}

TEST_CASE("normalize is idempotent and rejects the zero function") {
  const Grid1 g(64, -8.0, 8.0);
  WaveFunction1 f(g);
  for (std::size_t j = 0; j < g.size(); ++j) f[j] = cplx(std::exp(-g.coordinate(j) * g.coordinate(j)), 0.3);
  f.normalize();
  const WaveFunction1 once = f;
  f.normalize();
  for (std::size_t j = 0; j < g.size(); ++j) CHECK(std::abs(f[j] - once[j]) <= 1e-14 * std::abs(once[j]));
  WaveFunction1 zero(g);
  CHECK(kind_of([&] { zero.normalize(); }) == ErrorKind::normalization);
}

TEST_CASE("Parseval with the unitary transform") {
  const Grid1 g(256, -12.0, 12.0);
  const auto f = gaussian_packet(g, 0.3, 0.6, 4.0);
  const auto F = unitary_dft(f.amplitudes());
  double a = 0.0, b = 0.0;
  for (auto v : f.amplitudes()) a += std::norm(v);
  for (auto v : F) b += std::norm(v);
  CHECK(std::abs(std::sqrt(a) - std::sqrt(b)) <= 1e-12 * std::sqrt(a));
}

TEST_CASE("cell mass of a density") {
  const Grid1 g(256, -12.0, 12.0);
  const auto d = gaussian_packet(g, 0.0, 1.0, 0.0).density();
  CHECK(cell_mass(g, d, -20.0, 20.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cell_mass(g, d, -20.0, 0.0) + cell_mass(g, d, 0.0, 20.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(cell_mass(g, d, -20.0, -1e-9) - cell_mass(g, d, 1e-9, 20.0)) <= 1e-14);
}
