#include "bohmlab/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace bohmlab {

namespace {

double sum_sq(std::span<const cplx> a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return s;
}

}  // namespace

Grid1::Grid1(std::size_t n_points, double x_min, double x_max)
    : n_(n_points), x_min_(x_min), x_max_(x_max), spacing_(0.0) {
  if (n_points < 2 || !std::has_single_bit(n_points)) {
    std::ostringstream os;
    os << "grid size " << n_points << " is not a power of two >= 2";
    throw Error(ErrorKind::precondition, os.str());
  }
  if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
    throw Error(ErrorKind::precondition, "grid requires finite x_min < x_max");
  }
  spacing_ = (x_max - x_min) / static_cast<double>(n_points);
}

std::size_t Grid1::nearest_index(double x) const noexcept {
  const double u = std::floor((x - x_min_) / spacing_ + 0.5);
  const auto n = static_cast<long long>(n_);
  long long j = static_cast<long long>(u) % n;
  if (j < 0) j += n;
  return static_cast<std::size_t>(j);
}

double Grid1::wavenumber(std::size_t j) const noexcept {
  const auto n = static_cast<long long>(n_);
  const auto jj = static_cast<long long>(j);
  const long long m = jj < n / 2 ? jj : jj - n;
  return 2.0 * std::numbers::pi * static_cast<double>(m) / length();
}

std::vector<double> Grid1::coordinates() const {
  std::vector<double> xs(n_);
  for (std::size_t j = 0; j < n_; ++j) xs[j] = coordinate(j);
  return xs;
}

bool Grid1::operator==(const Grid1& other) const noexcept {
  return n_ == other.n_ && x_min_ == other.x_min_ && x_max_ == other.x_max_;
}

void PhysicalParams::validate() const {
  if (!(hbar > 0.0) || !(mass_x > 0.0) || !(mass_y > 0.0)) {
    throw Error(ErrorKind::precondition, "hbar and masses must be strictly positive");
  }
}

WaveFunction1::WaveFunction1(Grid1 grid) : grid_(grid), amp_(grid.size()) {}

WaveFunction1::WaveFunction1(Grid1 grid, std::vector<cplx> amplitudes)
    : grid_(grid), amp_(std::move(amplitudes)) {
  if (amp_.size() != grid_.size()) {
    throw Error(ErrorKind::grid_mismatch, "amplitude count does not match grid size");
  }
}

double WaveFunction1::norm() const { return std::sqrt(sum_sq(amp_) * grid_.spacing()); }

WaveFunction1& WaveFunction1::normalize() {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorKind::normalization, "cannot normalize a zero or non-finite wave function");
  }
  for (auto& v : amp_) v /= n;
  return *this;
}

WaveFunction1 WaveFunction1::normalized() const {
  WaveFunction1 out = *this;
  out.normalize();
  return out;
}

std::vector<double> WaveFunction1::density() const {
  std::vector<double> d(amp_.size());
  std::transform(amp_.begin(), amp_.end(), d.begin(), [](cplx v) { return std::norm(v); });
  return d;
}

WaveFunction2::WaveFunction2(Grid1 grid_x, Grid1 grid_y)
    : gx_(grid_x), gy_(grid_y), amp_(grid_x.size() * grid_y.size()) {}

WaveFunction2::WaveFunction2(Grid1 grid_x, Grid1 grid_y, std::vector<cplx> amplitudes)
    : gx_(grid_x), gy_(grid_y), amp_(std::move(amplitudes)) {
  if (amp_.size() != gx_.size() * gy_.size()) {
    throw Error(ErrorKind::grid_mismatch, "amplitude count does not match grid sizes");
  }
}

bool WaveFunction2::same_grid(const WaveFunction2& other) const noexcept {
  return gx_ == other.gx_ && gy_ == other.gy_;
}

double WaveFunction2::norm() const { return std::sqrt(sum_sq(amp_) * cell_area()); }

WaveFunction2& WaveFunction2::normalize() {
  const double n = norm();
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw Error(ErrorKind::normalization, "cannot normalize a zero or non-finite wave function");
  }
  for (auto& v : amp_) v /= n;
  return *this;
}

WaveFunction2 WaveFunction2::normalized() const {
  WaveFunction2 out = *this;
  out.normalize();
  return out;
}

std::vector<double> WaveFunction2::density() const {
  std::vector<double> d(amp_.size());
  std::transform(amp_.begin(), amp_.end(), d.begin(), [](cplx v) { return std::norm(v); });
  return d;
}

WaveFunction1 gaussian_packet(const Grid1& grid, double center, double width, double momentum,
                              const PhysicalParams& params) {
  params.validate();
  if (!(width >= 4.0 * grid.spacing())) {
    std::ostringstream os;
    os << "packet width " << width << " is below 4 grid spacings (" << 4.0 * grid.spacing() << ")";
    throw Error(ErrorKind::resolution, os.str());
  }
  // |psi|^2 is a normal density with standard deviation `width`.
  const double s = width * std::numbers::sqrt2;
  const double inside =
      0.5 * (std::erf((grid.x_max() - center) / s) - std::erf((grid.x_min() - center) / s));
  if (!(inside >= 1.0 - 1e-9)) {
    std::ostringstream os;
    os << "packet at " << center << " with width " << width << " is truncated by the domain ["
       << grid.x_min() << ", " << grid.x_max() << "); inside mass " << inside;
    throw Error(ErrorKind::domain, os.str());
  }
  const double k = momentum / params.hbar;
  WaveFunction1 psi(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double x = grid.coordinate(j);
    const double d = x - center;
    psi[j] = std::exp(-d * d / (4.0 * width * width)) * std::polar(1.0, k * x);
  }
  psi.normalize();
  return psi;
}

WaveFunction2 product_state(const WaveFunction1& fx, const WaveFunction1& fy) {
  WaveFunction2 psi(fx.grid(), fy.grid());
  for (std::size_t i = 0; i < fx.size(); ++i) {
    for (std::size_t j = 0; j < fy.size(); ++j) psi(i, j) = fx[i] * fy[j];
  }
  return psi;
}

WaveFunction2 example_state(const Grid1& grid_x, const Grid1& grid_y,
                            const ExampleStateParams& shape, const PhysicalParams& params) {
  if (!(shape.a >= 6.0 * shape.sigma_x)) {
    std::ostringstream os;
    os << "branches not x-disjoint: a = " << shape.a << " < 6 sigma_x = " << 6.0 * shape.sigma_x;
    throw Error(ErrorKind::precondition, os.str());
  }
  const auto phi_a = gaussian_packet(grid_x, shape.a, shape.sigma_x, 0.0, params);
  const auto phi_ma = gaussian_packet(grid_x, -shape.a, shape.sigma_x, 0.0, params);
  const double overlap = std::abs(inner_product(phi_a, phi_ma));
  if (overlap > 1e-8) {
    std::ostringstream os;
    os << "x-branch overlap " << overlap << " exceeds 1e-8";
    throw Error(ErrorKind::precondition, os.str());
  }
  const auto phi_p = gaussian_packet(grid_y, 0.0, shape.sigma_y, shape.p, params);
  const auto phi_mp = gaussian_packet(grid_y, 0.0, shape.sigma_y, -shape.p, params);

  WaveFunction2 psi(grid_x, grid_y);
  const double w = 1.0 / std::numbers::sqrt2;
  for (std::size_t i = 0; i < grid_x.size(); ++i) {
    for (std::size_t j = 0; j < grid_y.size(); ++j) {
      psi(i, j) = w * (phi_a[i] * phi_p[j] + phi_ma[i] * phi_mp[j]);
    }
  }
  psi.normalize();
  return psi;
}

std::vector<double> marginal_density(const WaveFunction2& psi, Axis axis) {
  const std::size_t nx = psi.nx();
  const std::size_t ny = psi.ny();
  const auto amp = psi.amplitudes();
  if (axis == Axis::x) {
    std::vector<double> out(nx, 0.0);
    for (std::size_t i = 0; i < nx; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < ny; ++j) s += std::norm(amp[i * ny + j]);
      out[i] = s * psi.grid_y().spacing();
    }
    return out;
  }
  std::vector<double> out(ny, 0.0);
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) out[j] += std::norm(amp[i * ny + j]);
  }
  for (auto& v : out) v *= psi.grid_x().spacing();
  return out;
}

cplx inner_product(const WaveFunction1& f, const WaveFunction1& g) {
  if (!(f.grid() == g.grid())) throw Error(ErrorKind::grid_mismatch, "inner product across grids");
  cplx s{0.0, 0.0};
  for (std::size_t j = 0; j < f.size(); ++j) s += std::conj(f[j]) * g[j];
  return s * f.grid().spacing();
}

cplx inner_product(const WaveFunction2& f, const WaveFunction2& g) {
  if (!f.same_grid(g)) throw Error(ErrorKind::grid_mismatch, "inner product across grids");
  const auto a = f.amplitudes();
  const auto b = g.amplitudes();
  cplx s{0.0, 0.0};
  for (std::size_t j = 0; j < a.size(); ++j) s += std::conj(a[j]) * b[j];
  return s * f.cell_area();
}

double cell_mass(const Grid1& grid, std::span<const double> density, double lo, double hi) {
  if (density.size() != grid.size()) throw Error(ErrorKind::grid_mismatch, "density size");
  double s = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double x = grid.coordinate(j);
    if (x >= lo && x < hi) s += density[j];
  }
  return s * grid.spacing();
}

}  // namespace bohmlab
