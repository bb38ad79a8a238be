#pragma once
//! Grids, discrete wave functions and elementary state constructors.
//!
//! Conventions used throughout the library:
//!  - A Grid1 has nodes x_j = x_min + j*spacing, j = 0..n-1, and is periodic
//!    (x_max is identified with x_min). Node j represents the cell
//!    [x_j - spacing/2, x_j + spacing/2).
//!  - WaveFunction2 stores amplitudes row-major with the row index along x
//!    and the column index along y: amp[ix * n_y + iy] = Psi(x_ix, y_iy).
//!  - Norms are Riemann sums: ||psi||^2 = sum |psi_j|^2 * spacing.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "bohmlab/error.hpp"

namespace bohmlab {

using cplx = std::complex<double>;

enum class Axis { x, y };

class Grid1 {
 public:
  /// Throws precondition if n_points is not a power of two or x_max <= x_min.
  Grid1(std::size_t n_points, double x_min, double x_max);

  std::size_t size() const noexcept { return n_; }
  double x_min() const noexcept { return x_min_; }
  double x_max() const noexcept { return x_max_; }
  double length() const noexcept { return x_max_ - x_min_; }
  double spacing() const noexcept { return spacing_; }
  double coordinate(std::size_t j) const noexcept {
    return x_min_ + static_cast<double>(j) * spacing_;
  }
  /// Half-open domain [x_min, x_max).
  bool contains(double x) const noexcept { return x >= x_min_ && x < x_max_; }
  /// Index of the node whose cell contains x, wrapped periodically.
  std::size_t nearest_index(double x) const noexcept;
  /// Angular wavenumber of FFT bin j (standard FFT ordering, Nyquist negative).
  double wavenumber(std::size_t j) const noexcept;
  std::vector<double> coordinates() const;

  bool operator==(const Grid1& other) const noexcept;

 private:
  std::size_t n_;
  double x_min_;
  double x_max_;
  double spacing_;
};

struct PhysicalParams {
  double hbar = 1.0;
  double mass_x = 1.0;
  double mass_y = 1.0;

  /// Throws precondition unless all fields are strictly positive.
  void validate() const;
  double mass(Axis axis) const noexcept { return axis == Axis::x ? mass_x : mass_y; }
};

class WaveFunction1 {
 public:
  explicit WaveFunction1(Grid1 grid);
  WaveFunction1(Grid1 grid, std::vector<cplx> amplitudes);

  const Grid1& grid() const noexcept { return grid_; }
  std::span<const cplx> amplitudes() const noexcept { return amp_; }
  std::span<cplx> amplitudes() noexcept { return amp_; }
  cplx operator[](std::size_t j) const noexcept { return amp_[j]; }
  cplx& operator[](std::size_t j) noexcept { return amp_[j]; }
  std::size_t size() const noexcept { return amp_.size(); }

  double norm() const;
  /// Rescales to unit norm. Throws normalization on the zero function.
  WaveFunction1& normalize();
  WaveFunction1 normalized() const;
  std::vector<double> density() const;

 private:
  Grid1 grid_;
  std::vector<cplx> amp_;
};

class WaveFunction2 {
 public:
  WaveFunction2(Grid1 grid_x, Grid1 grid_y);
  WaveFunction2(Grid1 grid_x, Grid1 grid_y, std::vector<cplx> amplitudes);

  const Grid1& grid_x() const noexcept { return gx_; }
  const Grid1& grid_y() const noexcept { return gy_; }
  const Grid1& grid(Axis axis) const noexcept { return axis == Axis::x ? gx_ : gy_; }
  std::size_t nx() const noexcept { return gx_.size(); }
  std::size_t ny() const noexcept { return gy_.size(); }
  std::span<const cplx> amplitudes() const noexcept { return amp_; }
  std::span<cplx> amplitudes() noexcept { return amp_; }
  cplx operator()(std::size_t ix, std::size_t iy) const noexcept { return amp_[ix * ny() + iy]; }
  cplx& operator()(std::size_t ix, std::size_t iy) noexcept { return amp_[ix * ny() + iy]; }
  double cell_area() const noexcept { return gx_.spacing() * gy_.spacing(); }
  bool same_grid(const WaveFunction2& other) const noexcept;

  double norm() const;
  WaveFunction2& normalize();
  WaveFunction2 normalized() const;
  /// |Psi|^2 per node (a density, not a cell probability).
  std::vector<double> density() const;

 private:
  Grid1 gx_;
  Grid1 gy_;
  std::vector<cplx> amp_;
};

/// Normalized psi(x) ~ exp(-(x-center)^2 / (4 width^2)) exp(i momentum x / hbar).
/// `width` is the standard deviation of |psi|^2.
/// Throws resolution if width < 4 spacing, domain if the packet's mass inside
/// the grid is below 1 - 1e-9.
WaveFunction1 gaussian_packet(const Grid1& grid, double center, double width, double momentum,
                              const PhysicalParams& params = {});

/// Psi(x,y) = f(x) g(y).
WaveFunction2 product_state(const WaveFunction1& fx, const WaveFunction1& fy);

struct ExampleStateParams {
  double a = 5.0;
  double p = 10.0;
  double sigma_x = 0.5;
  double sigma_y = 0.5;
};

/// (phi_a(x) phi_p(y) + phi_-a(x) phi_-p(y)) / sqrt(2) with Gaussian packets;
/// phi_{+p} and phi_{-p} share one envelope centred at y = 0.
/// Throws precondition unless a >= 6 sigma_x and the x-branch overlap is <= 1e-8.
WaveFunction2 example_state(const Grid1& grid_x, const Grid1& grid_y,
                            const ExampleStateParams& shape, const PhysicalParams& params = {});

/// Integrates |Psi|^2 over the other coordinate. Sums (times spacing) to 1 for
/// normalized input.
std::vector<double> marginal_density(const WaveFunction2& psi, Axis axis);

/// <f, g>, conjugate-linear in f. Throws grid_mismatch.
cplx inner_product(const WaveFunction1& f, const WaveFunction1& g);
cplx inner_product(const WaveFunction2& f, const WaveFunction2& g);

/// Probability mass inside [lo, hi) for a density sampled on grid nodes.
double cell_mass(const Grid1& grid, std::span<const double> density, double lo, double hi);

}  // namespace bohmlab
