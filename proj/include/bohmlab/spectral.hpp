#pragma once
// Thin RAII wrappers over FFTW plans. All plans are created with
// FFTW_ESTIMATE so the algorithm choice (and hence every rounding) is the same
// on every run; FFTW_MEASURE would make results timing dependent.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "bohmlab/lattice.hpp"

struct fftw_plan_s;

namespace bohmlab {

namespace detail {
struct PlanDeleter {
  void operator()(fftw_plan_s* plan) const noexcept;
};
using PlanHandle = std::unique_ptr<fftw_plan_s, PlanDeleter>;
}  // namespace detail

/// In-place unnormalized complex DFT of length n.
class Fft1 {
 public:
  explicit Fft1(std::size_t n);
  std::size_t size() const noexcept { return n_; }
  void forward(std::span<cplx> data) const;
  void backward(std::span<cplx> data) const;

 private:
  std::size_t n_;
  detail::PlanHandle fwd_;
  detail::PlanHandle bwd_;
};

/// In-place unnormalized 2-D complex DFT over an nx x ny row-major array.
class Fft2 {
 public:
  Fft2(std::size_t nx, std::size_t ny);
  void forward(std::span<cplx> data) const;
  void backward(std::span<cplx> data) const;

 private:
  std::size_t nx_;
  std::size_t ny_;
  detail::PlanHandle fwd_;
  detail::PlanHandle bwd_;
};

/// Spectral derivative of a real nx x ny field along one axis. Real input
/// gives exactly real output, so derivatives of real and imaginary parts never
/// mix rounding noise. The Nyquist mode is dropped.
class AxisDerivative {
 public:
  AxisDerivative(const Grid1& grid_x, const Grid1& grid_y, Axis axis);
  /// Not thread-safe: uses an internal scratch buffer.
  void apply(std::span<const double> in, std::span<double> out);

 private:
  Axis axis_;
  std::size_t nx_;
  std::size_t ny_;
  std::vector<double> k_;
  std::vector<cplx> scratch_;
  detail::PlanHandle r2c_;
  detail::PlanHandle c2r_;
};

/// Unitary forward DFT (scaled by 1/sqrt(n)), so Parseval holds exactly.
std::vector<cplx> unitary_dft(std::span<const cplx> in);

/// Shifts a periodic band-limited signal by `shift` (f(y) -> f(y - shift))
/// by multiplying its spectrum with exp(-i k shift).
void spectral_translate(std::span<cplx> samples, const Grid1& grid, double shift);

}  // namespace bohmlab
