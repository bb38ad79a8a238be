#include "bohmlab/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

namespace bohmlab {

namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr unsigned kFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

struct ScratchComplex {
  explicit ScratchComplex(std::size_t n) : p(fftw_alloc_complex(n)) {}
  ~ScratchComplex() { fftw_free(p); }
  ScratchComplex(const ScratchComplex&) = delete;
  ScratchComplex& operator=(const ScratchComplex&) = delete;
  fftw_complex* p;
};

struct ScratchReal {
  explicit ScratchReal(std::size_t n) : p(fftw_alloc_real(n)) {}
  ~ScratchReal() { fftw_free(p); }
  ScratchReal(const ScratchReal&) = delete;
  ScratchReal& operator=(const ScratchReal&) = delete;
  double* p;
};

void check_size(std::size_t got, std::size_t want) {
  if (got != want) throw Error(ErrorKind::grid_mismatch, "FFT buffer size mismatch");
}

}  // namespace

void detail::PlanDeleter::operator()(fftw_plan_s* plan) const noexcept {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

Fft1::Fft1(std::size_t n) : n_(n) {
  std::lock_guard lock(planner_mutex());
  ScratchComplex buf(n);
  const int ni = static_cast<int>(n);
  fwd_.reset(fftw_plan_dft_1d(ni, buf.p, buf.p, FFTW_FORWARD, kFlags));
  bwd_.reset(fftw_plan_dft_1d(ni, buf.p, buf.p, FFTW_BACKWARD, kFlags));
}

void Fft1::forward(std::span<cplx> data) const {
  check_size(data.size(), n_);
  fftw_execute_dft(fwd_.get(), as_fftw(data.data()), as_fftw(data.data()));
}

void Fft1::backward(std::span<cplx> data) const {
  check_size(data.size(), n_);
  fftw_execute_dft(bwd_.get(), as_fftw(data.data()), as_fftw(data.data()));
}

Fft2::Fft2(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny) {
  std::lock_guard lock(planner_mutex());
  ScratchComplex buf(nx * ny);
  const int a = static_cast<int>(nx);
  const int b = static_cast<int>(ny);
  fwd_.reset(fftw_plan_dft_2d(a, b, buf.p, buf.p, FFTW_FORWARD, kFlags));
  bwd_.reset(fftw_plan_dft_2d(a, b, buf.p, buf.p, FFTW_BACKWARD, kFlags));
}

void Fft2::forward(std::span<cplx> data) const {
  check_size(data.size(), nx_ * ny_);
  fftw_execute_dft(fwd_.get(), as_fftw(data.data()), as_fftw(data.data()));
}

void Fft2::backward(std::span<cplx> data) const {
  check_size(data.size(), nx_ * ny_);
  fftw_execute_dft(bwd_.get(), as_fftw(data.data()), as_fftw(data.data()));
}

AxisDerivative::AxisDerivative(const Grid1& grid_x, const Grid1& grid_y, Axis axis)
    : axis_(axis), nx_(grid_x.size()), ny_(grid_y.size()) {
  const Grid1& g = axis == Axis::x ? grid_x : grid_y;
  const std::size_t n = g.size();
  const std::size_t nc = n / 2 + 1;
  k_.resize(nc);
  for (std::size_t j = 0; j < nc; ++j) k_[j] = g.wavenumber(j);
  k_[n / 2] = 0.0;

  const std::size_t other = axis == Axis::x ? ny_ : nx_;
  scratch_.resize(nc * other);

  // Along y the rows are contiguous; along x the transform runs with stride ny.
  const int len[1] = {static_cast<int>(n)};
  const int howmany = static_cast<int>(other);
  int real_stride, real_dist, cplx_stride, cplx_dist;
  if (axis == Axis::y) {
    real_stride = 1;
    real_dist = static_cast<int>(ny_);
    cplx_stride = 1;
    cplx_dist = static_cast<int>(nc);
  } else {
    real_stride = static_cast<int>(ny_);
    real_dist = 1;
    cplx_stride = static_cast<int>(ny_);
    cplx_dist = 1;
  }

  std::lock_guard lock(planner_mutex());
  ScratchReal rbuf(nx_ * ny_);
  ScratchComplex cbuf(nc * other);
  r2c_.reset(fftw_plan_many_dft_r2c(1, len, howmany, rbuf.p, nullptr, real_stride, real_dist,
                                    cbuf.p, nullptr, cplx_stride, cplx_dist,
                                    kFlags | FFTW_PRESERVE_INPUT));
  c2r_.reset(fftw_plan_many_dft_c2r(1, len, howmany, cbuf.p, nullptr, cplx_stride, cplx_dist,
                                    rbuf.p, nullptr, real_stride, real_dist,
                                    kFlags | FFTW_DESTROY_INPUT));
}

void AxisDerivative::apply(std::span<const double> in, std::span<double> out) {
  check_size(in.size(), nx_ * ny_);
  check_size(out.size(), nx_ * ny_);
  fftw_execute_dft_r2c(r2c_.get(), const_cast<double*>(in.data()), as_fftw(scratch_.data()));
  const std::size_t nc = k_.size();
  const double scale = 1.0 / static_cast<double>(axis_ == Axis::x ? nx_ : ny_);
  if (axis_ == Axis::y) {
    for (std::size_t row = 0; row < nx_; ++row) {
      cplx* c = scratch_.data() + row * nc;
      for (std::size_t j = 0; j < nc; ++j) c[j] *= cplx(0.0, k_[j] * scale);
    }
  } else {
    for (std::size_t j = 0; j < nc; ++j) {
      const cplx f(0.0, k_[j] * scale);
      cplx* c = scratch_.data() + j * ny_;
      for (std::size_t col = 0; col < ny_; ++col) c[col] *= f;
    }
  }
  fftw_execute_dft_c2r(c2r_.get(), as_fftw(scratch_.data()), out.data());
}

std::vector<cplx> unitary_dft(std::span<const cplx> in) {
  std::vector<cplx> out(in.begin(), in.end());
  Fft1 fft(out.size());
  fft.forward(out);
  const double s = 1.0 / std::sqrt(static_cast<double>(out.size()));
  for (auto& v : out) v *= s;
  return out;
}

void spectral_translate(std::span<cplx> samples, const Grid1& grid, double shift) {
  check_size(samples.size(), grid.size());
  Fft1 fft(grid.size());
  fft.forward(samples);
  const std::size_t n = grid.size();
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    // The Nyquist bin is kept as a real cosine so real inputs stay real.
    const double phase = j == n / 2 ? 0.0 : -grid.wavenumber(j) * shift;
    samples[j] *= std::polar(scale, phase);
    if (j == n / 2) samples[j] *= std::cos(grid.wavenumber(j) * shift);
  }
  fft.backward(samples);
}

}  // namespace bohmlab
