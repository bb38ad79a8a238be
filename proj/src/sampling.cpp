#include "bohmlab/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bohmlab {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x9e3779b9u};
  return std::mt19937_64(seq);
}

double wrap(double x, const Grid1& g) {
  if (x < g.x_min()) return x + g.length();
  if (x >= g.x_max()) return x - g.length();
  return x;
}

// Cumulative table; the last entry is the total (not forced to 1).
std::vector<double> cumulative(std::span<const double> weights) {
  std::vector<double> cdf(weights.size());
  double s = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (!(weights[j] >= 0.0)) throw Error(ErrorKind::precondition, "negative or NaN density");
    s += weights[j];
    cdf[j] = s;
  }
  if (!(s > 0.0)) throw Error(ErrorKind::normalization, "density has zero mass");
  return cdf;
}

std::size_t draw_cell(const std::vector<double>& cdf, double u) {
  const double target = u * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), target);
  if (it == cdf.end()) --it;
  // Skip zero-probability cells that share the cumulative value.
  return static_cast<std::size_t>(it - cdf.begin());
}

}  // namespace

SeededSampler::SeededSampler(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id), engine_(make_engine(seed, stream_id)) {}

double SeededSampler::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededSampler::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int SeededSampler::coin() { return (engine_() >> 63) ? 1 : -1; }

std::vector<ParticleConfig> sample_equilibrium(const WaveFunction2& psi, std::size_t n,
                                               SeededSampler& sampler) {
  std::vector<ParticleConfig> out;
  if (n == 0) return out;
  const auto cdf = cumulative(psi.density());
  const Grid1& gx = psi.grid_x();
  const Grid1& gy = psi.grid_y();
  const std::size_t ny = gy.size();
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t cell = draw_cell(cdf, sampler.uniform());
    const std::size_t ix = cell / ny;
    const std::size_t iy = cell % ny;
    const double x = gx.coordinate(ix) + (sampler.uniform() - 0.5) * gx.spacing();
    const double y = gy.coordinate(iy) + (sampler.uniform() - 0.5) * gy.spacing();
    out.push_back({wrap(x, gx), wrap(y, gy)});
  }
  return out;
}

std::vector<double> sample_density(const Grid1& grid, std::span<const double> density,
                                   std::size_t n, SeededSampler& sampler) {
  if (density.size() != grid.size()) throw Error(ErrorKind::grid_mismatch, "density size");
  std::vector<double> out;
  if (n == 0) return out;
  const auto cdf = cumulative(density);
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t cell = draw_cell(cdf, sampler.uniform());
    const double x = grid.coordinate(cell) + (sampler.uniform() - 0.5) * grid.spacing();
    out.push_back(wrap(x, grid));
  }
  return out;
}

}  // namespace bohmlab
