#pragma once
// Quantum-equilibrium sampling from |Psi|^2 with reproducible per-stream
// randomness.

#include <cstdint>
#include <random>
#include <vector>

#include "bohmlab/dynamics.hpp"
#include "bohmlab/lattice.hpp"

namespace bohmlab {

/// One independent random stream per (seed, stream_id). The engine state is
/// derived through std::seed_seq from both words, so distinct stream ids give
/// unrelated sequences and equal pairs give identical ones.
class SeededSampler {
 public:
  SeededSampler(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits; independent of the standard
  /// library's distribution implementations.
  double uniform();
  /// Standard normal via Box-Muller (one value per call).
  double normal();
  /// Fair +-1.
  int coin();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

/// Inverse-CDF draw over the flattened table of cell probabilities
/// |Psi_ij|^2 dx dy, then uniform jitter inside the chosen cell. Positions are
/// wrapped into the periodic domain.
std::vector<ParticleConfig> sample_equilibrium(const WaveFunction2& psi, std::size_t n,
                                               SeededSampler& sampler);

/// Same procedure for a one-dimensional density on grid nodes.
std::vector<double> sample_density(const Grid1& grid, std::span<const double> density,
                                   std::size_t n, SeededSampler& sampler);

}  // namespace bohmlab
