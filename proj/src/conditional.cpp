#include "bohmlab/conditional.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "bohmlab/stats.hpp"

namespace bohmlab {

ConditionalWaveFunction conditional_wavefunction(const WaveFunction2& psi, double y, bool normalize,
                                                 double eps_node) {
  const Grid1& gy = psi.grid_y();
  if (!gy.contains(y)) {
    std::ostringstream os;
    os << "Y = " << y << " outside [" << gy.x_min() << ", " << gy.x_max() << ")";
    throw Error(ErrorKind::domain, os.str());
  }
  const std::size_t nx = psi.nx();
  const std::size_t ny = psi.ny();
  const std::size_t col = gy.nearest_index(y);

  double max_column = 0.0;
  double this_column = 0.0;
  std::vector<double> column_mass(ny, 0.0);
  const auto a = psi.amplitudes();
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t j = 0; j < ny; ++j) column_mass[j] += std::norm(a[i * ny + j]);
  }
  max_column = *std::max_element(column_mass.begin(), column_mass.end());
  this_column = column_mass[col];
  if (!(this_column > 0.0) || this_column < eps_node * max_column) {
    std::ostringstream os;
    os << "conditional wave function undefined: column density at Y = " << y
       << " is below the node threshold";
    throw Error(ErrorKind::conditional_undefined, os.str());
  }

  WaveFunction1 slice(psi.grid_x());
  for (std::size_t i = 0; i < nx; ++i) slice[i] = psi(i, col);
  if (normalize) slice.normalize();
  return {std::move(slice), y, col, normalize};
}

namespace {

struct BinLayout {
  std::size_t columns_per_bin;
  std::size_t n_bins;
};

BinLayout layout(const Grid1& gy, double y_bin_width) {
  if (!(y_bin_width > 0.0)) throw Error(ErrorKind::precondition, "y bin width must be positive");
  const auto m = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(y_bin_width / gy.spacing())));
  return {m, (gy.size() + m - 1) / m};
}

std::vector<double> column_density(const WaveFunction2& psi, std::size_t col) {
  std::vector<double> d(psi.nx());
  for (std::size_t i = 0; i < psi.nx(); ++i) d[i] = std::norm(psi(i, col));
  return d;
}

}  // namespace

FcpfReport verify_fcpf(const WaveFunction2& psi, std::span<const ParticleConfig> configs,
                       double y_bin_width, const FcpfOptions& options) {
  const Grid1& gx = psi.grid_x();
  const Grid1& gy = psi.grid_y();
  const auto [m, n_bins] = layout(gy, y_bin_width);

  std::vector<std::vector<double>> xs(n_bins);
  for (const auto& q : configs) xs[gy.nearest_index(q.y) / m].push_back(q.x);

  FcpfReport report;
  report.n_samples = configs.size();
  report.threshold = options.ks_threshold;
  const double y0 = gy.x_min() - 0.5 * gy.spacing();
  double ks_sum = 0.0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (xs[b].size() < options.sample_floor) continue;
    const std::size_t c0 = b * m;
    const std::size_t c1 = std::min(c0 + m, gy.size());
    std::vector<double> ref(gx.size(), 0.0);
    for (std::size_t c = c0; c < c1; ++c) {
      const auto d = column_density(psi, c);
      for (std::size_t i = 0; i < ref.size(); ++i) ref[i] += d[i];
    }
    FcpfBin bin;
    bin.y_lo = y0 + static_cast<double>(c0) * gy.spacing();
    bin.y_hi = y0 + static_cast<double>(c1) * gy.spacing();
    bin.n_samples = xs[b].size();
    bin.ks_bin = ks_statistic(xs[b], gx, ref);
    const std::size_t centre = gy.nearest_index(0.5 * (bin.y_lo + bin.y_hi));
    bin.ks_center = ks_statistic(xs[b], gx, column_density(psi, centre));
    bin.pass = bin.ks_bin < options.ks_threshold;
    report.max_ks = std::max(report.max_ks, bin.ks_bin);
    ks_sum += bin.ks_bin;
    report.bins.push_back(bin);
  }
  if (report.bins.empty()) {
    std::ostringstream os;
    os << "no y-bin reaches the floor of " << options.sample_floor << " samples";
    throw Error(ErrorKind::insufficient_data, os.str());
  }
  report.mean_ks = ks_sum / static_cast<double>(report.bins.size());
  report.pass = report.max_ks < options.ks_threshold;
  return report;
}

FcpfReport verify_fcpf(const WaveFunction2& psi, std::span<const Trajectory> trajectories,
                       double y_bin_width, double t, const FcpfOptions& options) {
  std::vector<ParticleConfig> configs;
  configs.reserve(trajectories.size());
  std::size_t excluded = 0;
  for (const auto& tr : trajectories) {
    if (tr.node_flagged) {
      ++excluded;
      continue;
    }
    const auto it = std::find_if(tr.times.begin(), tr.times.end(), [&](double s) {
      return std::abs(s - t) <= 1e-9 * std::max(1.0, std::abs(t));
    });
    if (it == tr.times.end()) {
      throw Error(ErrorKind::precondition, "trajectory has no record at the requested time");
    }
    configs.push_back(tr.configs[static_cast<std::size_t>(it - tr.times.begin())]);
  }
  auto report = verify_fcpf(psi, configs, y_bin_width, options);
  report.n_excluded = excluded;
  return report;
}

EffectiveDecomposition effective_decomposition(const WaveFunction2& psi,
                                               std::span<const YInterval> partition, double y,
                                               const EffectiveOptions& options) {
  const Grid1& gx = psi.grid_x();
  const Grid1& gy = psi.grid_y();
  const std::size_t nx = psi.nx();
  const std::size_t ny = psi.ny();

  // Each column must belong to exactly one cell.
  std::vector<std::size_t> owner(ny, partition.size());
  for (std::size_t j = 0; j < ny; ++j) {
    const double yj = gy.coordinate(j);
    for (std::size_t c = 0; c < partition.size(); ++c) {
      if (!partition[c].contains(yj)) continue;
      if (owner[j] != partition.size()) throw Error(ErrorKind::precondition, "partition cells overlap");
      owner[j] = c;
    }
    if (owner[j] == partition.size()) {
      throw Error(ErrorKind::precondition, "partition does not cover grid_y");
    }
  }
  std::size_t cell = partition.size();
  for (std::size_t c = 0; c < partition.size(); ++c) {
    if (partition[c].contains(y)) cell = c;
  }
  if (cell == partition.size() || !gy.contains(y)) {
    std::ostringstream os;
    os << "Y = " << y << " lies in no partition cell";
    throw Error(ErrorKind::domain, os.str());
  }

  std::vector<std::size_t> cols;
  for (std::size_t j = 0; j < ny; ++j) {
    if (owner[j] == cell) cols.push_back(j);
  }
  Eigen::MatrixXcd block(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < nx; ++i) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      block(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = psi(i, cols[c]);
    }
  }
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(block, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double area = psi.cell_area();
  const double cell_sq = s.squaredNorm();
  const double lead_sq = s.size() ? s(0) * s(0) : 0.0;

  EffectiveDecomposition out{WaveFunction1(gx), WaveFunction1(gy), cell, 0.0, 0.0, 0.0, false, false};
  if (cell_sq > 0.0) {
    Eigen::VectorXcd u = svd.matrixU().col(0);
    Eigen::VectorXcd v = svd.matrixV().col(0);
    // Fix the free phase: largest |u_i| real positive.
    Eigen::Index imax = 0;
    u.cwiseAbs().maxCoeff(&imax);
    const cplx ph = std::abs(u(imax)) > 0 ? std::conj(u(imax)) / std::abs(u(imax)) : cplx(1.0);
    u *= ph;
    v *= ph;  // keeps u v^H unchanged
    const double sx = std::sqrt(gx.spacing());
    for (std::size_t i = 0; i < nx; ++i) out.phi[i] = u(static_cast<Eigen::Index>(i)) / sx;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out.Phi[cols[c]] = s(0) * std::conj(v(static_cast<Eigen::Index>(c))) * sx;
    }
    out.rank_residual = std::max(0.0, cell_sq - lead_sq) / cell_sq;
  } else {
    out.rank_residual = 1.0;
  }
  const double total = psi.norm() * psi.norm();
  out.residual_mass = std::clamp(total - lead_sq * area, 0.0, 1.0);

  // Mass within guard columns on both sides of every edge of the cell.
  if (cols.size() < ny) {
    std::vector<double> column_mass(ny, 0.0);
    const auto a = psi.amplitudes();
    for (std::size_t i = 0; i < nx; ++i) {
      for (std::size_t j = 0; j < ny; ++j) column_mass[j] += std::norm(a[i * ny + j]) * area;
    }
    std::vector<std::uint8_t> guarded(ny, 0);
    const auto g = static_cast<long long>(options.guard_columns);
    const auto n = static_cast<long long>(ny);
    for (std::size_t j = 0; j < ny; ++j) {
      const std::size_t next = (j + 1) % ny;
      if ((owner[j] == cell) == (owner[next] == cell)) continue;
      // Edge between column j and j+1.
      for (long long k = -g + 1; k <= g; ++k) {
        guarded[static_cast<std::size_t>(((static_cast<long long>(j) + k) % n + n) % n)] = 1;
      }
    }
    for (std::size_t j = 0; j < ny; ++j) {
      if (guarded[j]) out.support_overlap += column_mass[j];
    }
  }

  const std::size_t ycol = gy.nearest_index(y);
  double phi_max = 0.0;
  for (std::size_t j = 0; j < ny; ++j) phi_max = std::max(phi_max, std::norm(out.Phi[j]));
  out.y_in_support = phi_max > 0.0 && owner[ycol] == cell &&
                     std::norm(out.Phi[ycol]) >= options.eps_node * phi_max;
  out.exists = out.y_in_support && out.support_overlap < options.eps_disjoint &&
               out.rank_residual < options.eps_rank;
  return out;
}

}  // namespace bohmlab
