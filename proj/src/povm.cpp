#include "bohmlab/povm.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "bohmlab/sampling.hpp"
#include "bohmlab/spectral.hpp"

namespace bohmlab {

namespace {

std::vector<cplx> normalized_coeffs(std::span<const cplx> coeffs) {
  double s = 0.0;
  for (auto c : coeffs) s += std::norm(c);
  if (!(s > 0.0)) throw Error(ErrorKind::precondition, "zero coefficient vector");
  std::vector<cplx> out(coeffs.begin(), coeffs.end());
  const double r = 1.0 / std::sqrt(s);
  for (auto& c : out) c *= r;
  return out;
}

double density_width(const WaveFunction1& f) {
  const auto d = f.density();
  const Grid1& g = f.grid();
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    const double x = g.coordinate(j);
    m0 += d[j];
    m1 += d[j] * x;
    m2 += d[j] * x * x;
  }
  const double mean = m1 / m0;
  return std::sqrt(std::max(0.0, m2 / m0 - mean * mean));
}

void add_warning_if_flagged(OutcomeDistribution& out) {
  if (out.flag_rate > 0.01) {
    std::ostringstream os;
    os << "node-flag rate " << out.flag_rate << " exceeds 1%";
    out.warnings.push_back(os.str());
  }
}

}  // namespace

SystemBasis::SystemBasis(std::vector<WaveFunction1> states) : states_(std::move(states)) {
  if (states_.empty()) throw Error(ErrorKind::precondition, "empty system basis");
  for (const auto& s : states_) {
    if (!(s.grid() == states_.front().grid())) {
      throw Error(ErrorKind::grid_mismatch, "basis states on different grids");
    }
  }
  const double dev = gram_deviation();
  if (dev > 1e-8) {
    std::ostringstream os;
    os << "basis Gram matrix deviates from identity by " << dev;
    throw Error(ErrorKind::precondition, os.str());
  }
}

SystemBasis SystemBasis::hermite(const Grid1& grid, std::size_t dim, double center, double scale) {
  if (dim == 0) throw Error(ErrorKind::precondition, "basis dimension must be positive");
  if (!(scale >= 4.0 * grid.spacing())) {
    throw Error(ErrorKind::resolution, "Hermite scale below 4 grid spacings");
  }
  const std::size_t n = grid.size();
  std::vector<std::vector<double>> h(dim, std::vector<double>(n));
  const double c0 = std::pow(std::numbers::pi, -0.25) / std::sqrt(scale);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = (grid.coordinate(j) - center) / scale;
    h[0][j] = c0 * std::exp(-0.5 * u * u);
    if (dim > 1) h[1][j] = std::numbers::sqrt2 * u * h[0][j];
    for (std::size_t m = 1; m + 1 < dim; ++m) {
      const double md = static_cast<double>(m);
      h[m + 1][j] = std::sqrt(2.0 / (md + 1.0)) * u * h[m][j] - std::sqrt(md / (md + 1.0)) * h[m - 1][j];
    }
  }
  std::vector<WaveFunction1> states;
  for (std::size_t m = 0; m < dim; ++m) {
    WaveFunction1 f(grid);
    for (std::size_t j = 0; j < n; ++j) f[j] = h[m][j];
    // Two passes of modified Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& prev : states) {
        const cplx ov = inner_product(prev, f);
        for (std::size_t j = 0; j < n; ++j) f[j] -= ov * prev[j];
      }
      f.normalize();
    }
    states.push_back(std::move(f));
  }
  return SystemBasis(std::move(states));
}

SystemBasis SystemBasis::branches(const Grid1& grid, double a, double sigma,
                                  const PhysicalParams& params) {
  std::vector<WaveFunction1> states;
  states.push_back(gaussian_packet(grid, a, sigma, 0.0, params));
  states.push_back(gaussian_packet(grid, -a, sigma, 0.0, params));
  return SystemBasis(std::move(states));
}

Eigen::MatrixXcd SystemBasis::gram() const {
  const auto d = static_cast<Eigen::Index>(dim());
  Eigen::MatrixXcd g(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      g(i, j) = inner_product(states_[static_cast<std::size_t>(i)], states_[static_cast<std::size_t>(j)]);
    }
  }
  return g;
}

double SystemBasis::gram_deviation() const {
  const Eigen::MatrixXcd g = gram();
  return (g - Eigen::MatrixXcd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

WaveFunction1 SystemBasis::compose(std::span<const cplx> coeffs) const {
  if (coeffs.size() != dim()) throw Error(ErrorKind::precondition, "coefficient count != basis dim");
  WaveFunction1 f(grid());
  for (std::size_t k = 0; k < dim(); ++k) {
    for (std::size_t j = 0; j < f.size(); ++j) f[j] += coeffs[k] * states_[k][j];
  }
  return f;
}

std::size_t OutcomePartition::label(double y) const noexcept {
  for (std::size_t k = 0; k < regions.size(); ++k) {
    if (regions[k].contains(y)) return k;
  }
  return npos;
}

OutcomePartition OutcomePartition::around(std::span<const double> centers, const Grid1& grid_y) {
  std::vector<double> c(centers.begin(), centers.end());
  if (c.empty()) throw Error(ErrorKind::precondition, "no pointer centres");
  if (!std::is_sorted(c.begin(), c.end())) {
    throw Error(ErrorKind::precondition, "pointer centres must be sorted");
  }
  OutcomePartition p;
  double lo = grid_y.x_min() - grid_y.spacing();  // include the first cell fully
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double hi = k + 1 < c.size() ? 0.5 * (c[k] + c[k + 1]) : grid_y.x_max();
    p.regions.push_back({lo, hi});
    lo = hi;
  }
  return p;
}

double OutcomeDistribution::total() const noexcept {
  return std::accumulate(probabilities.begin(), probabilities.end(), 0.0);
}

PointerSetup make_pointer_setup(SystemBasis basis, const Grid1& grid_y, double sigma_ptr,
                                double separation, double t_meas) {
  const std::size_t d = basis.dim();
  PointerCoupling coupling;
  coupling.strength = separation / t_meas;
  std::vector<double> centers;
  for (std::size_t k = 0; k < d; ++k) {
    const double lambda = static_cast<double>(k) - 0.5 * static_cast<double>(d - 1);
    coupling.eigenvalues.push_back(lambda);
    centers.push_back(lambda * separation);
  }
  auto apparatus = gaussian_packet(grid_y, 0.0, sigma_ptr, 0.0);
  auto partition = OutcomePartition::around(centers, grid_y);
  return PointerSetup{std::move(basis), std::move(apparatus), coupling, t_meas, std::move(partition)};
}

WaveFunction2 apply_pointer_coupling(const WaveFunction2& psi0, const SystemBasis& basis,
                                     std::span<const double> shifts) {
  if (!(basis.grid() == psi0.grid_x())) throw Error(ErrorKind::grid_mismatch, "basis grid != grid_x");
  if (shifts.size() != basis.dim()) throw Error(ErrorKind::precondition, "one shift per basis state");
  const std::size_t nx = psi0.nx();
  const std::size_t ny = psi0.ny();
  const double dx = psi0.grid_x().spacing();
  WaveFunction2 out = psi0;
  std::vector<cplx> chi(ny);
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    const WaveFunction1& e = basis.state(k);
    std::fill(chi.begin(), chi.end(), cplx{});
    for (std::size_t i = 0; i < nx; ++i) {
      const cplx ce = std::conj(e[i]) * dx;
      for (std::size_t j = 0; j < ny; ++j) chi[j] += ce * psi0(i, j);
    }
    std::vector<cplx> moved = chi;
    spectral_translate(moved, psi0.grid_y(), shifts[k]);
    for (std::size_t j = 0; j < ny; ++j) moved[j] -= chi[j];
    for (std::size_t i = 0; i < nx; ++i) {
      for (std::size_t j = 0; j < ny; ++j) out(i, j) += e[i] * moved[j];
    }
  }
  return out;
}

PointerExperiment::PointerExperiment(PointerSetup setup, RecordMode mode, std::size_t n_samples,
                                     std::uint64_t seed)
    : setup_(std::move(setup)), mode_(mode), n_samples_(n_samples), seed_(seed) {
  const std::size_t d = setup_.basis.dim();
  if (setup_.coupling.eigenvalues.size() != d) {
    throw Error(ErrorKind::precondition, "one coupling eigenvalue per basis state");
  }
  if (setup_.partition.regions.size() != d) {
    throw Error(ErrorKind::precondition, "one outcome region per basis state");
  }
  pointer_width_ = density_width(setup_.apparatus);
  auto s = shifts();
  std::vector<double> sorted = s;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k] - sorted[k - 1] < 8.0 * pointer_width_) {
      std::ostringstream os;
      os << "pointer shifts " << sorted[k - 1] << " and " << sorted[k]
         << " are closer than 8 pointer widths (" << 8.0 * pointer_width_ << ")";
      throw Error(ErrorKind::disjointness, os.str());
    }
  }
  const Grid1& gy = setup_.apparatus.grid();
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<cplx> moved(setup_.apparatus.amplitudes().begin(), setup_.apparatus.amplitudes().end());
    spectral_translate(moved, gy, s[k]);
    double outside = 0.0;
    for (std::size_t j = 0; j < moved.size(); ++j) {
      if (!setup_.partition.regions[k].contains(gy.coordinate(j))) outside += std::norm(moved[j]);
    }
    leakage_ = std::max(leakage_, outside * gy.spacing());
  }
  if (leakage_ > 1e-6) {
    std::ostringstream os;
    os << "branch overlap: a shifted pointer leaks " << leakage_ << " of its mass out of its region";
    throw Error(ErrorKind::disjointness, os.str());
  }
}

std::vector<double> PointerExperiment::shifts() const {
  std::vector<double> s;
  for (double lambda : setup_.coupling.eigenvalues) {
    s.push_back(setup_.coupling.strength * lambda * setup_.t_meas);
  }
  return s;
}

WaveFunction2 PointerExperiment::final_state(std::span<const cplx> coeffs) const {
  const auto c = normalized_coeffs(coeffs);
  const auto psi_sys = setup_.basis.compose(c);
  const auto psi0 = product_state(psi_sys, setup_.apparatus);
  return apply_pointer_coupling(psi0, setup_.basis, shifts());
}

OutcomeDistribution PointerExperiment::operator()(std::span<const cplx> coeffs) const {
  const WaveFunction2 psi_t = final_state(coeffs);
  const Grid1& gy = psi_t.grid_y();
  const std::size_t d = setup_.partition.regions.size();
  OutcomeDistribution out;
  out.mode = mode_;
  out.probabilities.assign(d, 0.0);
  if (mode_ == RecordMode::exact) {
    const auto marginal = marginal_density(psi_t, Axis::y);
    for (std::size_t j = 0; j < marginal.size(); ++j) {
      const std::size_t k = setup_.partition.label(gy.coordinate(j));
      if (k != OutcomePartition::npos) out.probabilities[k] += marginal[j] * gy.spacing();
    }
    return out;
  }
  SeededSampler sampler(seed_, 0);
  const auto configs = sample_equilibrium(psi_t, n_samples_, sampler);
  out.n_samples = configs.size();
  for (const auto& q : configs) {
    const std::size_t k = setup_.partition.label(q.y);
    if (k == OutcomePartition::npos) {
      ++out.n_flagged;
      continue;
    }
    out.probabilities[k] += 1.0;
  }
  for (auto& p : out.probabilities) p /= static_cast<double>(std::max<std::size_t>(out.n_samples, 1));
  out.flag_rate = out.n_samples ? static_cast<double>(out.n_flagged) / static_cast<double>(out.n_samples) : 0.0;
  return out;
}

OutcomeDistribution run_pointer_experiment(const PointerSetup& setup,
                                           std::span<const cplx> coeffs, RecordMode mode,
                                           std::size_t n_samples, std::uint64_t seed) {
  return PointerExperiment(setup, mode, n_samples, seed)(coeffs);
}

std::vector<std::vector<cplx>> tomographic_states(std::size_t dim) {
  std::vector<std::vector<cplx>> out;
  const double r = 1.0 / std::numbers::sqrt2;
  for (std::size_t i = 0; i < dim; ++i) {
    std::vector<cplx> e(dim);
    e[i] = 1.0;
    out.push_back(e);
  }
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = i + 1; j < dim; ++j) {
      std::vector<cplx> re(dim), im(dim);
      re[i] = r;
      re[j] = r;
      im[i] = r;
      im[j] = cplx(0.0, r);
      out.push_back(re);
      out.push_back(im);
    }
  }
  return out;
}

std::vector<double> predict(const PovmCandidate& povm, std::span<const cplx> coeffs) {
  const auto d = static_cast<Eigen::Index>(coeffs.size());
  Eigen::VectorXcd c(d);
  for (Eigen::Index i = 0; i < d; ++i) c(i) = coeffs[static_cast<std::size_t>(i)];
  std::vector<double> p;
  for (const auto& e : povm.effects) p.push_back((c.adjoint() * e * c)(0, 0).real());
  return p;
}

PovmCandidate reconstruct_povm(const Experiment& experiment, std::size_t dim,
                               const ReconstructOptions& options) {
  if (dim == 0) throw Error(ErrorKind::precondition, "dimension must be positive");
  const auto states = tomographic_states(dim);
  std::vector<std::vector<double>> probs;
  std::size_t n_outcomes = 0;
  auto run = [&](std::span<const cplx> c) {
    OutcomeDistribution dist = experiment(c);
    if (std::abs(dist.total() - 1.0) > options.normalization_tolerance) {
      std::ostringstream os;
      os << "experiment returned a distribution summing to " << dist.total();
      throw Error(ErrorKind::normalization, os.str());
    }
    if (n_outcomes == 0) n_outcomes = dist.probabilities.size();
    if (dist.probabilities.size() != n_outcomes) {
      throw Error(ErrorKind::precondition, "experiment changed its number of outcomes");
    }
    return dist.probabilities;
  };
  for (const auto& s : states) probs.push_back(run(s));

  const auto d = static_cast<Eigen::Index>(dim);
  PovmCandidate povm;
  povm.n_outcomes = n_outcomes;
  for (std::size_t k = 0; k < n_outcomes; ++k) {
    Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(d, d);
    for (std::size_t i = 0; i < dim; ++i) {
      e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = probs[i][k];
    }
    std::size_t idx = dim;
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t j = i + 1; j < dim; ++j) {
        const double avg = 0.5 * (probs[i][k] + probs[j][k]);
        const double re = probs[idx][k] - avg;
        const double im = avg - probs[idx + 1][k];
        idx += 2;
        const auto a = static_cast<Eigen::Index>(i);
        const auto b = static_cast<Eigen::Index>(j);
        e(a, b) = cplx(re, im);
        e(b, a) = cplx(re, -im);
      }
    }
    povm.effects.push_back(0.5 * (e + e.adjoint()));
  }

  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(d, d);
  povm.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const auto& e : povm.effects) {
    sum += e;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(e);
    povm.min_eigenvalue = std::min(povm.min_eigenvalue, es.eigenvalues().minCoeff());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sum - Eigen::MatrixXcd::Identity(d, d));
  povm.completeness_residual = es.eigenvalues().cwiseAbs().maxCoeff();

  SeededSampler sampler(options.seed, 0x401d);
  for (std::size_t s = 0; s < options.n_holdout; ++s) {
    std::vector<cplx> c(dim);
    for (auto& v : c) v = cplx(sampler.normal(), sampler.normal());
    const auto cn = normalized_coeffs(c);
    const auto actual = run(cn);
    const auto predicted = predict(povm, cn);
    for (std::size_t k = 0; k < n_outcomes; ++k) {
      povm.holdout_residual = std::max(povm.holdout_residual, std::abs(actual[k] - predicted[k]));
    }
  }
  povm.n_holdout = options.n_holdout;
  return povm;
}

VelocityRecordExperiment::VelocityRecordExperiment(VelocityRecordSetup setup, RecordMode mode,
                                                   std::size_t n_samples, std::uint64_t seed)
    : setup_(std::move(setup)),
      mode_(mode),
      n_samples_(n_samples),
      seed_(seed),
      phi_plus_(gaussian_packet(setup_.grid_y, 0.0, setup_.sigma_y, setup_.p, setup_.params)),
      phi_minus_(gaussian_packet(setup_.grid_y, 0.0, setup_.sigma_y, -setup_.p, setup_.params)) {
  if (setup_.basis.dim() != 2) throw Error(ErrorKind::precondition, "velocity record needs a 2-state basis");
}

WaveFunction2 VelocityRecordExperiment::state(std::span<const cplx> coeffs) const {
  const auto c = normalized_coeffs(coeffs);
  if (c.size() != 2) throw Error(ErrorKind::precondition, "two coefficients expected");
  const WaveFunction1& e0 = setup_.basis.state(0);
  const WaveFunction1& e1 = setup_.basis.state(1);
  WaveFunction2 psi(e0.grid(), setup_.grid_y);
  for (std::size_t i = 0; i < psi.nx(); ++i) {
    const cplx a = c[0] * e0[i];
    const cplx b = c[1] * e1[i];
    for (std::size_t j = 0; j < psi.ny(); ++j) psi(i, j) = a * phi_plus_[j] + b * phi_minus_[j];
  }
  psi.normalize();
  return psi;
}

OutcomeDistribution VelocityRecordExperiment::operator()(std::span<const cplx> coeffs) const {
  const WaveFunction2 psi = state(coeffs);
  const VelocityField2 field = velocity_field(psi, setup_.params, setup_.eps_node);
  OutcomeDistribution out;
  out.mode = mode_;
  out.probabilities.assign(2, 0.0);
  if (mode_ == RecordMode::exact) {
    const auto rho = psi.density();
    double kept = 0.0;
    double flagged = 0.0;
    for (std::size_t j = 0; j < rho.size(); ++j) {
      if (field.node_mask[j] || field.vy[j] == 0.0) {
        flagged += rho[j];
        continue;
      }
      out.probabilities[field.vy[j] > 0.0 ? 0 : 1] += rho[j];
      kept += rho[j];
    }
    for (auto& p : out.probabilities) p /= kept;
    out.flag_rate = flagged / (kept + flagged);
    add_warning_if_flagged(out);
    return out;
  }
  SeededSampler sampler(seed_, 0);
  const auto configs = sample_equilibrium(psi, n_samples_, sampler);
  out.n_samples = configs.size();
  std::size_t kept = 0;
  for (const auto& q : configs) {
    const VelocitySample s = field.at(q);
    if (s.flagged || s.v.vy == 0.0) {
      ++out.n_flagged;
      continue;
    }
    out.probabilities[s.v.vy > 0.0 ? 0 : 1] += 1.0;
    ++kept;
  }
  if (kept == 0) throw Error(ErrorKind::insufficient_data, "every velocity sample was node-flagged");
  for (auto& p : out.probabilities) p /= static_cast<double>(kept);
  out.flag_rate = static_cast<double>(out.n_flagged) / static_cast<double>(out.n_samples);
  add_warning_if_flagged(out);
  return out;
}

MeasurabilityReport measurability_report(const WaveFunction2& psi, const PhysicalParams& params,
                                         double eps_node) {
  WaveFunction2 re(psi.grid_x(), psi.grid_y());
  WaveFunction2 im(psi.grid_x(), psi.grid_y());
  const auto a = psi.amplitudes();
  bool re_zero = true;
  bool im_zero = true;
  for (std::size_t j = 0; j < a.size(); ++j) {
    re.amplitudes()[j] = a[j].real();
    im.amplitudes()[j] = cplx(0.0, a[j].imag());
    re_zero = re_zero && a[j].real() == 0.0;
    im_zero = im_zero && a[j].imag() == 0.0;
  }
  VelocityEvaluator eval(psi.grid_x(), psi.grid_y(), params);
  MeasurabilityReport r;
  r.sup_real_part = eval(re, eps_node).sup_norm();
  r.sup_imaginary_part = eval(im, eps_node).sup_norm();
  r.sup_full = eval(psi, eps_node).sup_norm();
  r.degenerate = re_zero || im_zero;
  r.pass = r.sup_real_part < 1e-12 && r.sup_imaginary_part < 1e-12 &&
           (r.degenerate ? r.sup_full < 1e-12 : r.sup_full > 0.1);
  return r;
}

MeasurabilityReport measurability_demo(const Grid1& grid_x, const Grid1& grid_y, double wavenumber,
                                       double width, const PhysicalParams& params) {
  const auto fx = gaussian_packet(grid_x, 0.0, width, params.hbar * wavenumber, params);
  const auto fy = gaussian_packet(grid_y, 0.0, width, 0.0, params);
  auto r = measurability_report(product_state(fx, fy), params);
  r.wavenumber = wavenumber;
  return r;
}

}  // namespace bohmlab
