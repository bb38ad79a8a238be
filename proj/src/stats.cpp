#include "bohmlab/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numeric>

namespace bohmlab {

double ks_statistic(std::span<const double> samples, const Grid1& grid,
                    std::span<const double> reference_density) {
  if (reference_density.size() != grid.size()) {
    throw Error(ErrorKind::grid_mismatch, "reference density does not match grid");
  }
  const std::size_t m = grid.size();
  std::vector<double> before(m + 1, 0.0);
  for (std::size_t j = 0; j < m; ++j) before[j + 1] = before[j] + std::max(0.0, reference_density[j]);
  const double total = before[m];
  if (!(total > 0.0)) throw Error(ErrorKind::precondition, "reference density is empty");

  const double lo = grid.x_min() - 0.5 * grid.spacing();
  auto cdf = [&](double x) {
    const double u = (x - lo) / grid.spacing();
    if (u <= 0.0) return 0.0;
    if (u >= static_cast<double>(m)) return 1.0;
    const auto c = static_cast<std::size_t>(u);
    const double frac = u - static_cast<double>(c);
    return (before[c] + frac * (before[c + 1] - before[c])) / total;
  };

  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    const double di = static_cast<double>(i);
    d = std::max({d, (di + 1.0) / n - f, f - di / n});
  }
  return d;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;  // series converges slowly; Q is 1 to 1e-16 here
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-17) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_p_value(double d, std::size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  return kolmogorov_survival((rn + 0.12 + 0.11 / rn) * d);
}

double ks_critical_value(std::size_t n, double alpha) {
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (ks_p_value(mid, n) > alpha) lo = mid;
    else hi = mid;
  }
  return hi;
}

TestReport ks_distance(std::span<const double> samples, const Grid1& grid,
                       std::span<const double> reference_density, double alpha) {
  if (reference_density.empty()) throw Error(ErrorKind::precondition, "empty reference density");
  if (samples.size() < 50) throw Error(ErrorKind::insufficient_data, "KS test needs >= 50 samples");
  TestReport r;
  r.n_samples = samples.size();
  r.statistic = ks_statistic(samples, grid, reference_density);
  r.threshold = ks_critical_value(r.n_samples, alpha);
  r.p_value = ks_p_value(r.statistic, r.n_samples);
  r.pass = r.statistic < r.threshold;
  return r;
}

TestReport chi_square_test(std::span<const std::size_t> counts, std::span<const double> probs,
                           double alpha, double min_expected) {
  if (counts.size() != probs.size()) throw Error(ErrorKind::precondition, "chi-square size mismatch");
  const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  const double ptot = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (!(n > 0.0) || !(ptot > 0.0)) throw Error(ErrorKind::insufficient_data, "chi-square without data");

  double stat = 0.0;
  std::size_t cells = 0;
  double pooled_obs = 0.0;
  double pooled_exp = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const double e = n * probs[j] / ptot;
    const double o = static_cast<double>(counts[j]);
    if (e < min_expected) {
      pooled_obs += o;
      pooled_exp += e;
      continue;
    }
    stat += (o - e) * (o - e) / e;
    ++cells;
  }
  if (pooled_exp > 0.0) {
    stat += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  } else if (pooled_obs > 0.0) {
    stat = std::numeric_limits<double>::infinity();
  }
  if (cells < 2) throw Error(ErrorKind::insufficient_data, "chi-square needs >= 2 cells");

  const double dof = static_cast<double>(cells - 1);
  TestReport r;
  r.n_samples = static_cast<std::size_t>(n);
  r.statistic = stat;
  r.threshold = boost::math::quantile(boost::math::chi_squared(dof), 1.0 - alpha);
  r.p_value = std::isfinite(stat) ? boost::math::gamma_q(0.5 * dof, 0.5 * stat) : 0.0;
  r.pass = stat < r.threshold;
  return r;
}

double classify_accuracy(std::span<const int> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw Error(ErrorKind::precondition, "labels/scores length");
  if (labels.size() < 100) throw Error(ErrorKind::insufficient_data, "accuracy needs >= 100 pairs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 1 && labels[i] != -1) throw Error(ErrorKind::precondition, "labels must be +-1");
    const int predicted = scores[i] > 0.0 ? 1 : (scores[i] < 0.0 ? -1 : 0);
    if (predicted == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double total_variation(std::span<const double> p, std::span<const double> q, double spacing) {
  if (p.size() != q.size()) throw Error(ErrorKind::grid_mismatch, "total variation across grids");
  double s = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) s += std::abs(p[j] - q[j]);
  return 0.5 * s * spacing;
}

std::vector<std::size_t> cell_counts(std::span<const double> samples, const Grid1& grid) {
  std::vector<std::size_t> counts(grid.size(), 0);
  for (double x : samples) ++counts[grid.nearest_index(x)];
  return counts;
}

std::vector<double> histogram_density(std::span<const double> samples, const Grid1& bins) {
  std::vector<double> d(bins.size(), 0.0);
  const double lo = bins.x_min() - 0.5 * bins.spacing();
  std::size_t kept = 0;
  for (double x : samples) {
    const double u = (x - lo) / bins.spacing();
    if (u < 0.0 || u >= static_cast<double>(bins.size())) continue;
    d[static_cast<std::size_t>(u)] += 1.0;
    ++kept;
  }
  if (kept == 0) return d;
  for (auto& v : d) v /= static_cast<double>(kept) * bins.spacing();
  return d;
}

}  // namespace bohmlab
