#pragma once
// Goodness-of-fit and classification statistics used to check equivariance,
// conditional probabilities and record-based estimators.

#include <cstddef>
#include <span>
#include <vector>

#include "bohmlab/lattice.hpp"

namespace bohmlab {

struct TestReport {
  double statistic = 0.0;
  double threshold = 0.0;
  double p_value = 1.0;  // or a bound, depending on the test
  std::size_t n_samples = 0;
  bool pass = false;  // statistic < threshold
};

/// sup_x |F_n(x) - F(x)| where F is the CDF of a node density with uniform mass
/// inside each cell [x_j - dx/2, x_j + dx/2). Exact for that piecewise-linear F.
double ks_statistic(std::span<const double> samples, const Grid1& grid,
                    std::span<const double> reference_density);

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);
/// P(D_n >= d) using Stephens' finite-n correction of lambda.
double ks_p_value(double d, std::size_t n);
/// Smallest d with ks_p_value(d, n) <= alpha.
double ks_critical_value(std::size_t n, double alpha);

/// One-sample KS test against a grid density. Needs at least 50 samples and a
/// non-empty reference. Passes iff the statistic is below the critical value at
/// level alpha.
TestReport ks_distance(std::span<const double> samples, const Grid1& grid,
                       std::span<const double> reference_density, double alpha = 0.01);

/// Pearson chi-square of observed counts against expected probabilities.
/// Cells with expected count below `min_expected` are pooled into one cell.
/// threshold holds the chi-square quantile at 1 - alpha; p_value is reported.
TestReport chi_square_test(std::span<const std::size_t> counts, std::span<const double> probs,
                           double alpha = 0.01, double min_expected = 5.0);

/// Fraction of i with sign(scores[i]) == labels[i]. labels must be +-1; a zero
/// score is a miss. Needs equal lengths and at least 100 pairs.
double classify_accuracy(std::span<const int> labels, std::span<const double> scores);

/// (1/2) sum |p - q| * spacing for densities on a common grid.
double total_variation(std::span<const double> p, std::span<const double> q, double spacing);

/// Normalized histogram density of samples on the cells of `bins`; samples
/// outside the cells are dropped.
std::vector<double> histogram_density(std::span<const double> samples, const Grid1& bins);

/// Binned counts of samples over the node cells of `grid` (periodic wrap).
std::vector<std::size_t> cell_counts(std::span<const double> samples, const Grid1& grid);

}  // namespace bohmlab
