#pragma once

#include <span>
#include <utility>

namespace coevo {

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation (modified Lentz), accurate to ~1e-10 for df <= 1000.
double incomplete_beta(double a, double b, double x);

// Upper tail P(T_df > t) of Student's t distribution.
double student_t_sf(double t, double df);

struct TTestResult {
  double t;
  double p;  // one-tailed, P(T > t)
};

// Paired one-tailed t-test of a > b. Zero-variance differences map to
// p = 0 / 0.5 / 1 by the sign of the mean difference. Throws on length
// mismatch or fewer than 2 samples.
TTestResult paired_t_test_one_tailed(std::span<const double> a, std::span<const double> b);

// Pearson product-moment correlation; throws on length < 3 or zero variance.
double pearson_correlation(std::span<const double> x, std::span<const double> y);

}  // namespace coevo
