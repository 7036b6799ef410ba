#include "coevo/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace coevo {

namespace {

// continued fraction for I_x(a,b), modified Lentz
double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double eps = 1e-14;
  const int max_iter = 500;

  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log1p(-x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_sf(double t, double df) {
  double x = df / (df + t * t);
  double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? tail : 1.0 - tail;
}

TTestResult paired_t_test_one_tailed(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired t-test: length mismatch");
  const std::size_t r = a.size();
  if (r < 2) throw std::invalid_argument("paired t-test: need at least 2 samples");

  double mean = 0.0;
  for (std::size_t i = 0; i < r; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(r);
  double ss = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    double dev = (a[i] - b[i]) - mean;
    ss += dev * dev;
  }
  double sd = std::sqrt(ss / static_cast<double>(r - 1));

  if (sd == 0.0) {
    if (mean > 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
    if (mean < 0.0) return {-std::numeric_limits<double>::infinity(), 1.0};
    return {0.0, 0.5};
  }
  double t = mean / (sd / std::sqrt(static_cast<double>(r)));
  return {t, student_t_sf(t, static_cast<double>(r - 1))};
}

double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("pearson: need equal lengths >= 3");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("pearson: zero variance");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace coevo
