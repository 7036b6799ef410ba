#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "coevo/stats.hpp"

using namespace coevo;

TEST_CASE("incomplete beta basics") {
  CHECK(incomplete_beta(1.0, 1.0, 0.0) == 0.0);
  CHECK(incomplete_beta(1.0, 1.0, 1.0) == 1.0);
  for (double x : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    CHECK(incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
    // reflection identity
    CHECK(incomplete_beta(2.5, 3.5, x) + incomplete_beta(3.5, 2.5, 1.0 - x) ==
          doctest::Approx(1.0).epsilon(1e-10));
  }
  // I_x(1, b) = 1 - (1-x)^b
  CHECK(incomplete_beta(1.0, 4.0, 0.3) ==
        doctest::Approx(1.0 - std::pow(0.7, 4.0)).epsilon(1e-12));
}

TEST_CASE("student t tail against closed forms") {
  // df = 1: P(T > t) = 0.5 - atan(t)/pi
  for (double t : {0.0, 0.5, 1.0, 2.0, 5.0, -1.0}) {
    CHECK(student_t_sf(t, 1.0) ==
          doctest::Approx(0.5 - std::atan(t) / std::numbers::pi).epsilon(1e-10));
  }
  // df = 2: P(T > t) = 0.5 * (1 - t / sqrt(2 + t^2))
  for (double t : {0.0, 0.5, 1.0, 3.0, -2.0}) {
    CHECK(student_t_sf(t, 2.0) ==
          doctest::Approx(0.5 * (1.0 - t / std::sqrt(2.0 + t * t))).epsilon(1e-10));
  }
  CHECK(student_t_sf(0.0, 30.0) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("paired one-tailed t-test") {
  SUBCASE("identical samples: symmetric null") {
    std::vector<double> a{0.1, 0.2, 0.3};
    auto r = paired_t_test_one_tailed(a, a);
    CHECK(r.t == 0.0);
    CHECK(r.p == 0.5);
  }
  SUBCASE("constant positive differences: certainty") {
    std::vector<double> a{1, 2, 3, 4, 5};
    std::vector<double> b{0, 1, 2, 3, 4};
    CHECK(paired_t_test_one_tailed(a, b).p == 0.0);
    CHECK(paired_t_test_one_tailed(b, a).p == 1.0);
  }
  SUBCASE("reference sample reproduces the independently computed values") {
    std::vector<double> a{0.6, 0.7, 0.65, 0.62, 0.68};
    std::vector<double> b{0.5, 0.55, 0.52, 0.51, 0.54};
    auto r = paired_t_test_one_tailed(a, b);
    // frozen from an independent SciPy evaluation of the same definition
    CHECK(r.t == doctest::Approx(13.586929423633249).epsilon(1e-6));
    CHECK(r.p == doctest::Approx(8.4940101308077768e-05).epsilon(1e-6));
    CHECK(r.p < 0.01);
  }
  SUBCASE("contract violations") {
    std::vector<double> a{1, 2};
    std::vector<double> b{1};
    CHECK_THROWS_AS(paired_t_test_one_tailed(a, b), std::invalid_argument);
    std::vector<double> one{1};
    CHECK_THROWS_AS(paired_t_test_one_tailed(one, one), std::invalid_argument);
  }
}

TEST_CASE("pearson correlation") {
  std::vector<double> x{1, 2, 3, 4};
  std::vector<double> y{1.1, 1.9, 3.2, 3.8};
  CHECK(pearson_correlation(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> neg{-1, -2, -3, -4};
  CHECK(pearson_correlation(x, neg) == doctest::Approx(-1.0).epsilon(1e-12));
  // frozen from an independent SciPy evaluation
  CHECK(pearson_correlation(x, y) == doctest::Approx(0.99084700018609206).epsilon(1e-6));

  std::vector<double> flat{2, 2, 2, 2};
  CHECK_THROWS_AS(pearson_correlation(x, flat), std::invalid_argument);
  std::vector<double> two{1, 2};
  CHECK_THROWS_AS(pearson_correlation(two, two), std::invalid_argument);
}
