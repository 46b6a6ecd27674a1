#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "wsl/exhaustive.hpp"
#include "wsl/theory.hpp"

using namespace wsl;

namespace {

// Plain double sum over all support pairs, using pow on the closed form.
double enumerate_reference(std::size_t d, std::size_t s, double beta, double alpha, double n) {
  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 0; m < (1u << d); ++m)
    if (static_cast<std::size_t>(__builtin_popcount(m)) == s) masks.push_back(m);
  long double acc = 0.0L;
  for (auto a : masks)
    for (auto b : masks) {
      const double inner = beta * beta * __builtin_popcount(a & b);
      acc += std::pow(static_cast<long double>(cross_moment(inner, alpha)), static_cast<long double>(n));
    }
  return static_cast<double>(acc / (static_cast<long double>(masks.size()) * masks.size()) - 1.0L);
}

Vector support_vector(std::size_t d, std::initializer_list<Eigen::Index> idx, double beta) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(d));
  for (auto j : idx) v[j] = beta;
  return v;
}

}  // namespace

TEST_CASE("rates") {
  CHECK(rate_info(100, 2, 1000, 0.0) == doctest::Approx(std::sqrt(2.0 * std::log(100.0) / 1000.0)));
  CHECK(rate_info(100, 2, 1000, 1.0) == doctest::Approx(0.009210340371976183).epsilon(1e-12));
  CHECK(rate_tractable(100, 2, 1000, 0.0) == doctest::Approx(2.0 / std::sqrt(1000.0)));
  CHECK(rate_tractable(50, 3, 1e4, 1.0) == doctest::Approx(3.0 * std::log(50.0) / 1e4).epsilon(1e-12));
  CHECK(rate_tractable(50, 3, 1e4, 1.0) == doctest::Approx(0.0011736).epsilon(1e-4));

  // alpha^4 = s log d / n: both information branches meet.
  const double n = 1000.0, sl = 2.0 * std::log(100.0);
  const double alpha = std::pow(sl / n, 0.25);
  CHECK(std::sqrt(sl / n) == doctest::Approx(sl / (alpha * alpha * n)).epsilon(1e-12));
  CHECK(rate_info(100, 2, n, alpha) == doctest::Approx(std::sqrt(sl / n)).epsilon(1e-12));

  // s = 1: tractable branches sqrt(1/n) and log d / (alpha^2 n).
  CHECK(rate_tractable(3, 1, 50.0, 1.0) == doctest::Approx(std::min(std::sqrt(1.0 / 50.0), std::log(3.0) / 50.0)));

  // Ordered once s exceeds log d; below that the unlabeled branches cross.
  for (double a : {0.0, 0.1, 0.5, 1.0}) {
    CHECK(rate_info(50, 8, 500, a) <= rate_tractable(50, 8, 500, a) * (1.0 + 1e-12));
  }
  // Nonincreasing in alpha.
  double prev = rate_tractable(80, 3, 2000, 0.0);
  for (double a = 0.05; a <= 1.0; a += 0.05) {
    const double r = rate_tractable(80, 3, 2000, a);
    CHECK(r <= prev);
    prev = r;
  }
  CHECK_THROWS_AS(rate_info(1, 1, 10, 0.5), Error);
  CHECK_THROWS_AS(rate_info(10, 11, 10, 0.5), Error);
  CHECK_THROWS_AS(rate_tractable(10, 0, 10, 0.5), Error);
  CHECK_THROWS_AS(rate_tractable(10, 2, 0.5, 0.5), Error);
}

TEST_CASE("regime classification") {
  const RateSpec r = make_rates(100, 10, 1000, 0.3);
  CHECK(classify_regime(0.0, r) == RegimeLabel::Impossible);
  CHECK(classify_regime(100.0 * r.gamma_tract, r, 2.0) == RegimeLabel::Efficient);
  CHECK(classify_regime(0.5 * (r.gamma_info + r.gamma_tract), r) == RegimeLabel::Intractable);
  CHECK(to_string(RegimeLabel::Intractable) == "Intractable");

  // alpha = 1: both rates reduce to the labelled branch and the band closes.
  const RateSpec one = make_rates(100, 2, 1000, 1.0);
  CHECK(one.gamma_info == doctest::Approx(one.gamma_tract));
  for (double g = 0.0; g < 0.05; g += 0.0005) CHECK(classify_regime(g, one) != RegimeLabel::Intractable);
  CHECK_THROWS_AS(classify_regime(-1.0, r), Error);
  CHECK_THROWS_AS(classify_regime(1.0, r, 0.5), Error);
  CHECK_FALSE(regime_caveat().empty());
}

TEST_CASE("cross moment closed forms") {
  CHECK(cross_moment(0.0, 0.7) == 1.0);
  for (double t : {0.1, 1.0, 3.0}) CHECK(cross_moment(t, 1.0) == doctest::Approx(std::exp(t / 2.0)));
  CHECK(cross_moment(1.0, 0.5) == doctest::Approx(1.2578997916).epsilon(1e-10));
  CHECK(cross_moment_from_model(1.0, 1.0) == doctest::Approx(std::exp(0.25)));
  CHECK(cross_moment_from_model(2.0, 0.3) == doctest::Approx(cross_moment(1.0, 0.3)));

  for (double a : {0.0, 0.4, 1.0}) {
    for (double t : {1e-8, 0.3, 0.99, 1.0, 5.0, 40.0}) {
      CHECK(log_cross_term(t, a) == doctest::Approx(std::log(std::cosh(t) + a * a * std::sinh(t))).epsilon(1e-13));
    }
    // Large arguments stay finite where cosh overflows.
    CHECK(log_cross_term(2000.0, a) == doctest::Approx(2000.0 + std::log((1.0 + a * a) / 2.0)));
  }
}

TEST_CASE("Monte Carlo cross moment") {
  Stream st(41);
  const auto zero = Vector::Zero(5).eval();
  const McEstimate z = mc_cross_moment(zero, zero, 0.4, 1000, st);
  CHECK(z.estimate == 1.0);
  CHECK(z.standard_error == 0.0);

  for (double a : {0.0, 0.6, 1.0}) {
    const McEstimate o = mc_cross_moment(support_vector(5, {0}, 1.0), support_vector(5, {1}, 1.0), a, 200000, st);
    CHECK(std::abs(o.estimate - 1.0) <= 3.0 * o.standard_error);
  }
  for (double a : {0.0, 0.3, 1.0}) {
    const McEstimate e = mc_cross_moment(support_vector(5, {0, 1}, 0.5), support_vector(5, {1, 2}, 0.5), a, 1000000, st);
    CAPTURE(a);
    CHECK(std::abs(e.estimate - cross_moment_from_model(0.25, a)) <= 3.0 * e.standard_error);
  }
  CHECK_THROWS_AS(mc_cross_moment(Vector::Zero(3), Vector::Zero(4), 0.5, 10, st), Error);
  CHECK_THROWS_AS(mc_cross_moment(zero, zero, 0.5, 1, st), Error);
}

// Closed form as stated with a half angle. Blocked: with means -v/2 and
// +v/2 the Gaussian factor is exp(eta1 eta2 <v1, v2> / 4), so the simulated
// moment tracks cosh(inner / 4) + alpha^2 sinh(inner / 4); at alpha = 1 the
// gap is 1.133 vs 1.064, about 50 standard errors at m = 1e6.
TEST_CASE("Monte Carlo matches the half-angle cross moment" * doctest::should_fail()) {
  Stream st(42);
  for (double a : {0.0, 0.3, 1.0}) {
    const McEstimate e = mc_cross_moment(support_vector(5, {0, 1}, 0.5), support_vector(5, {1, 2}, 0.5), a, 1000000, st);
    CHECK(std::abs(e.estimate - cross_moment(0.25, a)) <= 3.0 * e.standard_error);
  }
}

TEST_CASE("overlap weights and binomials") {
  const auto w = overlap_weights(6, 2);
  REQUIRE(w.size() == 3);
  CHECK(w[0] == doctest::Approx(6.0 / 15.0));
  CHECK(w[1] == doctest::Approx(8.0 / 15.0));
  CHECK(w[2] == doctest::Approx(1.0 / 15.0));
  const auto big = overlap_weights(500, 7);
  double total = 0.0;
  for (double x : big) total += x;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(overlap_weights(5, 4)[2] == 0.0);  // two sets of 4 in 5 share at least 3
  CHECK(log_binomial(60, 30) == doctest::Approx(std::log(118264581564861424.0)));
  CHECK(log_binomial(100, 50) == doctest::Approx(std::log(1.0089134454556419e29)).epsilon(1e-12));
  CHECK(log_binomial(3, 4) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("chi-square mixture agrees with enumeration") {
  for (auto [d, s] : {std::pair<std::size_t, std::size_t>{6, 2}, {8, 2}, {8, 3}, {5, 1}, {7, 3}}) {
    for (double beta : {0.1, 0.3, 0.8}) {
      for (double alpha : {0.0, 0.5, 1.0}) {
        for (double n : {1.0, 10.0, 37.0}) {
          const double mix = chi_square_mixture(d, s, beta, alpha, n);
          const double lib = chi_square_by_enumeration(d, s, beta, alpha, n);
          const double ref = enumerate_reference(d, s, beta, alpha, n);
          CAPTURE(d);
          CAPTURE(s);
          CHECK(std::abs(mix - lib) <= 1e-10 * std::abs(lib));
          CHECK(std::abs(mix - ref) <= 1e-9 * std::abs(ref));
        }
      }
    }
  }
  CHECK(chi_square_mixture(10, 3, 0.0, 0.5, 100.0) == 0.0);
  const double full = chi_square_mixture(4, 4, 0.3, 0.5, 10.0);
  CHECK(full == doctest::Approx(std::pow(cross_moment(4 * 0.09, 0.5), 10.0) - 1.0).epsilon(1e-12));
  CHECK_THROWS_AS(chi_square_by_enumeration(20, 5, 0.1, 0.5, 1.0), Error);
}

TEST_CASE("chi-square monotonicity and overflow") {
  double prev = 0.0;
  for (double beta = 0.05; beta <= 1.0; beta += 0.05) {
    const double v = chi_square_mixture(100, 3, beta, 0.5, 200.0);
    CHECK(v >= prev);
    prev = v;
  }
  prev = 0.0;
  for (double n = 1.0; n <= 1e4; n *= 3.0) {
    const double v = chi_square_mixture(100, 3, 0.2, 0.5, n);
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(std::isinf(chi_square_mixture(50, 5, 3.0, 1.0, 1e5)));
  const double l = log1p_chi_square_mixture(50, 5, 3.0, 1.0, 1e5);
  CHECK(std::isfinite(l));
  CHECK(l > 709.0);
  CHECK(log1p_chi_square_mixture(50, 2, 0.1, 0.5, 10.0) ==
        doctest::Approx(std::log1p(chi_square_mixture(50, 2, 0.1, 0.5, 10.0))).epsilon(1e-13));
}

TEST_CASE("hyperbolic bound grid") {
  const auto xs = linear_grid(0.0, 10.0, 0.01);
  const auto vs = linear_grid(0.0, 1.0, 0.01);
  CHECK(xs.size() == 1001);
  CHECK(vs.size() == 101);
  CHECK(xs.back() == doctest::Approx(10.0));
  const BoundCheckReport r = hyperbolic_bound_check(xs, vs);
  CHECK(r.points == 1001 * 101);
  CHECK(r.violations.empty());
  CHECK(r.max_excess <= 0.0);  // x = 0 gives equality

  // v = 1 reduces to e^x <= e^{2x}.
  const std::vector<double> one = {1.0};
  CHECK(hyperbolic_bound_check(xs, one).violations.empty());

  CHECK_THROWS_AS(linear_grid(0.0, 1.0, 0.0), Error);
  CHECK_THROWS_AS(linear_grid(1.0, 0.0, 0.1), Error);
  CHECK(linear_grid(0.0, 0.3, 0.1).size() == 4);
}
