#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "wsl/model.hpp"

namespace wsl {

/// Information-theoretic rate: min( sqrt(s log d / n), s log d / (alpha^2 n) ).
/// alpha = 0 makes the second branch +infinity.
double rate_info(std::size_t d, std::size_t s, double n, double alpha);

/// Tractable rate: min( sqrt(s^2 / n), s log d / (alpha^2 n) ).
double rate_tractable(std::size_t d, std::size_t s, double n, double alpha);

struct RateSpec {
  double gamma_info = 0.0;
  double gamma_tract = 0.0;
  std::size_t d = 0;
  std::size_t s = 0;
  double n = 0.0;
  double alpha = 0.0;
};

RateSpec make_rates(std::size_t d, std::size_t s, double n, double alpha);

enum class RegimeLabel { Impossible, Intractable, Efficient };

std::string_view to_string(RegimeLabel label) noexcept;

/// Impossible if gamma < gamma_info / margin, Efficient if
/// gamma >= gamma_tract * margin, Intractable otherwise. The margin stands in
/// for the unspecified absolute constants of the rates.
RegimeLabel classify_regime(double gamma, const RateSpec& rates, double margin = 1.0);

/// Note attached to regime reports: the tractable lower bound carries an
/// extra log factor when sqrt(1/n) <= alpha^2 <= sqrt(s log d / n).
std::string_view regime_caveat() noexcept;

/// E_0[(dP_v1/dP_0)(dP_v2/dP_0)] = cosh(inner / 2) + alpha^2 sinh(inner / 2).
double cross_moment(double inner, double alpha);

/// The same expectation evaluated directly for means -v/2 and +v/2: the
/// Gaussian moment generating function gives exp(eta1 eta2 <v1, v2> / 4), so
/// the value is cosh(inner / 4) + alpha^2 sinh(inner / 4). mc_cross_moment
/// estimates this quantity.
double cross_moment_from_model(double inner, double alpha);

/// log(cosh(t) + alpha^2 sinh(t)) for t >= 0, stable for large t.
double log_cross_term(double t, double alpha);

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
};

/// Monte Carlo estimate of the cross moment: draws X ~ N(0, I), Y a fair coin,
/// and averages the product of the two likelihood ratios of the models
/// (-v/2, v/2, I, alpha) against the null.
McEstimate mc_cross_moment(const Vector& v1, const Vector& v2, double alpha, std::size_t m,
                           Stream& stream);

/// Hypergeometric overlap weights P(|S1 ∩ S2| = k), k = 0..s, for independent
/// uniform s-subsets of {0..d-1}.
std::vector<double> overlap_weights(std::size_t d, std::size_t s);

/// log C(n, k); exact integer arithmetic for n <= 60, lgamma beyond.
double log_binomial(std::size_t n, std::size_t k);

/// Chi-square divergence between the uniform mixture over the restricted
/// alternative family and the null, for n samples:
///   sum_k P(k) [cosh(beta^2 k / 2) + alpha^2 sinh(beta^2 k / 2)]^n - 1.
/// Returns +inf when the value overflows a double.
double chi_square_mixture(std::size_t d, std::size_t s, double beta, double alpha, double n);

/// log(1 + chi-square), finite even when the divergence itself overflows.
double log1p_chi_square_mixture(std::size_t d, std::size_t s, double beta, double alpha, double n);

/// Same quantity by direct enumeration of all support pairs; exponential in d,
/// meant as a reference route for small (d, s).
double chi_square_by_enumeration(std::size_t d, std::size_t s, double beta, double alpha, double n);

struct BoundViolation {
  double x = 0.0;
  double v = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct BoundCheckReport {
  std::size_t points = 0;
  double max_excess = 0.0;  // max over the grid of lhs - rhs
  std::vector<BoundViolation> violations;
};

/// Evaluates cosh(x) + v sinh(x) <= max(exp(2 v x), cosh(2 x)) on the grid and
/// reports points where lhs > rhs + 1e-12.
BoundCheckReport hyperbolic_bound_check(std::span<const double> x_grid, std::span<const double> v_grid);

/// {start, start + step, ...} up to stop inclusive, with integer stepping.
std::vector<double> linear_grid(double start, double stop, double step);

}  // namespace wsl
