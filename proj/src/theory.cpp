#include "wsl/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "wsl/exhaustive.hpp"

namespace wsl {

namespace {

void check_sizes(std::size_t d, std::size_t s, double n) {
  if (d < 2 || s < 1 || s > d || !(n >= 1.0)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("rates need d >= 2, 1 <= s <= d, n >= 1 (d={}, s={}, n={})", d, s, n));
  }
}

double label_branch(std::size_t d, std::size_t s, double n, double alpha) {
  if (alpha == 0.0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(s) * std::log(static_cast<double>(d)) / (alpha * alpha * n);
}

constexpr double kExpSafe = 700.0;

}  // namespace

double rate_info(std::size_t d, std::size_t s, double n, double alpha) {
  check_sizes(d, s, n);
  const double unlabeled = std::sqrt(static_cast<double>(s) * std::log(static_cast<double>(d)) / n);
  return std::min(unlabeled, label_branch(d, s, n, alpha));
}

double rate_tractable(std::size_t d, std::size_t s, double n, double alpha) {
  check_sizes(d, s, n);
  const double ss = static_cast<double>(s);
  return std::min(std::sqrt(ss * ss / n), label_branch(d, s, n, alpha));
}

RateSpec make_rates(std::size_t d, std::size_t s, double n, double alpha) {
  return RateSpec{rate_info(d, s, n, alpha), rate_tractable(d, s, n, alpha), d, s, n, alpha};
}

std::string_view to_string(RegimeLabel label) noexcept {
  switch (label) {
    case RegimeLabel::Impossible: return "Impossible";
    case RegimeLabel::Intractable: return "Intractable";
    case RegimeLabel::Efficient: return "Efficient";
  }
  return "Unknown";
}

RegimeLabel classify_regime(double gamma, const RateSpec& rates, double margin) {
  if (!(gamma >= 0.0) || !(margin >= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "classify_regime needs gamma >= 0 and margin >= 1");
  }
  if (gamma < rates.gamma_info / margin) return RegimeLabel::Impossible;
  if (gamma >= rates.gamma_tract * margin) return RegimeLabel::Efficient;
  return RegimeLabel::Intractable;
}

std::string_view regime_caveat() noexcept {
  return "boundaries hold up to absolute constants (absorbed by the margin); the tractable lower "
         "bound is loose by a log factor when sqrt(1/n) <= alpha^2 <= sqrt(s log d / n)";
}

double cross_moment(double inner, double alpha) {
  return std::cosh(0.5 * inner) + alpha * alpha * std::sinh(0.5 * inner);
}

double cross_moment_from_model(double inner, double alpha) {
  return std::cosh(0.25 * inner) + alpha * alpha * std::sinh(0.25 * inner);
}

double log_cross_term(double t, double alpha) {
  const double a2 = alpha * alpha;
  if (t < 1.0) {
    const double sh = std::sinh(0.5 * t);
    return std::log1p(2.0 * sh * sh + a2 * std::sinh(t));
  }
  return t + std::log(0.5 * ((1.0 + a2) + (1.0 - a2) * std::exp(-2.0 * t)));
}

McEstimate mc_cross_moment(const Vector& v1, const Vector& v2, double alpha, std::size_t m,
                           Stream& stream) {
  if (v1.size() != v2.size()) throw Error(ErrorCode::DimMismatch, "v1 and v2 differ in length");
  if (m < 2) throw Error(ErrorCode::InvalidArgument, "need at least two Monte Carlo samples");
  const auto d = v1.size();
  const double shift1 = v1.squaredNorm() / 8.0;
  const double shift2 = v2.squaredNorm() / 8.0;
  Vector x(d);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x[j] = stream.normal();
    const double sy = stream.bit() ? 1.0 : -1.0;
    auto ratio = [&](const Vector& v, double shift) {
      const double h = 0.5 * v.dot(x);
      const double gp = std::exp(h - shift);
      const double gm = std::exp(-h - shift);
      return 0.5 * (gp + gm) + alpha * sy * 0.5 * (gp - gm);
    };
    const double value = ratio(v1, shift1) * ratio(v2, shift2);
    const double delta = value - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (value - mean);
  }
  const double var = m2 / static_cast<double>(m - 1);
  return McEstimate{mean, std::sqrt(var / static_cast<double>(m))};
}

double log_binomial(std::size_t n, std::size_t k) {
  if (k > n) return -std::numeric_limits<double>::infinity();
  if (n <= 60) return std::log(static_cast<double>(binomial(n, k)));
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

std::vector<double> overlap_weights(std::size_t d, std::size_t s) {
  if (s < 1 || s > d) throw Error(ErrorCode::InvalidArgument, "overlap weights need 1 <= s <= d");
  std::vector<double> w(s + 1, 0.0);
  if (d <= 60) {
    const double total = static_cast<double>(binomial(d, s));
    for (std::size_t k = 0; k <= s; ++k) {
      if (s - k > d - s) continue;
      w[k] = static_cast<double>(binomial(s, k)) * static_cast<double>(binomial(d - s, s - k)) / total;
    }
    return w;
  }
  const double log_total = log_binomial(d, s);
  for (std::size_t k = 0; k <= s; ++k) {
    if (s - k > d - s) continue;
    w[k] = std::exp(log_binomial(s, k) + log_binomial(d - s, s - k) - log_total);
  }
  return w;
}

namespace {

struct MixtureTerms {
  std::vector<double> weights;
  std::vector<double> exponents;  // n log(cosh(t_k) + alpha^2 sinh(t_k))
  double max_exponent = 0.0;
};

MixtureTerms mixture_terms(std::size_t d, std::size_t s, double beta, double alpha, double n) {
  if (!(n >= 1.0)) throw Error(ErrorCode::InvalidArgument, "n must be >= 1");
  MixtureTerms t;
  t.weights = overlap_weights(d, s);
  t.exponents.resize(s + 1);
  for (std::size_t k = 0; k <= s; ++k) {
    t.exponents[k] = n * log_cross_term(0.5 * beta * beta * static_cast<double>(k), alpha);
    if (t.weights[k] > 0.0) t.max_exponent = std::max(t.max_exponent, t.exponents[k]);
  }
  return t;
}

double log_sum_exp(const MixtureTerms& t) {
  double acc = 0.0;
  for (std::size_t k = 0; k < t.weights.size(); ++k) {
    if (t.weights[k] > 0.0) acc += t.weights[k] * std::exp(t.exponents[k] - t.max_exponent);
  }
  return t.max_exponent + std::log(acc);
}

}  // namespace

double chi_square_mixture(std::size_t d, std::size_t s, double beta, double alpha, double n) {
  const MixtureTerms t = mixture_terms(d, s, beta, alpha, n);
  if (t.max_exponent <= kExpSafe) {
    // Summing P(k) expm1(.) avoids the cancellation in (sum P(k) e^x) - 1.
    double acc = 0.0;
    for (std::size_t k = 0; k < t.weights.size(); ++k) acc += t.weights[k] * std::expm1(t.exponents[k]);
    return acc;
  }
  const double lse = log_sum_exp(t);
  return lse > 709.0 ? std::numeric_limits<double>::infinity() : std::expm1(lse);
}

double log1p_chi_square_mixture(std::size_t d, std::size_t s, double beta, double alpha, double n) {
  const MixtureTerms t = mixture_terms(d, s, beta, alpha, n);
  if (t.max_exponent <= kExpSafe) {
    double acc = 0.0;
    for (std::size_t k = 0; k < t.weights.size(); ++k) acc += t.weights[k] * std::expm1(t.exponents[k]);
    return std::log1p(acc);
  }
  return log_sum_exp(t);
}

double chi_square_by_enumeration(std::size_t d, std::size_t s, double beta, double alpha, double n) {
  if (s < 1 || s > d) throw Error(ErrorCode::InvalidArgument, "enumeration needs 1 <= s <= d");
  if (binomial(d, s) > 5000) {
    throw Error(ErrorCode::CombinatorialBudgetExceeded, "pair enumeration is limited to C(d,s) <= 5000");
  }
  // Materialize every v in the family explicitly.
  std::vector<Vector> family;
  std::vector<std::size_t> comb(s);
  for (std::size_t i = 0; i < s; ++i) comb[i] = i;
  for (;;) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(d));
    for (std::size_t j : comb) v[static_cast<Eigen::Index>(j)] = beta;
    family.push_back(std::move(v));
    std::size_t i = s;
    while (i > 0 && comb[i - 1] == d - s + i - 1) --i;
    if (i == 0) break;
    ++comb[i - 1];
    for (std::size_t j = i; j < s; ++j) comb[j] = comb[j - 1] + 1;
  }
  const double a2 = alpha * alpha;
  double acc = 0.0;
  for (const auto& v1 : family) {
    for (const auto& v2 : family) {
      const double x = 0.5 * v1.dot(v2);
      const double sh = std::sinh(0.5 * x);
      const double h_minus_one = 2.0 * sh * sh + a2 * std::sinh(x);
      acc += std::expm1(n * std::log1p(h_minus_one));
    }
  }
  const double count = static_cast<double>(family.size());
  return acc / (count * count);
}

BoundCheckReport hyperbolic_bound_check(std::span<const double> x_grid, std::span<const double> v_grid) {
  BoundCheckReport report;
  report.max_excess = -std::numeric_limits<double>::infinity();
  for (double x : x_grid) {
    for (double v : v_grid) {
      const double lhs = std::cosh(x) + v * std::sinh(x);
      const double rhs = std::max(std::exp(2.0 * v * x), std::cosh(2.0 * x));
      report.max_excess = std::max(report.max_excess, lhs - rhs);
      ++report.points;
      if (lhs > rhs + 1e-12) report.violations.push_back(BoundViolation{x, v, lhs, rhs});
    }
  }
  return report;
}

std::vector<double> linear_grid(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start) throw Error(ErrorCode::InvalidArgument, "bad grid specification");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = start + static_cast<double>(i) * step;
  return out;
}

}  // namespace wsl
