#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "wsl/model.hpp"

namespace wsl {

/// Maximizing witness of a test statistic: a support set (sign 0) or a single
/// coordinate with the sign of its mean (+1 / -1).
struct Witness {
  std::vector<std::size_t> indices;
  int sign = 0;
};

struct TestResult {
  double statistic = 0.0;
  double threshold = 0.0;
  bool reject = false;  // statistic >= threshold
  std::optional<Witness> witness;
};

inline TestResult make_result(double statistic, double threshold,
                              std::optional<Witness> witness = std::nullopt) {
  return TestResult{statistic, threshold, statistic >= threshold, std::move(witness)};
}

struct Thresholds {
  double tau1 = 0.0;
  double tau2 = 0.0;
  double kappa = 1.0;
};

/// tau1 = kappa sqrt(s log(e d / s) / n), tau2 = sqrt(8 log d / n); natural log,
/// kappa = lambda_max / lambda_min of sigma.
Thresholds default_thresholds(std::size_t d, std::size_t s, std::size_t n, const Matrix& sigma);

/// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::size_t n, std::size_t k);

struct Phi1Options {
  std::uint64_t max_supports = 1'000'000;
  unsigned threads = 1;
};

struct Phi1Value {
  double value = 0.0;
  std::vector<std::size_t> support;
};

/// Sparse variance search. For every s-subset S (lexicographic order) computes
/// the largest generalized eigenvalue of ([S_W]_S, 2 [sigma^{-1}]_S) with
/// S_W = (1/n) sum (sigma^{-1} w_i)(sigma^{-1} w_i)^T, and returns the maximum
/// together with the first support attaining it.
Phi1Value phi1_statistic(const RowMatrix& w, const Matrix& sigma, std::size_t s,
                         const Phi1Options& options = {});

struct Phi2Value {
  double value = 0.0;
  std::size_t index = 0;
  int sign = 1;
};

/// max_j |mean(u)_j| / sqrt(sigma_jj); ties resolve to the smallest index.
Phi2Value phi2_statistic(const RowMatrix& u, const Matrix& sigma);

struct ExhaustiveResult {
  TestResult phi1;  // threshold 1 + tau1
  TestResult phi2;  // threshold tau2
  bool reject = false;
};

ExhaustiveResult run_exhaustive_test(const Dataset& data, const Matrix& sigma, std::size_t s,
                                     const Thresholds& thresholds,
                                     const Phi1Options& options = {});

}  // namespace wsl
