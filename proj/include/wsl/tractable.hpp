#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wsl/exhaustive.hpp"
#include "wsl/sq_oracle.hpp"

namespace wsl {

struct TractableConfig {
  double R = 4.0;    // truncation constant
  double C = 8.0;    // threshold multiple for the variance test
  double xi = 0.0;   // tail probability; 0 selects the default 1/d
  std::size_t d = 0;
  double n = 0.0;    // sample size seen by the oracle

  void validate() const;
  double tail() const { return xi > 0.0 ? xi : 1.0 / static_cast<double>(d); }
  /// R sqrt(log d)
  double truncation() const;
  /// R^2 log d sqrt(log(4d/xi) / n)
  double bar_tau1() const;
  /// R sqrt(log d) sqrt(log(4d/xi) / n)
  double bar_tau2() const;
  /// n, xi, eta = log(4d), budget = 4d.
  OracleConfig oracle_config() const;
};

/// The 4d bounded queries in issue order: coordinate means q_0..q_{d-1},
/// second moments q~_0..q~_{d-1}, then signed-label queries +e_0, -e_0,
/// +e_1, -e_1, ...
std::vector<BoundedQuery> build_queries(const TractableConfig& cfg, const Matrix& sigma);

/// statistic = max_j (z_sq[j] - z_mean[j]^2), threshold C * bar_tau1.
TestResult bar_phi1(std::span<const double> z_mean, std::span<const double> z_sq,
                    const TractableConfig& cfg);

/// statistic = max over the 2d signed responses, threshold 2 * bar_tau2.
/// The witness is the coordinate with the sign of the maximizing direction.
TestResult bar_phi2(std::span<const double> z_signed, const TractableConfig& cfg);

struct TranscriptEntry {
  std::string query_id;
  double response = 0.0;
  double tolerance = 0.0;
};

struct TractableResult {
  TestResult phi1;
  TestResult phi2;
  bool reject = false;
  std::vector<TranscriptEntry> transcript;
};

TractableResult run_tractable_test(Oracle& oracle, const TractableConfig& cfg, const Matrix& sigma);

/// Recomputes the decision from a recorded transcript in issue order.
TractableResult decide_from_transcript(std::vector<TranscriptEntry> transcript,
                                       const TractableConfig& cfg);

/// CSV: query_id,response,tolerance
void write_transcript_csv(std::ostream& os, const std::vector<TranscriptEntry>& transcript);

}  // namespace wsl
