#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wsl/exhaustive.hpp"
#include "wsl/sq_oracle.hpp"
#include "wsl/tractable.hpp"

namespace wsl {

struct RiskEstimate {
  double type1 = 0.0;
  double type2 = 0.0;
  double risk = 0.0;  // type1 + type2
  std::size_t trials = 0;
  double half_width_type1 = 0.0;  // 95% normal-approximation half-widths
  double half_width_type2 = 0.0;
  double half_width = 0.0;        // for the sum, treating the two errors as independent
};

RiskEstimate make_risk_estimate(std::size_t null_rejections, std::size_t alt_acceptances,
                                std::size_t trials);

/// What a test sees in one trial. `null` and `alternative` are the pair under
/// evaluation; `truth` is the model that generated `data`.
struct TrialContext {
  const Dataset& data;
  const ModelParams& truth;
  const ModelParams& null;
  const ModelParams& alternative;
  Hypothesis hypothesis;
  Stream& stream;
};

/// Returns true to reject. Must be safe to call concurrently.
using TestProcedure = std::function<bool(const TrialContext&)>;

/// Runs `trials` datasets of size n under each of theta0 and theta1. Trial t
/// under hypothesis h draws its data from Stream::derive(seed, {t, h}) and
/// hands the test Stream::derive(seed, {t, h, 1}).
RiskEstimate estimate_risk(const TestProcedure& test, const ModelParams& theta0,
                           const ModelParams& theta1, std::size_t n, std::size_t trials,
                           std::uint64_t seed, unsigned threads = 1);

enum class TestKind {
  Exhaustive,
  TractableHonest,
  TractableAdversarial,
  TractableWorstPlus,
  TractableWorstMinus,
};

std::string_view to_string(TestKind kind) noexcept;
/// Accepts the names produced by to_string; throws Config otherwise.
TestKind parse_test_kind(std::string_view name);

struct TestSettings {
  std::size_t s = 1;
  double R = 4.0;
  double C = 8.0;
  double xi = 0.0;  // 0: 1/d
  Phi1Options phi1;
};

/// Builds a test for datasets of size n in dimension d with covariance sigma.
/// The exhaustive test uses the default thresholds at n / 2 pairs; the
/// tractable variants use an oracle with sample size n.
TestProcedure make_test(TestKind kind, const TestSettings& settings, std::size_t d, std::size_t n,
                        const Matrix& sigma);

struct SweepGrid {
  std::vector<double> alpha_values;
  std::vector<double> gamma_values;
  std::size_t d = 0;
  std::size_t s = 1;
  std::size_t n = 0;
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  double C0 = 1.0;  // second null point mu = C0 * (1, ..., 1)

  void validate() const;
};

struct SweepRow {
  double alpha = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  TestKind test = TestKind::Exhaustive;
  RiskEstimate risk;
};

/// One row per (alpha, gamma, test), alpha-major then gamma then test order.
/// Sigma = I. Every trial of cell c draws a fresh support and datasets from
/// substreams keyed by (c, trial, .); type-I error is the larger of the two
/// null points mu = 0 and mu = C0 * 1.
std::vector<SweepRow> sweep_phase_diagram(const SweepGrid& grid, std::span<const TestKind> tests,
                                          const TestSettings& settings, unsigned threads = 1);

/// CSV with '#' header lines (from `header`), then
/// alpha,gamma,beta,test,d,s,n,trials,type1,type2,risk,half_width,seed
void write_sweep_csv(std::ostream& os, const SweepGrid& grid, const std::vector<SweepRow>& rows,
                     std::span<const std::string> header = {});

/// Heatmap with one panel per test: x = alpha, y = gamma on a log axis, cell
/// color from green (risk 0) to red (risk >= 1), with both rate curves drawn.
void write_sweep_svg(std::ostream& os, const SweepGrid& grid, const std::vector<SweepRow>& rows);

struct OracleDemoResult {
  std::vector<DistinguishabilityEntry> report;
  std::vector<TranscriptEntry> null_transcript;
  std::vector<TranscriptEntry> alt_transcript;
  bool transcripts_identical = false;
  std::size_t flagged = 0;
  bool null_reject = false;
  bool alt_reject = false;
  std::string verdict;  // "indistinguishable" or "distinguishable"
};

/// Pits the null (mu = 0, I, alpha) against the restricted alternative with
/// support {0, ..., s-1} and value beta, answering the 4d tractable queries
/// through the adversarial pair oracle under each hypothesis.
OracleDemoResult oracle_demo(std::size_t d, std::size_t s, double n, double alpha, double beta,
                             TractableConfig cfg);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. The first
/// exception thrown (by index) is rethrown after all workers finish.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace wsl
