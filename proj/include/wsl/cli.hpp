#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wsl/experiments.hpp"
#include "wsl/sq_oracle.hpp"

namespace wsl::cli {

enum ExitCode : int { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kBudgetError = 3 };

/// Fully resolved run configuration. Grids are stored as explicit value
/// lists so that the echoed JSON reproduces the run.
struct RunConfig {
  std::size_t d = 50;
  std::size_t s = 2;
  std::size_t n = 1000;
  std::vector<double> alpha{1.0};
  std::vector<double> gamma;   // SNR values; filled from beta (gamma = s beta^2) when beta is given
  std::string gamma_scale = "absolute";  // or "info" / "tractable": gamma values are multiples of that rate
  nlohmann::json sigma = "identity";     // "identity", a diagonal list, or a dense matrix
  double R = 4.0;
  double C = 8.0;
  double xi = 0.0;  // 0: 1/d
  double C0 = 1.0;
  std::size_t trials = 200;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::uint64_t max_supports = 1'000'000;
  std::size_t mc_samples = 1'000'000;
  std::vector<std::string> tests{"exhaustive", "tractable_honest", "tractable_adversarial"};
  std::string out;
  std::string svg;
  std::string transcripts;  // oracle-demo: prefix for the two transcript CSVs

  nlohmann::json to_json() const;
  Matrix sigma_matrix() const;
  std::vector<TestKind> test_kinds() const;
  TestSettings test_settings() const;
  TractableConfig tractable_config() const;
  /// gamma for the given alpha after applying gamma_scale.
  double resolve_gamma(double g, double alpha) const;
};

/// Defaults for fields the text does not set; `threads` defaults to the
/// hardware concurrency.
RunConfig default_config();

/// Parses a JSON object, or an artifact whose header carries a
/// "# config: {...}" line. Throws Error(Config) with line/field diagnostics.
RunConfig parse_config(std::string_view text, RunConfig base = default_config());
RunConfig load_config_file(const std::string& path, RunConfig base = default_config());

/// Comment lines (without the leading "# ") echoed at the top of every artifact.
std::vector<std::string> config_header(std::string_view command, const RunConfig& cfg);

/// Runs fn and maps errors to exit codes: budget errors to 3, every other
/// failure to 2. The message goes to err.
int run_guarded(const std::function<int()>& fn, std::ostream& err);

int cmd_rates(const RunConfig& cfg, std::ostream& out);
int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream* svg);
int cmd_risk(const RunConfig& cfg, std::ostream& out);

using ToleranceFunction = std::function<double(double bound, double expectation, const OracleConfig&)>;

struct VerifyOptions {
  ToleranceFunction tolerance = [](double m, double e, const OracleConfig& c) { return wsl::tolerance(m, e, c); };
};

inline constexpr std::string_view kVerifySuites[] = {"lemma1", "lemma2", "chisq", "moments", "tolerances"};

/// CSV suite,check,value,reference,tolerance,pass; returns 1 if any check
/// fails. An empty suite list runs all of them.
int cmd_verify(const RunConfig& cfg, std::span<const std::string> suites, std::ostream& out,
               const VerifyOptions& options = {});

/// Distinguishability report CSV to `out`, verdict lines to `console`.
int cmd_oracle_demo(const RunConfig& cfg, std::ostream& out, std::ostream& console);

}  // namespace wsl::cli
