#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wsl/model.hpp"

namespace wsl {

enum class QueryKind { CoordinateMean, CoordinateSecondMoment, SignedLabelMean };

/// Closed-form description of a truncated single-coordinate query, with
/// t = x_j / sqrt(sigma_jj) and the threshold L = truncation:
///   CoordinateMean          t 1{|t| <= L}
///   CoordinateSecondMoment  (t^2 - 1) 1{|t| <= L}
///   SignedLabelMean         (2y - 1) sign t 1{|t| <= L}
struct QueryShape {
  QueryKind kind = QueryKind::CoordinateMean;
  std::size_t coordinate = 0;
  int sign = 1;
  double scale = 1.0;  // sqrt(sigma_jj)
  double truncation = std::numeric_limits<double>::infinity();
};

using QueryFunction = std::function<double(int label, std::span<const double> x)>;

struct BoundedQuery {
  std::string id;
  QueryFunction evaluate;
  double bound = 1.0;                // M: |evaluate| <= M everywhere
  std::optional<QueryShape> shape;   // present when an analytic expectation exists
};

BoundedQuery make_shaped_query(std::string id, const QueryShape& shape);

/// Largest |q| observed over `samples` random (label, x) inputs with x drawn
/// from N(0, scale^2 I) for a range of scales; used to spot-check the bound.
double max_observed_magnitude(const BoundedQuery& q, std::size_t dim, std::size_t samples,
                              Stream& stream);

struct OracleConfig {
  double n = 1.0;           // effective sample size
  double xi = 0.05;         // tail probability in (0, 1)
  double eta = 0.0;         // log-capacity of the query space
  std::size_t budget = std::numeric_limits<std::size_t>::max();

  void validate() const;
};

struct OracleResponse {
  double value = 0.0;
  double tolerance_used = 0.0;
  std::string query_id;
};

/// tau_q = max( (eta + log(1/xi)) M / n , sqrt(2 (eta + log(1/xi)) (M^2 - E^2) / n) ).
double tolerance(double bound, double expectation, const OracleConfig& cfg);
inline double tolerance(const BoundedQuery& q, double expectation, const OracleConfig& cfg) {
  return tolerance(q.bound, expectation, cfg);
}

/// Exact expectation of a truncated query under theta (closed-form truncated
/// Gaussian moments of the coordinate's univariate mixture).
double analytic_expectation(QueryKind kind, std::size_t coordinate, int sign,
                            const ModelParams& theta, double truncation);
double analytic_expectation(const BoundedQuery& q, const ModelParams& theta);

/// Base oracle: enforces the query budget. Instances hold mutable state and
/// are meant for one test run at a time.
class Oracle {
 public:
  explicit Oracle(OracleConfig cfg);
  virtual ~Oracle() = default;
  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  /// Throws BudgetExceeded on query budget + 1.
  OracleResponse query(const BoundedQuery& q);

  const OracleConfig& config() const noexcept { return cfg_; }
  std::size_t queries_used() const noexcept { return used_; }

 protected:
  virtual OracleResponse respond(const BoundedQuery& q) = 0;

 private:
  OracleConfig cfg_;
  std::size_t used_ = 0;
};

/// Answers with the sample average of q over the dataset, which must outlive
/// the oracle. The reported tolerance plugs the sample mean in for E[q].
class EmpiricalOracle final : public Oracle {
 public:
  EmpiricalOracle(const Dataset& data, OracleConfig cfg);

 protected:
  OracleResponse respond(const BoundedQuery& q) override;

 private:
  const Dataset* data_;
};

enum class SignPolicy { Plus, Minus, Alternating };

/// Answers E_theta[q] + sign tau_q, the extreme value the oracle contract
/// still allows.
class WorstCaseOracle final : public Oracle {
 public:
  WorstCaseOracle(ModelParams theta, SignPolicy policy, OracleConfig cfg);

 protected:
  OracleResponse respond(const BoundedQuery& q) override;

 private:
  ModelParams theta_;
  SignPolicy policy_;
  std::size_t answered_ = 0;
};

enum class Hypothesis { Null, Alternative };

struct DistinguishabilityEntry {
  std::string query_id;
  double gap = 0.0;
  double tolerance = 0.0;
  bool flagged = false;
};

/// Pair-indistinguishable oracle. For every query with
/// |E_1[q] - E_0[q]| <= tau_q(theta1) it answers E_0[q] whichever model is
/// true; otherwise it answers E_truth[q] and flags the query.
class AdversarialPairOracle final : public Oracle {
 public:
  AdversarialPairOracle(ModelParams theta0, ModelParams theta1, Hypothesis truth, OracleConfig cfg);

  const std::vector<DistinguishabilityEntry>& report() const noexcept { return report_; }
  std::size_t flagged_count() const noexcept;

 protected:
  OracleResponse respond(const BoundedQuery& q) override;

 private:
  ModelParams theta0_;
  ModelParams theta1_;
  Hypothesis truth_;
  std::vector<DistinguishabilityEntry> report_;
};

/// Report over a query set without running any test.
std::vector<DistinguishabilityEntry> distinguishability_report(
    const ModelParams& theta0, const ModelParams& theta1,
    const std::vector<BoundedQuery>& queries, const OracleConfig& cfg);

/// CSV: query_id,gap,tolerance,flagged
void write_report_csv(std::ostream& os, const std::vector<DistinguishabilityEntry>& report);

}  // namespace wsl
