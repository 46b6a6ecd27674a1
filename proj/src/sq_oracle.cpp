#include "wsl/sq_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

namespace wsl {

namespace {

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Moments of t ~ N(m, 1) restricted to |t| <= L:
// E[1{.}], E[t 1{.}], E[t^2 1{.}].
struct TruncatedMoments {
  double mass;
  double first;
  double second;
};

TruncatedMoments truncated_moments(double m, double L) {
  if (!std::isfinite(L)) return {1.0, m, m * m + 1.0};
  const double a = -L - m;
  const double b = L - m;
  const double pa = std_normal_pdf(a);
  const double pb = std_normal_pdf(b);
  const double mass = std_normal_cdf(b) - std_normal_cdf(a);
  const double z1 = pa - pb;
  const double z2 = mass + a * pa - b * pb;
  return {mass, m * mass + z1, m * m * mass + 2.0 * m * z1 + z2};
}

double truncate(double t, double L) { return std::abs(t) <= L ? t : 0.0; }

}  // namespace

BoundedQuery make_shaped_query(std::string id, const QueryShape& shape) {
  BoundedQuery q;
  q.id = std::move(id);
  q.shape = shape;
  const double L = shape.truncation;
  const double inv_scale = 1.0 / shape.scale;
  const std::size_t j = shape.coordinate;
  switch (shape.kind) {
    case QueryKind::CoordinateMean:
      q.bound = L;
      q.evaluate = [=](int, std::span<const double> x) { return truncate(x[j] * inv_scale, L); };
      break;
    case QueryKind::CoordinateSecondMoment:
      q.bound = std::max(L * L, 1.0);
      q.evaluate = [=](int, std::span<const double> x) {
        const double t = x[j] * inv_scale;
        return std::abs(t) <= L ? t * t - 1.0 : 0.0;
      };
      break;
    case QueryKind::SignedLabelMean: {
      q.bound = L;
      const double sign = shape.sign < 0 ? -1.0 : 1.0;
      q.evaluate = [=](int y, std::span<const double> x) {
        const double t = sign * x[j] * inv_scale;
        return (2.0 * y - 1.0) * truncate(t, L);
      };
      break;
    }
  }
  return q;
}

double max_observed_magnitude(const BoundedQuery& q, std::size_t dim, std::size_t samples,
                              Stream& stream) {
  static constexpr double kScales[] = {0.1, 0.5, 1.0, 2.0, 4.0, 10.0, 100.0};
  std::vector<double> x(dim);
  double worst = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double scale = kScales[i % std::size(kScales)];
    for (auto& v : x) v = scale * stream.normal();
    worst = std::max(worst, std::abs(q.evaluate(stream.bit(), x)));
  }
  return worst;
}

void OracleConfig::validate() const {
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "oracle sample size must be positive");
  if (!(xi > 0.0 && xi < 1.0)) throw Error(ErrorCode::InvalidArgument, "xi must lie in (0, 1)");
  if (!(eta >= 0.0)) throw Error(ErrorCode::InvalidArgument, "eta must be >= 0");
}

double tolerance(double bound, double expectation, const OracleConfig& cfg) {
  if (std::abs(expectation) > bound * (1.0 + 1e-12)) {
    throw Error(ErrorCode::ExpectationOutOfRange,
                fmt::format("|E[q]| = {} exceeds the bound M = {}", std::abs(expectation), bound));
  }
  const double capacity = cfg.eta + std::log(1.0 / cfg.xi);
  const double branch1 = capacity * bound / cfg.n;
  const double spread = std::max(0.0, bound * bound - expectation * expectation);
  const double branch2 = std::sqrt(2.0 * capacity * spread / cfg.n);
  return std::max(branch1, branch2);
}

double analytic_expectation(QueryKind kind, std::size_t coordinate, int sign,
                            const ModelParams& theta, double truncation) {
  if (coordinate >= theta.dim()) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("coordinate {} out of range", coordinate));
  }
  const auto j = static_cast<Eigen::Index>(coordinate);
  const double sjj = theta.sigma()(j, j);
  if (!(sjj > 0.0)) throw Error(ErrorCode::NonPositiveDiagonal, "sigma diagonal must be positive");
  const double scale = std::sqrt(sjj);
  const double a0 = theta.mu0()[j] / scale;
  const double a1 = theta.mu1()[j] / scale;
  const double L = truncation;

  switch (kind) {
    case QueryKind::CoordinateMean:
      return 0.5 * (truncated_moments(a0, L).first + truncated_moments(a1, L).first);
    case QueryKind::CoordinateSecondMoment: {
      const auto m0 = truncated_moments(a0, L);
      const auto m1 = truncated_moments(a1, L);
      return 0.5 * ((m0.second - m0.mass) + (m1.second - m1.mass));
    }
    case QueryKind::SignedLabelMean: {
      // S = (2Y - 1) sign t is a four-component mixture; |S| = |t|.
      const double g = sign < 0 ? -1.0 : 1.0;
      const double alpha = theta.alpha();
      const double agree = 0.25 * (1.0 + alpha);
      const double flip = 0.25 * (1.0 - alpha);
      return agree * truncated_moments(g * a1, L).first + flip * truncated_moments(g * a0, L).first +
             agree * truncated_moments(-g * a0, L).first + flip * truncated_moments(-g * a1, L).first;
    }
  }
  throw Error(ErrorCode::UnsupportedQueryKind, "unknown query kind");
}

double analytic_expectation(const BoundedQuery& q, const ModelParams& theta) {
  if (!q.shape) {
    throw Error(ErrorCode::NoAnalyticExpectation,
                fmt::format("query '{}' has no closed-form expectation", q.id));
  }
  const QueryShape& s = q.shape.value();
  if (s.coordinate >= theta.dim()) {
    throw Error(ErrorCode::DimMismatch, fmt::format("query '{}' does not fit dimension {}", q.id, theta.dim()));
  }
  const double sjj = theta.sigma()(static_cast<Eigen::Index>(s.coordinate),
                                   static_cast<Eigen::Index>(s.coordinate));
  if (std::abs(std::sqrt(sjj) - s.scale) > 1e-12 * s.scale) {
    throw Error(ErrorCode::NoAnalyticExpectation,
                fmt::format("query '{}' was standardized with a different sigma", q.id));
  }
  return analytic_expectation(s.kind, s.coordinate, s.sign, theta, s.truncation);
}

Oracle::Oracle(OracleConfig cfg) : cfg_(cfg) { cfg_.validate(); }

OracleResponse Oracle::query(const BoundedQuery& q) {
  if (used_ >= cfg_.budget) {
    throw Error(ErrorCode::BudgetExceeded,
                fmt::format("query '{}' would be number {} with a budget of {}", q.id, used_ + 1,
                            cfg_.budget));
  }
  ++used_;
  return respond(q);
}

EmpiricalOracle::EmpiricalOracle(const Dataset& data, OracleConfig cfg)
    : Oracle(cfg), data_(&data) {
  if (data.size() == 0) throw Error(ErrorCode::TooFewSamples, "empirical oracle needs data");
}

OracleResponse EmpiricalOracle::respond(const BoundedQuery& q) {
  const auto& X = data_->covariates;
  const auto d = static_cast<std::size_t>(X.cols());
  double sum = 0.0;
  for (std::size_t i = 0; i < data_->size(); ++i) {
    const double* row = X.data() + i * d;
    sum += q.evaluate(data_->labels[i], std::span<const double>(row, d));
  }
  const double mean = sum / static_cast<double>(data_->size());
  const double plug_in = std::clamp(mean, -q.bound, q.bound);
  return OracleResponse{mean, tolerance(q, plug_in, config()), q.id};
}

WorstCaseOracle::WorstCaseOracle(ModelParams theta, SignPolicy policy, OracleConfig cfg)
    : Oracle(cfg), theta_(std::move(theta)), policy_(policy) {}

OracleResponse WorstCaseOracle::respond(const BoundedQuery& q) {
  const double expectation = analytic_expectation(q, theta_);
  const double tau = tolerance(q, expectation, config());
  double sign = 1.0;
  switch (policy_) {
    case SignPolicy::Plus: sign = 1.0; break;
    case SignPolicy::Minus: sign = -1.0; break;
    case SignPolicy::Alternating: sign = (answered_ % 2 == 0) ? 1.0 : -1.0; break;
  }
  ++answered_;
  return OracleResponse{expectation + sign * tau, tau, q.id};
}

AdversarialPairOracle::AdversarialPairOracle(ModelParams theta0, ModelParams theta1, Hypothesis truth,
                                             OracleConfig cfg)
    : Oracle(cfg), theta0_(std::move(theta0)), theta1_(std::move(theta1)), truth_(truth) {
  if (theta0_.dim() != theta1_.dim()) throw Error(ErrorCode::DimMismatch, "models differ in dimension");
}

std::size_t AdversarialPairOracle::flagged_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(report_.begin(), report_.end(), [](const auto& e) { return e.flagged; }));
}

OracleResponse AdversarialPairOracle::respond(const BoundedQuery& q) {
  const double e0 = analytic_expectation(q, theta0_);
  const double e1 = analytic_expectation(q, theta1_);
  const double gap = std::abs(e1 - e0);
  const double tau = tolerance(q, e1, config());
  const bool flagged = gap > tau;
  report_.push_back(DistinguishabilityEntry{q.id, gap, tau, flagged});
  const double value = (!flagged || truth_ == Hypothesis::Null) ? e0 : e1;
  return OracleResponse{value, tau, q.id};
}

std::vector<DistinguishabilityEntry> distinguishability_report(
    const ModelParams& theta0, const ModelParams& theta1, const std::vector<BoundedQuery>& queries,
    const OracleConfig& cfg) {
  OracleConfig unlimited = cfg;
  unlimited.budget = std::max(cfg.budget, queries.size());
  AdversarialPairOracle oracle(theta0, theta1, Hypothesis::Null, unlimited);
  for (const auto& q : queries) oracle.query(q);
  return oracle.report();
}

void write_report_csv(std::ostream& os, const std::vector<DistinguishabilityEntry>& report) {
  os << "query_id,gap,tolerance,flagged\n";
  for (const auto& e : report) {
    os << fmt::format("{},{},{},{}\n", e.query_id, e.gap, e.tolerance, e.flagged ? 1 : 0);
  }
}

}  // namespace wsl
