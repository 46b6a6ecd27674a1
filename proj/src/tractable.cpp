#include "wsl/tractable.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

namespace wsl {

void TractableConfig::validate() const {
  if (d < 2) throw Error(ErrorCode::InvalidArgument, "tractable tests need d >= 2");
  if (!(R > 0.0)) throw Error(ErrorCode::InvalidArgument, "R must be positive");
  if (!(C > 1.0)) throw Error(ErrorCode::InvalidArgument, "C must exceed 1");
  if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  if (xi != 0.0 && !(xi > 0.0 && xi < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "xi must lie in (0, 1)");
  }
}

double TractableConfig::truncation() const {
  return R * std::sqrt(std::log(static_cast<double>(d)));
}

double TractableConfig::bar_tau1() const {
  const double logd = std::log(static_cast<double>(d));
  return R * R * logd * std::sqrt(std::log(4.0 * static_cast<double>(d) / tail()) / n);
}

double TractableConfig::bar_tau2() const {
  return truncation() * std::sqrt(std::log(4.0 * static_cast<double>(d) / tail()) / n);
}

OracleConfig TractableConfig::oracle_config() const {
  OracleConfig cfg;
  cfg.n = n;
  cfg.xi = tail();
  cfg.eta = std::log(4.0 * static_cast<double>(d));
  cfg.budget = 4 * d;
  return cfg;
}

std::vector<BoundedQuery> build_queries(const TractableConfig& cfg, const Matrix& sigma) {
  cfg.validate();
  if (static_cast<std::size_t>(sigma.rows()) != cfg.d || sigma.cols() != sigma.rows()) {
    throw Error(ErrorCode::DimMismatch, "sigma does not match the configured dimension");
  }
  const double L = cfg.truncation();
  std::vector<double> scale(cfg.d);
  for (std::size_t j = 0; j < cfg.d; ++j) {
    const double sjj = sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    if (!(sjj > 0.0)) {
      throw Error(ErrorCode::NonPositiveDiagonal, fmt::format("sigma[{0},{0}] = {1}", j, sjj));
    }
    scale[j] = std::sqrt(sjj);
  }

  std::vector<BoundedQuery> out;
  out.reserve(4 * cfg.d);
  for (std::size_t j = 0; j < cfg.d; ++j) {
    out.push_back(make_shaped_query(fmt::format("mean_{}", j),
                                    QueryShape{QueryKind::CoordinateMean, j, 1, scale[j], L}));
  }
  for (std::size_t j = 0; j < cfg.d; ++j) {
    out.push_back(make_shaped_query(fmt::format("second_{}", j),
                                    QueryShape{QueryKind::CoordinateSecondMoment, j, 1, scale[j], L}));
  }
  for (std::size_t j = 0; j < cfg.d; ++j) {
    for (int sign : {1, -1}) {
      out.push_back(make_shaped_query(fmt::format("label_{}{}", sign > 0 ? '+' : '-', j),
                                      QueryShape{QueryKind::SignedLabelMean, j, sign, scale[j], L}));
    }
  }
  return out;
}

TestResult bar_phi1(std::span<const double> z_mean, std::span<const double> z_sq,
                    const TractableConfig& cfg) {
  if (z_mean.size() != z_sq.size() || z_mean.empty()) {
    throw Error(ErrorCode::InvalidArgument, "bar_phi1 needs d matching response pairs");
  }
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t j = 0; j < z_mean.size(); ++j) {
    const double v = z_sq[j] - z_mean[j] * z_mean[j];
    if (v > best) {
      best = v;
      arg = j;
    }
  }
  return make_result(best, cfg.C * cfg.bar_tau1(), Witness{{arg}, 0});
}

TestResult bar_phi2(std::span<const double> z_signed, const TractableConfig& cfg) {
  if (z_signed.empty() || z_signed.size() % 2 != 0) {
    throw Error(ErrorCode::InvalidArgument, "bar_phi2 needs 2d signed responses");
  }
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t k = 0; k < z_signed.size(); ++k) {
    if (z_signed[k] > best) {
      best = z_signed[k];
      arg = k;
    }
  }
  return make_result(best, 2.0 * cfg.bar_tau2(), Witness{{arg / 2}, arg % 2 == 0 ? 1 : -1});
}

TractableResult decide_from_transcript(std::vector<TranscriptEntry> transcript,
                                       const TractableConfig& cfg) {
  const std::size_t d = cfg.d;
  if (transcript.size() != 4 * d) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("transcript has {} entries, expected {}", transcript.size(), 4 * d));
  }
  std::vector<double> z(transcript.size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = transcript[k].response;
  const std::span<const double> all(z);
  TractableResult out;
  out.phi1 = bar_phi1(all.subspan(0, d), all.subspan(d, d), cfg);
  out.phi2 = bar_phi2(all.subspan(2 * d, 2 * d), cfg);
  out.reject = out.phi1.reject || out.phi2.reject;
  out.transcript = std::move(transcript);
  return out;
}

TractableResult run_tractable_test(Oracle& oracle, const TractableConfig& cfg, const Matrix& sigma) {
  const auto queries = build_queries(cfg, sigma);
  std::vector<TranscriptEntry> transcript;
  transcript.reserve(queries.size());
  for (const auto& q : queries) {
    const OracleResponse r = oracle.query(q);
    transcript.push_back(TranscriptEntry{r.query_id, r.value, r.tolerance_used});
  }
  return decide_from_transcript(std::move(transcript), cfg);
}

void write_transcript_csv(std::ostream& os, const std::vector<TranscriptEntry>& transcript) {
  os << "query_id,response,tolerance\n";
  for (const auto& e : transcript) {
    os << fmt::format("{},{},{}\n", e.query_id, e.response, e.tolerance);
  }
}

}  // namespace wsl
