#include "wsl/exhaustive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "wsl/pairing.hpp"

namespace wsl {

Thresholds default_thresholds(std::size_t d, std::size_t s, std::size_t n, const Matrix& sigma) {
  if (n == 0 || s == 0 || s > d) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("thresholds need n >= 1 and 1 <= s <= d (d={}, s={}, n={})", d, s, n));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  if (!(lo > 0.0)) throw Error(ErrorCode::NonSPD, "sigma is not positive definite");
  Thresholds t;
  t.kappa = eig.eigenvalues().maxCoeff() / lo;
  const double dd = static_cast<double>(d);
  const double ss = static_cast<double>(s);
  const double nn = static_cast<double>(n);
  t.tau1 = t.kappa * std::sqrt(ss * std::log(std::exp(1.0) * dd / ss) / nn);
  t.tau2 = std::sqrt(8.0 * std::log(dd) / nn);
  return t;
}

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    // r * (n - k + i) / i is exact at every step; guard the multiplication.
    const std::uint64_t num = n - k + i;
    const std::uint64_t g = std::gcd(r, static_cast<std::uint64_t>(i));
    const std::uint64_t r_red = r / g;
    const std::uint64_t den = i / g;
    const std::uint64_t num_red = num / den;
    if (r_red > std::numeric_limits<std::uint64_t>::max() / num_red) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    r = r_red * num_red;
  }
  return r;
}

namespace {

// Lexicographic unranking of s-subsets of {0..d-1}.
std::vector<std::size_t> unrank_combination(std::uint64_t rank, std::size_t d, std::size_t s) {
  std::vector<std::size_t> out(s);
  std::size_t c = 0;
  for (std::size_t i = 0; i < s; ++i) {
    for (;; ++c) {
      const std::uint64_t count = binomial(d - c - 1, s - i - 1);
      if (rank < count) break;
      rank -= count;
    }
    out[i] = c++;
  }
  return out;
}

bool next_combination(std::vector<std::size_t>& comb, std::size_t d) {
  const std::size_t s = comb.size();
  std::size_t i = s;
  while (i > 0) {
    --i;
    if (comb[i] < d - s + i) {
      ++comb[i];
      for (std::size_t j = i + 1; j < s; ++j) comb[j] = comb[j - 1] + 1;
      return true;
    }
  }
  return false;
}

class SupportEvaluator {
 public:
  SupportEvaluator(const Matrix& scatter, const Matrix& metric, std::size_t s)
      : scatter_(scatter), metric_(metric), s_(s), sub_s_(s, s), sub_b_(s, s) {}

  double operator()(const std::vector<std::size_t>& S) {
    if (s_ == 1) {
      const auto j = static_cast<Eigen::Index>(S[0]);
      return scatter_(j, j) / metric_(j, j);
    }
    if (s_ == 2) {
      const auto i = static_cast<Eigen::Index>(S[0]);
      const auto j = static_cast<Eigen::Index>(S[1]);
      const double a = scatter_(i, i), b = scatter_(i, j), c = scatter_(j, j);
      const double p = metric_(i, i), q = metric_(i, j), r = metric_(j, j);
      const double det_b = p * r - q * q;
      const double det_s = a * c - b * b;
      const double trace = a * r + c * p - 2.0 * b * q;
      const double disc = std::max(0.0, trace * trace - 4.0 * det_b * det_s);
      return (trace + std::sqrt(disc)) / (2.0 * det_b);
    }
    for (std::size_t r = 0; r < s_; ++r) {
      for (std::size_t c = 0; c < s_; ++c) {
        const auto ri = static_cast<Eigen::Index>(S[r]);
        const auto ci = static_cast<Eigen::Index>(S[c]);
        sub_s_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = scatter_(ri, ci);
        sub_b_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = metric_(ri, ci);
      }
    }
    Eigen::LLT<Matrix> llt(sub_b_);
    Matrix reduced = llt.matrixL().solve(sub_s_);
    reduced = llt.matrixL().solve(reduced.transpose()).eval();
    reduced = 0.5 * (reduced + reduced.transpose()).eval();
    eig_.compute(reduced, Eigen::EigenvaluesOnly);
    return eig_.eigenvalues().maxCoeff();
  }

 private:
  const Matrix& scatter_;
  const Matrix& metric_;
  std::size_t s_;
  Matrix sub_s_;
  Matrix sub_b_;
  Eigen::SelfAdjointEigenSolver<Matrix> eig_;
};

struct ChunkBest {
  double value = -std::numeric_limits<double>::infinity();
  std::uint64_t rank = 0;
  std::vector<std::size_t> support;
};

ChunkBest scan_range(const Matrix& scatter, const Matrix& metric, std::size_t d, std::size_t s,
                     std::uint64_t begin, std::uint64_t end) {
  ChunkBest best;
  if (begin >= end) return best;
  SupportEvaluator eval(scatter, metric, s);
  std::vector<std::size_t> comb = unrank_combination(begin, d, s);
  for (std::uint64_t rank = begin; rank < end; ++rank) {
    const double v = eval(comb);
    if (v > best.value) {
      best.value = v;
      best.rank = rank;
      best.support = comb;
    }
    if (rank + 1 < end) next_combination(comb, d);
  }
  return best;
}

}  // namespace

Phi1Value phi1_statistic(const RowMatrix& w, const Matrix& sigma, std::size_t s,
                         const Phi1Options& options) {
  const auto n = w.rows();
  const auto d = static_cast<std::size_t>(w.cols());
  if (n < 1) throw Error(ErrorCode::TooFewSamples, "phi1 needs at least one w sample");
  if (s < 1 || s > d) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("sparsity {} outside [1, {}]", s, d));
  }
  if (static_cast<std::size_t>(sigma.rows()) != d || sigma.cols() != sigma.rows()) {
    throw Error(ErrorCode::DimMismatch, "sigma does not match w dimension");
  }
  const std::uint64_t total = binomial(d, s);
  if (total > options.max_supports) {
    throw Error(ErrorCode::CombinatorialBudgetExceeded,
                fmt::format("C({}, {}) = {} supports exceeds the budget of {}; reduce s or d",
                            d, s, total == std::numeric_limits<std::uint64_t>::max()
                                      ? std::string("overflow")
                                      : std::to_string(total),
                            options.max_supports));
  }

  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NonSPD, "sigma is not positive definite");
  const Matrix precision = llt.solve(Matrix::Identity(sigma.rows(), sigma.cols()));
  const Matrix metric = precision + precision.transpose();  // 2 sigma^{-1}, exactly symmetric
  const Matrix y = w * precision;                             // rows (sigma^{-1} w_i)^T
  Matrix scatter = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  scatter.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose(), 1.0 / static_cast<double>(n));
  scatter = scatter.selfadjointView<Eigen::Lower>();

  const unsigned workers = std::max(1u, std::min<unsigned>(options.threads,
                                                           static_cast<unsigned>(std::min<std::uint64_t>(total, 64))));
  std::vector<ChunkBest> chunks(workers);
  if (workers == 1) {
    chunks[0] = scan_range(scatter, metric, d, s, 0, total);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t step = (total + workers - 1) / workers;
    for (unsigned t = 0; t < workers; ++t) {
      const std::uint64_t b = std::min<std::uint64_t>(total, step * t);
      const std::uint64_t e = std::min<std::uint64_t>(total, b + step);
      pool.emplace_back([&, t, b, e] { chunks[t] = scan_range(scatter, metric, d, s, b, e); });
    }
    for (auto& th : pool) th.join();
  }
  // Chunks cover increasing rank ranges, so strict '>' keeps the first maximizer.
  const ChunkBest* best = &chunks[0];
  for (const auto& c : chunks) {
    if (c.value > best->value) best = &c;
  }
  return Phi1Value{best->value, best->support};
}

Phi2Value phi2_statistic(const RowMatrix& u, const Matrix& sigma) {
  if (u.rows() < 1) throw Error(ErrorCode::TooFewSamples, "phi2 needs at least one u sample");
  if (sigma.rows() != u.cols()) throw Error(ErrorCode::DimMismatch, "sigma does not match u dimension");
  const Eigen::RowVectorXd mean = u.colwise().mean();
  Phi2Value out{-1.0, 0, 1};
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    const double sjj = sigma(j, j);
    if (!(sjj > 0.0)) throw Error(ErrorCode::NonPositiveDiagonal, fmt::format("sigma[{0},{0}] <= 0", j));
    const double v = std::abs(mean[j]) / std::sqrt(sjj);
    if (v > out.value) {
      out.value = v;
      out.index = static_cast<std::size_t>(j);
      out.sign = mean[j] < 0.0 ? -1 : 1;
    }
  }
  return out;
}

ExhaustiveResult run_exhaustive_test(const Dataset& data, const Matrix& sigma, std::size_t s,
                                     const Thresholds& thresholds, const Phi1Options& options) {
  // The quotient applies sigma^{-1} itself, so it gets the raw differences;
  // feeding whitened ones would only agree with this when sigma = I.
  const Matrix identity = Matrix::Identity(sigma.rows(), sigma.cols());
  const PairedSamples pairs = make_paired_samples(data, identity);
  const Phi1Value p1 = phi1_statistic(pairs.w, sigma, s, options);
  const Phi2Value p2 = phi2_statistic(pairs.u, sigma);
  ExhaustiveResult out;
  out.phi1 = make_result(p1.value, 1.0 + thresholds.tau1, Witness{p1.support, 0});
  out.phi2 = make_result(p2.value, thresholds.tau2, Witness{{p2.index}, p2.sign});
  out.reject = out.phi1.reject || out.phi2.reject;
  return out;
}

}  // namespace wsl
