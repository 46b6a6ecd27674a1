#include "wsl/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <fmt/format.h>

namespace wsl {

std::optional<Error> validate_params(const Vector& mu0, const Vector& mu1,
                                     const Matrix& sigma, double alpha) {
  if (mu0.size() == 0 || mu0.size() != mu1.size() || sigma.rows() != mu0.size() ||
      sigma.cols() != mu0.size()) {
    return Error(ErrorCode::DimMismatch,
                 fmt::format("mu0 has {} entries, mu1 {}, sigma is {}x{}", mu0.size(),
                             mu1.size(), sigma.rows(), sigma.cols()));
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    return Error(ErrorCode::AlphaRange, fmt::format("alpha = {} is outside [0, 1]", alpha));
  }
  if (!mu0.allFinite() || !mu1.allFinite() || !sigma.allFinite()) {
    return Error(ErrorCode::InvalidArgument, "non-finite entry in model parameters");
  }
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    return Error(ErrorCode::NonSPD, "sigma is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) {
    return Error(ErrorCode::NonSPD, fmt::format("smallest eigenvalue of sigma is {}", lo));
  }
  if (hi / lo > kMaxConditionNumber) {
    return Error(ErrorCode::NonSPD,
                 fmt::format("sigma is degenerate (condition number {:.3g})", hi / lo));
  }
  return std::nullopt;
}

ModelParams::ModelParams(Vector mu0, Vector mu1, Matrix sigma, double alpha)
    : mu0_(std::move(mu0)), mu1_(std::move(mu1)), sigma_(std::move(sigma)), alpha_(alpha) {
  if (auto err = validate_params(mu0_, mu1_, sigma_, alpha_)) throw *err;
  // Symmetrize exactly so downstream factorizations see a symmetric matrix.
  sigma_ = 0.5 * (sigma_ + sigma_.transpose()).eval();
  Eigen::LLT<Matrix> llt(sigma_);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NonSPD, "Cholesky factorization failed");
  chol_ = llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_, Eigen::EigenvaluesOnly);
  lambda_min_ = eig.eigenvalues().minCoeff();
  lambda_max_ = eig.eigenvalues().maxCoeff();
}

ModelParams ModelParams::null_model(const Vector& mu, const Matrix& sigma, double alpha) {
  return ModelParams(mu, mu, sigma, alpha);
}

double snr(const ModelParams& theta) {
  const Vector delta = theta.mu0() - theta.mu1();
  const Vector z = theta.cholesky_factor().triangularView<Eigen::Lower>().solve(delta);
  return z.squaredNorm();
}

void AltSpec::validate() const {
  if (support.empty()) throw Error(ErrorCode::EmptySupport, "support must contain at least one index");
  if (support.size() > d) {
    throw Error(ErrorCode::InvalidSupport,
                fmt::format("support size {} exceeds dimension {}", support.size(), d));
  }
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (support[i] >= d) {
      throw Error(ErrorCode::InvalidSupport, fmt::format("index {} out of range", support[i]));
    }
    if (i > 0 && support[i] <= support[i - 1]) {
      throw Error(ErrorCode::InvalidSupport, "support must be sorted and distinct");
    }
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("beta = {} must be finite and >= 0", beta));
  }
}

ModelParams make_restricted_alternative(const AltSpec& spec, double alpha) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.d);
  Vector v = Vector::Zero(d);
  for (std::size_t j : spec.support) v[static_cast<Eigen::Index>(j)] = spec.beta;
  return ModelParams(-0.5 * v, 0.5 * v, Matrix::Identity(d, d), alpha);
}

std::vector<std::size_t> random_support(std::size_t d, std::size_t s, Stream& stream) {
  if (s == 0 || s > d) {
    throw Error(ErrorCode::InvalidSupport, fmt::format("cannot draw {} of {} indices", s, d));
  }
  std::vector<std::size_t> pool(d);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < s; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(stream.below(d - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(s);
  std::sort(pool.begin(), pool.end());
  return pool;
}

Dataset sample_dataset(const ModelParams& theta, std::size_t n, Stream& stream) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "sample count must be >= 1");
  const auto d = static_cast<Eigen::Index>(theta.dim());
  const double keep = 0.5 * (1.0 + theta.alpha());

  Dataset out;
  out.labels.resize(n);
  std::vector<std::uint8_t> latent(n);
  RowMatrix noise(static_cast<Eigen::Index>(n), d);
  for (std::size_t i = 0; i < n; ++i) {
    const int z = stream.bit();
    for (Eigen::Index j = 0; j < d; ++j) noise(static_cast<Eigen::Index>(i), j) = stream.normal();
    const bool same = stream.uniform() < keep;
    latent[i] = static_cast<std::uint8_t>(z);
    out.labels[i] = static_cast<std::uint8_t>(same ? z : 1 - z);
  }

  const Matrix& L = theta.cholesky_factor();
  if (L.isIdentity(0.0)) {
    out.covariates = std::move(noise);
  } else {
    out.covariates = noise * L.transpose().triangularView<Eigen::Upper>();
  }
  const Eigen::RowVectorXd m0 = theta.mu0().transpose();
  const Eigen::RowVectorXd m1 = theta.mu1().transpose();
  for (std::size_t i = 0; i < n; ++i) {
    out.covariates.row(static_cast<Eigen::Index>(i)) += latent[i] ? m1 : m0;
  }
  return out;
}

}  // namespace wsl
