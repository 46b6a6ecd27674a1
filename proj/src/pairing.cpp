#include "wsl/pairing.hpp"

#include <vector>

#include <fmt/format.h>

namespace wsl {

Matrix sym_inverse_sqrt(const Matrix& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw Error(ErrorCode::DimMismatch, "sigma must be a non-empty square matrix");
  }
  const Matrix sym = 0.5 * (sigma + sigma.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::NonSPD, "eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  if (!(lambda.minCoeff() > 0.0)) {
    throw Error(ErrorCode::NonSPD,
                fmt::format("smallest eigenvalue of sigma is {}", lambda.minCoeff()));
  }
  const Matrix& Q = eig.eigenvectors();
  Matrix out = Q * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * Q.transpose();
  return 0.5 * (out + out.transpose());
}

RowMatrix compute_w_samples(const Dataset& data, const Matrix& sigma) {
  const std::size_t n = data.size();
  if (n < 2) throw Error(ErrorCode::TooFewSamples, fmt::format("need >= 2 samples, got {}", n));
  if (static_cast<std::size_t>(sigma.rows()) != data.dim()) {
    throw Error(ErrorCode::DimMismatch, "sigma does not match covariate dimension");
  }
  const auto pairs = static_cast<Eigen::Index>(n / 2);
  const auto d = static_cast<Eigen::Index>(data.dim());
  RowMatrix diff(pairs, d);
  for (Eigen::Index i = 0; i < pairs; ++i) {
    diff.row(i) = data.covariates.row(2 * i + 1) - data.covariates.row(2 * i);
  }
  if (sigma.isIdentity(0.0)) return diff;
  // Rows are transposed samples: (M x)^T = x^T M for symmetric M.
  return diff * sym_inverse_sqrt(sigma);
}

RowMatrix compute_u_samples(const Dataset& data) {
  std::vector<Eigen::Index> zeros;
  std::vector<Eigen::Index> ones;
  for (std::size_t i = 0; i < data.size(); ++i) {
    (data.labels[i] ? ones : zeros).push_back(static_cast<Eigen::Index>(i));
  }
  if (zeros.empty() || ones.empty()) {
    throw Error(ErrorCode::OneClassMissing,
                fmt::format("class sizes are {} and {}", zeros.size(), ones.size()));
  }
  const std::size_t m = std::min(zeros.size(), ones.size());
  RowMatrix u(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(data.dim()));
  for (std::size_t i = 0; i < m; ++i) {
    u.row(static_cast<Eigen::Index>(i)) =
        data.covariates.row(ones[i]) - data.covariates.row(zeros[i]);
  }
  return u;
}

PairedSamples make_paired_samples(const Dataset& data, const Matrix& sigma) {
  return PairedSamples{compute_w_samples(data, sigma), compute_u_samples(data)};
}

}  // namespace wsl
