#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "wsl/error.hpp"
#include "wsl/rng.hpp"

namespace wsl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Samples stored one per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Covariances with condition number above this are rejected as degenerate.
inline constexpr double kMaxConditionNumber = 1e12;
inline constexpr double kSymmetryTolerance = 1e-12;

/// Checks the invariants of theta = (mu0, mu1, sigma, alpha) without
/// constructing anything. Returns the first violated invariant.
std::optional<Error> validate_params(const Vector& mu0, const Vector& mu1,
                                     const Matrix& sigma, double alpha);

/// Full model parameter of the corrupted-label Gaussian mixture. Immutable;
/// the Cholesky factor of sigma is computed once at construction.
class ModelParams {
 public:
  /// Throws Error on any invariant violation.
  ModelParams(Vector mu0, Vector mu1, Matrix sigma, double alpha);

  /// Null model with mu0 = mu1 = mu.
  static ModelParams null_model(const Vector& mu, const Matrix& sigma, double alpha);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mu0_.size()); }
  const Vector& mu0() const noexcept { return mu0_; }
  const Vector& mu1() const noexcept { return mu1_; }
  const Matrix& sigma() const noexcept { return sigma_; }
  double alpha() const noexcept { return alpha_; }
  const Matrix& cholesky_factor() const noexcept { return chol_; }
  double lambda_min() const noexcept { return lambda_min_; }
  double lambda_max() const noexcept { return lambda_max_; }
  double condition_number() const noexcept { return lambda_max_ / lambda_min_; }
  bool is_null() const { return mu0_ == mu1_; }

 private:
  Vector mu0_;
  Vector mu1_;
  Matrix sigma_;
  double alpha_;
  Matrix chol_;
  double lambda_min_ = 1.0;
  double lambda_max_ = 1.0;
};

/// (mu0 - mu1)^T sigma^{-1} (mu0 - mu1).
double snr(const ModelParams& theta);

/// A member of the restricted sparse alternative family: v = beta on the
/// support, zero elsewhere.
struct AltSpec {
  std::size_t d = 0;
  std::vector<std::size_t> support;
  double beta = 0.0;

  void validate() const;
};

/// theta = (-v/2, +v/2, I_d, alpha).
ModelParams make_restricted_alternative(const AltSpec& spec, double alpha);

/// Uniformly random s-subset of {0..d-1}, sorted.
std::vector<std::size_t> random_support(std::size_t d, std::size_t s, Stream& stream);

struct Dataset {
  std::vector<std::uint8_t> labels;
  RowMatrix covariates;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(covariates.cols()); }
};

/// n i.i.d. draws: Z ~ Bernoulli(1/2), X | Z ~ N(mu_Z, sigma), and the observed
/// label Y equals Z with probability (1 + alpha) / 2 and 1 - Z otherwise.
Dataset sample_dataset(const ModelParams& theta, std::size_t n, Stream& stream);

}  // namespace wsl
