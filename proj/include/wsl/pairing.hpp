#pragma once

#include <cstddef>

#include "wsl/model.hpp"

namespace wsl {

/// Symmetric M with M * sigma * M = I, via the eigendecomposition of sigma.
Matrix sym_inverse_sqrt(const Matrix& sigma);

/// w_i = sigma^{-1/2} (x_{2i} - x_{2i-1}) over consecutive pairs in dataset
/// order; a trailing odd sample is dropped and labels are ignored.
RowMatrix compute_w_samples(const Dataset& data, const Matrix& sigma);

/// Splits by observed label, truncates both classes (from the tail) to the
/// smaller class size m, and returns u_i = x^(1)_i - x^(0)_i for i < m.
RowMatrix compute_u_samples(const Dataset& data);

struct PairedSamples {
  RowMatrix w;
  RowMatrix u;

  std::size_t n_w() const noexcept { return static_cast<std::size_t>(w.rows()); }
  std::size_t n_u() const noexcept { return static_cast<std::size_t>(u.rows()); }
};

PairedSamples make_paired_samples(const Dataset& data, const Matrix& sigma);

}  // namespace wsl
