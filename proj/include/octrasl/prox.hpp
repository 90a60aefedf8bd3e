#pragma once

#include "octrasl/error.hpp"

namespace octrasl {

/// Entrywise shrinkage sign(x) * max(|x| - t, 0); the proximal map of t*||.||_1.
Matrix soft_threshold(const Matrix& x, double t);

struct SvtResult {
  Matrix value;
  Index effective_rank = 0;
};

/// Singular value thresholding, the proximal map of t*||.||_*.
///
/// Computes a thin SVD X = U S V^T and returns U max(S - t, 0) V^T. The
/// effective rank counts singular values strictly above t, where values below
/// 1e-12 times the largest one are treated as zero.
SvtResult svt(const Matrix& x, double t);

/// Sum of singular values.
double nuclear_norm(const Matrix& x);

/// Largest singular value.
double spectral_norm(const Matrix& x);

}  // namespace octrasl
