#pragma once

#include <optional>
#include <vector>

#include "octrasl/error.hpp"

namespace octrasl {

/// Settings of the inexact augmented Lagrange multiplier solver.
///
/// Unset `lambda` means 1/sqrt(max(rows, cols)); unset `mu0` means
/// 1.25 / ||D||_2. The penalty grows by `rho` per iteration and is capped at
/// `mu_max_factor * mu0`.
struct RpcaConfig {
  std::optional<double> lambda;
  double tol = 1e-7;
  int max_iters = 500;
  std::optional<double> mu0;
  /// Faster growth reaches feasibility before optimality: at 1.5, most rank-5,
  /// 10%-outlier 50x50 problems stop about 1% away from the optimum.
  double rho = 1.05;
  double mu_max_factor = 1e7;

  void validate() const;
};

struct RpcaResult {
  Matrix low_rank;
  Matrix sparse;
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  /// ||D - L - S||_F / ||D||_F after every iteration.
  std::vector<double> residual_history;
};

double default_lambda(Index rows, Index cols);

/// Splits D into low-rank L plus sparse S by minimizing ||L||_* + lambda ||S||_1
/// subject to L + S = D. Running out of iterations is reported through
/// `converged`, not thrown.
RpcaResult rpca_ialm(const Matrix& d, const RpcaConfig& cfg = {});

/// ||L||_* + lambda ||S||_1
double rpca_objective(const Matrix& low_rank, const Matrix& sparse, double lambda);

}  // namespace octrasl
