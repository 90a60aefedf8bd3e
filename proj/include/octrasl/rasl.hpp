#pragma once

#include <optional>
#include <span>
#include <vector>

#include "octrasl/error.hpp"
#include "octrasl/image.hpp"
#include "octrasl/transform.hpp"

namespace octrasl {

/// Settings of the linearized inner solve. Unset `mu0` means 1.25 / ||Dw||_2.
struct InnerSettings {
  double tol = 1e-7;
  int max_iters = 500;
  std::optional<double> mu0;
  double rho = 1.5;
  double mu_max_factor = 1e7;

  void validate() const;
};

struct RaslConfig {
  TransformKind model = TransformKind::rigid;
  /// Unset means 1/sqrt(pixels).
  std::optional<double> lambda;
  InnerSettings inner;
  int outer_max_iters = 50;
  /// Stop once max_i ||dtau_i|| drops below this (pixels / radians / unitless scale).
  double outer_tol = 1e-3;
  /// Gaussian blur (px) applied to the copies used for estimating the transforms.
  /// Resampling white noise at fractional offsets lowers its variance, which biases
  /// the objective toward misalignment; blurring first removes that bias. The final
  /// decomposition always uses the unblurred input.
  double smoothing = 1.0;
  /// Remove the common (mean) part of each update so the whole stack does not drift.
  bool fix_gauge = true;

  void validate() const;
};

struct OuterRecord {
  int iteration = 0;
  double objective = 0.0;  ///< ||L||_* + lambda ||S||_1 of the inner solution
  double residual = 0.0;   ///< relative feasibility residual of the inner solve
  double max_delta = 0.0;  ///< max_i ||dtau_i||
  int inner_iterations = 0;
  double valid_fraction = 0.0;
};

struct RaslResult {
  Frame frame;
  double lambda = 0.0;
  /// pixels x n, de-normalized to the input intensity scale; zero off `valid`.
  Matrix low_rank;
  Matrix sparse;
  /// Warped input at the final transforms, masked to `valid`, input scale.
  Matrix aligned;
  Vector column_norms;
  Mask valid;
  std::vector<TransformParams> taus;
  int outer_iters = 0;
  bool converged = false;
  std::vector<OuterRecord> history;
};

struct LagrangianState {
  Matrix multiplier;
  double mu = 0.0;
};

struct NormalizedColumns {
  Matrix values;
  Vector norms;
};

/// Divides each column by its l2 norm. Throws degenerate-image naming the first
/// column whose norm is at most 1e-12.
NormalizedColumns normalize_columns(const Matrix& d);

/// Dual-feasible start Y = Dw / max(||Dw||_2, ||Dw||_inf / lambda) and
/// mu = mu0 (default 1.25 / ||Dw||_2).
LagrangianState initial_lagrangian(const Matrix& dw, double lambda, const InnerSettings& settings);

struct InnerResult {
  Matrix low_rank;
  Matrix sparse;
  std::vector<Vector> deltas;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Solves min ||L||_* + lambda ||S||_1 s.t. Dw + sum_i J_i dtau_i e_i^T = L + S
/// with the inexact ALM. Each J_i is orthonormalized by QR before the solve and
/// the step is mapped back to parameter units afterwards. An all-zero block is
/// held fixed (dtau_i = 0).
InnerResult rasl_inner(const Matrix& dw, std::span<const JacobianBlock> jacobians, double lambda,
                       LagrangianState state, const InnerSettings& settings);

/// Batch alignment of a stack from identity transforms: alternate
/// linearization around the current transforms with the inner solve until the
/// largest parameter step falls below `outer_tol`.
RaslResult rasl_align(const ImageStack& stack, const RaslConfig& cfg);

}  // namespace octrasl
