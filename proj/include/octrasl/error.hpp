#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace octrasl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class ErrorKind {
  invalid_input,
  numerical,
  invalid_transform,
  degenerate_image,
  ill_conditioned_jacobian,
  excessive_motion,
  masked_pixel,
  invalid_roi,
  degenerate_background,
  undefined_snr,
  io,
  invalid_manifest,
  dimension_mismatch,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (and the CLI)
/// can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Rethrows `e` with `context` prepended, keeping its kind.
[[noreturn]] void rethrow_with_context(const Error& e, std::string_view context);

void require_finite(const Matrix& m, std::string_view what);

}  // namespace octrasl
