#include "octrasl/error.hpp"

#include <cmath>

namespace octrasl {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::invalid_transform: return "invalid-transform";
    case ErrorKind::degenerate_image: return "degenerate-image";
    case ErrorKind::ill_conditioned_jacobian: return "ill-conditioned-jacobian";
    case ErrorKind::excessive_motion: return "excessive-motion";
    case ErrorKind::masked_pixel: return "masked-pixel";
    case ErrorKind::invalid_roi: return "invalid-roi";
    case ErrorKind::degenerate_background: return "degenerate-background";
    case ErrorKind::undefined_snr: return "undefined-snr";
    case ErrorKind::io: return "io";
    case ErrorKind::invalid_manifest: return "invalid-manifest";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(message), kind_(kind) {}

void rethrow_with_context(const Error& e, std::string_view context) {
  throw Error(e.kind(), std::string(context) + ": " + e.what());
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::invalid_input, std::string(what) + " contains non-finite entries");
  }
}

}  // namespace octrasl
