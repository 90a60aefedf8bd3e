#pragma once

#include <vector>

#include "octrasl/image.hpp"
#include "octrasl/transform.hpp"

namespace octrasl {

struct BaselineResult {
  ImageStack aligned;
  std::vector<Mask> valid;
  /// Integer translations mapping each image onto the first one.
  std::vector<TransformParams> taus;
};

/// Registers every image to the first by exhaustive search of the integer
/// shift with the highest normalized cross-correlation over the overlap,
/// within +-`max_shift_fraction` of the frame size on each axis.
BaselineResult baseline_translation_align(const ImageStack& stack, double max_shift_fraction = 0.1);

}  // namespace octrasl
