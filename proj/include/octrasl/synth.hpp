#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "octrasl/image.hpp"
#include "octrasl/metrics.hpp"
#include "octrasl/transform.hpp"

namespace octrasl {

/// Synthetic test objects.
///   ramp   - linear intensity ramp
///   blobs  - Gaussian blobs on a dark background
///   layers - horizontal bands with smooth wavy boundaries, loosely shaped
///            like retinal strata, with a few small spots for horizontal texture
enum class PhantomKind { ramp, blobs, layers };

std::string_view to_string(PhantomKind kind);
PhantomKind parse_phantom_kind(std::string_view name);

/// A Gaussian spot that is present only in some frames of the stack.
struct TransientFeature {
  double x = 0.0;  ///< center in clean-frame pixel coordinates
  double y = 0.0;
  double sigma = 3.0;
  double contrast = 0.5;
  std::vector<int> frames;
};

/// The generator works in the log-compressed intensity domain, where speckle
/// is modelled as additive Gaussian noise.
struct SynthSpec {
  PhantomKind base = PhantomKind::layers;
  int width = 128;
  int height = 128;
  int n = 10;
  double max_translation = 3.0;   ///< px, per component
  double max_rotation = 2.0;      ///< degrees
  double speckle_sigma = 0.05;
  double sparse_fraction = 0.01;  ///< fraction of pixels replaced by outliers
  std::uint64_t seed = 1;
  std::vector<TransientFeature> transient;

  void validate() const;
};

struct GroundTruth {
  /// Rigid transforms that bring each frame back onto the clean phantom.
  std::vector<TransformParams> taus;
  Image clean;
  std::vector<Mask> sparse_supports;
  std::vector<Roi> rois;
};

struct SynthStack {
  ImageStack stack;
  GroundTruth truth;
};

/// Renders the noiseless phantom on a width x height grid.
Image render_phantom(PhantomKind kind, int width, int height);

/// ROI layout matching `render_phantom`: one background ROI and five feature
/// ROIs (for blobs and ramp, a best-effort layout).
std::vector<Roi> phantom_rois(PhantomKind kind, int width, int height);

/// Deterministic in the seed. Motion and noise use separate random streams, so
/// changing noise settings keeps the same motions.
SynthStack synth_stack(const SynthSpec& spec);

}  // namespace octrasl
