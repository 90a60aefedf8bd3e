#include "octrasl/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/LU>

namespace octrasl {

namespace {

using Field = std::function<double(double, double)>;

constexpr double kPi = std::numbers::pi;

// Retina-like layout, in fractions of the frame.
constexpr std::array<double, 6> kBoundaries = {0.24, 0.38, 0.50, 0.62, 0.76, 0.90};
constexpr std::array<double, 7> kLayerLevels = {0.12, 0.70, 0.40, 0.85, 0.50, 0.75, 0.35};
constexpr std::array<double, 5> kRoiCenters = {0.30, 0.70, 0.30, 0.70, 0.30};
constexpr double kRoiWidth = 0.16;
constexpr double kWaveAmplitude = 0.015;
constexpr double kWavePeriod = 0.40;
constexpr double kEdgeWidth = 0.8;  // px
constexpr double kRoiMargin = 4.0;  // px

// Vertical vessel shadows below the first boundary, clear of the ROI columns.
constexpr std::array<double, 5> kVessels = {0.07, 0.15, 0.50, 0.85, 0.93};
constexpr double kVesselSigma = 1.5;  // px at 128 px
constexpr double kVesselDepth = 0.5;

struct Spot {
  double fx, fy, sigma, amplitude;
};
constexpr std::array<Spot, 4> kLayerSpots = {{
    {0.30, 0.955, 2.5, -0.2},
    {0.50, 0.955, 2.5, 0.2},
    {0.70, 0.955, 2.5, -0.2},
    {0.90, 0.955, 2.5, 0.2},
}};

constexpr std::array<Spot, 6> kBlobs = {{
    {0.30, 0.30, 6.0, 0.60},
    {0.70, 0.28, 4.0, 0.50},
    {0.50, 0.55, 8.0, 0.45},
    {0.25, 0.72, 5.0, 0.55},
    {0.75, 0.70, 7.0, 0.40},
    {0.55, 0.85, 3.0, 0.65},
}};

double boundary_y(std::size_t k, double x, int width, int height) {
  return kBoundaries[k] * height +
         kWaveAmplitude * height * std::sin(2.0 * kPi * x / (kWavePeriod * width) + 0.7 * static_cast<double>(k));
}

double spot(const Spot& s, double x, double y, int width, int height) {
  // Spot sizes are given for a 128 px frame and scale with it.
  const double scale = std::min(width, height) / 128.0;
  const double sig = s.sigma * scale;
  const double dx = x - s.fx * (width - 1);
  const double dy = y - s.fy * (height - 1);
  return s.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * sig * sig));
}

Field phantom_field(PhantomKind kind, int width, int height) {
  switch (kind) {
    case PhantomKind::ramp:
      return [=](double x, double y) { return 0.2 + 0.4 * x / (width - 1) + 0.3 * y / (height - 1); };
    case PhantomKind::blobs:
      return [=](double x, double y) {
        double v = 0.15;
        for (const Spot& s : kBlobs) v += spot(s, x, y, width, height);
        return v;
      };
    case PhantomKind::layers:
      return [=](double x, double y) {
        double v = kLayerLevels[0];
        for (std::size_t k = 0; k < kBoundaries.size(); ++k) {
          const double t = (y - boundary_y(k, x, width, height)) / kEdgeWidth;
          v += (kLayerLevels[k + 1] - kLayerLevels[k]) / (1.0 + std::exp(-t));
        }
        const double scale = std::min(width, height) / 128.0;
        const double top = 1.0 / (1.0 + std::exp(-(y - boundary_y(0, x, width, height)) / kEdgeWidth));
        double shade = 0.0;
        for (double fx : kVessels) {
          const double dx = (x - fx * (width - 1)) / (kVesselSigma * scale);
          shade += kVesselDepth * std::exp(-0.5 * dx * dx);
        }
        v *= 1.0 - shade * top;
        for (const Spot& s : kLayerSpots) v += spot(s, x, y, width, height);
        return v;
      };
  }
  throw Error(ErrorKind::invalid_input, "unknown phantom kind");
}

Image render(const Field& f, int width, int height, const TransformParams& motion) {
  // Frame pixel q shows the phantom at motion^-1(q), as an inverse warp would.
  const Eigen::Matrix3d m_inv = to_matrix(motion).inverse();
  const double cx = 0.5 * (width - 1);
  const double cy = 0.5 * (height - 1);
  Image img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Eigen::Vector3d s = m_inv * Eigen::Vector3d(x - cx, y - cy, 1.0);
      img(x, y) = f(s.x() + cx, s.y() + cy);
    }
  }
  return img;
}

}  // namespace

std::string_view to_string(PhantomKind kind) {
  switch (kind) {
    case PhantomKind::ramp: return "ramp";
    case PhantomKind::blobs: return "blobs";
    case PhantomKind::layers: return "layers";
  }
  return "unknown";
}

PhantomKind parse_phantom_kind(std::string_view name) {
  for (auto k : {PhantomKind::ramp, PhantomKind::blobs, PhantomKind::layers}) {
    if (name == to_string(k)) return k;
  }
  throw Error(ErrorKind::invalid_input, "unknown phantom kind '" + std::string(name) + "'");
}

void SynthSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_input, "synth spec: " + msg); };
  if (width < 16 || height < 16) fail("frame must be at least 16x16");
  if (n < 2) fail("n must be at least 2");
  if (!(max_translation >= 0.0) || !(max_rotation >= 0.0)) fail("motion bounds must be nonnegative");
  if (!(speckle_sigma >= 0.0)) fail("speckle_sigma must be nonnegative");
  if (!(sparse_fraction >= 0.0 && sparse_fraction < 0.5)) fail("sparse_fraction must lie in [0, 0.5)");
  for (const auto& t : transient) {
    if (!(t.sigma > 0.0)) fail("transient feature sigma must be positive");
    for (int f : t.frames) {
      if (f < 0 || f >= n) fail("transient feature frame index out of range");
    }
  }
}

Image render_phantom(PhantomKind kind, int width, int height) {
  return render(phantom_field(kind, width, height), width, height, TransformParams::identity(TransformKind::rigid));
}

std::vector<Roi> phantom_rois(PhantomKind kind, int width, int height) {
  std::vector<Roi> rois;
  const int bx = static_cast<int>(0.1 * width);
  const int by = static_cast<int>(0.03 * height);
  const int bh = std::max(2, static_cast<int>(0.13 * height));

  if (kind != PhantomKind::layers) {
    // Generic layout: a corner background box and a row of feature boxes.
    rois.push_back({RoiKind::background, bx, by, std::max(2, width / 5), std::max(2, height / 8)});
    const int fw = std::max(2, width / 10);
    for (int k = 0; k < 5; ++k) {
      rois.push_back({RoiKind::feature, static_cast<int>((0.1 + 0.17 * k) * width), height / 2, fw, fw});
    }
    return rois;
  }

  rois.push_back({RoiKind::background, bx, by, width - 2 * bx, bh});
  const int rw = std::max(2, static_cast<int>(kRoiWidth * width));
  for (std::size_t k = 0; k + 1 < kBoundaries.size(); ++k) {
    const int x0 = std::clamp(static_cast<int>(kRoiCenters[k] * width) - rw / 2, 0, width - rw);
    double top = -1e300;
    double bottom = 1e300;
    for (int x = x0; x < x0 + rw; ++x) {
      top = std::max(top, boundary_y(k, x, width, height));
      bottom = std::min(bottom, boundary_y(k + 1, x, width, height));
    }
    const int y0 = static_cast<int>(std::ceil(top + kRoiMargin));
    const int y1 = static_cast<int>(std::floor(bottom - kRoiMargin));
    rois.push_back({RoiKind::feature, x0, y0, rw, std::max(1, y1 - y0 + 1)});
  }
  return rois;
}

SynthStack synth_stack(const SynthSpec& spec) {
  spec.validate();
  const Field base = phantom_field(spec.base, spec.width, spec.height);

  std::seed_seq motion_seed{spec.seed, std::uint64_t{0x6d6f74}};
  std::seed_seq noise_seed{spec.seed, std::uint64_t{0x6e6f69}};
  std::mt19937_64 motion_rng(motion_seed);
  std::mt19937_64 noise_rng(noise_seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  std::vector<TransformParams> motions;
  for (int i = 0; i < spec.n; ++i) {
    const double tx = spec.max_translation * unit(motion_rng);
    const double ty = spec.max_translation * unit(motion_rng);
    const double th = spec.max_rotation * kPi / 180.0 * unit(motion_rng);
    motions.push_back(TransformParams::rigid(tx, ty, th));
  }

  SynthStack out{{}, {{}, render_phantom(spec.base, spec.width, spec.height), {}, {}}};
  out.truth.rois = phantom_rois(spec.base, spec.width, spec.height);

  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> outlier(0.5, 1.0);
  const auto pixels = static_cast<std::size_t>(spec.width) * spec.height;
  const auto n_sparse = static_cast<std::size_t>(std::llround(spec.sparse_fraction * static_cast<double>(pixels)));
  std::vector<std::size_t> order(pixels);

  for (int i = 0; i < spec.n; ++i) {
    Field f = base;
    for (const auto& t : spec.transient) {
      if (std::find(t.frames.begin(), t.frames.end(), i) == t.frames.end()) continue;
      f = [f, t](double x, double y) {
        const double dx = x - t.x;
        const double dy = y - t.y;
        return f(x, y) + t.contrast * std::exp(-(dx * dx + dy * dy) / (2.0 * t.sigma * t.sigma));
      };
    }
    Image img = render(f, spec.width, spec.height, motions[static_cast<std::size_t>(i)]);
    if (spec.speckle_sigma > 0.0) {
      for (double& v : img.values()) v += spec.speckle_sigma * noise(noise_rng);
    }
    Mask support(pixels, 0);
    if (n_sparse > 0) {
      for (std::size_t p = 0; p < pixels; ++p) order[p] = p;
      // Partial Fisher-Yates: the first n_sparse entries are a uniform sample.
      for (std::size_t p = 0; p < n_sparse; ++p) {
        std::uniform_int_distribution<std::size_t> pick(p, pixels - 1);
        std::swap(order[p], order[pick(noise_rng)]);
        const std::size_t at = order[p];
        const double sign = noise_rng() & 1u ? 1.0 : -1.0;
        img.values()[at] += sign * outlier(noise_rng);
        support[at] = 1;
      }
    }
    out.stack.push_back(std::move(img));
    out.truth.sparse_supports.push_back(std::move(support));
    out.truth.taus.push_back(inverse(motions[static_cast<std::size_t>(i)]));
  }
  return out;
}

}  // namespace octrasl
