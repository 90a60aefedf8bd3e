#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "octrasl/error.hpp"
#include "octrasl/image.hpp"

namespace octrasl {

enum class RoiKind { background, feature };

std::string_view to_string(RoiKind kind);

/// Axis-aligned rectangle; (x, y) is the top-left pixel.
struct Roi {
  RoiKind kind = RoiKind::feature;
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const Roi&, const Roi&) = default;
};

struct RoiStats {
  double mean = 0.0;
  double std = 0.0;  ///< population (1/N) standard deviation
};

/// Mean and population standard deviation of the pixels under `roi`.
RoiStats roi_stats(const Image& img, const Roi& roi);

struct MetricReport {
  std::vector<double> snr;  ///< dB, one per feature ROI
  std::vector<double> cnr;
  double avg_snr = 0.0;
  double avg_cnr = 0.0;
  RoiStats background;
  std::vector<RoiStats> features;
};

/// SNR_m = 20 log10(mu_m / sigma_b), CNR_m = (mu_m - mu_b) / sqrt(sigma_m^2 + sigma_b^2),
/// for every feature ROI m, plus their arithmetic means. Needs exactly one
/// background ROI and at least one feature ROI, each of area >= 4.
MetricReport evaluate(const Image& img, std::span<const Roi> rois);

/// ROI files hold one `kind x y w h` line per ROI; `#` starts a comment.
std::vector<Roi> parse_rois(std::istream& in);
std::vector<Roi> read_rois(const std::filesystem::path& path);
void write_rois(const std::filesystem::path& path, std::span<const Roi> rois);

}  // namespace octrasl
