#include "octrasl/metrics.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>

namespace octrasl {

namespace {

constexpr int kMinRoiArea = 4;

std::string describe(const Roi& r) {
  return std::string(to_string(r.kind)) + " " + std::to_string(r.x) + " " + std::to_string(r.y) + " " +
         std::to_string(r.w) + " " + std::to_string(r.h);
}

}  // namespace

std::string_view to_string(RoiKind kind) { return kind == RoiKind::background ? "background" : "feature"; }

RoiStats roi_stats(const Image& img, const Roi& roi) {
  if (roi.w <= 0 || roi.h <= 0) throw Error(ErrorKind::invalid_roi, "roi has zero area: " + describe(roi));
  if (roi.x < 0 || roi.y < 0 || roi.x + roi.w > img.width() || roi.y + roi.h > img.height()) {
    throw Error(ErrorKind::invalid_roi, "roi lies outside the image: " + describe(roi));
  }
  const double count = static_cast<double>(roi.w) * roi.h;
  double sum = 0.0;
  bool constant = true;
  for (int y = roi.y; y < roi.y + roi.h; ++y) {
    for (int x = roi.x; x < roi.x + roi.w; ++x) {
      sum += img(x, y);
      constant = constant && img(x, y) == img(roi.x, roi.y);
    }
  }
  // A constant region must report exactly zero spread; summation rounding would not.
  if (constant) return {img(roi.x, roi.y), 0.0};
  const double mean = sum / count;
  double ss = 0.0;
  for (int y = roi.y; y < roi.y + roi.h; ++y) {
    for (int x = roi.x; x < roi.x + roi.w; ++x) ss += (img(x, y) - mean) * (img(x, y) - mean);
  }
  return {mean, std::sqrt(ss / count)};
}

MetricReport evaluate(const Image& img, std::span<const Roi> rois) {
  const Roi* background = nullptr;
  std::vector<const Roi*> features;
  for (const Roi& r : rois) {
    if (static_cast<long>(r.w) * r.h < kMinRoiArea) {
      throw Error(ErrorKind::invalid_roi, "roi area is below " + std::to_string(kMinRoiArea) + ": " + describe(r));
    }
    if (r.kind == RoiKind::background) {
      if (background) throw Error(ErrorKind::invalid_roi, "more than one background roi");
      background = &r;
    } else {
      features.push_back(&r);
    }
  }
  if (!background) throw Error(ErrorKind::invalid_roi, "no background roi");
  if (features.empty()) throw Error(ErrorKind::invalid_roi, "no feature roi");

  MetricReport rep;
  rep.background = roi_stats(img, *background);
  const double sb = rep.background.std;
  if (!(sb > 0.0)) throw Error(ErrorKind::degenerate_background, "background roi has zero standard deviation");

  for (std::size_t m = 0; m < features.size(); ++m) {
    const RoiStats st = roi_stats(img, *features[m]);
    if (!(st.mean > 0.0)) {
      throw Error(ErrorKind::undefined_snr,
                  "feature roi " + std::to_string(m) + " (" + describe(*features[m]) + ") has non-positive mean");
    }
    rep.features.push_back(st);
    rep.snr.push_back(20.0 * std::log10(st.mean / sb));
    rep.cnr.push_back((st.mean - rep.background.mean) / std::sqrt(st.std * st.std + sb * sb));
  }
  for (std::size_t m = 0; m < features.size(); ++m) {
    rep.avg_snr += rep.snr[m];
    rep.avg_cnr += rep.cnr[m];
  }
  rep.avg_snr /= static_cast<double>(features.size());
  rep.avg_cnr /= static_cast<double>(features.size());
  return rep;
}

std::vector<Roi> parse_rois(std::istream& in) {
  std::vector<Roi> rois;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    Roi r;
    if (kind == "background") r.kind = RoiKind::background;
    else if (kind == "feature") r.kind = RoiKind::feature;
    else throw Error(ErrorKind::invalid_roi, "line " + std::to_string(lineno) + ": unknown roi kind '" + kind + "'");
    std::string extra;
    if (!(ls >> r.x >> r.y >> r.w >> r.h) || (ls >> extra)) {
      throw Error(ErrorKind::invalid_roi, "line " + std::to_string(lineno) + ": expected 'kind x y w h'");
    }
    rois.push_back(r);
  }
  return rois;
}

std::vector<Roi> read_rois(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open roi file " + path.string());
  return parse_rois(in);
}

void write_rois(const std::filesystem::path& path, std::span<const Roi> rois) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write roi file " + path.string());
  for (const Roi& r : rois) out << to_string(r.kind) << ' ' << r.x << ' ' << r.y << ' ' << r.w << ' ' << r.h << '\n';
}

}  // namespace octrasl
