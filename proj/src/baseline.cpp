#include "octrasl/baseline.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace octrasl {

namespace {

double variance(const Image& img) {
  const Vector v = img.vec();
  if (v.minCoeff() == v.maxCoeff()) return 0.0;
  return (v.array() - v.mean()).square().mean();
}

// NCC between ref(x, y) and img(x - dx, y - dy) over the pixels where both exist.
double shifted_ncc(const Image& ref, const Image& img, int dx, int dy) {
  const int w = ref.width();
  const int h = ref.height();
  const int x0 = std::max(0, dx);
  const int x1 = std::min(w, w + dx);
  const int y0 = std::max(0, dy);
  const int y1 = std::min(h, h + dy);
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double a = ref(x, y);
      const double b = img(x - dx, y - dy);
      sa += a;
      sb += b;
      saa += a * a;
      sbb += b * b;
      sab += a * b;
    }
  }
  const double cnt = static_cast<double>(x1 - x0) * (y1 - y0);
  const double cov = sab - sa * sb / cnt;
  const double va = saa - sa * sa / cnt;
  const double vb = sbb - sb * sb / cnt;
  if (va <= 0.0 || vb <= 0.0) return -std::numeric_limits<double>::infinity();
  return cov / std::sqrt(va * vb);
}

}  // namespace

BaselineResult baseline_translation_align(const ImageStack& stack, double max_shift_fraction) {
  const Frame frame = check_stack(stack, 2);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    if (!(variance(stack[i]) > 0.0)) {
      throw Error(ErrorKind::degenerate_image, "image " + std::to_string(i) + " is flat");
    }
  }
  const int rx = static_cast<int>(max_shift_fraction * frame.width);
  const int ry = static_cast<int>(max_shift_fraction * frame.height);

  BaselineResult out;
  for (std::size_t i = 0; i < stack.size(); ++i) {
    int best_dx = 0;
    int best_dy = 0;
    if (i > 0) {
      double best = -std::numeric_limits<double>::infinity();
      for (int dy = -ry; dy <= ry; ++dy) {
        for (int dx = -rx; dx <= rx; ++dx) {
          const double score = shifted_ncc(stack[0], stack[i], dx, dy);
          // Ties go to the smaller shift.
          if (score > best || (score == best && std::abs(dx) + std::abs(dy) < std::abs(best_dx) + std::abs(best_dy))) {
            best = score;
            best_dx = dx;
            best_dy = dy;
          }
        }
      }
    }
    const TransformParams t = TransformParams::translation(best_dx, best_dy);
    WarpResult w = warp(stack[i], t, frame);
    out.aligned.push_back(std::move(w.image));
    out.valid.push_back(std::move(w.valid));
    out.taus.push_back(t);
  }
  return out;
}

}  // namespace octrasl
