#include "octrasl/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace octrasl {

namespace {

void check_dims(int width, int height) {
  if (width < 2 || height < 2) {
    throw Error(ErrorKind::invalid_input,
                "image must be at least 2x2, got " + std::to_string(width) + "x" + std::to_string(height));
  }
}

}  // namespace

Image::Image(int width, int height, double fill) : width_(width), height_(height) {
  check_dims(width, height);
  if (!std::isfinite(fill)) throw Error(ErrorKind::invalid_input, "image fill value is not finite");
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

Image::Image(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  check_dims(width, height);
  if (values_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorKind::invalid_input, "image value count does not match its dimensions");
  }
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorKind::invalid_input, "image contains non-finite intensities");
  }
}

Image::Image(Frame frame, const Vector& column)
    : Image(frame.width, frame.height, std::vector<double>(column.data(), column.data() + column.size())) {}

Frame check_stack(const ImageStack& stack, std::size_t min_size) {
  if (stack.size() < min_size) {
    throw Error(ErrorKind::invalid_input, "stack needs at least " + std::to_string(min_size) + " images, got " +
                                              std::to_string(stack.size()));
  }
  const Frame frame = stack.front().frame();
  for (std::size_t i = 1; i < stack.size(); ++i) {
    if (stack[i].frame() != frame) {
      throw Error(ErrorKind::dimension_mismatch,
                  "image " + std::to_string(i) + " is " + std::to_string(stack[i].width()) + "x" +
                      std::to_string(stack[i].height()) + ", expected " + std::to_string(frame.width) + "x" +
                      std::to_string(frame.height));
    }
  }
  return frame;
}

Matrix stack_matrix(const ImageStack& stack) {
  const Frame frame = check_stack(stack, 1);
  Matrix d(frame.pixels(), static_cast<Index>(stack.size()));
  for (std::size_t i = 0; i < stack.size(); ++i) d.col(static_cast<Index>(i)) = stack[i].vec();
  return d;
}

Image gaussian_blur(const Image& img, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorKind::invalid_input, "blur sigma must be finite and non-negative");
  }
  if (sigma == 0.0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * k * k / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = w;
    total += w;
  }
  for (double& w : kernel) w /= total;

  const int w = img.width();
  const int h = img.height();
  Image rows(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] * img(std::clamp(x + k, 0, w - 1), y);
      }
      rows(x, y) = acc;
    }
  }
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] * rows(x, std::clamp(y + k, 0, h - 1));
      }
      out(x, y) = acc;
    }
  }
  return out;
}

}  // namespace octrasl
