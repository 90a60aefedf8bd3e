#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "octrasl/error.hpp"

namespace octrasl {

struct Frame {
  int width = 0;
  int height = 0;

  Index pixels() const { return static_cast<Index>(width) * height; }
  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Per-pixel validity flag, row-major over a frame (1 = valid).
using Mask = std::vector<std::uint8_t>;

/// Grayscale image with real-valued intensities stored row-major.
/// Vectorizing an image (one column of the data matrix) uses the same order.
class Image {
 public:
  Image(int width, int height, double fill = 0.0);
  Image(int width, int height, std::vector<double> values);
  Image(Frame frame, const Vector& column);

  int width() const { return width_; }
  int height() const { return height_; }
  Frame frame() const { return {width_, height_}; }
  Index pixels() const { return static_cast<Index>(values_.size()); }

  double operator()(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  double& operator()(int x, int y) { return values_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  Eigen::Map<const Vector> vec() const { return {values_.data(), pixels()}; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_;
  int height_;
  std::vector<double> values_;
};

using ImageStack = std::vector<Image>;

/// Throws unless the stack has at least `min_size` images of one frame size.
Frame check_stack(const ImageStack& stack, std::size_t min_size);

/// pixels x n matrix whose columns are the vectorized images.
Matrix stack_matrix(const ImageStack& stack);

/// Separable Gaussian blur with edge extension; the kernel is truncated at 3 sigma.
/// sigma == 0 returns a copy.
Image gaussian_blur(const Image& img, double sigma);

}  // namespace octrasl
