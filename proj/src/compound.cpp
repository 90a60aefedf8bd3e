#include "octrasl/compound.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace octrasl {

std::string_view to_string(CompoundMethod method) {
  return method == CompoundMethod::median ? "median" : "mean";
}

CompoundMethod parse_compound_method(std::string_view name) {
  if (name == "median") return CompoundMethod::median;
  if (name == "mean") return CompoundMethod::mean;
  throw Error(ErrorKind::invalid_input, "unknown compounding method '" + std::string(name) + "'");
}

Image compound(const Matrix& stack, CompoundMethod method, const ValidityMatrix& valid, Frame frame) {
  if (stack.cols() < 1) throw Error(ErrorKind::invalid_input, "compounding needs at least one column");
  if (stack.rows() != frame.pixels()) throw Error(ErrorKind::invalid_input, "stack rows do not match the frame");
  if (valid.rows() != stack.rows() || valid.cols() != stack.cols()) {
    throw Error(ErrorKind::invalid_input, "validity matrix shape does not match the stack");
  }
  require_finite(stack, "compounding input");

  std::vector<double> out(static_cast<std::size_t>(stack.rows()));
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(stack.cols()));
  for (Index p = 0; p < stack.rows(); ++p) {
    vals.clear();
    for (Index c = 0; c < stack.cols(); ++c) {
      if (valid(p, c)) vals.push_back(stack(p, c));
    }
    if (vals.empty()) {
      throw Error(ErrorKind::masked_pixel, "pixel (" + std::to_string(p % frame.width) + ", " +
                                               std::to_string(p / frame.width) + ") is not valid in any image");
    }
    double v = 0.0;
    if (method == CompoundMethod::mean) {
      for (double x : vals) v += x;
      v /= static_cast<double>(vals.size());
    } else {
      const std::size_t mid = vals.size() / 2;
      std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid), vals.end());
      v = vals[mid];
      if (vals.size() % 2 == 0) {
        const double lower = *std::max_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid));
        v = 0.5 * (lower + v);
      }
    }
    out[static_cast<std::size_t>(p)] = v;
  }
  return Image(frame.width, frame.height, std::move(out));
}

Image compound(const Matrix& stack, CompoundMethod method, Frame frame) {
  return compound(stack, method, ValidityMatrix::Constant(stack.rows(), stack.cols(), true), frame);
}

}  // namespace octrasl
