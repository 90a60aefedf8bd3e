#pragma once

#include <string_view>

#include "octrasl/error.hpp"
#include "octrasl/image.hpp"

namespace octrasl {

enum class CompoundMethod { median, mean };

std::string_view to_string(CompoundMethod method);
CompoundMethod parse_compound_method(std::string_view name);

/// Same shape as the stack matrix; true where that pixel of that column counts.
using ValidityMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Combines the columns of a pixels x n stack pixel by pixel: the median (mean
/// of the central pair for an even count) or the mean over valid columns.
/// Throws masked-pixel when some pixel has no valid column.
Image compound(const Matrix& stack, CompoundMethod method, const ValidityMatrix& valid, Frame frame);
Image compound(const Matrix& stack, CompoundMethod method, Frame frame);

}  // namespace octrasl
