#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "octrasl/error.hpp"
#include "octrasl/image.hpp"

namespace octrasl {

/// Reads an 8- or 16-bit single-channel PNG, mapping intensities to [0, 1].
Image read_png(const std::filesystem::path& path);

/// Writes a 16-bit grayscale PNG; values are clamped to [0, 1] first.
void write_png16(const std::filesystem::path& path, const Image& img);

/// Plain text matrix: one row per line, whitespace-separated decimals.
Matrix read_matrix_text(const std::filesystem::path& path);
void write_matrix_text(const std::filesystem::path& path, const Matrix& m);

struct StackManifest {
  std::vector<std::filesystem::path> paths;
  std::string source_id;
  std::string notes;
};

/// One image path per line, relative paths resolved against the manifest's
/// directory. Lines starting with `#` are comments; `# source: ...` and
/// `# notes: ...` fill the metadata.
StackManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const StackManifest& manifest);

/// Loads every image of the manifest and checks that they share dimensions.
ImageStack load_stack(const StackManifest& manifest);

}  // namespace octrasl
