#include "octrasl/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace octrasl {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(ErrorKind::io, "cannot open " + path.string());
  return f;
}

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  auto* where = static_cast<std::string*>(png_get_error_ptr(png));
  *where = msg;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorKind::io, path.string() + " is not a PNG file");
  }

  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorKind::io, "libpng initialization failed");
  }

  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  std::vector<double> values;
  std::vector<png_byte> row;
  std::string reject;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorKind::io, "cannot decode " + path.string() + ": " + err);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  if (color_type != PNG_COLOR_TYPE_GRAY || (bit_depth != 8 && bit_depth != 16)) {
    reject = "expected 8- or 16-bit single-channel grayscale";
  } else {
    png_read_update_info(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    row.resize(stride);
    values.resize(static_cast<std::size_t>(width) * height);
    const double scale = bit_depth == 16 ? 65535.0 : 255.0;
    for (png_uint_32 y = 0; y < height; ++y) {
      png_read_row(png, row.data(), nullptr);
      for (png_uint_32 x = 0; x < width; ++x) {
        unsigned v = 0;
        if (bit_depth == 16) {
          v = (static_cast<unsigned>(row[2 * x]) << 8) | row[2 * x + 1];  // big endian
        } else {
          v = row[x];
        }
        values[static_cast<std::size_t>(y) * width + x] = v / scale;
      }
    }
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (!reject.empty()) throw Error(ErrorKind::io, path.string() + ": " + reject);
  return Image(static_cast<int>(width), static_cast<int>(height), std::move(values));
}

void write_png16(const std::filesystem::path& path, const Image& img) {
  FilePtr f = open_file(path, "wb");
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorKind::io, "libpng initialization failed");
  }
  // PNG stores 16-bit samples big endian.
  std::vector<png_byte> row(static_cast<std::size_t>(img.width()) * 2);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorKind::io, "cannot encode " + path.string() + ": " + err);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 16,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto v = static_cast<unsigned>(std::lround(std::clamp(img(x, y), 0.0, 1.0) * 65535.0));
      row[2 * static_cast<std::size_t>(x)] = static_cast<png_byte>(v >> 8);
      row[2 * static_cast<std::size_t>(x) + 1] = static_cast<png_byte>(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Matrix read_matrix_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open matrix file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> r;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) {
        throw Error(ErrorKind::io, path.string() + ": row " + std::to_string(rows.size() + 1) + ": bad number '" +
                                       tok + "'");
      }
      r.push_back(v);
    }
    if (r.empty()) continue;
    if (!rows.empty() && r.size() != rows.front().size()) {
      throw Error(ErrorKind::dimension_mismatch, path.string() + ": row " + std::to_string(rows.size() + 1) +
                                                     " has " + std::to_string(r.size()) + " entries, expected " +
                                                     std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error(ErrorKind::io, path.string() + " holds no matrix rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  require_finite(m, path.string());
  return m;
}

void write_matrix_text(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write matrix file " + path.string());
  out << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << '\n';
  }
}

StackManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open manifest " + path.string());
  StackManifest mf;
  const auto base = path.parent_path();
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string body = trim(line.substr(1));
      if (body.rfind("source:", 0) == 0) mf.source_id = trim(body.substr(7));
      else if (body.rfind("notes:", 0) == 0) mf.notes = trim(body.substr(6));
      continue;
    }
    std::filesystem::path p(line);
    mf.paths.push_back(p.is_absolute() ? p : base / p);
  }
  return mf;
}

void write_manifest(const std::filesystem::path& path, const StackManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write manifest " + path.string());
  if (!manifest.source_id.empty()) out << "# source: " << manifest.source_id << '\n';
  if (!manifest.notes.empty()) out << "# notes: " << manifest.notes << '\n';
  for (const auto& p : manifest.paths) out << p.string() << '\n';
}

ImageStack load_stack(const StackManifest& manifest) {
  if (manifest.paths.empty()) throw Error(ErrorKind::invalid_manifest, "manifest lists no images");
  ImageStack stack;
  stack.reserve(manifest.paths.size());
  for (const auto& p : manifest.paths) {
    if (!std::filesystem::exists(p)) throw Error(ErrorKind::io, "missing image file " + p.string());
    stack.push_back(read_png(p));
    const Image& first = stack.front();
    const Image& last = stack.back();
    if (last.frame() != first.frame()) {
      throw Error(ErrorKind::dimension_mismatch,
                  p.string() + " is " + std::to_string(last.width()) + "x" + std::to_string(last.height()) + " but " +
                      manifest.paths.front().string() + " is " + std::to_string(first.width()) + "x" +
                      std::to_string(first.height()));
    }
  }
  return stack;
}

}  // namespace octrasl
