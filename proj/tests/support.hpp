#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "octrasl/error.hpp"
#include "octrasl/image.hpp"
#include "octrasl/transform.hpp"

namespace octrasl::testing {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = n01(rng);
  return m;
}

/// Singular value thresholding without an SVD routine: the symmetric matrix
/// [0 X; X^T 0] has eigenpairs (+-sigma_i, (u_i; +-v_i) / sqrt(2)), so shrinking
/// its positive eigenvalues and reassembling gives U max(S - t, 0) V^T.
inline Matrix svt_oracle(const Matrix& x, double t) {
  const Index m = x.rows();
  const Index n = x.cols();
  Matrix sym = Matrix::Zero(m + n, m + n);
  sym.topRightCorner(m, n) = x;
  sym.bottomLeftCorner(n, m) = x.transpose();
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  Matrix out = Matrix::Zero(m, n);
  for (Index k = 0; k < m + n; ++k) {
    const double sigma = eig.eigenvalues()(k);
    if (sigma <= t) continue;
    const auto w = eig.eigenvectors().col(k);
    out += 2.0 * (sigma - t) * w.head(m) * w.tail(n).transpose();
  }
  return out;
}

/// Low-rank plus sparse test problem: L0 = U V^T with standard-normal factors
/// (entry std sqrt(rank)); S0 has `fraction` of its entries, placed uniformly,
/// set to +-10 sqrt(rank) with random signs.
struct RpcaProblem {
  Matrix low_rank;
  Matrix sparse;
  Matrix data;
};

inline RpcaProblem make_rpca_problem(Index size, Index rank, double fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RpcaProblem p;
  p.low_rank = random_matrix(size, rank, rng) * random_matrix(rank, size, rng);
  p.sparse = Matrix::Zero(size, size);
  std::vector<Index> cells(static_cast<std::size_t>(size * size));
  for (std::size_t k = 0; k < cells.size(); ++k) cells[k] = static_cast<Index>(k);
  std::shuffle(cells.begin(), cells.end(), rng);
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(cells.size())));
  const double magnitude = 10.0 * std::sqrt(static_cast<double>(rank));
  std::bernoulli_distribution sign(0.5);
  for (std::size_t k = 0; k < count; ++k) {
    p.sparse(cells[k] % size, cells[k] / size) = sign(rng) ? magnitude : -magnitude;
  }
  p.data = p.low_rank + p.sparse;
  return p;
}

/// Worst relative misalignment over all ordered pairs, after removing the
/// common transform: compares est_j^-1 o est_i with truth_j^-1 o truth_i.
struct PairwiseError {
  double translation_px = 0.0;
  double rotation_deg = 0.0;
};

inline PairwiseError pairwise_error(const std::vector<TransformParams>& est, const std::vector<TransformParams>& truth) {
  PairwiseError worst;
  for (std::size_t i = 0; i < est.size(); ++i) {
    for (std::size_t j = 0; j < est.size(); ++j) {
      if (i == j) continue;
      const Eigen::Matrix3d e = to_matrix(est[j]).inverse() * to_matrix(est[i]);
      const Eigen::Matrix3d t = to_matrix(truth[j]).inverse() * to_matrix(truth[i]);
      const Eigen::Matrix3d r = t.inverse() * e;
      worst.translation_px = std::max(worst.translation_px, std::hypot(r(0, 2), r(1, 2)));
      worst.rotation_deg =
          std::max(worst.rotation_deg, std::abs(std::atan2(r(1, 0), r(0, 0))) * 180.0 / std::numbers::pi);
    }
  }
  return worst;
}

/// Smooth textured image: a few Gaussian bumps on a gentle slope.
inline Image textured(int w, int h) {
  Image img(w, h);
  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = (x - cx) / w;
      const double v = (y - cy) / h;
      double val = 0.3 + 0.1 * u - 0.05 * v;
      val += 0.5 * std::exp(-((u - 0.15) * (u - 0.15) + (v + 0.1) * (v + 0.1)) / 0.01);
      val += 0.4 * std::exp(-((u + 0.2) * (u + 0.2) + (v - 0.2) * (v - 0.2)) / 0.006);
      val += 0.1 * std::sin(9.0 * u) * std::cos(7.0 * v);
      img(x, y) = val;
    }
  }
  return img;
}

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() / ("octrasl_" + name + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace octrasl::testing
