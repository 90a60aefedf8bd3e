#include "octrasl/prox.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>
#include <lapacke.h>

namespace octrasl {

namespace {

constexpr double kRankFloor = 1e-12;

void require_threshold(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw Error(ErrorKind::invalid_input, "threshold must be finite and nonnegative, got " + std::to_string(t));
  }
}

struct ThinSvd {
  Vector sigma;  ///< decreasing
  Matrix u;
  Matrix vt;
};

// LAPACK's divide-and-conquer SVD. Eigen 3.4.0's BDCSVD reads out of bounds while
// deflating some inputs, and its Jacobi SVD is several times slower on square
// matrices, so Jacobi is only the fallback for a non-converged LAPACK run.
ThinSvd thin_svd(const Matrix& x, bool vectors) {
  const auto m = static_cast<lapack_int>(x.rows());
  const auto n = static_cast<lapack_int>(x.cols());
  const lapack_int k = std::min(m, n);
  ThinSvd out;
  out.sigma.resize(k);
  out.u.resize(vectors ? m : 1, vectors ? k : 1);
  out.vt.resize(vectors ? k : 1, vectors ? n : 1);
  Matrix a = x;
  const lapack_int info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, vectors ? 'S' : 'N', m, n, a.data(), m, out.sigma.data(),
                                         out.u.data(), static_cast<lapack_int>(out.u.rows()), out.vt.data(),
                                         static_cast<lapack_int>(out.vt.rows()));
  if (info == 0) return out;
  if (info < 0) throw Error(ErrorKind::numerical, "dgesdd rejected argument " + std::to_string(-info));

  const Eigen::JacobiSVD<Matrix> jacobi(x, vectors ? Eigen::ComputeThinU | Eigen::ComputeThinV : 0);
  if (jacobi.info() != Eigen::Success) {
    throw Error(ErrorKind::numerical, "SVD did not converge on a " + std::to_string(m) + "x" + std::to_string(n) +
                                          " matrix");
  }
  out.sigma = jacobi.singularValues();
  if (vectors) {
    out.u = jacobi.matrixU();
    out.vt = jacobi.matrixV().transpose();
  }
  return out;
}

}  // namespace

Matrix soft_threshold(const Matrix& x, double t) {
  require_threshold(t);
  require_finite(x, "soft_threshold input");
  return x.unaryExpr([t](double v) {
    const double mag = std::abs(v) - t;
    return mag > 0.0 ? std::copysign(mag, v) : 0.0;
  });
}

SvtResult svt(const Matrix& x, double t) {
  require_threshold(t);
  require_finite(x, "svt input");

  const ThinSvd svd = thin_svd(x, true);
  const Vector& sigma = svd.sigma;
  const double floor = sigma.size() > 0 ? kRankFloor * sigma(0) : 0.0;
  const double cut = std::max(t, floor);

  // Singular values come sorted in decreasing order.
  Index rank = 0;
  while (rank < sigma.size() && sigma(rank) > cut) ++rank;

  SvtResult out;
  out.effective_rank = rank;
  if (rank == 0) {
    out.value = Matrix::Zero(x.rows(), x.cols());
    return out;
  }
  const Vector shrunk = (sigma.head(rank).array() - t).matrix();
  out.value = svd.u.leftCols(rank) * shrunk.asDiagonal() * svd.vt.topRows(rank);
  return out;
}

double nuclear_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  return thin_svd(x, false).sigma.sum();
}

double spectral_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  return thin_svd(x, false).sigma(0);
}

}  // namespace octrasl
