#include "octrasl/rasl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "octrasl/prox.hpp"
#include "octrasl/rpca.hpp"

namespace octrasl {

namespace {

constexpr double kMaxJacobianCondition = 1e8;
constexpr double kMinValidFraction = 0.5;

// Orthonormal basis Q of a Jacobian block and the triangular factor R with J = Q R.
struct OrthoBlock {
  Matrix q;
  Matrix r;
  bool frozen = false;
};

OrthoBlock orthonormalize(const JacobianBlock& j, std::size_t image) {
  OrthoBlock out;
  if (j.entries.cwiseAbs().maxCoeff() == 0.0) {
    out.frozen = true;
    return out;
  }
  const Index k = j.dof();
  Eigen::HouseholderQR<Matrix> qr(j.entries);
  out.q = qr.householderQ() * Matrix::Identity(j.pixels(), k);
  out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  const Vector sv = Eigen::JacobiSVD<Matrix>(out.r).singularValues();
  const double cond = sv(k - 1) > 0.0 ? sv(0) / sv(k - 1) : INFINITY;
  if (!(cond <= kMaxJacobianCondition)) {
    throw Error(ErrorKind::ill_conditioned_jacobian,
                "jacobian of image " + std::to_string(image) + " has condition number " + std::to_string(cond));
  }
  return out;
}

Mask joint_valid_mask(const ImageStack& stack, const std::vector<TransformParams>& taus, Frame frame) {
  Mask joint(static_cast<std::size_t>(frame.pixels()), 1);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    const Mask m = warp(stack[i], taus[i], frame).valid;
    for (std::size_t p = 0; p < joint.size(); ++p) joint[p] &= m[p];
  }
  return joint;
}

double valid_fraction(const Mask& m) {
  return static_cast<double>(std::count(m.begin(), m.end(), std::uint8_t{1})) / static_cast<double>(m.size());
}

}  // namespace

void InnerSettings::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_input, "inner settings: " + msg); };
  if (!(tol > 0.0)) fail("tol must be positive");
  if (max_iters < 1) fail("max_iters must be at least 1");
  if (mu0 && !(*mu0 > 0.0 && std::isfinite(*mu0))) fail("mu0 must be positive");
  if (!(rho > 1.0)) fail("rho must exceed 1");
  if (!(mu_max_factor >= 1.0)) fail("mu_max_factor must be at least 1");
}

void RaslConfig::validate() const {
  if (lambda && !(*lambda > 0.0 && std::isfinite(*lambda))) {
    throw Error(ErrorKind::invalid_input, "rasl config: lambda must be positive");
  }
  if (outer_max_iters < 1) throw Error(ErrorKind::invalid_input, "rasl config: outer_max_iters must be at least 1");
  if (!(outer_tol > 0.0)) throw Error(ErrorKind::invalid_input, "rasl config: outer_tol must be positive");
  if (!(smoothing >= 0.0) || !std::isfinite(smoothing)) {
    throw Error(ErrorKind::invalid_input, "rasl config: smoothing must be finite and non-negative");
  }
  inner.validate();
}

NormalizedColumns normalize_columns(const Matrix& d) {
  NormalizedColumns out{d, Vector(d.cols())};
  for (Index i = 0; i < d.cols(); ++i) {
    const double n = d.col(i).norm();
    if (!(n > 1e-12)) {
      throw Error(ErrorKind::degenerate_image, "image " + std::to_string(i) + " has (near) zero norm");
    }
    out.norms(i) = n;
    out.values.col(i) /= n;
  }
  return out;
}

LagrangianState initial_lagrangian(const Matrix& dw, double lambda, const InnerSettings& settings) {
  const double two = spectral_norm(dw);
  if (!(two > 0.0)) throw Error(ErrorKind::degenerate_image, "aligned data matrix is zero");
  const double inf = dw.cwiseAbs().maxCoeff();
  return {dw / std::max(two, inf / lambda), settings.mu0.value_or(1.25 / two)};
}

InnerResult rasl_inner(const Matrix& dw, std::span<const JacobianBlock> jacobians, double lambda,
                       LagrangianState state, const InnerSettings& settings) {
  settings.validate();
  const Index m = dw.rows();
  const Index n = dw.cols();
  if (static_cast<Index>(jacobians.size()) != n) {
    throw Error(ErrorKind::invalid_input, "need one jacobian block per column");
  }
  if (!(lambda > 0.0)) throw Error(ErrorKind::invalid_input, "lambda must be positive");
  if (state.multiplier.rows() != m || state.multiplier.cols() != n || !(state.mu > 0.0)) {
    throw Error(ErrorKind::invalid_input, "lagrangian state does not match the data");
  }
  require_finite(dw, "aligned data");

  std::vector<OrthoBlock> blocks;
  blocks.reserve(jacobians.size());
  for (std::size_t i = 0; i < jacobians.size(); ++i) {
    if (jacobians[i].pixels() != m) {
      throw Error(ErrorKind::invalid_input, "jacobian " + std::to_string(i) + " row count does not match pixels");
    }
    blocks.push_back(orthonormalize(jacobians[i], i));
  }

  const double dw_fro = dw.norm();
  Matrix& y = state.multiplier;
  double mu = state.mu;
  const double mu_max = mu * settings.mu_max_factor;

  InnerResult out;
  out.low_rank = Matrix::Zero(m, n);
  out.sparse = Matrix::Zero(m, n);
  std::vector<Vector> xi(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    xi[static_cast<std::size_t>(i)] = Vector::Zero(jacobians[static_cast<std::size_t>(i)].dof());
  }
  Matrix j_delta = Matrix::Zero(m, n);

  Matrix& l = out.low_rank;
  Matrix& s = out.sparse;
  for (int iter = 1; iter <= settings.max_iters; ++iter) {
    try {
      l = svt(dw + j_delta - s + y / mu, 1.0 / mu).value;
      s = soft_threshold(dw + j_delta - l + y / mu, lambda / mu);
    } catch (const Error& e) {
      rethrow_with_context(e, "inner iteration " + std::to_string(iter));
    }
    const Matrix target = l + s - dw - y / mu;
    for (Index i = 0; i < n; ++i) {
      const OrthoBlock& b = blocks[static_cast<std::size_t>(i)];
      if (b.frozen) continue;
      Vector& x = xi[static_cast<std::size_t>(i)];
      x = b.q.transpose() * target.col(i);
      j_delta.col(i) = b.q * x;
    }
    const Matrix z = dw + j_delta - l - s;
    y += mu * z;
    mu = std::min(mu * settings.rho, mu_max);

    const double residual = z.norm() / dw_fro;
    if (!std::isfinite(residual)) {
      throw Error(ErrorKind::numerical, "inner solve diverged at iteration " + std::to_string(iter));
    }
    out.iterations = iter;
    out.residual = residual;
    if (residual <= settings.tol) {
      out.converged = true;
      break;
    }
  }

  out.deltas.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (blocks[u].frozen) {
      out.deltas[u] = Vector::Zero(jacobians[u].dof());
    } else {
      out.deltas[u] = blocks[u].r.triangularView<Eigen::Upper>().solve(xi[u]);
    }
  }
  return out;
}

namespace {

// Subtracts the mean update of the images that moved; frozen images keep a zero update.
void remove_common_update(std::vector<Vector>& deltas, const std::vector<JacobianBlock>& jacobians) {
  Vector mean;
  int moving = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (jacobians[i].entries.isZero(0.0)) continue;
    mean = moving == 0 ? deltas[i] : Vector(mean + deltas[i]);
    ++moving;
  }
  if (moving < 2) return;
  mean /= moving;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!jacobians[i].entries.isZero(0.0)) deltas[i] -= mean;
  }
}

}  // namespace

RaslResult rasl_align(const ImageStack& stack, const RaslConfig& cfg) {
  cfg.validate();
  const Frame frame = check_stack(stack, 2);
  const auto n = static_cast<Index>(stack.size());
  const Index m = frame.pixels();

  RaslResult out;
  out.frame = frame;
  out.lambda = cfg.lambda.value_or(1.0 / std::sqrt(static_cast<double>(m)));
  out.taus.assign(stack.size(), TransformParams::identity(cfg.model));

  auto checked_mask = [&](const std::string& where) {
    Mask joint = joint_valid_mask(stack, out.taus, frame);
    const double frac = valid_fraction(joint);
    if (frac < kMinValidFraction) {
      throw Error(ErrorKind::excessive_motion, where + ": only " + std::to_string(100.0 * frac) +
                                                   "% of pixels are valid in every image");
    }
    return joint;
  };

  ImageStack work;
  work.reserve(stack.size());
  for (const Image& img : stack) work.push_back(gaussian_blur(img, cfg.smoothing));

  for (int outer = 1; outer <= cfg.outer_max_iters; ++outer) {
    const std::string where = "outer iteration " + std::to_string(outer);
    const Mask joint = checked_mask(where);

    Matrix dw(m, n);
    std::vector<JacobianBlock> jac(stack.size());
    for (Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      try {
        Linearization lin = linearize(work[u], out.taus[u], frame, joint);
        dw.col(i) = lin.values;
        jac[u] = std::move(lin.jacobian);
      } catch (const Error& e) {
        rethrow_with_context(e, where + ", image " + std::to_string(i));
      }
    }

    InnerResult inner;
    try {
      inner = rasl_inner(dw, jac, out.lambda, initial_lagrangian(dw, out.lambda, cfg.inner), cfg.inner);
    } catch (const Error& e) {
      rethrow_with_context(e, where);
    }

    if (cfg.fix_gauge) remove_common_update(inner.deltas, jac);

    double max_delta = 0.0;
    for (std::size_t i = 0; i < stack.size(); ++i) {
      max_delta = std::max(max_delta, inner.deltas[i].norm());
      try {
        out.taus[i] = compose_update(out.taus[i], inner.deltas[i]);
      } catch (const Error& e) {
        rethrow_with_context(e, where + ", image " + std::to_string(i));
      }
    }

    out.history.push_back({outer, rpca_objective(inner.low_rank, inner.sparse, out.lambda), inner.residual,
                           max_delta, inner.iterations, valid_fraction(joint)});
    out.outer_iters = outer;
    if (max_delta < cfg.outer_tol) {
      out.converged = true;
      break;
    }
  }

  // Decompose the stack warped by the final transforms so that L + S matches it.
  out.valid = checked_mask("final decomposition");
  Matrix aligned(m, n);
  for (Index i = 0; i < n; ++i) {
    const WarpResult w = warp(stack[static_cast<std::size_t>(i)], out.taus[static_cast<std::size_t>(i)], frame);
    for (Index p = 0; p < m; ++p) aligned(p, i) = out.valid[static_cast<std::size_t>(p)] ? w.image.vec()(p) : 0.0;
  }
  NormalizedColumns nc;
  try {
    nc = normalize_columns(aligned);
  } catch (const Error& e) {
    rethrow_with_context(e, "final decomposition");
  }
  RpcaConfig rc;
  rc.lambda = out.lambda;
  rc.tol = cfg.inner.tol;
  rc.max_iters = cfg.inner.max_iters;
  rc.mu0 = cfg.inner.mu0;
  rc.rho = cfg.inner.rho;
  rc.mu_max_factor = cfg.inner.mu_max_factor;
  RpcaResult final_split;
  try {
    final_split = rpca_ialm(nc.values, rc);
  } catch (const Error& e) {
    rethrow_with_context(e, "final decomposition");
  }
  out.column_norms = nc.norms;
  out.low_rank = final_split.low_rank * nc.norms.asDiagonal();
  out.sparse = final_split.sparse * nc.norms.asDiagonal();
  out.aligned = std::move(aligned);
  return out;
}

}  // namespace octrasl
