#include "octrasl/rpca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "octrasl/prox.hpp"

namespace octrasl {

void RpcaConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_input, "rpca config: " + msg); };
  if (lambda && !(*lambda > 0.0 && std::isfinite(*lambda))) fail("lambda must be positive");
  if (!(tol > 0.0)) fail("tol must be positive");
  if (max_iters < 1) fail("max_iters must be at least 1");
  if (mu0 && !(*mu0 > 0.0 && std::isfinite(*mu0))) fail("mu0 must be positive");
  if (!(rho > 1.0)) fail("rho must exceed 1");
  if (!(mu_max_factor >= 1.0)) fail("mu_max_factor must be at least 1");
}

double default_lambda(Index rows, Index cols) {
  if (rows < 1 || cols < 1) {
    throw Error(ErrorKind::invalid_input, "default_lambda needs a non-empty shape");
  }
  return 1.0 / std::sqrt(static_cast<double>(std::max(rows, cols)));
}

double rpca_objective(const Matrix& low_rank, const Matrix& sparse, double lambda) {
  return nuclear_norm(low_rank) + lambda * sparse.cwiseAbs().sum();
}

RpcaResult rpca_ialm(const Matrix& d, const RpcaConfig& cfg) {
  cfg.validate();
  if (d.size() == 0) throw Error(ErrorKind::invalid_input, "rpca input is empty");
  require_finite(d, "rpca input");

  const double lambda = cfg.lambda.value_or(default_lambda(d.rows(), d.cols()));
  const double d_fro = d.norm();

  RpcaResult out;
  out.low_rank = Matrix::Zero(d.rows(), d.cols());
  out.sparse = Matrix::Zero(d.rows(), d.cols());
  if (d_fro == 0.0) {
    out.iterations = 1;
    out.converged = true;
    out.residual_history.push_back(0.0);
    return out;
  }

  const double d_two = spectral_norm(d);
  const double d_inf = d.cwiseAbs().maxCoeff();
  Matrix y = d / std::max(d_two, d_inf / lambda);
  double mu = cfg.mu0.value_or(1.25 / d_two);
  const double mu_max = mu * cfg.mu_max_factor;

  Matrix& l = out.low_rank;
  Matrix& s = out.sparse;
  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    try {
      l = svt(d - s + y / mu, 1.0 / mu).value;
      s = soft_threshold(d - l + y / mu, lambda / mu);
    } catch (const Error& e) {
      rethrow_with_context(e, "rpca iteration " + std::to_string(iter));
    }
    const Matrix z = d - l - s;
    y += mu * z;
    mu = std::min(mu * cfg.rho, mu_max);

    const double residual = z.norm() / d_fro;
    if (!std::isfinite(residual)) {
      throw Error(ErrorKind::numerical, "rpca diverged at iteration " + std::to_string(iter));
    }
    out.residual_history.push_back(residual);
    out.iterations = iter;
    out.final_residual = residual;
    if (residual <= cfg.tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace octrasl
