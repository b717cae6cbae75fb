#pragma once

// Principal Component Pursuit: split X into a low-rank L and a sparse S by
//
//     min ||L||_* + gamma ||S||_1   subject to  L + S = X
//
// solved with the inexact augmented Lagrangian scheme (exact singular value
// thresholding steps, entrywise shrinkage, growing penalty).

#include <echodec/types.hpp>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace echodec {

template <class Scalar>
struct PcpConfig {
  Scalar gamma = Scalar(0);  // 0 = auto: 1/sqrt(max(D, T))
  Scalar tol = Scalar(1e-7);
  int max_iter = 1000;
  Scalar mu = Scalar(0);     // 0 = auto: 1.25 / sigma_1(X)
  Scalar rho = Scalar(1.5);  // penalty growth per iteration
  Scalar mu_cap_factor = Scalar(1e7);  // cap = factor * initial mu

  void validate() const {
    if (gamma < Scalar(0)) throw ParameterError("pcp: gamma must be positive or 0 (auto)");
    if (!(tol > Scalar(0))) throw ParameterError("pcp: tol must be positive");
    if (max_iter < 1) throw ParameterError("pcp: max_iter must be >= 1");
    if (mu < Scalar(0)) throw ParameterError("pcp: mu must be positive or 0 (auto)");
    if (!(rho > Scalar(1))) throw ParameterError("pcp: rho must be > 1");
    if (!(mu_cap_factor >= Scalar(1))) throw ParameterError("pcp: mu_cap_factor must be >= 1");
  }
};

template <class Scalar>
struct PcpResult {
  Matrix<Scalar> low_rank;
  Matrix<Scalar> sparse;
  int iterations = 0;
  Scalar final_residual = Scalar(0);  // ||X - L - S||_F / ||X||_F
  Index rank_estimate = 0;            // singular values of L above 1e-9 * sigma_1
  Scalar sparsity = Scalar(0);        // fraction of S entries with |s| > 0
  bool converged = false;
};

/// The parameter-free coupling weight: 1/sqrt(max(d, t)).
template <class Scalar = double>
Scalar default_gamma(Index d, Index t) {
  if (d < 1 || t < 1) throw ParameterError("default_gamma: dimensions must be >= 1");
  return Scalar(1) / std::sqrt(static_cast<Scalar>(std::max(d, t)));
}

/// Shrinkage operator: sign(x) * max(|x| - tau, 0).
template <class Scalar>
Scalar soft_threshold(Scalar x, Scalar tau) {
  const Scalar mag = std::abs(x) - tau;
  return mag > Scalar(0) ? (x > Scalar(0) ? mag : -mag) : Scalar(0);
}

namespace detail {

template <class Scalar>
struct SvtResult {
  Matrix<Scalar> value;
  Vector<Scalar> shrunk_singular_values;
};

template <class Scalar>
SvtResult<Scalar> svt_with_values(const Matrix<Scalar>& m, Scalar tau) {
  Eigen::BDCSVD<Matrix<Scalar>> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("svt: SVD failed to converge");
  Vector<Scalar> s = svd.singularValues();
  for (Index i = 0; i < s.size(); ++i) s[i] = soft_threshold(s[i], tau);
  SvtResult<Scalar> out;
  out.value = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  out.shrunk_singular_values = std::move(s);
  return out;
}

}  // namespace detail

/// Singular value thresholding: the proximal operator of the nuclear norm.
template <class Derived>
Matrix<typename Derived::Scalar> svt(const Eigen::MatrixBase<Derived>& m,
                                     typename Derived::Scalar tau) {
  if (tau < typename Derived::Scalar(0)) throw ParameterError("svt: tau must be nonnegative");
  return detail::svt_with_values<typename Derived::Scalar>(m.derived(), tau).value;
}

/// Decomposes x into low-rank + sparse. Deterministic for fixed input and
/// config; non-convergence is reported through the `converged` flag rather
/// than an error so long pipelines can continue with diagnostics.
template <class Scalar>
PcpResult<Scalar> pcp_decompose(const Matrix<Scalar>& x, const PcpConfig<Scalar>& cfg = {}) {
  cfg.validate();
  const Index d = x.rows(), t = x.cols();
  if (d == 0 || t == 0) throw ParameterError("pcp: empty matrix");
  if (!x.allFinite()) throw NumericalError("pcp: input contains non-finite values");

  PcpResult<Scalar> res;
  const Scalar norm_x = x.norm();
  if (norm_x == Scalar(0)) {
    res.low_rank = Matrix<Scalar>::Zero(d, t);
    res.sparse = Matrix<Scalar>::Zero(d, t);
    res.iterations = 1;
    res.converged = true;
    return res;
  }

  const Scalar gamma = cfg.gamma > Scalar(0) ? cfg.gamma : default_gamma<Scalar>(d, t);

  Eigen::BDCSVD<Matrix<Scalar>> svd0(x);
  const Scalar sigma1 = svd0.singularValues()[0];
  Scalar mu = cfg.mu > Scalar(0) ? cfg.mu : Scalar(1.25) / sigma1;
  const Scalar mu_cap = cfg.mu_cap_factor * mu;

  // Dual scaling keeps the first iterates balanced between the two terms.
  const Scalar dual_norm = std::max(sigma1, x.cwiseAbs().maxCoeff() / gamma);
  Matrix<Scalar> y = x / dual_norm;
  Matrix<Scalar> s = Matrix<Scalar>::Zero(d, t);
  Matrix<Scalar> l = Matrix<Scalar>::Zero(d, t);
  Vector<Scalar> l_singular;

  Scalar rel_res = std::numeric_limits<Scalar>::infinity();
  int it = 0;
  while (it < cfg.max_iter) {
    ++it;
    auto svt_res = detail::svt_with_values<Scalar>(x - s + y / mu, Scalar(1) / mu);
    l = std::move(svt_res.value);
    l_singular = std::move(svt_res.shrunk_singular_values);
    s = (x - l + y / mu).unaryExpr([&](Scalar v) { return soft_threshold(v, gamma / mu); });
    Matrix<Scalar> r = x - l - s;
    y += mu * r;
    rel_res = r.norm() / norm_x;
    if (!std::isfinite(static_cast<double>(rel_res)))
      throw NumericalError("pcp: non-finite residual at iteration " + std::to_string(it));
    if (rel_res <= cfg.tol) {
      res.converged = true;
      break;
    }
    mu = std::min(mu * cfg.rho, mu_cap);
  }

  res.low_rank = std::move(l);
  res.sparse = std::move(s);
  res.iterations = it;
  res.final_residual = rel_res;
  const Scalar top = l_singular.size() > 0 ? l_singular[0] : Scalar(0);
  if (top > Scalar(0))
    res.rank_estimate =
        (l_singular.array() > Scalar(1e-9) * top).template cast<Index>().sum();
  res.sparsity = static_cast<Scalar>((res.sparse.array() != Scalar(0)).template cast<Index>().sum()) /
                 static_cast<Scalar>(d * t);
  return res;
}

}  // namespace echodec
