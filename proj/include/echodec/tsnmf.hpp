#pragma once

// Temporally smooth Nonnegative Matrix Factorization:
//
//   Psi(W, H) = ||X - WH||_F^2 + eta ||H D||_F^2 + lambda ||W||_1
//             + beta_w ||W||_F^2 + beta_h ||H||_F^2,   W, H >= 0,
//
// where D is the forward-difference operator on the day axis. Solved by
// Proximal Alternating Linearized Minimization with Lipschitz step sizes,
// plus multi-start machinery with deterministic per-run seeds.

#include <echodec/rng.hpp>
#include <echodec/types.hpp>

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace echodec {

template <class Scalar>
struct TsnmfConfig {
  Index rank = 1;
  Scalar eta = Scalar(0);     // smoothness weight on ||H D||_F^2
  Scalar lambda = Scalar(0);  // l1 weight on W
  Scalar beta_w = Scalar(0);  // Frobenius weight on W
  Scalar beta_h = Scalar(0);  // Frobenius weight on H
  Scalar stop_ratio = Scalar(0.005);
  int stop_window = 5;
  int max_iter = 20000;
  int n_restarts = 320;
  std::uint64_t seed = 1;
  Scalar init_scale = Scalar(0);  // 0 = auto: sqrt(mean(X)/rank)
  Scalar safety = Scalar(1.01);   // margin on the Lipschitz step bound

  void validate() const {
    if (rank < 1) throw ParameterError("tsnmf: rank must be >= 1");
    if (eta < Scalar(0) || lambda < Scalar(0) || beta_w < Scalar(0) || beta_h < Scalar(0))
      throw ParameterError("tsnmf: weights must be nonnegative");
    if (!(stop_ratio > Scalar(0) && stop_ratio < Scalar(1)))
      throw ParameterError("tsnmf: stop_ratio must lie in (0, 1)");
    if (stop_window < 1) throw ParameterError("tsnmf: stop_window must be >= 1");
    if (max_iter < 1) throw ParameterError("tsnmf: max_iter must be >= 1");
    if (n_restarts < 1) throw ParameterError("tsnmf: n_restarts must be >= 1");
    if (init_scale < Scalar(0)) throw ParameterError("tsnmf: init_scale must be positive or 0 (auto)");
    if (!(safety > Scalar(1))) throw ParameterError("tsnmf: safety must be > 1");
  }
};

/// Weighted value of each cost term; the five parts sum to the total.
template <class Scalar>
struct CostBreakdown {
  Scalar reconstruction = Scalar(0);  // ||X - WH||_F^2
  Scalar smoothness = Scalar(0);      // eta ||H D||_F^2
  Scalar l1_w = Scalar(0);            // lambda ||W||_1
  Scalar frob_w = Scalar(0);          // beta_w ||W||_F^2
  Scalar frob_h = Scalar(0);          // beta_h ||H||_F^2

  Scalar total() const { return reconstruction + smoothness + l1_w + frob_w + frob_h; }
};

template <class Scalar>
struct NmfModel {
  Matrix<Scalar> w;  // D x K, >= 0
  Matrix<Scalar> h;  // K x T, >= 0
  std::vector<Scalar> cost_trace;
  CostBreakdown<Scalar> cost_parts;
  std::uint64_t seed = 0;  // the restart's derived seed
  int iterations = 0;

  Scalar final_cost() const { return cost_trace.back(); }
};

template <class Scalar>
struct NmfEnsemble {
  std::vector<NmfModel<Scalar>> models;
  std::size_t best_index = 0;        // minimum final cost, ties to lowest index
  std::vector<Scalar> mse_per_run;   // reconstruction MSE e(n)
};

/// The T x (T-1) forward-difference operator: column j carries +1 at row j
/// and -1 at row j+1, so (H Delta)_{k,j} = H_{k,j} - H_{k,j+1}.
template <class Scalar>
Matrix<Scalar> difference_matrix(Index t) {
  if (t < 2) throw ParameterError("difference_matrix: need at least two columns");
  Matrix<Scalar> delta = Matrix<Scalar>::Zero(t, t - 1);
  for (Index j = 0; j + 1 < t; ++j) {
    delta(j, j) = Scalar(1);
    delta(j + 1, j) = Scalar(-1);
  }
  return delta;
}

namespace detail {

/// H * Delta without materializing Delta: K x (T-1) successive differences.
template <class Scalar>
Matrix<Scalar> row_differences(const Matrix<Scalar>& h) {
  const Index t = h.cols();
  if (t < 2) return Matrix<Scalar>(h.rows(), 0);
  return h.leftCols(t - 1) - h.rightCols(t - 1);
}

/// U * Delta^T for U = H * Delta: the gradient stencil of the smoothness
/// term, K x T.
template <class Scalar>
Matrix<Scalar> difference_gram_apply(const Matrix<Scalar>& u, Index t) {
  Matrix<Scalar> v = Matrix<Scalar>::Zero(u.rows(), t);
  if (u.cols() == 0) return v;
  v.leftCols(t - 1) = u;
  v.rightCols(t - 1) -= u;
  return v;
}

/// Largest eigenvalue of Delta Delta^T (the free-boundary second
/// difference): 2 - 2 cos(pi (T-1)/T).
template <class Scalar>
Scalar difference_gram_norm(Index t) {
  if (t < 2) return Scalar(0);
  const double theta = std::numbers::pi * static_cast<double>(t - 1) / static_cast<double>(t);
  return static_cast<Scalar>(2.0 - 2.0 * std::cos(theta));
}

/// Spectral norm of a small symmetric PSD matrix.
template <class Scalar>
Scalar sym_spectral_norm(const Matrix<Scalar>& a) {
  if (a.rows() == 1) return std::abs(a(0, 0));
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

template <class Scalar>
CostBreakdown<Scalar> cost_from_residual(const Matrix<Scalar>& e, const Matrix<Scalar>& u,
                                         const Matrix<Scalar>& w, const Matrix<Scalar>& h,
                                         const TsnmfConfig<Scalar>& cfg) {
  CostBreakdown<Scalar> parts;
  parts.reconstruction = e.squaredNorm();
  parts.smoothness = cfg.eta > Scalar(0) ? cfg.eta * u.squaredNorm() : Scalar(0);
  parts.l1_w = cfg.lambda > Scalar(0) ? cfg.lambda * w.cwiseAbs().sum() : Scalar(0);
  parts.frob_w = cfg.beta_w > Scalar(0) ? cfg.beta_w * w.squaredNorm() : Scalar(0);
  parts.frob_h = cfg.beta_h > Scalar(0) ? cfg.beta_h * h.squaredNorm() : Scalar(0);
  return parts;
}

template <class F>
void parallel_runs(std::size_t n, int threads, F&& body) {
  threads = std::max(1, threads);
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        body(i);
      }
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

/// Evaluates the tsNMF cost and its per-term breakdown.
template <class Scalar>
std::pair<Scalar, CostBreakdown<Scalar>> tsnmf_cost(const Matrix<Scalar>& x, const Matrix<Scalar>& w,
                                                    const Matrix<Scalar>& h,
                                                    const TsnmfConfig<Scalar>& cfg) {
  if (w.rows() != x.rows() || h.cols() != x.cols() || w.cols() != h.rows())
    throw ParameterError("tsnmf_cost: factor shapes do not conform with x");
  const Matrix<Scalar> e = x - w * h;
  const Matrix<Scalar> u = detail::row_differences(h);
  const auto parts = detail::cost_from_residual(e, u, w, h, cfg);
  return {parts.total(), parts};
}

/// Analytic gradients of the smooth part of the cost (everything except
/// the l1 term) with respect to W and H.
template <class Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> tsnmf_smooth_gradients(const Matrix<Scalar>& x,
                                                                 const Matrix<Scalar>& w,
                                                                 const Matrix<Scalar>& h,
                                                                 const TsnmfConfig<Scalar>& cfg) {
  const Matrix<Scalar> e = w * h - x;
  Matrix<Scalar> gw = Scalar(2) * (e * h.transpose());
  if (cfg.beta_w > Scalar(0)) gw += Scalar(2) * cfg.beta_w * w;
  Matrix<Scalar> gh = Scalar(2) * (w.transpose() * e);
  if (cfg.eta > Scalar(0))
    gh += Scalar(2) * cfg.eta * detail::difference_gram_apply(detail::row_differences(h), h.cols());
  if (cfg.beta_h > Scalar(0)) gh += Scalar(2) * cfg.beta_h * h;
  return {std::move(gw), std::move(gh)};
}

/// The windowed stopping rule: fires when the latest cost decrease falls
/// below stop_ratio times the running average decrease over the window.
/// Needs window+1 trace values to have an opinion.
template <class Scalar>
bool stopping_rule(std::span<const Scalar> cost_trace, Scalar stop_ratio, int stop_window) {
  const auto n = static_cast<Index>(cost_trace.size());
  if (n < static_cast<Index>(stop_window) + 1) return false;
  Scalar sum = Scalar(0);
  for (Index j = n - stop_window; j < n; ++j) sum += cost_trace[j - 1] - cost_trace[j];
  const Scalar mean = sum / static_cast<Scalar>(stop_window);
  const Scalar latest = cost_trace[n - 2] - cost_trace[n - 1];
  return latest < stop_ratio * mean;
}

template <class Scalar>
bool stopping_rule(const std::vector<Scalar>& cost_trace, Scalar stop_ratio, int stop_window) {
  return stopping_rule(std::span<const Scalar>(cost_trace), stop_ratio, stop_window);
}

/// One PALM descent from an explicit initialization. Alternates a
/// linearized step on W (prox: l1 shrinkage then clamp at zero) and on H
/// (prox: clamp at zero); step constants come from the Lipschitz bounds of
/// the partial gradients with a safety margin.
template <class Scalar>
NmfModel<Scalar> palm_fit_from_init(const Matrix<Scalar>& x, const TsnmfConfig<Scalar>& cfg,
                                    Matrix<Scalar> w, Matrix<Scalar> h, std::uint64_t seed_label = 0) {
  cfg.validate();
  const Index d = x.rows(), t = x.cols(), k = cfg.rank;
  if (d == 0 || t == 0) throw ParameterError("palm_fit: empty matrix");
  if (!x.allFinite()) throw NumericalError("palm_fit: input contains non-finite values");
  if (x.minCoeff() < Scalar(0)) throw ParameterError("palm_fit: input must be nonnegative");
  if (w.rows() != d || w.cols() != k || h.rows() != k || h.cols() != t)
    throw ParameterError("palm_fit: initialization shape mismatch");

  const Scalar ddt_norm = detail::difference_gram_norm<Scalar>(t);
  const Scalar floor = std::numeric_limits<Scalar>::min();

  NmfModel<Scalar> model;
  model.seed = seed_label;

  Matrix<Scalar> e = w * h - x;
  Matrix<Scalar> u = detail::row_differences(h);
  CostBreakdown<Scalar> parts = detail::cost_from_residual(e, u, w, h, cfg);
  model.cost_trace.push_back(parts.total());

  for (int it = 0; it < cfg.max_iter; ++it) {
    // W block: half-gradient (WH - X)H^T + beta_w W, step 1/c_w.
    const Matrix<Scalar> hht = h * h.transpose();
    const Scalar c_w =
        std::max(Scalar(2) * (detail::sym_spectral_norm(hht) + cfg.beta_w) * cfg.safety, floor);
    Matrix<Scalar> gw = e * h.transpose();
    if (cfg.beta_w > Scalar(0)) gw += cfg.beta_w * w;
    if (cfg.lambda > Scalar(0))
      w = ((w - gw / c_w).array() - cfg.lambda / (Scalar(2) * c_w)).matrix();
    else
      w -= gw / c_w;
    w = w.cwiseMax(Scalar(0));

    e = w * h - x;

    // H block: half-gradient W^T(WH - X) + eta H Delta Delta^T + beta_h H.
    const Matrix<Scalar> wtw = w.transpose() * w;
    const Scalar c_h = std::max(
        Scalar(2) * (detail::sym_spectral_norm(wtw) + cfg.eta * ddt_norm + cfg.beta_h) * cfg.safety,
        floor);
    Matrix<Scalar> gh = w.transpose() * e;
    if (cfg.eta > Scalar(0)) gh += cfg.eta * detail::difference_gram_apply(u, t);
    if (cfg.beta_h > Scalar(0)) gh += cfg.beta_h * h;
    h = (h - gh / c_h).cwiseMax(Scalar(0));

    e = w * h - x;
    u = detail::row_differences(h);
    parts = detail::cost_from_residual(e, u, w, h, cfg);
    const Scalar cost = parts.total();
    if (!std::isfinite(static_cast<double>(cost)))
      throw NumericalError("palm_fit: non-finite cost at iteration " + std::to_string(it + 1));
    model.cost_trace.push_back(cost);

    if (stopping_rule(std::span<const Scalar>(model.cost_trace), cfg.stop_ratio, cfg.stop_window))
      break;
    // Numeric fixed point: a full window of exactly-zero decreases means
    // the ratio rule (0 < 0) can never fire.
    if (static_cast<int>(model.cost_trace.size()) > cfg.stop_window) {
      bool all_zero = true;
      const std::size_t n = model.cost_trace.size();
      for (int j = 0; j < cfg.stop_window && all_zero; ++j)
        all_zero = model.cost_trace[n - 2 - j] - model.cost_trace[n - 1 - j] == Scalar(0);
      if (all_zero) break;
    }
  }

  model.w = std::move(w);
  model.h = std::move(h);
  model.cost_parts = parts;
  model.iterations = static_cast<int>(model.cost_trace.size()) - 1;
  return model;
}

/// PALM descent from the seeded random initialization: W, H entries i.i.d.
/// uniform on [0, s) with s = sqrt(mean(X)/K) unless overridden, so that
/// E[WH] is on the scale of mean(X).
template <class Scalar>
NmfModel<Scalar> palm_fit(const Matrix<Scalar>& x, const TsnmfConfig<Scalar>& cfg, std::uint64_t seed) {
  cfg.validate();
  const Index d = x.rows(), t = x.cols(), k = cfg.rank;
  if (d == 0 || t == 0) throw ParameterError("palm_fit: empty matrix");
  if (!x.allFinite()) throw NumericalError("palm_fit: input contains non-finite values");
  if (x.minCoeff() < Scalar(0)) throw ParameterError("palm_fit: input must be nonnegative");

  const Scalar scale = cfg.init_scale > Scalar(0)
                           ? cfg.init_scale
                           : std::sqrt(x.mean() / static_cast<Scalar>(k));
  SplitMix64 rng(seed);
  Matrix<Scalar> w(d, k), h(k, t);
  for (Index j = 0; j < k; ++j)
    for (Index i = 0; i < d; ++i) w(i, j) = scale * static_cast<Scalar>(rng.next_double());
  for (Index j = 0; j < t; ++j)
    for (Index i = 0; i < k; ++i) h(i, j) = scale * static_cast<Scalar>(rng.next_double());
  return palm_fit_from_init(x, cfg, std::move(w), std::move(h), seed);
}

/// Runs n_restarts independent PALM descents with per-run seeds derived by
/// the counter split of cfg.seed; the ensemble contents are independent of
/// scheduling, so any thread count gives identical results.
template <class Scalar>
NmfEnsemble<Scalar> multistart_fit(const Matrix<Scalar>& x, const TsnmfConfig<Scalar>& cfg,
                                   int n_threads = 1) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_restarts);
  NmfEnsemble<Scalar> ens;
  ens.models.resize(n);
  std::vector<std::exception_ptr> errors(n);

  detail::parallel_runs(n, n_threads, [&](std::size_t i) {
    const std::uint64_t run_seed = split_seed(cfg.seed, static_cast<std::uint64_t>(i));
    try {
      ens.models[i] = palm_fit(x, cfg, run_seed);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });

  for (std::size_t i = 0; i < n; ++i)
    if (errors[i]) {
      const std::uint64_t run_seed = split_seed(cfg.seed, static_cast<std::uint64_t>(i));
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        throw NumericalError("multistart_fit: restart " + std::to_string(i) + " (seed " +
                             std::to_string(run_seed) + ") failed: " + e.what());
      }
    }

  const Scalar dt = static_cast<Scalar>(x.rows() * x.cols());
  ens.mse_per_run.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    ens.mse_per_run[i] = ens.models[i].cost_parts.reconstruction / dt;
  ens.best_index = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (ens.models[i].final_cost() < ens.models[ens.best_index].final_cost()) ens.best_index = i;
  return ens;
}

/// Unit-norm patterns with the norm folded into the activations:
/// w_k' = w_k/||w_k||, h_k' = ||w_k|| h_k, leaving W'H' = WH. All-zero
/// pattern columns pass through with zero activation.
template <class Scalar>
struct ScaledFactors {
  Matrix<Scalar> w;
  Matrix<Scalar> h;
};

template <class Scalar>
ScaledFactors<Scalar> scale_normalize(const NmfModel<Scalar>& model) {
  ScaledFactors<Scalar> out{model.w, model.h};
  for (Index j = 0; j < out.w.cols(); ++j) {
    const Scalar norm = out.w.col(j).norm();
    if (norm > Scalar(0)) out.w.col(j) /= norm;
    out.h.row(j) *= norm;
  }
  return out;
}

}  // namespace echodec
