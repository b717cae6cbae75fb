#pragma once

// Rank selection (reconstruction MSE against a per-row column permutation,
// plus cophenetic stability across restarts) and smoothness selection
// (L-curve corner).

#include <echodec/linkage.hpp>
#include <echodec/rng.hpp>
#include <echodec/tsnmf.hpp>
#include <echodec/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace echodec {

namespace detail {

/// Quantile with linear interpolation on the sorted sample (q in [0,1]).
template <class Scalar>
Scalar quantile(std::vector<Scalar> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return static_cast<Scalar>((1.0 - frac) * static_cast<double>(v[lo]) +
                             frac * static_cast<double>(v[hi]));
}

template <class Scalar>
Scalar median(const std::vector<Scalar>& v) {
  return quantile(v, 0.5);
}

template <class Scalar>
Scalar interquartile_range(const std::vector<Scalar>& v) {
  return quantile(v, 0.75) - quantile(v, 0.25);
}

/// Pearson correlation of two equally long vectors. Exactly 1 when the
/// inputs are bitwise identical (the denominator is taken as the common
/// variance instead of sqrt of the product, which would reintroduce
/// rounding).
template <class Scalar>
Scalar pearson(const std::vector<Scalar>& a, const std::vector<Scalar>& b) {
  const auto n = static_cast<Scalar>(a.size());
  Scalar ma = Scalar(0), mb = Scalar(0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  Scalar sab = Scalar(0), saa = Scalar(0), sbb = Scalar(0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Scalar da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == Scalar(0) || sbb == Scalar(0))
    throw ParameterError("pearson: degenerate correlation (constant input)");
  const Scalar denom = saa == sbb ? saa : std::sqrt(saa * sbb);
  return sab / denom;
}

}  // namespace detail

/// Permutes each row of x by an independent uniform permutation of the
/// columns; every row keeps its multiset of values.
template <class Scalar>
Matrix<Scalar> permute_rows_independently(const Matrix<Scalar>& x, std::uint64_t seed) {
  Matrix<Scalar> out = x;
  SplitMix64 rng(seed);
  const Index t = x.cols();
  for (Index r = 0; r < x.rows(); ++r) {
    // Fisher-Yates within the row.
    for (Index j = t - 1; j > 0; --j) {
      const auto pick = static_cast<Index>(rng.next_below(static_cast<std::uint64_t>(j + 1)));
      std::swap(out(r, j), out(r, pick));
    }
  }
  return out;
}

/// Hard cluster membership from activations: day i and day j connect when
/// the same component has the largest activation for both (ties resolved
/// toward the lowest component index).
template <class Scalar>
Matrix<Scalar> connectivity_matrix(const Matrix<Scalar>& h) {
  if (h.size() == 0) throw ParameterError("connectivity_matrix: empty matrix");
  if (h.minCoeff() < Scalar(0)) throw ParameterError("connectivity_matrix: activations must be >= 0");
  const Index k = h.rows(), t = h.cols();
  std::vector<Index> label(static_cast<std::size_t>(t), 0);
  for (Index j = 0; j < t; ++j) {
    Index arg = 0;
    for (Index i = 1; i < k; ++i)
      if (h(i, j) > h(arg, j)) arg = i;
    label[static_cast<std::size_t>(j)] = arg;
  }
  Matrix<Scalar> c(t, t);
  for (Index i = 0; i < t; ++i)
    for (Index j = 0; j < t; ++j)
      c(i, j) = label[static_cast<std::size_t>(i)] == label[static_cast<std::size_t>(j)]
                    ? Scalar(1)
                    : Scalar(0);
  return c;
}

/// Consensus over restarts weighted by reconstruction quality:
/// w_n = (max e - e(n)) / (max e - min e), uniform when all runs tie.
template <class Scalar>
Matrix<Scalar> weighted_consensus(const NmfEnsemble<Scalar>& ensemble) {
  const auto n = ensemble.models.size();
  if (n == 0) throw ParameterError("weighted_consensus: empty ensemble");
  const auto& e = ensemble.mse_per_run;
  const Scalar emax = *std::max_element(e.begin(), e.end());
  const Scalar emin = *std::min_element(e.begin(), e.end());
  std::vector<Scalar> w(n, Scalar(1));
  if (emax > emin)
    for (std::size_t i = 0; i < n; ++i) w[i] = (emax - e[i]) / (emax - emin);
  Scalar wsum = Scalar(0);
  for (std::size_t i = 0; i < n; ++i) wsum += w[i];

  const Index t = ensemble.models.front().h.cols();
  Matrix<Scalar> acc = Matrix<Scalar>::Zero(t, t);
  for (std::size_t i = 0; i < n; ++i)
    acc += w[i] * connectivity_matrix(ensemble.models[i].h);
  return acc / wsum;
}

/// Cophenetic correlation of the consensus: Pearson correlation between the
/// dissimilarity 1 - consensus and the merge heights of its hierarchical
/// clustering, taken over all day pairs. 1 when assignments agree across
/// every run.
template <class Scalar>
Scalar cophenetic_coefficient(const Matrix<Scalar>& consensus,
                              LinkageMethod linkage = LinkageMethod::Average) {
  const Index t = consensus.rows();
  if (t != consensus.cols()) throw ParameterError("cophenetic_coefficient: square matrix required");
  if (t < 3) throw ParameterError("cophenetic_coefficient: undefined for fewer than 3 observations");
  for (Index i = 0; i < t; ++i) {
    if (std::abs(static_cast<double>(consensus(i, i) - Scalar(1))) > 1e-12)
      throw ParameterError("cophenetic_coefficient: consensus diagonal must be 1");
    for (Index j = i + 1; j < t; ++j)
      if (std::abs(static_cast<double>(consensus(i, j) - consensus(j, i))) > 1e-12)
        throw ParameterError("cophenetic_coefficient: consensus must be symmetric");
  }
  Matrix<Scalar> dis(t, t);
  for (Index i = 0; i < t; ++i)
    for (Index j = 0; j < t; ++j) dis(i, j) = Scalar(1) - consensus(i, j);
  const auto merges = linkage_cluster(dis, linkage);
  const Matrix<Scalar> coph = cophenetic_distances(merges, t);

  std::vector<Scalar> a, b;
  a.reserve(static_cast<std::size_t>(t * (t - 1) / 2));
  b.reserve(a.capacity());
  for (Index i = 0; i < t; ++i)
    for (Index j = i + 1; j < t; ++j) {
      a.push_back(dis(i, j));
      b.push_back(coph(i, j));
    }
  return detail::pearson(a, b);
}

template <class Scalar>
struct RankScanReport {
  std::vector<int> ranks;
  std::vector<Scalar> mse_data;      // median MSE, normalized by the lowest-rank median
  std::vector<Scalar> mse_perm;      // same for the permuted data
  std::vector<Scalar> mse_data_raw;  // un-normalized medians
  std::vector<Scalar> mse_perm_raw;
  std::vector<Scalar> iqr_data;      // run-to-run spread (noise tolerance)
  std::vector<Scalar> iqr_perm;
  std::vector<Scalar> cophenetic;    // NaN where the coefficient is undefined
  int n_runs = 0;
  int knee_advisory = 0;  // 0 = no knee detected; advisory only
};

/// Multistart fits across a list of ranks on the data and on its per-row
/// column permutation. Medians are over the restarts of each ensemble and
/// each curve is normalized by its own value at the first (lowest) rank.
template <class Scalar>
RankScanReport<Scalar> mse_rank_scan(const Matrix<Scalar>& x, const std::vector<int>& ranks,
                                     const TsnmfConfig<Scalar>& cfg, int n_threads = 1) {
  if (ranks.empty()) throw ParameterError("mse_rank_scan: empty rank list");
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] < 1) throw ParameterError("mse_rank_scan: ranks must be >= 1");
    if (i > 0 && ranks[i] <= ranks[i - 1])
      throw ParameterError("mse_rank_scan: ranks must be ascending");
  }
  const Matrix<Scalar> xp = permute_rows_independently(x, split_seed(cfg.seed, 1));

  RankScanReport<Scalar> report;
  report.ranks = ranks;
  report.n_runs = cfg.n_restarts;
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    TsnmfConfig<Scalar> c = cfg;
    c.rank = ranks[i];
    c.seed = split_seed(cfg.seed, 2 + 2 * static_cast<std::uint64_t>(i));
    const auto ens_data = multistart_fit(x, c, n_threads);
    c.seed = split_seed(cfg.seed, 3 + 2 * static_cast<std::uint64_t>(i));
    const auto ens_perm = multistart_fit(xp, c, n_threads);

    report.mse_data_raw.push_back(detail::median(ens_data.mse_per_run));
    report.mse_perm_raw.push_back(detail::median(ens_perm.mse_per_run));
    report.iqr_data.push_back(detail::interquartile_range(ens_data.mse_per_run));
    report.iqr_perm.push_back(detail::interquartile_range(ens_perm.mse_per_run));
    Scalar coeff = std::numeric_limits<Scalar>::quiet_NaN();
    try {
      coeff = cophenetic_coefficient(weighted_consensus(ens_data));
    } catch (const ParameterError&) {
      // Degenerate at this rank (e.g. a single cluster); recorded as NaN.
    }
    report.cophenetic.push_back(coeff);
  }
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    report.mse_data.push_back(report.mse_data_raw[i] - report.mse_data_raw[0]);
    report.mse_perm.push_back(report.mse_perm_raw[i] - report.mse_perm_raw[0]);
  }
  // Advisory knee: the rank after which the data-curve drop first falls
  // below the permuted-curve drop.
  for (std::size_t i = 1; i < ranks.size(); ++i) {
    const Scalar drop_data = report.mse_data_raw[i - 1] - report.mse_data_raw[i];
    const Scalar drop_perm = report.mse_perm_raw[i - 1] - report.mse_perm_raw[i];
    if (drop_data < drop_perm) {
      report.knee_advisory = ranks[i - 1];
      break;
    }
  }
  return report;
}

template <class Scalar>
struct LCurveReport {
  std::vector<Scalar> etas;
  std::vector<Scalar> recon_cost;   // median ||X - WH||_F^2 per eta
  std::vector<Scalar> smooth_cost;  // median ||H Delta||_F^2 per eta
  std::vector<Scalar> iqr_recon;
  std::vector<Scalar> iqr_smooth;
  Scalar selected_eta = Scalar(0);
  std::size_t selected_index = 0;
};

/// Multistart fits across a smoothness sweep; the corner is the point of
/// maximum discrete (Menger) curvature of the log-log median curve. The
/// full curve is part of the report so callers can override the choice.
template <class Scalar>
LCurveReport<Scalar> l_curve_scan(const Matrix<Scalar>& x, const std::vector<Scalar>& etas,
                                  const TsnmfConfig<Scalar>& cfg, int n_threads = 1) {
  if (etas.empty()) throw ParameterError("l_curve_scan: empty eta list");
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(etas[i] > Scalar(0))) throw ParameterError("l_curve_scan: etas must be positive");
    if (i > 0 && etas[i] <= etas[i - 1]) throw ParameterError("l_curve_scan: etas must be ascending");
  }

  LCurveReport<Scalar> report;
  report.etas = etas;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    TsnmfConfig<Scalar> c = cfg;
    c.eta = etas[i];
    c.seed = split_seed(cfg.seed, 2 + static_cast<std::uint64_t>(i));
    const auto ens = multistart_fit(x, c, n_threads);
    std::vector<Scalar> recon, smooth;
    recon.reserve(ens.models.size());
    smooth.reserve(ens.models.size());
    for (const auto& m : ens.models) {
      recon.push_back(m.cost_parts.reconstruction);
      smooth.push_back(detail::row_differences(m.h).squaredNorm());
    }
    report.recon_cost.push_back(detail::median(recon));
    report.smooth_cost.push_back(detail::median(smooth));
    report.iqr_recon.push_back(detail::interquartile_range(recon));
    report.iqr_smooth.push_back(detail::interquartile_range(smooth));
  }

  if (etas.size() < 3) {
    // No curvature with fewer than three points; fall back to the least
    // regularized sweep member.
    report.selected_index = 0;
    report.selected_eta = etas[0];
    return report;
  }
  const auto log_clamped = [](Scalar v) {
    return std::log(std::max(static_cast<double>(v), 1e-300));
  };
  Scalar best_curv = Scalar(-1);
  std::size_t best = 1;
  for (std::size_t i = 1; i + 1 < etas.size(); ++i) {
    const double x0 = log_clamped(report.recon_cost[i - 1]), y0 = log_clamped(report.smooth_cost[i - 1]);
    const double x1 = log_clamped(report.recon_cost[i]), y1 = log_clamped(report.smooth_cost[i]);
    const double x2 = log_clamped(report.recon_cost[i + 1]), y2 = log_clamped(report.smooth_cost[i + 1]);
    const double area2 = std::abs((x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0));
    const double la = std::hypot(x1 - x0, y1 - y0);
    const double lb = std::hypot(x2 - x1, y2 - y1);
    const double lc = std::hypot(x2 - x0, y2 - y0);
    const double denom = la * lb * lc;
    const Scalar curv = denom > 0.0 ? static_cast<Scalar>(2.0 * area2 / denom) : Scalar(0);
    if (curv > best_curv) {
      best_curv = curv;
      best = i;
    }
  }
  report.selected_index = best;
  report.selected_eta = etas[best];
  return report;
}

}  // namespace echodec
