#pragma once

// Binned multi-frequency echogram data model and the restructuring steps
// that produce the matrix consumed by the decomposition solvers: MVBS
// binning, missing-cell fill, flatten/unflatten, nonnegativity shift.

#include <echodec/dates.hpp>
#include <echodec/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace echodec {

/// Feature ordering of a flattened daily echogram: depth varies fastest,
/// then ping, then frequency. One flattened column has
/// n_depth * n_ping * n_freq entries.
struct FeatureLayout {
  Index n_depth = 0;
  Index n_ping = 0;
  Index n_freq = 0;

  Index features() const { return n_depth * n_ping * n_freq; }

  /// Row index of (depth d, ping p, frequency f) within a flattened column.
  Index row(Index d, Index p, Index f) const { return d + n_depth * (p + n_ping * f); }

  bool operator==(const FeatureLayout&) const = default;
};

/// 4-way array of binned backscatter: depth x within-day time x frequency
/// x day, with axis metadata and a per-cell validity mask. Storage order
/// matches FeatureLayout (depth fastest, day slowest), so one day is a
/// contiguous block identical to its flattened column.
template <class Scalar>
struct EchogramCube {
  std::vector<Scalar> values;
  std::vector<std::uint8_t> missing;  // 1 = missing cell
  Vector<Scalar> depth_axis;          // bin centers, m, ascending uniform
  Vector<Scalar> time_axis;           // bin centers, seconds since midnight UTC
  Vector<Scalar> freq_axis;           // kHz, in stacking order
  std::vector<std::string> day_axis;  // ISO-8601 dates, strictly increasing
  Scalar depth_bin_m = Scalar(0);     // declared bin sizes
  Scalar time_bin_s = Scalar(0);

  Index n_depth() const { return depth_axis.size(); }
  Index n_ping() const { return time_axis.size(); }
  Index n_freq() const { return freq_axis.size(); }
  Index n_day() const { return static_cast<Index>(day_axis.size()); }
  Index size() const { return n_depth() * n_ping() * n_freq() * n_day(); }

  FeatureLayout layout() const { return {n_depth(), n_ping(), n_freq()}; }

  Index idx(Index d, Index p, Index f, Index t) const {
    return d + n_depth() * (p + n_ping() * (f + n_freq() * t));
  }
  Scalar& at(Index d, Index p, Index f, Index t) { return values[static_cast<std::size_t>(idx(d, p, f, t))]; }
  const Scalar& at(Index d, Index p, Index f, Index t) const {
    return values[static_cast<std::size_t>(idx(d, p, f, t))];
  }
  bool is_missing(Index d, Index p, Index f, Index t) const {
    return missing[static_cast<std::size_t>(idx(d, p, f, t))] != 0;
  }
  void set_missing(Index d, Index p, Index f, Index t, bool m) {
    missing[static_cast<std::size_t>(idx(d, p, f, t))] = m ? 1 : 0;
  }

  bool any_missing() const {
    return std::any_of(missing.begin(), missing.end(), [](std::uint8_t m) { return m != 0; });
  }

  static EchogramCube zeros(Index nd, Index np, Index nf, Index nt) {
    EchogramCube c;
    c.values.assign(static_cast<std::size_t>(nd * np * nf * nt), Scalar(0));
    c.missing.assign(c.values.size(), 0);
    c.depth_axis = Vector<Scalar>::Zero(nd);
    c.time_axis = Vector<Scalar>::Zero(np);
    c.freq_axis = Vector<Scalar>::Zero(nf);
    c.day_axis.assign(static_cast<std::size_t>(nt), std::string());
    return c;
  }

  /// Checks the structural invariants; throws DataError on violation.
  void validate() const {
    if (static_cast<Index>(values.size()) != size() || missing.size() != values.size())
      throw DataError("echogram cube: array dimensions do not match axis lengths");
    for (Index i = 0; i + 1 < n_depth(); ++i) {
      const Scalar step = depth_axis[i + 1] - depth_axis[i];
      if (!(step > Scalar(0)))
        throw DataError("echogram cube: depth axis not strictly increasing");
      if (std::abs(static_cast<double>(step - depth_bin_m)) > 1e-9)
        throw DataError("echogram cube: depth axis spacing differs from declared bin size");
    }
    for (Index i = 0; i + 1 < n_ping(); ++i)
      if (!(time_axis[i + 1] > time_axis[i]))
        throw DataError("echogram cube: time axis not strictly increasing");
    for (std::size_t i = 0; i + 1 < day_axis.size(); ++i)
      if (parse_iso_date(day_axis[i + 1]) <= parse_iso_date(day_axis[i]))
        throw DataError("echogram cube: day axis not strictly increasing");
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!missing[i] && !std::isfinite(static_cast<double>(values[i])))
        throw DataError("echogram cube: non-missing cell holds a non-finite value");
  }
};

/// D x T data matrix: one flattened day per column, plus the layout needed
/// to invert the flattening and the nonnegativity offset (0 when none).
template <class Scalar>
struct DataMatrix {
  Matrix<Scalar> values;
  FeatureLayout layout;
  std::vector<std::string> day_axis;
  Scalar offset = Scalar(0);
};

/// Calibrated Sv samples on a depth x time grid, one value matrix per
/// frequency. Times are seconds since midnight UTC of `day0` and may span
/// several days. NaN marks an absent sample.
template <class Scalar>
struct SvGrid {
  Vector<Scalar> depths;  // m, strictly increasing
  Vector<Scalar> times;   // s since midnight of day0, strictly increasing
  std::string day0;       // ISO-8601
  Vector<Scalar> freqs;   // kHz
  std::vector<Matrix<Scalar>> sv;  // one n_depth x n_time matrix per freq, dB
};

/// Bins calibrated Sv into mean volume backscattering strength over
/// non-overlapping depth/time cells. Averaging happens in the linear
/// domain; the result is converted back to dB. Depth bins are anchored at
/// the first depth coordinate; time bins are anchored at midnight.
/// Within-day time bins and days that contain no samples at all are
/// dropped from the output axes; cells without samples are flagged missing.
template <class Scalar>
EchogramCube<Scalar> bin_mvbs(const SvGrid<Scalar>& grid, Scalar depth_bin_m, Scalar time_bin_s) {
  if (!(depth_bin_m > Scalar(0)) || !(time_bin_s > Scalar(0)))
    throw ParameterError("bin_mvbs: bin sizes must be positive");
  const Index nd_in = grid.depths.size();
  const Index nt_in = grid.times.size();
  const Index nf = grid.freqs.size();
  if (nd_in == 0 || nt_in == 0 || nf == 0) throw DataError("bin_mvbs: empty sample grid");
  if (static_cast<Index>(grid.sv.size()) != nf)
    throw DataError("bin_mvbs: sv matrices do not match frequency axis");
  for (Index i = 0; i + 1 < nd_in; ++i)
    if (!(grid.depths[i + 1] > grid.depths[i]))
      throw DataError("bin_mvbs: depth coordinates not strictly increasing");
  for (Index i = 0; i + 1 < nt_in; ++i)
    if (!(grid.times[i + 1] > grid.times[i]))
      throw DataError("bin_mvbs: time coordinates not strictly increasing");
  for (Index f = 0; f < nf; ++f)
    if (grid.sv[static_cast<std::size_t>(f)].rows() != nd_in ||
        grid.sv[static_cast<std::size_t>(f)].cols() != nt_in)
      throw DataError("bin_mvbs: sv matrix shape does not match coordinates");

  constexpr double kSecPerDay = 86400.0;
  const double d0 = static_cast<double>(grid.depths[0]);

  // First pass: which depth bins, within-day time bins, and days hold data.
  std::vector<Index> depth_bin(static_cast<std::size_t>(nd_in));
  std::vector<Index> time_bin(static_cast<std::size_t>(nt_in));
  std::vector<long long> day_of(static_cast<std::size_t>(nt_in));
  Index max_depth_bin = 0;
  for (Index i = 0; i < nd_in; ++i) {
    depth_bin[static_cast<std::size_t>(i)] =
        static_cast<Index>(std::floor((static_cast<double>(grid.depths[i]) - d0) /
                                      static_cast<double>(depth_bin_m)));
    max_depth_bin = std::max(max_depth_bin, depth_bin[static_cast<std::size_t>(i)]);
  }
  for (Index j = 0; j < nt_in; ++j) {
    const double t = static_cast<double>(grid.times[j]);
    const long long day = static_cast<long long>(std::floor(t / kSecPerDay));
    const double sec = t - kSecPerDay * static_cast<double>(day);
    day_of[static_cast<std::size_t>(j)] = day;
    time_bin[static_cast<std::size_t>(j)] =
        static_cast<Index>(std::floor(sec / static_cast<double>(time_bin_s)));
  }

  std::set<Index> used_time_bins;
  std::set<long long> used_days;
  for (Index f = 0; f < nf; ++f) {
    const auto& m = grid.sv[static_cast<std::size_t>(f)];
    for (Index j = 0; j < nt_in; ++j)
      for (Index i = 0; i < nd_in; ++i)
        if (std::isfinite(static_cast<double>(m(i, j)))) {
          used_time_bins.insert(time_bin[static_cast<std::size_t>(j)]);
          used_days.insert(day_of[static_cast<std::size_t>(j)]);
        }
  }
  if (used_days.empty()) throw DataError("bin_mvbs: no finite samples");

  std::map<Index, Index> time_index;
  for (Index b : used_time_bins) time_index.emplace(b, static_cast<Index>(time_index.size()));
  std::map<long long, Index> day_index;
  for (long long d : used_days) day_index.emplace(d, static_cast<Index>(day_index.size()));

  const Index nd = max_depth_bin + 1;
  const Index np = static_cast<Index>(used_time_bins.size());
  const Index nt = static_cast<Index>(used_days.size());

  auto cube = EchogramCube<Scalar>::zeros(nd, np, nf, nt);
  cube.depth_bin_m = depth_bin_m;
  cube.time_bin_s = time_bin_s;
  for (Index k = 0; k < nd; ++k)
    cube.depth_axis[k] = static_cast<Scalar>(d0) + (static_cast<Scalar>(k) + Scalar(0.5)) * depth_bin_m;
  {
    Index k = 0;
    for (Index b : used_time_bins)
      cube.time_axis[k++] = (static_cast<Scalar>(b) + Scalar(0.5)) * time_bin_s;
  }
  {
    const long long day0 = parse_iso_date(grid.day0);
    Index k = 0;
    for (long long d : used_days) cube.day_axis[static_cast<std::size_t>(k++)] = format_iso_date(day0 + d);
  }

  std::vector<double> lin_sum(static_cast<std::size_t>(cube.size()), 0.0);
  std::vector<Index> count(static_cast<std::size_t>(cube.size()), 0);
  for (Index f = 0; f < nf; ++f) {
    const auto& m = grid.sv[static_cast<std::size_t>(f)];
    for (Index j = 0; j < nt_in; ++j) {
      const auto dit = day_index.find(day_of[static_cast<std::size_t>(j)]);
      const auto pit = time_index.find(time_bin[static_cast<std::size_t>(j)]);
      if (dit == day_index.end() || pit == time_index.end()) continue;
      for (Index i = 0; i < nd_in; ++i) {
        const double v = static_cast<double>(m(i, j));
        if (!std::isfinite(v)) continue;
        const Index cell = cube.idx(depth_bin[static_cast<std::size_t>(i)], pit->second, f, dit->second);
        lin_sum[static_cast<std::size_t>(cell)] += std::pow(10.0, v / 10.0);
        count[static_cast<std::size_t>(cell)] += 1;
      }
    }
  }
  for (std::size_t c = 0; c < lin_sum.size(); ++c) {
    if (count[c] == 0) {
      cube.values[c] = std::numeric_limits<Scalar>::quiet_NaN();
      cube.missing[c] = 1;
    } else {
      cube.values[c] =
          static_cast<Scalar>(10.0 * std::log10(lin_sum[c] / static_cast<double>(count[c])));
    }
  }
  cube.validate();
  return cube;
}

enum class FillKind { Fail, ColumnMean, Constant };

/// Missing-cell policy. Default is Fail: gap handling is the caller's
/// explicit choice.
template <class Scalar>
struct FillPolicy {
  FillKind kind = FillKind::Fail;
  Scalar constant = Scalar(0);

  static FillPolicy fail() { return {FillKind::Fail, Scalar(0)}; }
  static FillPolicy column_mean() { return {FillKind::ColumnMean, Scalar(0)}; }
  static FillPolicy constant_value(Scalar v) { return {FillKind::Constant, v}; }
};

/// Replaces missing cells per policy. `column_mean` fills a pixel from the
/// dB-domain arithmetic mean of the same (depth, time, frequency) cell
/// across the days where it is present.
template <class Scalar>
EchogramCube<Scalar> fill_missing(const EchogramCube<Scalar>& cube, const FillPolicy<Scalar>& policy) {
  EchogramCube<Scalar> out = cube;
  if (!cube.any_missing()) return out;
  switch (policy.kind) {
    case FillKind::Fail:
      throw DataError("fill_missing: cube has missing cells under the 'fail' policy");
    case FillKind::Constant:
      for (std::size_t i = 0; i < out.values.size(); ++i)
        if (out.missing[i]) {
          out.values[i] = policy.constant;
          out.missing[i] = 0;
        }
      return out;
    case FillKind::ColumnMean: {
      const Index nd = cube.n_depth(), np = cube.n_ping(), nf = cube.n_freq(), nt = cube.n_day();
      for (Index f = 0; f < nf; ++f)
        for (Index p = 0; p < np; ++p)
          for (Index d = 0; d < nd; ++d) {
            double sum = 0.0;
            Index n = 0;
            for (Index t = 0; t < nt; ++t)
              if (!cube.is_missing(d, p, f, t)) {
                sum += static_cast<double>(cube.at(d, p, f, t));
                ++n;
              }
            if (n == nt) continue;
            if (n == 0)
              throw DataError("fill_missing: pixel missing on every day cannot be column-mean filled");
            const Scalar mean = static_cast<Scalar>(sum / static_cast<double>(n));
            for (Index t = 0; t < nt; ++t)
              if (out.is_missing(d, p, f, t)) {
                out.at(d, p, f, t) = mean;
                out.set_missing(d, p, f, t, false);
              }
          }
      return out;
    }
  }
  throw ParameterError("fill_missing: unknown policy");
}

/// Restructures a complete cube into the D x T decomposition matrix:
/// column t is day t, rows ordered depth-major within ping, pings
/// concatenated per frequency, frequencies stacked in freq_axis order.
template <class Scalar>
DataMatrix<Scalar> flatten(const EchogramCube<Scalar>& cube) {
  if (cube.any_missing())
    throw DataError("flatten: cube has missing cells; apply fill_missing first");
  DataMatrix<Scalar> out;
  out.layout = cube.layout();
  out.day_axis = cube.day_axis;
  out.offset = Scalar(0);
  const Index d = out.layout.features();
  const Index t = cube.n_day();
  out.values.resize(d, t);
  // Storage order of the cube makes each day a contiguous block in
  // exactly the flattened row order.
  for (Index j = 0; j < t; ++j)
    std::memcpy(out.values.col(j).data(), cube.values.data() + static_cast<std::size_t>(j * d),
                static_cast<std::size_t>(d) * sizeof(Scalar));
  return out;
}

/// Inverse of one column of flatten: the per-frequency daily images,
/// each n_depth x n_ping.
template <class Scalar>
std::vector<Matrix<Scalar>> unflatten(const Vector<Scalar>& column, const FeatureLayout& layout) {
  if (column.size() != layout.features())
    throw DataError("unflatten: column length does not match layout");
  std::vector<Matrix<Scalar>> images(static_cast<std::size_t>(layout.n_freq));
  for (Index f = 0; f < layout.n_freq; ++f) {
    auto& img = images[static_cast<std::size_t>(f)];
    img.resize(layout.n_depth, layout.n_ping);
    for (Index p = 0; p < layout.n_ping; ++p)
      for (Index d = 0; d < layout.n_depth; ++d) img(d, p) = column[layout.row(d, p, f)];
  }
  return images;
}

/// Rebuilds a cube from a data matrix plus the axes of a reference cube
/// with the same layout. Used by synthetic generators and reconstruction.
template <class Scalar>
EchogramCube<Scalar> unflatten_matrix(const Matrix<Scalar>& values, const EchogramCube<Scalar>& axes_like) {
  if (values.rows() != axes_like.layout().features() || values.cols() != axes_like.n_day())
    throw DataError("unflatten_matrix: shape does not match reference axes");
  EchogramCube<Scalar> out = axes_like;
  for (Index j = 0; j < values.cols(); ++j)
    std::memcpy(out.values.data() + static_cast<std::size_t>(j * values.rows()), values.col(j).data(),
                static_cast<std::size_t>(values.rows()) * sizeof(Scalar));
  std::fill(out.missing.begin(), out.missing.end(), std::uint8_t(0));
  return out;
}

/// Subtracts the global minimum so the matrix becomes entrywise
/// nonnegative with minimum exactly 0; records the minimum in `offset` so
/// reconstruction consumers can add it back.
template <class Scalar>
DataMatrix<Scalar> shift_nonnegative(const DataMatrix<Scalar>& m) {
  if (m.values.size() == 0) throw ParameterError("shift_nonnegative: empty matrix");
  if (!m.values.allFinite()) throw ParameterError("shift_nonnegative: values must be finite");
  DataMatrix<Scalar> out = m;
  const Scalar lo = m.values.minCoeff();
  out.values.array() -= lo;
  out.offset = lo;
  return out;
}

}  // namespace echodec
