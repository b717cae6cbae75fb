#pragma once

// Day-by-day summary of pattern co-activation: pairwise Euclidean distance
// between activation columns, Ward clustering of the days, and the label
// transition points.

#include <echodec/linkage.hpp>
#include <echodec/types.hpp>

#include <cmath>
#include <vector>

namespace echodec {

template <class Scalar>
struct ClusterSummary {
  Matrix<Scalar> distance;  // T x T
  std::vector<int> labels;  // per-day cluster id, 0-based
  std::vector<MergeStep<Scalar>> merge_tree;
  std::vector<int> change_points;  // days whose label differs from the previous day
};

/// Pairwise Euclidean distance between per-day activation columns.
template <class Scalar>
Matrix<Scalar> activation_distance(const Matrix<Scalar>& h_scaled) {
  const Index t = h_scaled.cols();
  Matrix<Scalar> d = Matrix<Scalar>::Zero(t, t);
  for (Index i = 0; i < t; ++i)
    for (Index j = i + 1; j < t; ++j) {
      const Scalar v = (h_scaled.col(i) - h_scaled.col(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  return d;
}

/// Indices t >= 1 where labels[t] differs from labels[t-1].
inline std::vector<int> transitions(const std::vector<int>& labels) {
  if (labels.empty()) throw ParameterError("transitions: empty label sequence");
  std::vector<int> points;
  for (std::size_t t = 1; t < labels.size(); ++t)
    if (labels[t] != labels[t - 1]) points.push_back(static_cast<int>(t));
  return points;
}

/// Ward clustering of a Euclidean distance matrix cut at k clusters.
/// Internally runs the Lance-Williams recurrence on squared distances, so
/// merge heights are reported in squared units.
template <class Scalar>
ClusterSummary<Scalar> ward_cluster(const Matrix<Scalar>& distance, Index k) {
  const Index t = distance.rows();
  if (t != distance.cols() || t < 1) throw ParameterError("ward_cluster: square matrix required");
  if (k < 1 || k > t) throw ParameterError("ward_cluster: k out of range");
  const Scalar scale = distance.size() > 0 ? distance.cwiseAbs().maxCoeff() : Scalar(0);
  for (Index i = 0; i < t; ++i) {
    if (distance(i, i) != Scalar(0)) throw ParameterError("ward_cluster: diagonal must be zero");
    for (Index j = i + 1; j < t; ++j) {
      if (distance(i, j) < Scalar(0)) throw ParameterError("ward_cluster: distances must be >= 0");
      if (std::abs(static_cast<double>(distance(i, j) - distance(j, i))) >
          1e-12 * std::max(1.0, static_cast<double>(scale)))
        throw ParameterError("ward_cluster: matrix must be symmetric");
    }
  }

  ClusterSummary<Scalar> summary;
  summary.distance = distance;
  Matrix<Scalar> squared = distance.array().square().matrix();
  summary.merge_tree = linkage_cluster(std::move(squared), LinkageMethod::Ward);
  summary.labels = cut_tree(summary.merge_tree, t, k);
  summary.change_points = transitions(summary.labels);
  return summary;
}

}  // namespace echodec
