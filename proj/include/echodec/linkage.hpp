#pragma once

// Agglomerative hierarchical clustering via Lance-Williams updates.
// Average linkage serves the cophenetic stability score; Ward linkage (on
// squared Euclidean distances) serves the day-clustering summary. Merges
// are recorded with the usual id convention: original points are
// 0..T-1 and the cluster created by merge m gets id T+m.

#include <echodec/types.hpp>

#include <limits>
#include <vector>

namespace echodec {

enum class LinkageMethod { Average, Ward };

template <class Scalar>
struct MergeStep {
  Index a = 0;  // smaller cluster id
  Index b = 0;  // larger cluster id
  Scalar height = Scalar(0);
  Index size = 0;  // size of the merged cluster
};

/// Runs T-1 merges on a full symmetric dissimilarity matrix. For Ward the
/// input must already hold squared Euclidean distances; heights are then
/// the Lance-Williams merge costs in those squared units. Ties pick the
/// lexicographically smallest active (i, j) pair.
template <class Scalar>
std::vector<MergeStep<Scalar>> linkage_cluster(Matrix<Scalar> d, LinkageMethod method) {
  const Index t = d.rows();
  if (t != d.cols() || t < 1) throw ParameterError("linkage_cluster: square matrix required");
  std::vector<bool> active(static_cast<std::size_t>(t), true);
  std::vector<Index> size(static_cast<std::size_t>(t), 1);
  std::vector<Index> id(static_cast<std::size_t>(t));
  for (Index i = 0; i < t; ++i) id[static_cast<std::size_t>(i)] = i;

  std::vector<MergeStep<Scalar>> merges;
  merges.reserve(static_cast<std::size_t>(t - 1));
  for (Index m = 0; m + 1 < t; ++m) {
    Index bi = -1, bj = -1;
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (Index i = 0; i < t; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      for (Index j = i + 1; j < t; ++j) {
        if (!active[static_cast<std::size_t>(j)]) continue;
        if (d(i, j) < best) {
          best = d(i, j);
          bi = i;
          bj = j;
        }
      }
    }

    const Scalar dij = d(bi, bj);
    const auto si = static_cast<Scalar>(size[static_cast<std::size_t>(bi)]);
    const auto sj = static_cast<Scalar>(size[static_cast<std::size_t>(bj)]);
    for (Index c = 0; c < t; ++c) {
      if (!active[static_cast<std::size_t>(c)] || c == bi || c == bj) continue;
      Scalar upd;
      if (method == LinkageMethod::Average) {
        // Averaging equal values must return them exactly so that an
        // ultrametric input reproduces itself bit for bit.
        upd = d(bi, c) == d(bj, c) ? d(bi, c) : (si * d(bi, c) + sj * d(bj, c)) / (si + sj);
      } else {
        const auto sc = static_cast<Scalar>(size[static_cast<std::size_t>(c)]);
        upd = ((si + sc) * d(bi, c) + (sj + sc) * d(bj, c) - sc * dij) / (si + sj + sc);
      }
      d(bi, c) = upd;
      d(c, bi) = upd;
    }

    const Index ida = id[static_cast<std::size_t>(bi)];
    const Index idb = id[static_cast<std::size_t>(bj)];
    MergeStep<Scalar> step;
    step.a = std::min(ida, idb);
    step.b = std::max(ida, idb);
    step.height = dij;
    step.size = size[static_cast<std::size_t>(bi)] + size[static_cast<std::size_t>(bj)];
    merges.push_back(step);

    size[static_cast<std::size_t>(bi)] = step.size;
    id[static_cast<std::size_t>(bi)] = t + m;
    active[static_cast<std::size_t>(bj)] = false;
  }
  return merges;
}

/// Labels from cutting the tree to k clusters: apply the first T-k merges,
/// then number clusters 0-based by order of first member appearance.
template <class Scalar>
std::vector<int> cut_tree(const std::vector<MergeStep<Scalar>>& merges, Index t, Index k) {
  if (k < 1 || k > t) throw ParameterError("cut_tree: k out of range");
  std::vector<Index> parent(static_cast<std::size_t>(2 * t - 1));
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<Index>(i);
  auto find = [&](Index v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (Index m = 0; m < t - k; ++m) {
    const Index node = t + m;
    parent[static_cast<std::size_t>(find(merges[static_cast<std::size_t>(m)].a))] = node;
    parent[static_cast<std::size_t>(find(merges[static_cast<std::size_t>(m)].b))] = node;
  }
  std::vector<int> labels(static_cast<std::size_t>(t), -1);
  std::vector<Index> roots;
  for (Index i = 0; i < t; ++i) {
    const Index r = find(i);
    int lab = -1;
    for (std::size_t j = 0; j < roots.size(); ++j)
      if (roots[j] == r) {
        lab = static_cast<int>(j);
        break;
      }
    if (lab < 0) {
      lab = static_cast<int>(roots.size());
      roots.push_back(r);
    }
    labels[static_cast<std::size_t>(i)] = lab;
  }
  return labels;
}

/// Pairwise cophenetic distances: the height of the merge at which two
/// points first share a cluster.
template <class Scalar>
Matrix<Scalar> cophenetic_distances(const std::vector<MergeStep<Scalar>>& merges, Index t) {
  Matrix<Scalar> coph = Matrix<Scalar>::Zero(t, t);
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(2 * t - 1));
  for (Index i = 0; i < t; ++i) members[static_cast<std::size_t>(i)] = {i};
  for (std::size_t m = 0; m < merges.size(); ++m) {
    const auto& step = merges[m];
    const auto& ma = members[static_cast<std::size_t>(step.a)];
    const auto& mb = members[static_cast<std::size_t>(step.b)];
    for (Index i : ma)
      for (Index j : mb) {
        coph(i, j) = step.height;
        coph(j, i) = step.height;
      }
    auto& merged = members[static_cast<std::size_t>(t) + m];
    merged.reserve(ma.size() + mb.size());
    merged.insert(merged.end(), ma.begin(), ma.end());
    merged.insert(merged.end(), mb.begin(), mb.end());
  }
  return coph;
}

}  // namespace echodec
