#pragma once

// Agglomerative clustering on 1 - PSM with average or complete linkage,
// PEAR-maximising cuts and cophenetic correlation.

#include "psmkit/common.hpp"
#include "psmkit/metrics.hpp"
#include "psmkit/psm.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace psmkit {

enum class Linkage { Average, Complete };

inline Linkage parse_linkage(const std::string& s) {
  if (s == "avg" || s == "average") return Linkage::Average;
  if (s == "comp" || s == "complete") return Linkage::Complete;
  throw Error("unknown linkage '" + s + "' (expected avg or comp)");
}

struct Merge {
  Eigen::Index left = 0;   // smallest item index of each merged cluster
  Eigen::Index right = 0;
  double height = 0.0;
};

struct Dendrogram {
  std::vector<Merge> merges;  // N - 1 merges in order
  Matrix heights;             // cophenetic distances eta_ij

  // Partition with k clusters obtained by stopping after N - k merges.
  Partition cut(int k) const {
    const auto n = static_cast<std::size_t>(heights.rows());
    require(k >= 1 && static_cast<std::size_t>(k) <= n, "cut height out of range");
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    for (std::size_t m = 0; m < n - static_cast<std::size_t>(k); ++m) {
      const auto a = find(static_cast<std::size_t>(merges[m].left));
      const auto b = find(static_cast<std::size_t>(merges[m].right));
      parent[std::max(a, b)] = std::min(a, b);
    }
    std::vector<long long> roots(n);
    for (std::size_t i = 0; i < n; ++i) roots[i] = static_cast<long long>(find(i));
    return make_partition(roots);
  }
};

/// Agglomeration on the distance matrix `dist`. Among equal distances the
/// lexicographically smallest pair of clusters (by smallest member) merges.
/// Merge heights are made non-decreasing so eta is an exact ultrametric.
inline Dendrogram agglomerate(const Matrix& dist, Linkage linkage) {
  const Eigen::Index n = dist.rows();
  require(dist.cols() == n && n >= 1, "distance matrix must be square and non-empty");
  Matrix d = dist;
  std::vector<bool> alive(static_cast<std::size_t>(n), true);
  std::vector<double> size(static_cast<std::size_t>(n), 1.0);
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) members[static_cast<std::size_t>(i)] = {i};

  Dendrogram tree;
  tree.heights = Matrix::Zero(n, n);
  double last = -std::numeric_limits<double>::infinity();
  for (Eigen::Index step = 0; step + 1 < n; ++step) {
    Eigen::Index ba = -1, bb = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < n; ++a) {
      if (!alive[static_cast<std::size_t>(a)]) continue;
      for (Eigen::Index b = a + 1; b < n; ++b) {
        if (!alive[static_cast<std::size_t>(b)]) continue;
        if (d(a, b) < best || ba < 0) {
          best = d(a, b);
          ba = a;
          bb = b;
        }
      }
    }
    const double height = std::max(best, last);
    last = height;
    for (auto i : members[static_cast<std::size_t>(ba)])
      for (auto j : members[static_cast<std::size_t>(bb)]) tree.heights(i, j) = tree.heights(j, i) = height;
    tree.merges.push_back({ba, bb, height});

    const double sa = size[static_cast<std::size_t>(ba)], sb = size[static_cast<std::size_t>(bb)];
    for (Eigen::Index c = 0; c < n; ++c) {
      if (!alive[static_cast<std::size_t>(c)] || c == ba || c == bb) continue;
      const double v = linkage == Linkage::Average ? (sa * d(ba, c) + sb * d(bb, c)) / (sa + sb)
                                                   : std::max(d(ba, c), d(bb, c));
      d(ba, c) = d(c, ba) = v;
    }
    alive[static_cast<std::size_t>(bb)] = false;
    size[static_cast<std::size_t>(ba)] = sa + sb;
    auto& into = members[static_cast<std::size_t>(ba)];
    auto& from = members[static_cast<std::size_t>(bb)];
    into.insert(into.end(), from.begin(), from.end());
    from.clear();
  }
  return tree;
}

struct HierarchicalBaseline {
  Partition best;
  int best_k = 0;
  double best_pear = 0.0;
  std::vector<std::optional<double>> pear_by_k;  // index k - 1
  Dendrogram dendrogram;
};

/// Hierarchical clustering of 1 - psm, scoring every cut K = 1..k_max by
/// PEAR and returning the maximiser (ties to the smaller K).
inline HierarchicalBaseline hierarchical_baseline(const SimilarityKernel& psm, Linkage linkage, int k_max) {
  const Eigen::Index n = psm.size();
  require(k_max >= 1 && k_max <= n, "k_max must lie in [1, N]");
  HierarchicalBaseline out;
  Matrix dist = Matrix::Ones(n, n) - psm.entries;
  dist.diagonal().setZero();
  out.dendrogram = agglomerate(dist, linkage);
  bool found = false;
  for (int k = 1; k <= k_max; ++k) {
    Partition p = out.dendrogram.cut(k);
    const auto value = n >= 2 ? pear(psm, p) : std::optional<double>{};
    out.pear_by_k.push_back(value);
    if (value && (!found || *value > out.best_pear)) {
      found = true;
      out.best_pear = *value;
      out.best_k = k;
      out.best = std::move(p);
    }
  }
  if (!found) {
    out.best_k = 1;
    out.best = out.dendrogram.cut(1);
    out.best_pear = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

inline std::optional<double> pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && !x.empty(), "correlation needs equal-length non-empty series");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Pearson correlation over pairs i < j between psm_ij (or 1 - psm_ij when
/// `as_distance`) and the cophenetic heights of agglomeration on 1 - psm.
/// nullopt when either series has zero variance.
inline std::optional<double> cophenetic_correlation(const SimilarityKernel& psm, Linkage linkage, bool as_distance = false) {
  const Eigen::Index n = psm.size();
  require(n >= 3, "cophenetic correlation needs at least three items");
  Matrix dist = Matrix::Ones(n, n) - psm.entries;
  dist.diagonal().setZero();
  const Dendrogram tree = agglomerate(dist, linkage);
  std::vector<double> x, y;
  for (Eigen::Index j = 1; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i) {
      x.push_back(as_distance ? 1.0 - psm(i, j) : psm(i, j));
      y.push_back(tree.heights(i, j));
    }
  return pearson_correlation(x, y);
}

}  // namespace psmkit
