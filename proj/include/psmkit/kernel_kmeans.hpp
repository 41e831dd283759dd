#pragma once

// Kernel k-means on a precomputed kernel matrix. All feature-space
// distances are evaluated through kernel entries only.

#include "psmkit/common.hpp"
#include "psmkit/psm.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace psmkit {

struct KernelKMeansOptions {
  int max_iter = 100;
  int n_restarts = 10;
  // Reject kernels whose smallest eigenvalue is below -psd_tol.
  bool validate_kernel = true;
  double psd_tol = kDefaultPsdTolerance;
};

struct KernelKMeansResult {
  Partition partition;
  double objective = 0.0;
  int n_iterations = 0;
  bool converged = false;
  // Objective after the initial assignment and after every Lloyd step.
  std::vector<double> objective_trace;
};

/// Squared feature-space distance between item n and the centroid of cluster k:
/// K(n,n) - (2/N_k) sum_{i in k} K(n,i) + (1/N_k^2) sum_{i,j in k} K(i,j).
inline double point_to_centroid_sq(const Matrix& kernel, const Partition& partition, Eigen::Index n, int k) {
  require(kernel.rows() == kernel.cols() && kernel.rows() == static_cast<Eigen::Index>(partition.size()),
          "kernel and partition sizes differ");
  require(k >= 0 && k < partition.k, "cluster index out of range");
  double cross = 0.0;
  double within = 0.0;
  std::size_t nk = 0;
  const auto& z = partition.labels;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] != k) continue;
    ++nk;
    const auto ii = static_cast<Eigen::Index>(i);
    cross += kernel(n, ii);
    for (std::size_t j = 0; j < z.size(); ++j)
      if (z[j] == k) within += kernel(ii, static_cast<Eigen::Index>(j));
  }
  if (nk == 0) throw Error("empty cluster");
  const double size = static_cast<double>(nk);
  return std::max(0.0, kernel(n, n) - 2.0 * cross / size + within / (size * size));
}

namespace detail {

// distances(n, k) for every item and cluster; +inf for empty clusters.
inline Matrix centroid_distances(const Matrix& kernel, const Partition& p) {
  const Eigen::Index n = kernel.rows();
  const Matrix z = p.one_hot();
  const Matrix t = kernel * z;  // t(n,k) = sum_{i in k} K(n,i)
  Matrix d(n, p.k);
  for (int k = 0; k < p.k; ++k) {
    const double nk = z.col(k).sum();
    if (nk == 0.0) {
      d.col(k).setConstant(std::numeric_limits<double>::infinity());
      continue;
    }
    const double s = z.col(k).dot(t.col(k));
    for (Eigen::Index i = 0; i < n; ++i)
      d(i, k) = std::max(0.0, kernel(i, i) - 2.0 * t(i, k) / nk + s / (nk * nk));
  }
  return d;
}

inline double objective_from_distances(const Matrix& d, const Partition& p) {
  double obj = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) obj += d(static_cast<Eigen::Index>(i), p.labels[i]);
  return obj;
}

// Moves the item farthest from its centroid into each empty cluster.
inline void repair_empty_clusters(Partition& p, const Matrix& d) {
  auto sizes = p.cluster_sizes();
  for (int k = 0; k < p.k; ++k) {
    if (sizes[static_cast<std::size_t>(k)] != 0) continue;
    std::size_t best = p.size();
    double best_d = -1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto own = static_cast<std::size_t>(p.labels[i]);
      if (sizes[own] < 2) continue;
      const double di = d(static_cast<Eigen::Index>(i), p.labels[i]);
      if (di > best_d) {
        best_d = di;
        best = i;
      }
    }
    if (best == p.size()) throw Error("cannot repair empty cluster: too few items");
    --sizes[static_cast<std::size_t>(p.labels[best])];
    p.labels[best] = k;
    ++sizes[static_cast<std::size_t>(k)];
  }
}

inline void validate_kernel_arguments(const Matrix& kernel, int k) {
  require(kernel.rows() == kernel.cols(), "kernel matrix must be square");
  require(k >= 1, "cluster count must be at least 1");
  if (k > kernel.rows()) {
    std::ostringstream msg;
    msg << "cluster count " << k << " exceeds number of items " << kernel.rows();
    throw Error(msg.str());
  }
}

}  // namespace detail

inline double kernel_kmeans_objective(const Matrix& kernel, const Partition& p) {
  return detail::objective_from_distances(detail::centroid_distances(kernel, p), p);
}

/// Lloyd alternation from a given assignment. Ties go to the lowest cluster
/// index. If `history` is non-null it receives the partition after every step.
inline KernelKMeansResult lloyd_kernel_kmeans(const Matrix& kernel, Partition start, int max_iter,
                                              std::vector<Partition>* history = nullptr) {
  detail::validate_kernel_arguments(kernel, start.k);
  require(static_cast<Eigen::Index>(start.size()) == kernel.rows(), "initial partition size mismatch");
  require(max_iter >= 1, "max_iter must be at least 1");

  KernelKMeansResult result;
  Partition current = std::move(start);
  Matrix d = detail::centroid_distances(kernel, current);
  if ((d.array() == std::numeric_limits<double>::infinity()).any()) {
    detail::repair_empty_clusters(current, d);
    d = detail::centroid_distances(kernel, current);
  }
  result.objective_trace.push_back(detail::objective_from_distances(d, current));
  if (history) history->push_back(current);

  for (int iter = 0; iter < max_iter; ++iter) {
    Partition next = current;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      int best = 0;
      for (int k = 1; k < current.k; ++k)
        if (d(i, k) < d(i, best)) best = k;
      next.labels[static_cast<std::size_t>(i)] = best;
    }
    detail::repair_empty_clusters(next, d);
    result.n_iterations = iter + 1;
    if (next.labels == current.labels) {
      result.converged = true;
      break;
    }
    current = std::move(next);
    d = detail::centroid_distances(kernel, current);
    result.objective_trace.push_back(detail::objective_from_distances(d, current));
    if (history) history->push_back(current);
  }
  result.objective = result.objective_trace.back();
  result.partition = std::move(current);
  return result;
}

/// k-means++ seeding in feature space: the first seed is uniform, later seeds are
/// drawn proportionally to the squared distance to the closest chosen seed.
/// Items are then assigned to their nearest seed.
inline Partition kmeanspp_initial_partition(const Matrix& kernel, int k, Rng& rng) {
  detail::validate_kernel_arguments(kernel, k);
  const Eigen::Index n = kernel.rows();
  const auto nn = static_cast<std::size_t>(n);
  auto dist = [&](Eigen::Index a, Eigen::Index b) {
    return std::max(0.0, kernel(a, a) - 2.0 * kernel(a, b) + kernel(b, b));
  };

  std::vector<Eigen::Index> seeds;
  std::vector<bool> chosen(nn, false);
  std::vector<double> closest(nn, std::numeric_limits<double>::infinity());
  auto add_seed = [&](Eigen::Index s) {
    seeds.push_back(s);
    chosen[static_cast<std::size_t>(s)] = true;
    for (Eigen::Index i = 0; i < n; ++i) closest[static_cast<std::size_t>(i)] = std::min(closest[static_cast<std::size_t>(i)], dist(i, s));
  };

  add_seed(static_cast<Eigen::Index>(uniform_index(rng, nn)));
  while (static_cast<int>(seeds.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < nn; ++i)
      if (!chosen[i]) total += closest[i];
    Eigen::Index pick = -1;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < nn; ++i) {
        if (chosen[i] || closest[i] <= 0.0) continue;
        acc += closest[i];
        pick = static_cast<Eigen::Index>(i);
        if (acc > target) break;
      }
    } else {
      // Every remaining item coincides with a seed; pick uniformly among them.
      std::vector<Eigen::Index> free;
      for (std::size_t i = 0; i < nn; ++i)
        if (!chosen[i]) free.push_back(static_cast<Eigen::Index>(i));
      pick = free[uniform_index(rng, free.size())];
    }
    add_seed(pick);
  }

  Partition p;
  p.k = k;
  p.labels.assign(nn, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = dist(i, seeds[0]);
    for (int c = 1; c < k; ++c) {
      const double dc = dist(i, seeds[static_cast<std::size_t>(c)]);
      if (dc < best_d) {
        best_d = dc;
        best = c;
      }
    }
    p.labels[static_cast<std::size_t>(i)] = best;
  }
  // Seeds own their cluster even when they coincide with an earlier seed.
  for (int c = 0; c < k; ++c) p.labels[static_cast<std::size_t>(seeds[static_cast<std::size_t>(c)])] = c;
  return p;
}

/// Best-of-restarts kernel k-means. Restart r draws its seeding from
/// derive_seed(seed, r); ties in objective go to the lowest restart index.
inline KernelKMeansResult kernel_kmeans(const Matrix& kernel, int k, RngSeed seed,
                                        const KernelKMeansOptions& options = {}) {
  detail::validate_kernel_arguments(kernel, k);
  require(options.max_iter >= 1, "max_iter must be at least 1");
  require(options.n_restarts >= 1, "n_restarts must be at least 1");
  if (options.validate_kernel) {
    const auto report = check_psd(kernel, options.psd_tol);
    if (!report.psd) {
      std::ostringstream msg;
      msg << "kernel is not positive semi-definite (smallest eigenvalue " << report.min_eigenvalue << ")";
      throw Error(msg.str());
    }
  }
  KernelKMeansResult best;
  for (int r = 0; r < options.n_restarts; ++r) {
    Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    auto result = lloyd_kernel_kmeans(kernel, kmeanspp_initial_partition(kernel, k, rng), options.max_iter);
    if (r == 0 || result.objective < best.objective) best = std::move(result);
  }
  return best;
}

inline KernelKMeansResult kernel_kmeans(const SimilarityKernel& kernel, int k, RngSeed seed,
                                        const KernelKMeansOptions& options = {}) {
  return kernel_kmeans(kernel.entries, k, seed, options);
}

// Single-PSM summary clustering.
inline Partition summarise_psm(const SimilarityKernel& psm, int k, RngSeed seed, const KernelKMeansOptions& options = {}) {
  return kernel_kmeans(psm.entries, k, seed, options).partition;
}

}  // namespace psmkit
