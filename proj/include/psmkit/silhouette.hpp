#pragma once

#include "psmkit/common.hpp"
#include "psmkit/kernel_kmeans.hpp"
#include "psmkit/mkkm.hpp"
#include "psmkit/simplemkl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace psmkit {

struct SilhouetteReport {
  std::vector<double> scores;
  double mean = 0.0;
  int k = 0;
};

/// Silhouette on the kernel-induced dissimilarity
/// d(i,j) = (K(i,i) + K(j,j)) / 2 - K(i,j), which is 1 - K(i,j) for kernels
/// with unit diagonal such as PSMs. a_n is the mean dissimilarity of n to the
/// rest of its cluster, b_n the smallest mean dissimilarity to another
/// cluster, s_n = (b_n - a_n) / max(a_n, b_n). Singletons and
/// max(a_n, b_n) = 0 give 0.
inline SilhouetteReport silhouette(const Matrix& kernel, const Partition& partition) {
  const Eigen::Index n = kernel.rows();
  require(kernel.cols() == n && static_cast<Eigen::Index>(partition.size()) == n, "kernel and partition sizes differ");
  require(partition.k >= 2, "silhouette needs at least two clusters");
  const auto sizes = partition.cluster_sizes();
  const Vector half_diag = 0.5 * kernel.diagonal();
  Matrix dissimilarity = -kernel;
  dissimilarity.colwise() += half_diag;
  dissimilarity.rowwise() += half_diag.transpose();
  dissimilarity.diagonal().setZero();
  const Matrix sums = dissimilarity * partition.one_hot();

  SilhouetteReport report;
  report.k = partition.k;
  report.scores.resize(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = partition.labels[static_cast<std::size_t>(i)];
    const auto own_size = sizes[static_cast<std::size_t>(own)];
    double s = 0.0;
    if (own_size > 1) {
      const double a = sums(i, own) / static_cast<double>(own_size - 1);
      double b = std::numeric_limits<double>::infinity();
      for (int c = 0; c < partition.k; ++c) {
        if (c == own || sizes[static_cast<std::size_t>(c)] == 0) continue;
        b = std::min(b, sums(i, c) / static_cast<double>(sizes[static_cast<std::size_t>(c)]));
      }
      const double scale = std::max(a, b);
      if (std::isfinite(b) && scale > 0.0) s = std::clamp((b - a) / scale, -1.0, 1.0);
    }
    report.scores[static_cast<std::size_t>(i)] = s;
    total += s;
  }
  report.mean = total / static_cast<double>(n);
  return report;
}

struct ClusteredKernel {
  Partition partition;
  Matrix kernel;  // the kernel that was actually clustered
};

struct SilhouetteSweep {
  int best_k = 0;
  std::vector<int> ks;
  std::vector<double> mean_silhouette;
  std::vector<Partition> partitions;
};

/// Runs `cluster(k, seed_k)` for k in [k_min, k_max] with seed_k derived
/// from the master seed, scoring each result by its mean silhouette on the
/// kernel it clustered. Ties go to the smaller k.
template <typename Clusterer>
SilhouetteSweep silhouette_sweep(int k_min, int k_max, RngSeed seed, Clusterer&& cluster) {
  require(k_min >= 2 && k_min <= k_max, "silhouette sweep needs 2 <= k_min <= k_max");
  SilhouetteSweep sweep;
  double best = -std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max; ++k) {
    ClusteredKernel ck = cluster(k, derive_seed(seed, static_cast<std::uint64_t>(k)));
    require(k <= ck.kernel.rows(), "k_max exceeds number of items");
    const double s = silhouette(ck.kernel, ck.partition).mean;
    sweep.ks.push_back(k);
    sweep.mean_silhouette.push_back(s);
    sweep.partitions.push_back(std::move(ck.partition));
    if (s > best) {
      best = s;
      sweep.best_k = k;
    }
  }
  return sweep;
}

inline SilhouetteSweep silhouette_sweep(const Matrix& kernel, int k_min, int k_max, RngSeed seed,
                                        const KernelKMeansOptions& options = {}) {
  require(k_max <= kernel.rows(), "k_max exceeds number of items");
  return silhouette_sweep(k_min, k_max, seed, [&](int k, RngSeed s) {
    return ClusteredKernel{kernel_kmeans(kernel, k, s, options).partition, kernel};
  });
}

inline SilhouetteSweep silhouette_sweep(const KernelStack& stack, int k_min, int k_max, RngSeed seed,
                                        const MultipleKernelKMeansOptions& options = {}) {
  require(k_max <= stack.n_items(), "k_max exceeds number of items");
  return silhouette_sweep(k_min, k_max, seed, [&](int k, RngSeed s) {
    auto r = multiple_kernel_kmeans(stack, k, s, options);
    return ClusteredKernel{std::move(r.partition), std::move(r.combined_kernel)};
  });
}

}  // namespace psmkit
