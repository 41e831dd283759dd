#pragma once

// Partition comparison: contingency tables, (adjusted) Rand index, Binder
// loss, variation of information and the posterior expected adjusted Rand.

#include "psmkit/common.hpp"
#include "psmkit/psm.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace psmkit {

struct ContingencyTable {
  // counts[k][l] = |U_k ∩ V_l|
  std::vector<std::vector<long long>> counts;
  std::vector<long long> row_sums;
  std::vector<long long> col_sums;
  long long total = 0;
};

inline ContingencyTable contingency(const Partition& u, const Partition& v) {
  require(u.size() == v.size(), "partitions have different lengths");
  ContingencyTable t;
  t.counts.assign(static_cast<std::size_t>(u.k), std::vector<long long>(static_cast<std::size_t>(v.k), 0));
  t.row_sums.assign(static_cast<std::size_t>(u.k), 0);
  t.col_sums.assign(static_cast<std::size_t>(v.k), 0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const auto a = static_cast<std::size_t>(u.labels[i]), b = static_cast<std::size_t>(v.labels[i]);
    ++t.counts[a][b];
    ++t.row_sums[a];
    ++t.col_sums[b];
  }
  t.total = static_cast<long long>(u.size());
  return t;
}

namespace detail {

inline double choose2(long long n) { return 0.5 * static_cast<double>(n) * static_cast<double>(n - 1); }

struct PairCounts {
  double same_both = 0.0;   // sum_kl C(n_kl, 2)
  double same_u = 0.0;      // sum_k C(n_k., 2)
  double same_v = 0.0;      // sum_l C(n_.l, 2)
  double total_pairs = 0.0; // C(N, 2)
};

inline PairCounts pair_counts(const ContingencyTable& t) {
  PairCounts p;
  for (const auto& row : t.counts)
    for (long long c : row) p.same_both += choose2(c);
  for (long long r : t.row_sums) p.same_u += choose2(r);
  for (long long c : t.col_sums) p.same_v += choose2(c);
  p.total_pairs = choose2(t.total);
  return p;
}

inline double plogp2(double p) { return p > 0.0 ? p * std::log2(p) : 0.0; }

}  // namespace detail

// Hubert-Arabie adjusted Rand index. When both partitions are trivial and
// identical (all singletons or a single cluster) the index is 1.
inline double ari(const Partition& u, const Partition& v) {
  require(u.size() >= 2, "ARI needs at least two items");
  const auto p = detail::pair_counts(contingency(u, v));
  const double expected = p.same_u * p.same_v / p.total_pairs;
  const double denom = 0.5 * (p.same_u + p.same_v) - expected;
  if (denom == 0.0) return 1.0;
  return (p.same_both - expected) / denom;
}

// Fraction of unordered pairs on which the partitions agree.
inline double rand_index(const Partition& u, const Partition& v) {
  require(u.size() >= 2, "Rand index needs at least two items");
  const auto p = detail::pair_counts(contingency(u, v));
  const double same_both = p.same_both;
  const double diff_both = p.total_pairs - p.same_u - p.same_v + same_both;
  return (same_both + diff_both) / p.total_pairs;
}

inline double binder_loss(const Partition& u, const Partition& v, double l1 = 1.0, double l2 = 1.0) {
  require(u.size() == v.size(), "partitions have different lengths");
  const auto p = detail::pair_counts(contingency(u, v));
  // pairs together in u but split in v, and vice versa
  return l1 * (p.same_u - p.same_both) + l2 * (p.same_v - p.same_both);
}

// sum_{i<j} |[c_i == c_j] - psm_ij|
inline double expected_binder(const SimilarityKernel& psm, const Partition& candidate) {
  const Eigen::Index n = psm.size();
  require(static_cast<Eigen::Index>(candidate.size()) == n, "candidate length does not match PSM");
  double loss = 0.0;
  for (Eigen::Index j = 1; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i) {
      const double same = candidate.labels[static_cast<std::size_t>(i)] == candidate.labels[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
      loss += std::abs(same - psm(i, j));
    }
  return loss;
}

// Variation of information in bits, H(u) + H(v) - 2 I(u, v).
inline double variation_of_information(const Partition& u, const Partition& v) {
  const auto t = contingency(u, v);
  require(t.total >= 1, "partitions are empty");
  const double n = static_cast<double>(t.total);
  double hu = 0.0, hv = 0.0, mi = 0.0;
  for (long long r : t.row_sums) hu -= detail::plogp2(static_cast<double>(r) / n);
  for (long long c : t.col_sums) hv -= detail::plogp2(static_cast<double>(c) / n);
  for (std::size_t k = 0; k < t.counts.size(); ++k)
    for (std::size_t l = 0; l < t.counts[k].size(); ++l) {
      const long long c = t.counts[k][l];
      if (c == 0) continue;
      mi += (static_cast<double>(c) / n) *
            std::log2(static_cast<double>(c) * n / (static_cast<double>(t.row_sums[k]) * static_cast<double>(t.col_sums[l])));
    }
  return std::max(0.0, hu + hv - 2.0 * mi);
}

/// Posterior expected adjusted Rand of a candidate against a PSM, treating
/// psm_ij as the expected co-clustering indicator. Returns nullopt when the
/// denominator vanishes.
inline std::optional<double> pear(const SimilarityKernel& psm, const Partition& candidate) {
  const Eigen::Index n = psm.size();
  require(n >= 2, "PEAR needs at least two items");
  require(static_cast<Eigen::Index>(candidate.size()) == n, "candidate length does not match PSM");
  double together = 0.0, expected_together = 0.0, agree = 0.0;
  for (Eigen::Index j = 1; j < n; ++j)
    for (Eigen::Index i = 0; i < j; ++i) {
      const bool same = candidate.labels[static_cast<std::size_t>(i)] == candidate.labels[static_cast<std::size_t>(j)];
      const double d = psm(i, j);
      expected_together += d;
      if (same) {
        together += 1.0;
        agree += d;
      }
    }
  const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  const double chance = together * expected_together / pairs;
  const double denom = 0.5 * (together + expected_together) - chance;
  if (denom == 0.0) return std::nullopt;
  return (agree - chance) / denom;
}

}  // namespace psmkit
