#pragma once

// Random generators and brute-force reference implementations shared by the
// unit and acceptance tests. The references deliberately avoid the library's
// own helpers (contingency tables, centroid expansions, projections).

#include "psmkit/psmkit.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <vector>

namespace psmkit::oracle {

inline std::vector<long long> random_labels(Rng& rng, std::size_t n, std::size_t k_max) {
  std::vector<long long> out(n);
  for (auto& l : out) l = static_cast<long long>(uniform_index(rng, k_max)) * 7 - 3;  // arbitrary integer labels
  return out;
}

inline Partition random_partition(Rng& rng, std::size_t n, std::size_t k_max) {
  return make_partition(random_labels(rng, n, k_max));
}

inline AllocationSampleSet random_draws(Rng& rng, std::size_t n, std::size_t b, std::size_t k_max) {
  AllocationSampleSet s;
  for (std::size_t i = 0; i < b; ++i) s.append(random_labels(rng, n, k_max));
  return s;
}

inline SimilarityKernel random_psm(Rng& rng, std::size_t n, std::size_t b = 30, std::size_t k_max = 4) {
  return compute_psm(random_draws(rng, n, b, k_max));
}

inline Matrix block_kernel(const std::vector<int>& sizes) {
  const int n = std::accumulate(sizes.begin(), sizes.end(), 0);
  Matrix k = Matrix::Zero(n, n);
  int start = 0;
  for (int s : sizes) {
    k.block(start, start, s, s).setOnes();
    start += s;
  }
  return k;
}

inline Partition block_partition(const std::vector<int>& sizes) {
  std::vector<int> labels;
  for (std::size_t b = 0; b < sizes.size(); ++b) labels.insert(labels.end(), static_cast<std::size_t>(sizes[b]), static_cast<int>(b));
  return make_partition(labels);
}

inline Matrix random_points(Rng& rng, Eigen::Index n, Eigen::Index p) {
  Matrix x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = 4.0 * uniform01(rng) - 2.0;
  return x;
}

// Random point on the simplex bounded away from its faces.
inline Vector interior_simplex_point(Rng& rng, Eigen::Index m, double floor = 0.05) {
  Vector v(m);
  for (Eigen::Index i = 0; i < m; ++i) v(i) = -std::log(1.0 - uniform01(rng));
  v /= v.sum();
  return (floor * Vector::Ones(m) + (1.0 - floor * static_cast<double>(m)) * v).eval();
}

// ---- PSM ----

inline Matrix brute_psm(const AllocationSampleSet& s) {
  const auto n = static_cast<Eigen::Index>(s.n_items());
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      long long together = 0;
      for (std::size_t b = 0; b < s.n_samples(); ++b)
        together += s.draw(b)[static_cast<std::size_t>(i)] == s.draw(b)[static_cast<std::size_t>(j)];
      out(i, j) = static_cast<double>(together) / static_cast<double>(s.n_samples());
    }
  return out;
}

// ---- pair counting ----

struct Pairs {
  double both = 0, only_u = 0, only_v = 0, neither = 0;
  double total() const { return both + only_u + only_v + neither; }
};

inline Pairs pair_loop(const Partition& u, const Partition& v) {
  Pairs p;
  for (std::size_t i = 0; i < u.size(); ++i)
    for (std::size_t j = i + 1; j < u.size(); ++j) {
      const bool su = u.labels[i] == u.labels[j], sv = v.labels[i] == v.labels[j];
      if (su && sv) p.both += 1;
      else if (su) p.only_u += 1;
      else if (sv) p.only_v += 1;
      else p.neither += 1;
    }
  return p;
}

// Hubert-Arabie ARI in its 2x2 pair-table form.
inline double ari(const Partition& u, const Partition& v) {
  const Pairs p = pair_loop(u, v);
  const double a = p.both, b = p.only_u, c = p.only_v, d = p.neither;
  const double denom = (a + b) * (b + d) + (a + c) * (c + d);
  if (denom == 0.0) return 1.0;
  return 2.0 * (a * d - b * c) / denom;
}

inline double rand_index(const Partition& u, const Partition& v) {
  const Pairs p = pair_loop(u, v);
  return (p.both + p.neither) / p.total();
}

inline double binder(const Partition& u, const Partition& v, double l1, double l2) {
  const Pairs p = pair_loop(u, v);
  return l1 * p.only_u + l2 * p.only_v;
}

// VI from raw label counts, in bits.
inline double vi(const Partition& u, const Partition& v) {
  std::map<int, double> cu, cv;
  std::map<std::pair<int, int>, double> cj;
  for (std::size_t i = 0; i < u.size(); ++i) {
    cu[u.labels[i]] += 1;
    cv[v.labels[i]] += 1;
    cj[{u.labels[i], v.labels[i]}] += 1;
  }
  const double n = static_cast<double>(u.size());
  double hu = 0, hv = 0, hj = 0;
  for (auto& [l, c] : cu) hu -= c / n * std::log(c / n);
  for (auto& [l, c] : cv) hv -= c / n * std::log(c / n);
  for (auto& [l, c] : cj) hj -= c / n * std::log(c / n);
  // VI = 2 H(u,v) - H(u) - H(v)
  return (2.0 * hj - hu - hv) / std::log(2.0);
}

// PEAR evaluated directly over pairs.
inline std::optional<double> pear(const Matrix& psm, const Partition& c) {
  const std::size_t n = c.size();
  double sum_ind = 0, sum_psm = 0, sum_both = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double ind = c.labels[i] == c.labels[j] ? 1.0 : 0.0;
      const double p = psm(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      sum_ind += ind;
      sum_psm += p;
      sum_both += ind * p;
    }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double expected = sum_ind * sum_psm / pairs;
  const double denom = 0.5 * (sum_ind + sum_psm) - expected;
  if (denom == 0.0) return std::nullopt;
  return (sum_both - expected) / denom;
}

inline double silhouette_item(const Matrix& k, const Partition& p, std::size_t n) {
  auto d = [&](std::size_t a, std::size_t b) {
    if (a == b) return 0.0;
    const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
    return 0.5 * (k(ia, ia) + k(ib, ib)) - k(ia, ib);
  };
  std::map<int, std::pair<double, int>> per;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (j == n) continue;
    auto& e = per[p.labels[j]];
    e.first += d(n, j);
    e.second += 1;
  }
  const int own = p.labels[n];
  if (!per.count(own)) return 0.0;  // singleton
  const double a = per[own].first / per[own].second;
  double b = std::numeric_limits<double>::infinity();
  for (auto& [c, e] : per)
    if (c != own) b = std::min(b, e.first / e.second);
  if (!std::isfinite(b) || std::max(a, b) == 0.0) return 0.0;
  return (b - a) / std::max(a, b);
}

// ---- k-means on coordinates, with the same tie and empty-cluster rules ----

inline std::vector<Partition> coordinate_lloyd(const Matrix& x, Partition p, int max_iter) {
  const Eigen::Index n = x.rows();
  auto centroids = [&](const Partition& q) {
    Matrix c = Matrix::Zero(q.k, x.cols());
    std::vector<double> count(static_cast<std::size_t>(q.k), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      c.row(q.labels[static_cast<std::size_t>(i)]) += x.row(i);
      count[static_cast<std::size_t>(q.labels[static_cast<std::size_t>(i)])] += 1;
    }
    for (int k = 0; k < q.k; ++k)
      if (count[static_cast<std::size_t>(k)] > 0) c.row(k) /= count[static_cast<std::size_t>(k)];
    return std::make_pair(c, count);
  };
  auto repair = [&](Partition& q, const Matrix& c) {
    std::vector<int> size(static_cast<std::size_t>(q.k), 0);
    for (int l : q.labels) ++size[static_cast<std::size_t>(l)];
    for (int k = 0; k < q.k; ++k) {
      if (size[static_cast<std::size_t>(k)] != 0) continue;
      Eigen::Index far = -1;
      double far_d = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int own = q.labels[static_cast<std::size_t>(i)];
        if (size[static_cast<std::size_t>(own)] < 2) continue;
        const double di = (x.row(i) - c.row(own)).squaredNorm();
        if (di > far_d) {
          far_d = di;
          far = i;
        }
      }
      --size[static_cast<std::size_t>(q.labels[static_cast<std::size_t>(far)])];
      q.labels[static_cast<std::size_t>(far)] = k;
      ++size[static_cast<std::size_t>(k)];
    }
  };

  std::vector<Partition> history;
  {
    auto [c, count] = centroids(p);
    repair(p, c);
  }
  history.push_back(p);
  for (int it = 0; it < max_iter; ++it) {
    auto [c, count] = centroids(p);
    Partition next = p;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int k = 0; k < p.k; ++k) {
        if (count[static_cast<std::size_t>(k)] == 0) continue;
        const double dk = (x.row(i) - c.row(k)).squaredNorm();
        if (dk < best_d) {
          best_d = dk;
          best = k;
        }
      }
      next.labels[static_cast<std::size_t>(i)] = best;
    }
    repair(next, c);
    if (next.labels == p.labels) break;
    p = next;
    history.push_back(p);
  }
  return history;
}

// ---- simplex projection by enumerating supports ----

inline Vector simplex_by_supports(const Vector& v) {
  const auto m = v.size();
  Vector best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (long mask = 1; mask < (1L << m); ++mask) {
    double sum = 0;
    int size = 0;
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask & (1L << i)) {
        sum += v(i);
        ++size;
      }
    const double shift = (sum - 1.0) / size;
    Vector u = Vector::Zero(m);
    bool feasible = true;
    for (Eigen::Index i = 0; i < m; ++i)
      if (mask & (1L << i)) {
        u(i) = v(i) - shift;
        if (u(i) < 0) feasible = false;
      }
    if (!feasible) continue;
    const double dist = (u - v).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = u;
    }
  }
  return best;
}

// ---- SVM dual by enumerating faces of the box (tiny N only) ----

struct DualSolution {
  Vector alpha;
  double objective = -std::numeric_limits<double>::infinity();
};

inline DualSolution svm_dual_by_faces(const Matrix& k, const std::vector<int>& y, double c) {
  const Eigen::Index n = k.rows();
  Matrix q(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) q(i, j) = y[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(j)] * k(i, j);
  Vector yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv(i) = y[static_cast<std::size_t>(i)];
  auto value = [&](const Vector& a) { return a.sum() - 0.5 * a.dot(q * a); };

  DualSolution best;
  long faces = 1;
  for (Eigen::Index i = 0; i < n; ++i) faces *= 3;
  for (long code = 0; code < faces; ++code) {
    // state per coordinate: 0 -> alpha = 0, 1 -> alpha = c, 2 -> free
    std::vector<int> state(static_cast<std::size_t>(n));
    long rest = code;
    std::vector<Eigen::Index> free;
    Vector a = Vector::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      state[static_cast<std::size_t>(i)] = static_cast<int>(rest % 3);
      rest /= 3;
      if (state[static_cast<std::size_t>(i)] == 1) a(i) = c;
      if (state[static_cast<std::size_t>(i)] == 2) free.push_back(i);
    }
    const auto f = static_cast<Eigen::Index>(free.size());
    if (f > 0) {
      // stationarity on the face with the equality multiplier nu:
      // Q_FF a_F + nu y_F = 1 - Q_FB a_B,  y_F' a_F = -y_B' a_B
      Matrix sys = Matrix::Zero(f + 1, f + 1);
      Vector rhs = Vector::Zero(f + 1);
      const Vector qa = q * a;
      for (Eigen::Index r = 0; r < f; ++r) {
        for (Eigen::Index s = 0; s < f; ++s) sys(r, s) = q(free[static_cast<std::size_t>(r)], free[static_cast<std::size_t>(s)]);
        sys(r, f) = sys(f, r) = yv(free[static_cast<std::size_t>(r)]);
        rhs(r) = 1.0 - qa(free[static_cast<std::size_t>(r)]);
      }
      rhs(f) = -yv.dot(a);
      const Vector sol = sys.completeOrthogonalDecomposition().solve(rhs);
      if ((sys * sol - rhs).norm() > 1e-8) continue;
      for (Eigen::Index r = 0; r < f; ++r) a(free[static_cast<std::size_t>(r)]) = sol(r);
    }
    if (std::abs(yv.dot(a)) > 1e-9) continue;
    if ((a.array() < -1e-12).any() || (a.array() > c + 1e-12).any()) continue;
    const double v = value(a);
    if (v > best.objective) {
      best.objective = v;
      best.alpha = a;
    }
  }
  return best;
}

}  // namespace psmkit::oracle
