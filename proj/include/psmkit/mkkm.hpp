#pragma once

// Localized multiple kernel k-means: alternate kernel k-means on the
// combined kernel sum_m (theta_m theta_m^T) o K_m with a simplex-constrained
// convex QP over the per-observation weights theta.

#include "psmkit/common.hpp"
#include "psmkit/kernel_kmeans.hpp"
#include "psmkit/psm.hpp"
#include "psmkit/simplex.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace psmkit {

struct KernelStack {
  std::vector<Matrix> kernels;
  std::vector<std::string> names;

  KernelStack() = default;
  explicit KernelStack(std::vector<Matrix> ks, std::vector<std::string> ns = {})
      : kernels(std::move(ks)), names(std::move(ns)) {
    if (names.empty())
      for (std::size_t m = 0; m < kernels.size(); ++m) names.push_back("kernel_" + std::to_string(m));
    validate();
  }
  explicit KernelStack(const std::vector<SimilarityKernel>& ks) {
    for (const auto& k : ks) {
      kernels.push_back(k.entries);
      names.push_back(k.provenance.empty() ? "kernel_" + std::to_string(names.size()) : k.provenance);
    }
    validate();
  }

  std::size_t size() const { return kernels.size(); }
  Eigen::Index n_items() const { return kernels.empty() ? 0 : kernels.front().rows(); }

  void validate() const {
    require(!kernels.empty(), "kernel stack is empty");
    require(names.size() == kernels.size(), "kernel stack names and kernels differ in length");
    const Eigen::Index n = kernels.front().rows();
    for (std::size_t m = 0; m < kernels.size(); ++m) {
      if (kernels[m].rows() != n || kernels[m].cols() != n) {
        std::ostringstream msg;
        msg << "kernel " << names[m] << " is " << kernels[m].rows() << "x" << kernels[m].cols() << ", expected " << n
            << "x" << n;
        throw Error(msg.str());
      }
    }
  }

  // Throws if any kernel fails the numerical PSD check.
  void validate_psd(double tol = kDefaultPsdTolerance) const {
    for (std::size_t m = 0; m < kernels.size(); ++m) {
      const auto report = check_psd(kernels[m], tol);
      if (!report.psd) {
        std::ostringstream msg;
        msg << "kernel " << names[m] << " is not positive semi-definite (smallest eigenvalue "
            << report.min_eigenvalue << ")";
        throw Error(msg.str());
      }
    }
  }
};

// N x M per-observation weights; each row lies on the simplex.
using WeightMatrix = Matrix;

inline WeightMatrix uniform_weights(Eigen::Index n, std::size_t m) {
  return WeightMatrix::Constant(n, static_cast<Eigen::Index>(m), 1.0 / static_cast<double>(m));
}

inline Matrix combine_kernels(const KernelStack& stack, const WeightMatrix& weights) {
  stack.validate();
  if (weights.rows() != stack.n_items() || weights.cols() != static_cast<Eigen::Index>(stack.size())) {
    std::ostringstream msg;
    msg << "weight matrix is " << weights.rows() << "x" << weights.cols() << ", expected " << stack.n_items() << "x"
        << stack.size();
    throw Error(msg.str());
  }
  Matrix out = Matrix::Zero(stack.n_items(), stack.n_items());
  for (std::size_t m = 0; m < stack.size(); ++m) {
    const auto col = weights.col(static_cast<Eigen::Index>(m));
    out.array() += (col * col.transpose()).array() * stack.kernels[m].array();
  }
  return out;
}

inline Vector mean_kernel_weights(const WeightMatrix& weights) {
  require(weights.rows() >= 1, "weight matrix has no rows");
  return weights.colwise().mean().transpose();
}

struct WeightUpdateOptions {
  double tol = 1e-10;
  int max_iter = 1000;
  int power_iterations = 20;
};

namespace detail {

// Kernel k-means objective as a quadratic in the weights for a fixed partition:
// f(theta) = sum_m theta_m^T Q_m theta_m, Q_m = diag(K_m) - K_m o B,
// B(i,j) = [z_i == z_j] / N_{z_i}.
class WeightObjective {
 public:
  WeightObjective(const KernelStack& stack, const Partition& partition) {
    const Eigen::Index n = stack.n_items();
    require(static_cast<Eigen::Index>(partition.size()) == n, "partition size does not match kernels");
    const auto sizes = partition.cluster_sizes();
    for (std::size_t s : sizes)
      if (s == 0) throw Error("empty cluster");
    Matrix b = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int zi = partition.labels[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < n; ++j)
        if (partition.labels[static_cast<std::size_t>(j)] == zi) b(i, j) = 1.0 / static_cast<double>(sizes[static_cast<std::size_t>(zi)]);
    }
    for (const auto& k : stack.kernels) {
      Matrix q = -(k.array() * b.array()).matrix();
      q.diagonal() += k.diagonal();
      quadratics_.push_back(std::move(q));
    }
  }

  double value(const WeightMatrix& w) const {
    double v = 0.0;
    for (std::size_t m = 0; m < quadratics_.size(); ++m) {
      const auto col = w.col(static_cast<Eigen::Index>(m));
      v += col.dot(quadratics_[m] * col);
    }
    return v;
  }

  WeightMatrix gradient(const WeightMatrix& w) const {
    WeightMatrix g(w.rows(), w.cols());
    for (std::size_t m = 0; m < quadratics_.size(); ++m) {
      const auto mi = static_cast<Eigen::Index>(m);
      g.col(mi) = 2.0 * (quadratics_[m] * w.col(mi));
    }
    return g;
  }

  // Power-iteration estimate of the largest Hessian eigenvalue (Hessian = 2 Q_m blocks).
  double lipschitz_estimate(int iterations) const {
    double best = 0.0;
    for (const auto& q : quadratics_) {
      Vector v = Vector::Ones(q.rows()).normalized();
      double lambda = 0.0;
      for (int it = 0; it < iterations; ++it) {
        Vector next = q * v;
        lambda = next.norm();
        if (lambda <= 0.0) break;
        v = next / lambda;
      }
      best = std::max(best, lambda);
    }
    return 2.0 * best;
  }

 private:
  std::vector<Matrix> quadratics_;
};

inline WeightMatrix project_rows_to_simplex(const WeightMatrix& w) {
  WeightMatrix out(w.rows(), w.cols());
  for (Eigen::Index i = 0; i < w.rows(); ++i) out.row(i) = project_to_simplex(w.row(i).transpose()).transpose();
  return out;
}

}  // namespace detail

/// Projected-gradient descent on the kernel k-means objective over the
/// weights, keeping the partition fixed. Steps are 1/L with L from power
/// iteration, doubled whenever a step fails to decrease the objective.
inline WeightMatrix update_weights(const KernelStack& stack, const Partition& partition, const WeightMatrix& weights_init,
                                   const WeightUpdateOptions& options = {}) {
  stack.validate();
  require(weights_init.rows() == stack.n_items() && weights_init.cols() == static_cast<Eigen::Index>(stack.size()),
          "initial weight matrix has the wrong shape");
  const detail::WeightObjective objective(stack, partition);
  WeightMatrix w = detail::project_rows_to_simplex(weights_init);
  double f = objective.value(w);
  double lipschitz = objective.lipschitz_estimate(options.power_iterations);
  if (lipschitz <= 0.0) return w;

  for (int iter = 0; iter < options.max_iter; ++iter) {
    const WeightMatrix g = objective.gradient(w);
    WeightMatrix candidate;
    double f_new = f;
    bool improved = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      candidate = detail::project_rows_to_simplex(w - g / lipschitz);
      f_new = objective.value(candidate);
      if (f_new <= f) {
        improved = true;
        break;
      }
      lipschitz *= 2.0;
    }
    if (!improved) break;
    const double gain = f - f_new;
    w = std::move(candidate);
    f = f_new;
    if (gain < options.tol) break;
  }
  return w;
}

struct MultipleKernelKMeansOptions {
  KernelKMeansOptions kmeans;
  WeightUpdateOptions weights;
  int outer_max_iter = 50;
  double outer_rel_tol = 1e-6;
};

struct MultipleKernelKMeansResult {
  Partition partition;
  WeightMatrix weights;
  Matrix combined_kernel;
  // Objective after every k-means phase and every weight phase.
  std::vector<double> objective_trace;
  int n_outer = 0;
  bool converged = false;
};

/// Two-step alternation starting from uniform weights. The first k-means
/// phase uses seeded restarts; later phases continue Lloyd from the current
/// partition, so the objective trace never increases.
inline MultipleKernelKMeansResult multiple_kernel_kmeans(const KernelStack& stack, int k, RngSeed seed,
                                                         const MultipleKernelKMeansOptions& options = {}) {
  stack.validate();
  require(options.outer_max_iter >= 1, "outer_max_iter must be at least 1");
  if (options.kmeans.validate_kernel) stack.validate_psd(options.kmeans.psd_tol);

  MultipleKernelKMeansResult result;
  result.weights = uniform_weights(stack.n_items(), stack.size());
  result.combined_kernel = combine_kernels(stack, result.weights);

  KernelKMeansOptions inner = options.kmeans;
  inner.validate_kernel = false;
  auto km = kernel_kmeans(result.combined_kernel, k, seed, inner);
  result.partition = km.partition;
  double objective = km.objective;
  result.objective_trace.push_back(objective);

  for (int outer = 0; outer < options.outer_max_iter; ++outer) {
    result.n_outer = outer + 1;
    result.weights = update_weights(stack, result.partition, result.weights, options.weights);
    result.combined_kernel = combine_kernels(stack, result.weights);
    result.objective_trace.push_back(kernel_kmeans_objective(result.combined_kernel, result.partition));

    auto step = lloyd_kernel_kmeans(result.combined_kernel, result.partition, inner.max_iter);
    const double next = step.objective;
    result.objective_trace.push_back(next);
    const bool unchanged = step.partition.labels == result.partition.labels;
    result.partition = std::move(step.partition);
    const double improvement = objective - next;
    objective = next;
    if (unchanged && improvement <= options.outer_rel_tol * std::max(std::abs(next), 1e-300)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace psmkit
