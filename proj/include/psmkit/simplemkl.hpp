#pragma once

// Outcome-guided kernel weighting: simpleMKL with an SMO inner solver,
// reduced-gradient descent of the global weights on the simplex, and
// one-vs-rest / one-vs-one decompositions for K > 2 classes.

#include "psmkit/common.hpp"
#include "psmkit/kernel_kmeans.hpp"
#include "psmkit/mkkm.hpp"
#include "psmkit/svm.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace psmkit {

// Categorical response over N items, classes encoded 0..n_classes-1.
struct ResponseVector {
  std::vector<int> classes;
  std::vector<std::string> class_names;

  int n_classes() const { return static_cast<int>(class_names.size()); }
  std::size_t size() const { return classes.size(); }
};

inline ResponseVector make_response(const std::vector<std::string>& raw) {
  ResponseVector r;
  std::unordered_map<std::string, int> ids;
  for (const auto& v : raw) {
    auto [it, inserted] = ids.try_emplace(v, static_cast<int>(ids.size()));
    if (inserted) r.class_names.push_back(v);
    r.classes.push_back(it->second);
  }
  return r;
}

inline ResponseVector make_response(const std::vector<int>& raw) {
  std::vector<std::string> s;
  s.reserve(raw.size());
  for (int v : raw) s.push_back(std::to_string(v));
  return make_response(s);
}

enum class MulticlassMode { OneVsRest, OneVsOne };

struct SimpleMklOptions {
  SvmOptions svm;
  // Stop when (max - min) of the gradient over active weights, relative to
  // max |gradient|, falls below tol.
  double tol = 1e-2;
  int max_iter = 100;
  double armijo = 1e-4;
  int max_line_search = 30;
  MulticlassMode mode = MulticlassMode::OneVsRest;
};

struct MklEvaluation {
  double objective = 0.0;
  Vector gradient;
  std::vector<SvmModel> models;
};

inline Matrix weighted_kernel_sum(const KernelStack& stack, const Vector& theta) {
  require(theta.size() == static_cast<Eigen::Index>(stack.size()), "weight vector length does not match stack");
  Matrix out = Matrix::Zero(stack.n_items(), stack.n_items());
  for (std::size_t m = 0; m < stack.size(); ++m) {
    const double t = theta(static_cast<Eigen::Index>(m));
    if (t != 0.0) out += t * stack.kernels[m];
  }
  return out;
}

namespace detail {

inline void require_simplex(const Vector& theta) {
  require((theta.array() >= 0.0).all(), "kernel weights must be nonnegative");
  require(std::abs(theta.sum() - 1.0) <= 1e-9, "kernel weights must sum to one");
}

// One binary sub-problem: the items it covers and their +1/-1 labels.
struct BinaryTask {
  std::vector<Eigen::Index> items;
  std::vector<int> y;
};

inline std::vector<BinaryTask> binary_tasks(const ResponseVector& response, MulticlassMode mode) {
  const int k = response.n_classes();
  std::vector<std::size_t> counts(static_cast<std::size_t>(k), 0);
  for (int c : response.classes) ++counts[static_cast<std::size_t>(c)];
  for (int c = 0; c < k; ++c)
    if (counts[static_cast<std::size_t>(c)] == 0) throw Error("class " + response.class_names[static_cast<std::size_t>(c)] + " has no members");
  if (k < 2) throw Error("response must have at least two classes");

  const auto n = static_cast<Eigen::Index>(response.size());
  std::vector<BinaryTask> tasks;
  auto one_vs = [&](auto positive, auto included) {
    BinaryTask task;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = response.classes[static_cast<std::size_t>(i)];
      if (!included(c)) continue;
      task.items.push_back(i);
      task.y.push_back(positive(c) ? 1 : -1);
    }
    tasks.push_back(std::move(task));
  };
  if (k == 2) {
    // Both decompositions reduce to the single binary problem.
    one_vs([](int c) { return c == 1; }, [](int) { return true; });
  } else if (mode == MulticlassMode::OneVsRest) {
    for (int c = 0; c < k; ++c) one_vs([c](int v) { return v == c; }, [](int) { return true; });
  } else {
    for (int a = 0; a < k; ++a)
      for (int b = a + 1; b < k; ++b) one_vs([a](int v) { return v == a; }, [a, b](int v) { return v == a || v == b; });
  }
  return tasks;
}

inline Matrix submatrix(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  const auto s = static_cast<Eigen::Index>(idx.size());
  Matrix out(s, s);
  for (Eigen::Index a = 0; a < s; ++a)
    for (Eigen::Index b = 0; b < s; ++b) out(a, b) = m(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
  return out;
}

inline MklEvaluation evaluate_tasks(const KernelStack& stack, const std::vector<BinaryTask>& tasks, const Vector& theta,
                                    const SvmOptions& svm) {
  const Matrix combined = weighted_kernel_sum(stack, theta);
  MklEvaluation eval;
  eval.gradient = Vector::Zero(static_cast<Eigen::Index>(stack.size()));
  for (const auto& task : tasks) {
    const bool full = static_cast<Eigen::Index>(task.items.size()) == stack.n_items();
    SvmModel model = svm_train(full ? combined : submatrix(combined, task.items), task.y, svm);
    Vector ya(static_cast<Eigen::Index>(task.items.size()));
    for (Eigen::Index a = 0; a < ya.size(); ++a) ya(a) = model.alpha(a) * task.y[static_cast<std::size_t>(a)];
    eval.objective += model.dual_objective;
    for (std::size_t m = 0; m < stack.size(); ++m) {
      const Matrix km = full ? stack.kernels[m] : submatrix(stack.kernels[m], task.items);
      eval.gradient(static_cast<Eigen::Index>(m)) += -0.5 * ya.dot(km * ya);
    }
    eval.models.push_back(std::move(model));
  }
  return eval;
}

}  // namespace detail

/// Objective J(theta) (optimal SVM dual value on sum_m theta_m K_m) and its
/// gradient dJ/dtheta_m = -1/2 sum_ij a_i a_j y_i y_j K_m(i,j).
inline MklEvaluation simplemkl_objective_and_grad(const KernelStack& stack, const std::vector<int>& y, const Vector& theta,
                                                  const SvmOptions& svm = {}) {
  stack.validate();
  detail::require_simplex(theta);
  require(static_cast<Eigen::Index>(y.size()) == stack.n_items(), "response length does not match kernels");
  detail::BinaryTask task;
  task.y = y;
  for (Eigen::Index i = 0; i < stack.n_items(); ++i) task.items.push_back(i);
  return detail::evaluate_tasks(stack, {task}, theta, svm);
}

struct SimpleMklResult {
  Vector theta;
  double objective = 0.0;
  // J at every accepted iterate, starting from the initial weights.
  std::vector<double> objective_trace;
  int iterations = 0;
  bool converged = false;
  std::size_t n_subproblems = 0;
};

namespace detail {

inline SimpleMklResult reduced_gradient_descent(const KernelStack& stack, const std::vector<BinaryTask>& tasks,
                                                const SimpleMklOptions& options) {
  const auto m = static_cast<Eigen::Index>(stack.size());
  SimpleMklResult result;
  result.n_subproblems = tasks.size();
  result.theta = Vector::Constant(m, 1.0 / static_cast<double>(m));
  if (m == 1) result.theta(0) = 1.0;
  std::vector<bool> active(static_cast<std::size_t>(m), true);

  MklEvaluation eval = evaluate_tasks(stack, tasks, result.theta, options.svm);
  result.objective_trace.push_back(eval.objective);

  for (int iter = 0; iter < options.max_iter; ++iter) {
    result.iterations = iter;
    const Vector& g = eval.gradient;
    std::vector<Eigen::Index> act;
    for (Eigen::Index i = 0; i < m; ++i)
      if (active[static_cast<std::size_t>(i)]) act.push_back(i);
    if (act.size() <= 1) {
      result.converged = true;
      break;
    }
    double gmax = -std::numeric_limits<double>::infinity(), gmin = -gmax, gscale = 0.0;
    for (auto i : act) {
      gmax = std::max(gmax, g(i));
      gmin = std::min(gmin, g(i));
      gscale = std::max(gscale, std::abs(g(i)));
    }
    if (gmax - gmin <= options.tol * std::max(gscale, 1e-300)) {
      result.converged = true;
      break;
    }

    // Reduction pivot: the largest active weight.
    Eigen::Index pivot = act.front();
    for (auto i : act)
      if (result.theta(i) > result.theta(pivot)) pivot = i;
    Vector direction = Vector::Zero(m);
    for (auto i : act) {
      if (i == pivot) continue;
      direction(i) = -(g(i) - g(pivot));
      direction(pivot) += g(i) - g(pivot);
    }
    const double slope = g.dot(direction);
    if (slope >= 0.0) {
      result.converged = true;
      break;
    }

    double step_max = std::numeric_limits<double>::infinity();
    Eigen::Index blocking = -1;
    for (auto i : act) {
      if (direction(i) < 0.0) {
        const double s = -result.theta(i) / direction(i);
        if (s < step_max) {
          step_max = s;
          blocking = i;
        }
      }
    }

    bool accepted = false;
    double step = step_max;
    for (int ls = 0; ls < options.max_line_search; ++ls, step *= 0.5) {
      Vector trial = (result.theta + step * direction).cwiseMax(0.0);
      const bool at_boundary = ls == 0;
      if (at_boundary) trial(blocking) = 0.0;
      for (Eigen::Index i = 0; i < m; ++i)
        if (!active[static_cast<std::size_t>(i)]) trial(i) = 0.0;
      trial /= trial.sum();
      MklEvaluation trial_eval = evaluate_tasks(stack, tasks, trial, options.svm);
      if (trial_eval.objective <= eval.objective + options.armijo * step * slope) {
        result.theta = trial;
        eval = std::move(trial_eval);
        if (at_boundary) active[static_cast<std::size_t>(blocking)] = false;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      result.converged = true;
      break;
    }
    result.objective_trace.push_back(eval.objective);
    result.iterations = iter + 1;
  }
  result.objective = eval.objective;
  return result;
}

}  // namespace detail

/// Binary simpleMKL; y must be +1/-1 and contain both classes.
inline SimpleMklResult simplemkl(const KernelStack& stack, const std::vector<int>& y, const SimpleMklOptions& options = {}) {
  stack.validate();
  require(static_cast<Eigen::Index>(y.size()) == stack.n_items(), "response length does not match kernels");
  detail::BinaryTask task;
  task.y = y;
  for (Eigen::Index i = 0; i < stack.n_items(); ++i) task.items.push_back(i);
  return detail::reduced_gradient_descent(stack, {task}, options);
}

/// Shared weights descending the summed objective of all partial SVMs.
inline SimpleMklResult simplemkl_multiclass(const KernelStack& stack, const ResponseVector& response,
                                            const SimpleMklOptions& options = {}) {
  stack.validate();
  require(static_cast<Eigen::Index>(response.size()) == stack.n_items(), "response length does not match kernels");
  return detail::reduced_gradient_descent(stack, detail::binary_tasks(response, options.mode), options);
}

struct OutcomeGuidedResult {
  Partition partition;
  Vector theta;
  Matrix combined_kernel;
  SimpleMklResult mkl;
};

inline OutcomeGuidedResult outcome_guided_combine(const KernelStack& stack, const ResponseVector& response, int k,
                                                  RngSeed seed, const SimpleMklOptions& mkl_options = {},
                                                  const KernelKMeansOptions& kmeans_options = {}) {
  stack.validate();
  if (kmeans_options.validate_kernel) stack.validate_psd(kmeans_options.psd_tol);
  OutcomeGuidedResult out;
  out.mkl = simplemkl_multiclass(stack, response, mkl_options);
  out.theta = out.mkl.theta;
  out.combined_kernel = weighted_kernel_sum(stack, out.theta);
  KernelKMeansOptions inner = kmeans_options;
  inner.validate_kernel = false;
  out.partition = kernel_kmeans(out.combined_kernel, k, seed, inner).partition;
  return out;
}

}  // namespace psmkit
