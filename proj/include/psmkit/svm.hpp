#pragma once

// C-SVM dual solved by sequential minimal optimisation over a precomputed
// kernel, with maximal-violating-pair working set selection.
//
//   max_a  sum_n a_n - 1/2 sum_ij a_i a_j y_i y_j K_ij
//   s.t.   0 <= a_n <= lambda,  sum_n a_n y_n = 0

#include "psmkit/common.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace psmkit {

struct SvmOptions {
  double lambda = 1.0;
  double tol = 1e-5;
  // Iteration cap is max_passes * N^2 pair updates; 0 selects 10 passes.
  int max_passes = 0;
};

struct SvmModel {
  Vector alpha;
  std::vector<int> y;  // +1 / -1
  double bias = 0.0;
  double lambda = 0.0;
  double dual_objective = 0.0;
  // Maximal KKT violation m(a) - M(a) at termination.
  double kkt_violation = 0.0;
  long iterations = 0;
  bool converged = false;

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (Eigen::Index i = 0; i < alpha.size(); ++i)
      if (alpha(i) > 0.0) s.push_back(static_cast<std::size_t>(i));
    return s;
  }

  // f(x_n) + b for a training item, given the training kernel.
  double decision(const Matrix& kernel, Eigen::Index n) const {
    double f = bias;
    for (Eigen::Index i = 0; i < alpha.size(); ++i)
      if (alpha(i) != 0.0) f += alpha(i) * y[static_cast<std::size_t>(i)] * kernel(n, i);
    return f;
  }
};

namespace detail {

inline bool in_up_set(int y, double a, double c) { return (y > 0 && a < c) || (y < 0 && a > 0.0); }
inline bool in_low_set(int y, double a, double c) { return (y > 0 && a > 0.0) || (y < 0 && a < c); }

}  // namespace detail

inline SvmModel svm_train(const Matrix& kernel, const std::vector<int>& y, const SvmOptions& options = {}) {
  const Eigen::Index n = kernel.rows();
  require(kernel.cols() == n, "kernel matrix must be square");
  require(static_cast<Eigen::Index>(y.size()) == n, "response length does not match kernel");
  require(options.lambda > 0.0, "lambda must be positive");
  require(options.tol > 0.0, "SVM tolerance must be positive");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    require(v == 1 || v == -1, "binary response must be encoded as +1/-1");
    (v > 0 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw Error("SVM training needs both classes; response has a single class");

  const double c = options.lambda;
  constexpr double tau = 1e-12;
  const int passes = options.max_passes > 0 ? options.max_passes : 10;
  const long max_iter = static_cast<long>(passes) * static_cast<long>(n) * std::max<long>(n, 1);

  auto yi = [&](Eigen::Index i) { return static_cast<double>(y[static_cast<std::size_t>(i)]); };

  SvmModel model;
  model.alpha = Vector::Zero(n);
  model.y = y;
  model.lambda = c;
  Vector& a = model.alpha;
  Vector grad = Vector::Constant(n, -1.0);  // gradient of 1/2 a'Qa - e'a

  long iter = 0;
  double gap = 0.0;
  for (;; ++iter) {
    Eigen::Index i = -1, j = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const int yt = y[static_cast<std::size_t>(t)];
      const double v = -yt * grad(t);
      if (detail::in_up_set(yt, a(t), c) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (detail::in_low_set(yt, a(t), c) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    gap = (i < 0 || j < 0) ? 0.0 : gmax - gmin;
    if (gap < options.tol) {
      model.converged = true;
      break;
    }
    if (iter >= max_iter) break;

    const double ai_old = a(i), aj_old = a(j);
    const double qij = yi(i) * yi(j) * kernel(i, j);
    if (y[static_cast<std::size_t>(i)] != y[static_cast<std::size_t>(j)]) {
      double quad = kernel(i, i) + kernel(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = a(i) - a(j);
      a(i) += delta;
      a(j) += delta;
      if (diff > 0.0) {
        if (a(j) < 0.0) {
          a(j) = 0.0;
          a(i) = diff;
        }
      } else if (a(i) < 0.0) {
        a(i) = 0.0;
        a(j) = -diff;
      }
      if (diff > 0.0) {
        if (a(i) > c) {
          a(i) = c;
          a(j) = c - diff;
        }
      } else if (a(j) > c) {
        a(j) = c;
        a(i) = c + diff;
      }
    } else {
      double quad = kernel(i, i) + kernel(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = a(i) + a(j);
      a(i) -= delta;
      a(j) += delta;
      if (sum > c) {
        if (a(i) > c) {
          a(i) = c;
          a(j) = sum - c;
        }
      } else if (a(j) < 0.0) {
        a(j) = 0.0;
        a(i) = sum;
      }
      if (sum > c) {
        if (a(j) > c) {
          a(j) = c;
          a(i) = sum - c;
        }
      } else if (a(i) < 0.0) {
        a(i) = 0.0;
        a(j) = sum;
      }
    }

    const double di = a(i) - ai_old, dj = a(j) - aj_old;
    for (Eigen::Index t = 0; t < n; ++t)
      grad(t) += yi(t) * (yi(i) * kernel(t, i) * di + yi(j) * kernel(t, j) * dj);
  }
  model.iterations = iter;
  model.kkt_violation = gap;

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = yi(t) * grad(t);
    if (a(t) >= c) {
      if (yi(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (a(t) <= 0.0) {
      if (yi(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  model.bias = -rho;
  // dual value: sum a - 1/2 a'Qa, with Qa = grad + e
  model.dual_objective = a.sum() - 0.5 * a.dot(grad + Vector::Ones(n));
  return model;
}

}  // namespace psmkit
