#pragma once

// Posterior similarity matrices: construction from allocation draws and
// validation/repair as kernel matrices.

#include "psmkit/common.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

namespace psmkit {

// B clustering draws over N items; labels[b][i] is the cluster of item i in draw b.
class AllocationSampleSet {
 public:
  AllocationSampleSet() = default;

  explicit AllocationSampleSet(std::vector<std::vector<long long>> labels) : labels_(std::move(labels)) {
    if (!labels_.empty()) {
      const std::size_t n = labels_.front().size();
      require(n >= 1, "allocation draws must cover at least one item");
      for (std::size_t b = 0; b < labels_.size(); ++b) {
        if (labels_[b].size() != n) {
          std::ostringstream msg;
          msg << "draw " << b << " has " << labels_[b].size() << " items, expected " << n;
          throw Error(msg.str());
        }
      }
    }
  }

  std::size_t n_items() const { return labels_.empty() ? 0 : labels_.front().size(); }
  std::size_t n_samples() const { return labels_.size(); }
  const std::vector<std::vector<long long>>& labels() const { return labels_; }
  const std::vector<long long>& draw(std::size_t b) const { return labels_[b]; }

  void append(std::vector<long long> row) {
    if (!labels_.empty()) require(row.size() == n_items(), "draw length does not match item count");
    labels_.push_back(std::move(row));
  }

 private:
  std::vector<std::vector<long long>> labels_;
};

// N x N symmetric PSD matrix of co-clustering probabilities, unit diagonal.
struct SimilarityKernel {
  Matrix entries;
  std::string provenance;

  Eigen::Index size() const { return entries.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return entries(i, j); }
};

// Integer co-clustering counts summed over draws. Exact for any B < 2^53.
inline Matrix co_clustering_counts(const AllocationSampleSet& samples) {
  const auto n = static_cast<Eigen::Index>(samples.n_items());
  Matrix counts = Matrix::Zero(n, n);
  for (const auto& row : samples.labels()) {
    const std::vector<int> c = canonical_labels(row);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j; i < n; ++i) {
        if (c[static_cast<std::size_t>(i)] == c[static_cast<std::size_t>(j)]) counts(i, j) += 1.0;
      }
    }
  }
  counts.triangularView<Eigen::StrictlyUpper>() = counts.transpose();
  return counts;
}

inline SimilarityKernel compute_psm(const AllocationSampleSet& samples, std::string provenance = {}) {
  if (samples.n_samples() == 0) throw Error("no samples");
  Matrix psm = co_clustering_counts(samples) / static_cast<double>(samples.n_samples());
  return {std::move(psm), std::move(provenance)};
}

template <typename Label>
Matrix co_clustering(const std::vector<Label>& labels_row) {
  require(!labels_row.empty(), "co_clustering needs a non-empty label vector");
  const auto n = static_cast<Eigen::Index>(labels_row.size());
  Matrix c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      c(i, j) = labels_row[static_cast<std::size_t>(i)] == labels_row[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
  return c;
}

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kDefaultPsdTolerance = 1e-10;

inline double max_asymmetry(const Matrix& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

struct PsdReport {
  bool psd = false;
  double min_eigenvalue = 0.0;
};

inline double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("eigen-decomposition failed");
  return solver.eigenvalues().minCoeff();
}

inline PsdReport check_psd(const Matrix& m, double tol = kDefaultPsdTolerance) {
  require(m.rows() == m.cols(), "kernel matrix must be square");
  require(tol >= 0.0, "PSD tolerance must be nonnegative");
  if (m.size() == 0) return {true, 0.0};
  const double asym = max_asymmetry(m);
  if (asym > kSymmetryTolerance) {
    std::ostringstream msg;
    msg << "kernel matrix is not symmetric (max |A - A^T| = " << asym << ")";
    throw Error(msg.str());
  }
  const double lmin = min_eigenvalue(m);
  return {lmin >= -tol, lmin};
}

inline PsdReport check_psd(const SimilarityKernel& k, double tol = kDefaultPsdTolerance) {
  return check_psd(k.entries, tol);
}

// Repairs round-off in an externally produced PSM.
inline SimilarityKernel clamp_to_kernel(const Matrix& m, double tol = kDefaultPsdTolerance, std::string provenance = {}) {
  require(m.rows() == m.cols(), "kernel matrix must be square");
  require(m.rows() >= 1, "kernel matrix must be non-empty");
  const double asym = max_asymmetry(m);
  if (asym > 1e-6) {
    std::ostringstream msg;
    msg << "matrix is not symmetric within 1e-6 (max |A - A^T| = " << asym << ")";
    throw Error(msg.str());
  }
  Matrix out = (0.5 * (m + m.transpose())).cwiseMax(0.0).cwiseMin(1.0);
  out.diagonal().setOnes();
  const double lmin = min_eigenvalue(out);
  if (lmin < -tol) {
    std::ostringstream msg;
    msg << "matrix is not positive semi-definite: smallest eigenvalue " << lmin << " < -" << tol;
    throw Error(msg.str());
  }
  return {std::move(out), std::move(provenance)};
}

}  // namespace psmkit
