#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace psmkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Precondition or numerical contract violated by the caller's input.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unreadable input file.
class DataError : public Error {
 public:
  using Error::Error;
};

struct RngSeed {
  std::uint64_t value = 0;
};

// splitmix64 finaliser; used to derive independent streams from one seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline RngSeed derive_seed(RngSeed parent, std::uint64_t stream) {
  return {mix64(parent.value ^ mix64(stream + 0x632be59bd9b4e019ULL))};
}

using Rng = std::mt19937_64;

inline Rng make_rng(RngSeed seed) { return Rng{seed.value}; }

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

// Hard assignment of n items to clusters 0..k-1.
struct Partition {
  std::vector<int> labels;
  int k = 0;

  std::size_t size() const { return labels.size(); }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
  }

  Matrix one_hot() const {
    Matrix z = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), k);
    for (std::size_t i = 0; i < labels.size(); ++i) z(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    return z;
  }

  friend bool operator==(const Partition&, const Partition&) = default;
};

// Maps arbitrary integer labels to 0..K-1 by order of first appearance.
template <typename Label>
std::vector<int> canonical_labels(const std::vector<Label>& raw, int* n_clusters = nullptr) {
  std::unordered_map<Label, int> ids;
  std::vector<int> out;
  out.reserve(raw.size());
  for (const auto& l : raw) {
    auto [it, inserted] = ids.try_emplace(l, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  if (n_clusters) *n_clusters = static_cast<int>(ids.size());
  return out;
}

template <typename Label>
Partition make_partition(const std::vector<Label>& raw) {
  Partition p;
  p.labels = canonical_labels(raw, &p.k);
  return p;
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

}  // namespace psmkit
