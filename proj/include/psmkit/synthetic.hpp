#pragma once

// Synthetic categorical datasets with tunable cluster separability w:
// for cluster k and covariate j, pi = w * rho + (1 - w) / 3 with
// rho ~ Dirichlet(conc, conc, conc); binary response y ~ Bernoulli(theta_k).

#include "psmkit/common.hpp"
#include "psmkit/metrics.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace psmkit {

inline const std::vector<double>& default_response_probs() {
  static const std::vector<double> probs{0.01, 0.1, 0.15, 0.85, 0.9, 0.99};
  return probs;
}

struct SyntheticConfig {
  int n_items = 120;
  int n_clusters = 6;
  int n_covariates = 10;
  int n_noise_covariates = 0;
  int n_categories = 3;
  double w = 0.5;
  std::vector<double> response_probs = default_response_probs();
  double dirichlet_conc = 0.01;
  RngSeed seed{0};
  // Selects an independent stream for covariates; datasets of one setting
  // share seed (truth and response) but use distinct data streams.
  std::uint64_t data_stream = 0;

  void validate() const {
    require(n_items >= 1, "n_items must be positive");
    require(n_clusters >= 1 && n_clusters <= n_items, "n_clusters must lie in [1, n_items]");
    require(n_covariates >= 0 && n_noise_covariates >= 0, "covariate counts must be nonnegative");
    require(n_categories >= 2, "need at least two categories");
    require(w >= 0.0 && w <= 1.0, "separability w must lie in [0, 1]");
    require(dirichlet_conc > 0.0, "Dirichlet concentration must be positive");
    require(static_cast<int>(response_probs.size()) == n_clusters, "need one response probability per cluster");
    for (double p : response_probs) require(p >= 0.0 && p <= 1.0, "response probabilities must lie in [0, 1]");
  }
};

struct SyntheticDataset {
  // data[i][j] in {0, .., n_categories - 1}
  std::vector<std::vector<int>> data;
  Partition truth;
  std::vector<int> response;  // 0 / 1
  double w = 0.0;
};

namespace stream {
inline constexpr std::uint64_t kResponse = 2;
inline constexpr std::uint64_t kData = 3;
inline constexpr std::uint64_t kDecoy = 4;
}  // namespace stream

/// Symmetric Dirichlet draw, computed in log space so that tiny
/// concentrations do not underflow: log G(a) = log G(a + 1) + log(U) / a.
inline std::vector<double> sample_dirichlet(Rng& rng, double conc, int dim) {
  std::gamma_distribution<double> gamma(conc + 1.0, 1.0);
  std::vector<double> logs(static_cast<std::size_t>(dim));
  for (auto& l : logs) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    l = std::log(gamma(rng)) + std::log(u) / conc;
  }
  const double mx = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (auto& l : logs) total += (l = std::exp(l - mx));
  for (auto& l : logs) l /= total;
  return logs;
}

inline int sample_categorical(Rng& rng, const std::vector<double>& probs) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t c = 0; c < probs.size(); ++c) {
    acc += probs[c];
    if (u < acc) return static_cast<int>(c);
  }
  return static_cast<int>(probs.size()) - 1;
}

// Balanced contiguous labels: item i belongs to cluster floor(i * K / N).
inline Partition balanced_partition(int n_items, int n_clusters) {
  Partition p;
  p.k = n_clusters;
  p.labels.resize(static_cast<std::size_t>(n_items));
  for (int i = 0; i < n_items; ++i)
    p.labels[static_cast<std::size_t>(i)] = static_cast<int>(static_cast<long long>(i) * n_clusters / n_items);
  return p;
}

// Balanced labels in random item order.
inline Partition shuffled_balanced_partition(int n_items, int n_clusters, Rng& rng) {
  Partition p = balanced_partition(n_items, n_clusters);
  for (std::size_t i = p.labels.size(); i > 1; --i) std::swap(p.labels[i - 1], p.labels[uniform_index(rng, i)]);
  return make_partition(p.labels);
}

inline std::vector<int> sample_response(const Partition& truth, const std::vector<double>& probs, Rng& rng) {
  std::vector<int> y(truth.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = uniform01(rng) < probs[static_cast<std::size_t>(truth.labels[i])] ? 1 : 0;
  return y;
}

/// Draws covariates for items with the given cluster structure.
inline std::vector<std::vector<int>> sample_covariates(const SyntheticConfig& config, const Partition& structure, Rng& rng) {
  const int p = config.n_covariates;
  const int c = config.n_categories;
  std::vector<std::vector<std::vector<double>>> probs(static_cast<std::size_t>(structure.k));
  for (auto& cluster : probs) {
    for (int j = 0; j < p; ++j) {
      auto rho = sample_dirichlet(rng, config.dirichlet_conc, c);
      for (auto& r : rho) r = config.w * r + (1.0 - config.w) / c;
      cluster.push_back(std::move(rho));
    }
  }
  // Noise covariates all share one cluster-independent categorical.
  const std::vector<double> noise = config.n_noise_covariates > 0 ? sample_dirichlet(rng, 1.0, c) : std::vector<double>{};

  std::vector<std::vector<int>> data(structure.size());
  for (std::size_t i = 0; i < structure.size(); ++i) {
    auto& row = data[i];
    const auto& cluster = probs[static_cast<std::size_t>(structure.labels[i])];
    for (int j = 0; j < p; ++j) row.push_back(sample_categorical(rng, cluster[static_cast<std::size_t>(j)]));
    for (int j = 0; j < config.n_noise_covariates; ++j) row.push_back(sample_categorical(rng, noise));
  }
  return data;
}

inline SyntheticDataset generate_dataset(const SyntheticConfig& config) {
  config.validate();
  SyntheticDataset ds;
  ds.w = config.w;
  ds.truth = balanced_partition(config.n_items, config.n_clusters);
  Rng response_rng = make_rng(derive_seed(config.seed, stream::kResponse));
  ds.response = sample_response(ds.truth, config.response_probs, response_rng);
  Rng data_rng = make_rng(derive_seed(derive_seed(config.seed, stream::kData), config.data_stream));
  ds.data = sample_covariates(config, ds.truth, data_rng);
  return ds;
}

enum class Setting { A, B, C };

inline Setting parse_setting(const std::string& s) {
  if (s == "A" || s == "a") return Setting::A;
  if (s == "B" || s == "b") return Setting::B;
  if (s == "C" || s == "c") return Setting::C;
  throw Error("unknown setting '" + s + "' (expected A, B or C)");
}

inline std::string to_string(Setting s) {
  switch (s) {
    case Setting::A: return "A";
    case Setting::B: return "B";
    case Setting::C: return "C";
  }
  return "?";
}

struct SettingDataset {
  SyntheticDataset dataset;
  // Structure the covariates were drawn from; differs from dataset.truth only for the decoy.
  Partition structure;
  std::string notes;
};

/// Datasets of one simulation setting, one per w, sharing truth and response.
/// B adds `noise_covariates` structureless covariates to every dataset; C
/// draws the covariates of the highest-w dataset from an independent
/// balanced partition (the response still follows the shared truth).
inline std::vector<SettingDataset> make_setting(Setting setting, const std::vector<double>& w_values,
                                                SyntheticConfig base, int noise_covariates = 5) {
  require(!w_values.empty(), "need at least one w value");
  if (setting == Setting::B) base.n_noise_covariates = noise_covariates;
  std::size_t decoy = w_values.size();
  if (setting == Setting::C)
    decoy = static_cast<std::size_t>(std::max_element(w_values.begin(), w_values.end()) - w_values.begin());

  std::vector<SettingDataset> out;
  for (std::size_t d = 0; d < w_values.size(); ++d) {
    SyntheticConfig cfg = base;
    cfg.w = w_values[d];
    cfg.data_stream = d;
    SettingDataset sd;
    sd.dataset = generate_dataset(cfg);
    sd.structure = sd.dataset.truth;
    sd.notes = "w=" + std::to_string(cfg.w);
    if (d == decoy) {
      Rng decoy_rng = make_rng(derive_seed(base.seed, stream::kDecoy));
      sd.structure = shuffled_balanced_partition(cfg.n_items, cfg.n_clusters, decoy_rng);
      Rng data_rng = make_rng(derive_seed(derive_seed(cfg.seed, stream::kData), cfg.data_stream));
      sd.dataset.data = sample_covariates(cfg, sd.structure, data_rng);
      sd.notes += "; decoy: structure unrelated to the response";
    }
    out.push_back(std::move(sd));
  }
  return out;
}

}  // namespace psmkit
