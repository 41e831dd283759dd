#pragma once

// Collapsed Gibbs sampler for a finite (overfitted) mixture of independent
// categorical covariates with Dirichlet priors on the mixture weights and
// on every per-component category distribution.

#include "psmkit/common.hpp"
#include "psmkit/psm.hpp"

#include <cmath>
#include <vector>

namespace psmkit {

struct GibbsConfig {
  int n_components = 20;
  // Symmetric Dirichlet on the mixture weights. 1 / n_components makes the
  // finite mixture a truncated DP(1); unused components then stay empty.
  double weight_prior = 0.05;
  double category_prior = 1.0;  // symmetric Dirichlet on category probabilities
  int n_iterations = 2000;
  int burn_in = 1000;
  int thin = 2;
  RngSeed seed{0};

  void validate() const {
    require(n_components >= 1, "need at least one mixture component");
    require(weight_prior > 0.0 && category_prior > 0.0, "Dirichlet priors must be positive");
    require(n_iterations >= 1, "need at least one iteration");
    require(burn_in >= 0 && burn_in < n_iterations, "burn-in must be smaller than the number of iterations");
    require(thin >= 1, "thinning must be at least 1");
  }
};

/// Runs the sampler and returns the post-burn-in, thinned allocations.
inline AllocationSampleSet gibbs_sample(const std::vector<std::vector<int>>& data, const GibbsConfig& config) {
  config.validate();
  if (data.empty()) throw Error("empty data");
  const std::size_t n = data.size();
  const std::size_t p = data.front().size();
  std::vector<int> categories(p, 1);
  for (const auto& row : data) {
    require(row.size() == p, "data rows have different lengths");
    for (std::size_t j = 0; j < p; ++j) {
      require(row[j] >= 0, "categorical data must be nonnegative integers");
      categories[j] = std::max(categories[j], row[j] + 1);
    }
  }
  const auto k_max = static_cast<std::size_t>(config.n_components);

  // counts[k][offset[j] + c]: members of component k with category c in column j
  std::vector<std::size_t> offset(p + 1, 0);
  for (std::size_t j = 0; j < p; ++j) offset[j + 1] = offset[j] + static_cast<std::size_t>(categories[j]);
  std::vector<std::vector<int>> counts(k_max, std::vector<int>(offset[p], 0));
  std::vector<int> sizes(k_max, 0);

  // log(c + beta) and log(m + C_j beta), tabulated for integer counts.
  const double beta = config.category_prior;
  std::vector<double> log_count(n + 1), log_weight(n + 1);
  for (std::size_t c = 0; c <= n; ++c) {
    log_count[c] = std::log(static_cast<double>(c) + beta);
    log_weight[c] = std::log(static_cast<double>(c) + config.weight_prior);
  }
  std::vector<std::vector<double>> log_norm(p, std::vector<double>(n + 1));
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t m = 0; m <= n; ++m) log_norm[j][m] = std::log(static_cast<double>(m) + categories[j] * beta);

  Rng rng = make_rng(config.seed);
  std::vector<int> z(n);
  auto move = [&](std::size_t i, int k, int delta) {
    sizes[static_cast<std::size_t>(k)] += delta;
    auto& ck = counts[static_cast<std::size_t>(k)];
    for (std::size_t j = 0; j < p; ++j) ck[offset[j] + static_cast<std::size_t>(data[i][j])] += delta;
  };
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = static_cast<int>(uniform_index(rng, k_max));
    move(i, z[i], +1);
  }

  AllocationSampleSet draws;
  std::vector<double> logp(k_max), prob(k_max);
  for (int iter = 0; iter < config.n_iterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      move(i, z[i], -1);
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < k_max; ++k) {
        const auto nk = static_cast<std::size_t>(sizes[k]);
        double lp = log_weight[nk];
        const auto& ck = counts[k];
        for (std::size_t j = 0; j < p; ++j)
          lp += log_count[static_cast<std::size_t>(ck[offset[j] + static_cast<std::size_t>(data[i][j])])] - log_norm[j][nk];
        logp[k] = lp;
        mx = std::max(mx, lp);
      }
      double total = 0.0;
      for (std::size_t k = 0; k < k_max; ++k) total += (prob[k] = std::exp(logp[k] - mx));
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      int pick = static_cast<int>(k_max) - 1;
      for (std::size_t k = 0; k < k_max; ++k) {
        acc += prob[k];
        if (target < acc) {
          pick = static_cast<int>(k);
          break;
        }
      }
      z[i] = pick;
      move(i, pick, +1);
    }
    if (iter >= config.burn_in && (iter - config.burn_in) % config.thin == 0)
      draws.append(std::vector<long long>(z.begin(), z.end()));
  }
  return draws;
}

/// Pools the draws of `n_chains` independent chains seeded from config.seed.
inline AllocationSampleSet gibbs_sample_chains(const std::vector<std::vector<int>>& data, const GibbsConfig& config,
                                               int n_chains) {
  require(n_chains >= 1, "need at least one chain");
  AllocationSampleSet pooled;
  for (int c = 0; c < n_chains; ++c) {
    GibbsConfig chain = config;
    chain.seed = derive_seed(config.seed, static_cast<std::uint64_t>(c));
    const AllocationSampleSet draws = gibbs_sample(data, chain);
    for (const auto& row : draws.labels()) pooled.append(row);
  }
  return pooled;
}

}  // namespace psmkit
