#pragma once

// End-to-end simulation pipeline: synthetic datasets -> Gibbs PSMs ->
// single-PSM summaries, unsupervised and outcome-guided combinations of
// every 3-of-4 subset, reported as a long-format table.

#include "psmkit/common.hpp"
#include "psmkit/csv.hpp"
#include "psmkit/gibbs.hpp"
#include "psmkit/kernel_kmeans.hpp"
#include "psmkit/metrics.hpp"
#include "psmkit/mkkm.hpp"
#include "psmkit/psm.hpp"
#include "psmkit/simplemkl.hpp"
#include "psmkit/synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

namespace psmkit {

// Worker count: PSMKIT_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
  if (const char* env = std::getenv("PSMKIT_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, n) on up to `threads` workers; rethrows the first failure.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

struct ReplicateConfig {
  Setting setting = Setting::A;
  int n_seeds = 20;
  std::uint64_t first_seed = 1;
  std::vector<double> w_values{0.2, 0.4, 0.6, 0.8};
  SyntheticConfig data;  // w and seed are overridden per dataset / run
  int noise_covariates = 5;
  GibbsConfig gibbs;
  int n_chains = 4;
  int k = 6;
  KernelKMeansOptions kmeans;
  MultipleKernelKMeansOptions mkkm;
  SimpleMklOptions mkl;
  unsigned threads = 1;
};

struct ReplicateRow {
  std::uint64_t seed = 0;
  std::string subset;   // "single" or e.g. "0+1+2"
  std::string method;   // kkmeans | mkkm | guided
  std::string dataset;  // dataset index within the setting
  double ari = 0.0;
  double weight = 0.0;
};

// Every way of choosing `choose` of the `n` datasets, in lexicographic order.
inline std::vector<std::vector<std::size_t>> dataset_subsets(std::size_t n, std::size_t choose) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<bool> mask(n, false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(std::min(choose, n)), true);
  do {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i]) s.push_back(i);
    out.push_back(std::move(s));
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return out;
}

inline std::string subset_name(const std::vector<std::size_t>& s) {
  std::string name;
  for (std::size_t i = 0; i < s.size(); ++i) name += (i ? "+" : "") + std::to_string(s[i]);
  return name;
}

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<SettingDataset> datasets;
  std::vector<SimilarityKernel> psms;
  std::vector<ReplicateRow> rows;
};

namespace stream {
inline constexpr std::uint64_t kGibbs = 100;
inline constexpr std::uint64_t kSummary = 200;
inline constexpr std::uint64_t kUnsupervised = 300;
inline constexpr std::uint64_t kGuided = 400;
}  // namespace stream

// Datasets and Gibbs PSMs for one seed.
inline SeedRun simulate_psms(const ReplicateConfig& config, std::uint64_t seed) {
  SeedRun run;
  run.seed = seed;
  SyntheticConfig base = config.data;
  base.seed = RngSeed{seed};
  run.datasets = make_setting(config.setting, config.w_values, base, config.noise_covariates);
  for (std::size_t d = 0; d < run.datasets.size(); ++d) {
    GibbsConfig g = config.gibbs;
    g.seed = derive_seed(RngSeed{seed}, stream::kGibbs + d);
    run.psms.push_back(compute_psm(gibbs_sample_chains(run.datasets[d].dataset.data, g, config.n_chains), "dataset_" + std::to_string(d)));
  }
  return run;
}

inline SeedRun run_replicate_seed(const ReplicateConfig& config, std::uint64_t seed) {
  SeedRun run = simulate_psms(config, seed);
  const RngSeed master{seed};
  const Partition& truth = run.datasets.front().dataset.truth;
  KernelKMeansOptions kmeans = config.kmeans;
  kmeans.validate_kernel = false;

  for (std::size_t d = 0; d < run.psms.size(); ++d) {
    const Partition p = summarise_psm(run.psms[d], config.k, derive_seed(master, stream::kSummary + d), kmeans);
    run.rows.push_back({seed, "single", "kkmeans", std::to_string(d), ari(p, truth), 1.0});
  }

  const ResponseVector response = make_response(run.datasets.front().dataset.response);
  const auto subsets = dataset_subsets(run.psms.size(), std::min<std::size_t>(3, run.psms.size()));
  MultipleKernelKMeansOptions mkkm = config.mkkm;
  mkkm.kmeans.validate_kernel = false;
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    std::vector<SimilarityKernel> members;
    for (auto d : subsets[s]) members.push_back(run.psms[d]);
    const KernelStack stack(members);
    const std::string name = subset_name(subsets[s]);

    const auto unsup = multiple_kernel_kmeans(stack, config.k, derive_seed(master, stream::kUnsupervised + s), mkkm);
    const double unsup_ari = ari(unsup.partition, truth);
    const Vector unsup_w = mean_kernel_weights(unsup.weights);
    for (std::size_t i = 0; i < subsets[s].size(); ++i)
      run.rows.push_back({seed, name, "mkkm", std::to_string(subsets[s][i]), unsup_ari, unsup_w(static_cast<Eigen::Index>(i))});

    if (response.n_classes() >= 2) {
      const auto guided =
          outcome_guided_combine(stack, response, config.k, derive_seed(master, stream::kGuided + s), config.mkl, kmeans);
      const double guided_ari = ari(guided.partition, truth);
      for (std::size_t i = 0; i < subsets[s].size(); ++i)
        run.rows.push_back({seed, name, "guided", std::to_string(subsets[s][i]), guided_ari, guided.theta(static_cast<Eigen::Index>(i))});
    }
  }
  return run;
}

inline std::vector<SeedRun> replicate_runs(const ReplicateConfig& config) {
  require(config.n_seeds >= 1, "need at least one seed");
  std::vector<SeedRun> runs(static_cast<std::size_t>(config.n_seeds));
  parallel_for(runs.size(), config.threads, [&](std::size_t i) {
    runs[i] = run_replicate_seed(config, config.first_seed + i);
  });
  return runs;
}

/// Rows of all seeds, sorted by (seed, subset, method, dataset).
inline std::vector<ReplicateRow> replicate_pipeline(const ReplicateConfig& config) {
  std::vector<ReplicateRow> rows;
  for (auto& run : replicate_runs(config)) rows.insert(rows.end(), run.rows.begin(), run.rows.end());
  std::stable_sort(rows.begin(), rows.end(), [](const ReplicateRow& a, const ReplicateRow& b) {
    return std::tie(a.seed, a.subset, a.method, a.dataset) < std::tie(b.seed, b.subset, b.method, b.dataset);
  });
  return rows;
}

inline void write_replicate_rows(std::ostream& out, const std::vector<ReplicateRow>& rows) {
  out << "seed,subset,method,dataset,ari,weight\n";
  for (const auto& r : rows)
    out << r.seed << ',' << r.subset << ',' << r.method << ',' << r.dataset << ',' << csv::format_double(r.ari) << ','
        << csv::format_double(r.weight) << '\n';
}

}  // namespace psmkit
