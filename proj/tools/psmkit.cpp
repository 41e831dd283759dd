// psmkit command-line front end.
//
// Exit status: 0 on success, 1 for usage errors, 2 for data errors.

#include "psmkit/psmkit.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace psmkit;

namespace {

// Bad flag values that CLI11 cannot validate on its own.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(path + ": cannot open file for reading");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Run record written next to the primary output as <output>.manifest.json.
class Manifest {
 public:
  Manifest(int argc, char** argv) : start_(std::chrono::steady_clock::now()) {
    for (int i = 0; i < argc; ++i) argv_.emplace_back(argv[i]);
    started_ = utc_now();
  }

  void input(const std::string& path) { inputs_.push_back(path); }
  void output(const std::string& path) { outputs_.push_back(path); }
  void seed(std::uint64_t s) { seeds_.push_back(s); }
  void set(const std::string& key, json value) { extra_[key] = std::move(value); }

  void write(const std::string& subcommand, const std::string& path) const {
    json m;
    m["tool"] = "psmkit";
    m["version"] = PSMKIT_VERSION;
    m["subcommand"] = subcommand;
    m["argv"] = argv_;
    m["seeds"] = seeds_;
    m["inputs"] = json::array();
    for (const auto& in : inputs_)
      m["inputs"].push_back({{"path", in}, {"sha256", sha256_file(in)}, {"bytes", fs::file_size(in)}});
    m["outputs"] = outputs_;
    m["started_utc"] = started_;
    m["elapsed_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m["settings"] = extra_;
    csv::with_output(path, [&](std::ostream& out) { out << m.dump(2) << '\n'; });
  }

 private:
  std::vector<std::string> argv_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::vector<std::uint64_t> seeds_;
  json extra_ = json::object();
  std::string started_;
  std::chrono::steady_clock::time_point start_;
};

std::vector<double> parse_list(const std::string& s, const char* flag) {
  std::vector<double> out;
  for (const auto& field : csv::split(s)) {
    auto v = csv::parse_number<double>(field);
    if (!v) throw UsageError(std::string(flag) + ": expected comma-separated numbers, got '" + s + "'");
    out.push_back(*v);
  }
  return out;
}

SimilarityKernel load_psm(const std::string& path, Manifest& manifest) {
  manifest.input(path);
  return csv::with_input(path, [](std::istream& in, const std::string& src) { return csv::read_psm(in, src); });
}

Partition load_labels(const std::string& path, Manifest& manifest) {
  manifest.input(path);
  return csv::with_input(path, [](std::istream& in, const std::string& src) { return csv::read_partition(in, src); });
}

KernelStack load_stack(const std::vector<std::string>& paths, Manifest& manifest) {
  std::vector<SimilarityKernel> kernels;
  for (const auto& p : paths) kernels.push_back(load_psm(p, manifest));
  const Eigen::Index n = kernels.front().size();
  for (std::size_t m = 1; m < kernels.size(); ++m)
    if (kernels[m].size() != n)
      throw DataError(paths[m] + ": PSM is " + std::to_string(kernels[m].size()) + "x" + std::to_string(kernels[m].size()) +
                      ", but " + paths.front() + " is " + std::to_string(n) + "x" + std::to_string(n));
  return KernelStack(kernels);
}

// --k or --k-min/--k-max; a range triggers a silhouette sweep.
struct KChoice {
  int k = 0;
  int k_min = 0;
  int k_max = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--k", k, "Number of clusters");
    cmd->add_option("--k-min", k_min, "Smallest K of a silhouette sweep");
    cmd->add_option("--k-max", k_max, "Largest K of a silhouette sweep");
  }

  bool sweep() const { return k == 0; }

  void check(Eigen::Index n) const {
    if (k != 0 && (k_min != 0 || k_max != 0)) throw UsageError("give either --k or --k-min/--k-max, not both");
    if (k == 0 && (k_min == 0 || k_max == 0)) throw UsageError("give --k, or both --k-min and --k-max");
    if (k < 0 || (k == 0 && (k_min < 2 || k_min > k_max)))
      throw UsageError("need --k >= 1, or 2 <= --k-min <= --k-max");
    const int top = k != 0 ? k : k_max;
    if (top > n) throw DataError("K = " + std::to_string(top) + " exceeds the number of items (" + std::to_string(n) + ")");
  }
};

void write_sweep_table(const std::string& path, const SilhouetteSweep& sweep) {
  csv::with_output(path, [&](std::ostream& out) {
    out << "k,mean_silhouette\n";
    for (std::size_t i = 0; i < sweep.ks.size(); ++i) out << sweep.ks[i] << ',' << csv::format_double(sweep.mean_silhouette[i]) << '\n';
  });
}

void write_labels(const std::string& path, const Partition& p, Manifest& manifest) {
  csv::with_output(path, [&](std::ostream& out) { csv::write_partition(out, p); });
  manifest.output(path);
}

MulticlassMode parse_mode(const std::string& s) {
  if (s == "ovr") return MulticlassMode::OneVsRest;
  if (s == "ovo") return MulticlassMode::OneVsOne;
  throw UsageError("--mode: expected ovr or ovo, got '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"psmkit: posterior similarity matrices as kernels for clustering summaries and integration"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PSMKIT_VERSION);
  Manifest manifest(argc, argv);

  // psm
  std::string draws_path, out_path;
  double psd_tol = kDefaultPsdTolerance;
  auto* psm_cmd = app.add_subcommand("psm", "Posterior similarity matrix from allocation draws");
  psm_cmd->add_option("--draws", draws_path, "Allocation CSV: one row per draw, one column per item")->required();
  psm_cmd->add_option("--out", out_path, "Output PSM CSV")->required();
  psm_cmd->add_option("--psd-tol", psd_tol, "Tolerance of the PSD check")->capture_default_str();

  // summarise
  std::string psm_path;
  std::uint64_t seed = 1;
  int restarts = 10, max_iter = 100;
  KChoice kc;
  std::string table_path;
  auto* sum_cmd = app.add_subcommand("summarise", "Kernel k-means summary of one PSM");
  sum_cmd->alias("summarize");
  sum_cmd->add_option("--psm", psm_path, "PSM CSV")->required();
  kc.add(sum_cmd);
  sum_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  sum_cmd->add_option("--restarts", restarts, "k-means++ restarts")->capture_default_str();
  sum_cmd->add_option("--max-iter", max_iter, "Lloyd iterations per restart")->capture_default_str();
  sum_cmd->add_option("--out", out_path, "Output labels CSV (item,label)")->required();
  sum_cmd->add_option("--out-table", table_path, "Silhouette table CSV when sweeping K");

  // combine
  std::vector<std::string> psm_paths;
  std::string labels_out, weights_out;
  int outer_max_iter = 50;
  auto* comb_cmd = app.add_subcommand("combine", "Localized multiple kernel k-means over several PSMs");
  comb_cmd->add_option("--psm", psm_paths, "PSM CSV files")->required();
  kc.add(comb_cmd);
  comb_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  comb_cmd->add_option("--restarts", restarts, "k-means++ restarts")->capture_default_str();
  comb_cmd->add_option("--outer-max-iter", outer_max_iter, "Alternation steps")->capture_default_str();
  comb_cmd->add_option("--out-labels", labels_out, "Output labels CSV")->required();
  comb_cmd->add_option("--out-weights", weights_out, "Output N x M weights CSV with a final row of means")->required();
  comb_cmd->add_option("--out-table", table_path, "Silhouette table CSV when sweeping K");

  // combine-guided
  std::string response_path, mode = "ovr";
  double lambda = SvmOptions{}.lambda;
  auto* guided_cmd = app.add_subcommand("combine-guided", "Outcome-guided integration: simpleMKL weights, then kernel k-means");
  guided_cmd->add_option("--psm", psm_paths, "PSM CSV files")->required();
  guided_cmd->add_option("--response", response_path, "Response CSV (item,class)")->required();
  kc.add(guided_cmd);
  guided_cmd->add_option("--lambda", lambda, "SVM misclassification penalty")->capture_default_str();
  guided_cmd->add_option("--mode", mode, "Multiclass decomposition: ovr or ovo")->capture_default_str();
  guided_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  guided_cmd->add_option("--restarts", restarts, "k-means++ restarts")->capture_default_str();
  guided_cmd->add_option("--out-labels", labels_out, "Output labels CSV")->required();
  guided_cmd->add_option("--out-weights", weights_out, "Output weights CSV (one row)")->required();
  guided_cmd->add_option("--out-table", table_path, "Silhouette table CSV when sweeping K");

  // silhouette-sweep
  auto* sweep_cmd = app.add_subcommand("silhouette-sweep", "Mean silhouette for every K in a range");
  sweep_cmd->add_option("--psm", psm_paths, "PSM CSV; several files sweep the multiple kernel combination")->required();
  sweep_cmd->add_option("--k-min", kc.k_min, "Smallest K")->required();
  sweep_cmd->add_option("--k-max", kc.k_max, "Largest K")->required();
  sweep_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  sweep_cmd->add_option("--restarts", restarts, "k-means++ restarts")->capture_default_str();
  sweep_cmd->add_option("--out-table", table_path, "Output table CSV (k,mean_silhouette)")->required();

  // baseline
  std::string linkage_name = "avg";
  int k_max = 20;
  std::string heights_out;
  auto* base_cmd = app.add_subcommand("baseline", "Hierarchical clustering of 1 - PSM, cut chosen by PEAR");
  base_cmd->add_option("--psm", psm_path, "PSM CSV")->required();
  base_cmd->add_option("--linkage", linkage_name, "avg or comp")->capture_default_str();
  base_cmd->add_option("--k-max", k_max, "Largest cut evaluated")->capture_default_str();
  base_cmd->add_option("--out-labels", labels_out, "Labels of the best cut");
  base_cmd->add_option("--out-heights", heights_out, "N x N cophenetic heights CSV");

  // metrics
  std::string labels_a, labels_b, metrics_psm;
  auto* met_cmd = app.add_subcommand("metrics", "Compare two partitions");
  met_cmd->add_option("--labels-a", labels_a, "Labels CSV (item,label)")->required();
  met_cmd->add_option("--labels-b", labels_b, "Labels CSV (item,label)")->required();
  met_cmd->add_option("--psm", metrics_psm, "Also report PEAR and expected Binder loss of labels-a");

  // simulate
  std::string setting_name = "A", w_list = "0.2,0.4,0.6,0.8", out_dir;
  int n_items = 120, noise_covariates = 5;
  auto* sim_cmd = app.add_subcommand("simulate", "Synthetic categorical datasets of one setting");
  sim_cmd->add_option("--setting", setting_name, "A, B or C")->capture_default_str();
  sim_cmd->add_option("--w", w_list, "Separability of each dataset")->capture_default_str();
  sim_cmd->add_option("--n", n_items, "Items per dataset")->capture_default_str();
  sim_cmd->add_option("--noise-covariates", noise_covariates, "Extra structureless covariates (setting B)")->capture_default_str();
  sim_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  sim_cmd->add_option("--out-dir", out_dir, "Output directory")->required();

  // gibbs
  std::string data_path, psm_out, draws_out;
  GibbsConfig gibbs;
  int chains = 1;
  auto* gibbs_cmd = app.add_subcommand("gibbs", "Collapsed Gibbs sampler for a categorical mixture");
  gibbs_cmd->add_option("--data", data_path, "Data CSV: integer columns, optional truth/response")->required();
  gibbs_cmd->add_option("--kmax", gibbs.n_components, "Mixture components")->capture_default_str();
  gibbs_cmd->add_option("--iters", gibbs.n_iterations, "Sweeps")->capture_default_str();
  gibbs_cmd->add_option("--burnin", gibbs.burn_in, "Discarded sweeps")->capture_default_str();
  gibbs_cmd->add_option("--thin", gibbs.thin, "Keep every thin-th sweep")->capture_default_str();
  gibbs_cmd->add_option("--weight-prior", gibbs.weight_prior, "Dirichlet prior on mixture weights")->capture_default_str();
  gibbs_cmd->add_option("--category-prior", gibbs.category_prior, "Dirichlet prior on category probabilities")->capture_default_str();
  gibbs_cmd->add_option("--chains", chains, "Independent chains pooled into one PSM")->capture_default_str();
  gibbs_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  gibbs_cmd->add_option("--out-psm", psm_out, "Output PSM CSV")->required();
  gibbs_cmd->add_option("--out-draws", draws_out, "Output allocation draws CSV");

  // replicate
  ReplicateConfig rep;
  int n_seeds = 20;
  std::string summary_out;
  unsigned threads = worker_count();
  auto* rep_cmd = app.add_subcommand("replicate", "Simulation study: datasets, Gibbs PSMs, single and combined summaries");
  rep_cmd->add_option("--setting", setting_name, "A, B or C")->capture_default_str();
  rep_cmd->add_option("--seeds", n_seeds, "Number of seeds")->capture_default_str();
  rep_cmd->add_option("--first-seed", rep.first_seed, "Seed of the first replicate")->capture_default_str();
  rep_cmd->add_option("--w", w_list, "Separability of each dataset")->capture_default_str();
  rep_cmd->add_option("--n", n_items, "Items per dataset")->capture_default_str();
  rep_cmd->add_option("--k", rep.k, "Clusters")->capture_default_str();
  rep_cmd->add_option("--iters", rep.gibbs.n_iterations, "Gibbs sweeps")->capture_default_str();
  rep_cmd->add_option("--burnin", rep.gibbs.burn_in, "Gibbs burn-in")->capture_default_str();
  rep_cmd->add_option("--chains", rep.n_chains, "Gibbs chains per dataset")->capture_default_str();
  rep_cmd->add_option("--lambda", rep.mkl.svm.lambda, "SVM misclassification penalty")->capture_default_str();
  rep_cmd->add_option("--threads", threads, "Worker threads (default PSMKIT_THREADS or all cores)");
  rep_cmd->add_option("--out", out_path, "Long-format CSV: seed,subset,method,dataset,ari,weight")->required();
  rep_cmd->add_option("--summary", summary_out, "Mean ARI and weight per subset, method and dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*psm_cmd) {
      manifest.input(draws_path);
      const auto draws = csv::with_input(draws_path, [](std::istream& in, const std::string& src) { return csv::read_allocations(in, src); });
      const SimilarityKernel psm = compute_psm(draws, draws_path);
      const auto report = check_psd(psm, psd_tol);
      if (!report.psd) throw DataError(draws_path + ": PSM fails the PSD check, smallest eigenvalue " + csv::format_double(report.min_eigenvalue));
      csv::with_output(out_path, [&](std::ostream& out) { csv::write_matrix(out, psm.entries); });
      manifest.output(out_path);
      manifest.set("n_items", draws.n_items());
      manifest.set("n_samples", draws.n_samples());
      manifest.set("min_eigenvalue", report.min_eigenvalue);
      std::cout << "items=" << draws.n_items() << " draws=" << draws.n_samples() << " min_eigenvalue=" << csv::format_double(report.min_eigenvalue) << '\n';
      manifest.write("psm", out_path + ".manifest.json");
    } else if (*sum_cmd) {
      const SimilarityKernel psm = load_psm(psm_path, manifest);
      kc.check(psm.size());
      if (restarts < 1 || max_iter < 1) throw UsageError("--restarts and --max-iter must be at least 1");
      KernelKMeansOptions opts;
      opts.n_restarts = restarts;
      opts.max_iter = max_iter;
      Partition p;
      if (kc.sweep()) {
        const auto sweep = silhouette_sweep(psm.entries, kc.k_min, kc.k_max, RngSeed{seed}, opts);
        p = sweep.partitions[static_cast<std::size_t>(sweep.best_k - kc.k_min)];
        std::cout << "best_k=" << sweep.best_k << '\n';
        if (!table_path.empty()) {
          write_sweep_table(table_path, sweep);
          manifest.output(table_path);
        }
      } else {
        p = summarise_psm(psm, kc.k, RngSeed{seed}, opts);
      }
      manifest.seed(seed);
      write_labels(out_path, p, manifest);
      manifest.write("summarise", out_path + ".manifest.json");
    } else if (*comb_cmd) {
      const KernelStack stack = load_stack(psm_paths, manifest);
      kc.check(stack.n_items());
      if (restarts < 1 || outer_max_iter < 1) throw UsageError("--restarts and --outer-max-iter must be at least 1");
      MultipleKernelKMeansOptions opts;
      opts.kmeans.n_restarts = restarts;
      opts.outer_max_iter = outer_max_iter;
      MultipleKernelKMeansResult result;
      if (kc.sweep()) {
        const auto sweep = silhouette_sweep(stack, kc.k_min, kc.k_max, RngSeed{seed}, opts);
        std::cout << "best_k=" << sweep.best_k << '\n';
        if (!table_path.empty()) {
          write_sweep_table(table_path, sweep);
          manifest.output(table_path);
        }
        // rerun at the chosen K with the seed the sweep used, to recover the weights
        result = multiple_kernel_kmeans(stack, sweep.best_k, derive_seed(RngSeed{seed}, static_cast<std::uint64_t>(sweep.best_k)), opts);
      } else {
        result = multiple_kernel_kmeans(stack, kc.k, RngSeed{seed}, opts);
      }
      manifest.seed(seed);
      write_labels(labels_out, result.partition, manifest);
      csv::with_output(weights_out, [&](std::ostream& out) { csv::write_weights(out, result.weights); });
      manifest.output(weights_out);
      const Vector means = mean_kernel_weights(result.weights);
      std::cout << "mean_weights=";
      for (Eigen::Index m = 0; m < means.size(); ++m) std::cout << (m ? "," : "") << csv::format_double(means(m));
      std::cout << '\n';
      manifest.write("combine", labels_out + ".manifest.json");
    } else if (*guided_cmd) {
      const KernelStack stack = load_stack(psm_paths, manifest);
      manifest.input(response_path);
      const ResponseVector y = csv::with_input(response_path, [](std::istream& in, const std::string& src) { return csv::read_response(in, src); });
      if (static_cast<Eigen::Index>(y.size()) != stack.n_items())
        throw DataError(response_path + ": " + std::to_string(y.size()) + " responses for " + std::to_string(stack.n_items()) + " items");
      if (y.n_classes() < 2) throw DataError(response_path + ": response has a single class");
      kc.check(stack.n_items());
      if (!(lambda > 0.0)) throw UsageError("--lambda must be positive");
      SimpleMklOptions mkl;
      mkl.svm.lambda = lambda;
      mkl.mode = parse_mode(mode);
      KernelKMeansOptions km;
      km.n_restarts = restarts;
      OutcomeGuidedResult result;
      if (kc.sweep()) {
        // weights do not depend on K; sweep K on the weighted kernel
        stack.validate_psd();
        result.mkl = simplemkl_multiclass(stack, y, mkl);
        result.theta = result.mkl.theta;
        result.combined_kernel = weighted_kernel_sum(stack, result.theta);
        km.validate_kernel = false;
        const auto sweep = silhouette_sweep(result.combined_kernel, kc.k_min, kc.k_max, RngSeed{seed}, km);
        result.partition = sweep.partitions[static_cast<std::size_t>(sweep.best_k - kc.k_min)];
        std::cout << "best_k=" << sweep.best_k << '\n';
        if (!table_path.empty()) {
          write_sweep_table(table_path, sweep);
          manifest.output(table_path);
        }
      } else {
        result = outcome_guided_combine(stack, y, kc.k, RngSeed{seed}, mkl, km);
      }
      manifest.seed(seed);
      manifest.set("lambda", lambda);
      manifest.set("mode", mode);
      manifest.set("mkl_converged", result.mkl.converged);
      write_labels(labels_out, result.partition, manifest);
      csv::with_output(weights_out, [&](std::ostream& out) { csv::write_global_weights(out, result.theta); });
      manifest.output(weights_out);
      std::cout << "weights=";
      for (Eigen::Index m = 0; m < result.theta.size(); ++m) std::cout << (m ? "," : "") << csv::format_double(result.theta(m));
      std::cout << '\n';
      manifest.write("combine-guided", labels_out + ".manifest.json");
    } else if (*sweep_cmd) {
      const KernelStack stack = load_stack(psm_paths, manifest);
      if (kc.k_min < 2 || kc.k_min > kc.k_max) throw UsageError("need 2 <= --k-min <= --k-max");
      if (kc.k_max > stack.n_items()) throw DataError("--k-max exceeds the number of items (" + std::to_string(stack.n_items()) + ")");
      SilhouetteSweep sweep;
      if (stack.size() == 1) {
        KernelKMeansOptions opts;
        opts.n_restarts = restarts;
        sweep = silhouette_sweep(stack.kernels.front(), kc.k_min, kc.k_max, RngSeed{seed}, opts);
      } else {
        MultipleKernelKMeansOptions opts;
        opts.kmeans.n_restarts = restarts;
        sweep = silhouette_sweep(stack, kc.k_min, kc.k_max, RngSeed{seed}, opts);
      }
      manifest.seed(seed);
      write_sweep_table(table_path, sweep);
      manifest.output(table_path);
      std::cout << "best_k=" << sweep.best_k << '\n';
      manifest.write("silhouette-sweep", table_path + ".manifest.json");
    } else if (*base_cmd) {
      const SimilarityKernel psm = load_psm(psm_path, manifest);
      Linkage linkage;
      try {
        linkage = parse_linkage(linkage_name);
      } catch (const Error& e) {
        throw UsageError(std::string("--linkage: ") + e.what());
      }
      if (k_max < 1) throw UsageError("--k-max must be at least 1");
      if (k_max > psm.size()) throw DataError("--k-max exceeds the number of items (" + std::to_string(psm.size()) + ")");
      const auto base = hierarchical_baseline(psm, linkage, k_max);
      std::cout << "best_k=" << base.best_k << "\nPEAR=" << csv::format_double(base.best_pear) << '\n';
      if (psm.size() >= 3) {
        const auto rho = cophenetic_correlation(psm, linkage);
        std::cout << "cophenetic=" << (rho ? csv::format_double(*rho) : std::string("undefined")) << '\n';
      }
      std::string primary;
      if (!labels_out.empty()) {
        write_labels(labels_out, base.best, manifest);
        primary = labels_out;
      }
      if (!heights_out.empty()) {
        csv::with_output(heights_out, [&](std::ostream& out) { csv::write_matrix(out, base.dendrogram.heights); });
        manifest.output(heights_out);
        if (primary.empty()) primary = heights_out;
      }
      if (!primary.empty()) manifest.write("baseline", primary + ".manifest.json");
    } else if (*met_cmd) {
      const Partition a = load_labels(labels_a, manifest);
      const Partition b = load_labels(labels_b, manifest);
      if (a.size() != b.size())
        throw DataError(labels_b + ": " + std::to_string(b.size()) + " items, but " + labels_a + " has " + std::to_string(a.size()));
      if (a.size() < 2) throw DataError(labels_a + ": need at least two items");
      std::cout << "ARI=" << csv::format_double(ari(a, b)) << '\n'
                << "RI=" << csv::format_double(rand_index(a, b)) << '\n'
                << "VI=" << csv::format_double(variation_of_information(a, b)) << '\n'
                << "Binder=" << csv::format_double(binder_loss(a, b)) << '\n';
      if (!metrics_psm.empty()) {
        const SimilarityKernel psm = load_psm(metrics_psm, manifest);
        if (psm.size() != static_cast<Eigen::Index>(a.size())) throw DataError(metrics_psm + ": PSM size does not match the labels");
        const auto pe = pear(psm, a);
        std::cout << "PEAR=" << (pe ? csv::format_double(*pe) : std::string("undefined")) << '\n'
                  << "ExpectedBinder=" << csv::format_double(expected_binder(psm, a)) << '\n';
      }
    } else if (*sim_cmd) {
      const Setting setting = [&] {
        try {
          return parse_setting(setting_name);
        } catch (const Error& e) {
          throw UsageError(std::string("--setting: ") + e.what());
        }
      }();
      const auto w = parse_list(w_list, "--w");
      SyntheticConfig base;
      base.n_items = n_items;
      base.seed = RngSeed{seed};
      std::vector<SettingDataset> sets;
      try {
        sets = make_setting(setting, w, base, noise_covariates);
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      fs::create_directories(out_dir);
      manifest.seed(seed);
      for (std::size_t d = 0; d < sets.size(); ++d) {
        const std::string path = (fs::path(out_dir) / ("dataset_" + std::to_string(d) + ".csv")).string();
        csv::with_output(path, [&](std::ostream& out) { csv::write_categorical(out, sets[d].dataset); });
        manifest.output(path);
        std::cout << path << ": " << sets[d].notes << '\n';
      }
      const std::string truth_path = (fs::path(out_dir) / "truth.csv").string();
      write_labels(truth_path, sets.front().dataset.truth, manifest);
      const std::string response_file = (fs::path(out_dir) / "response.csv").string();
      csv::with_output(response_file, [&](std::ostream& out) { csv::write_response(out, sets.front().dataset.response); });
      manifest.output(response_file);
      manifest.set("setting", to_string(setting));
      manifest.set("w", w);
      manifest.write("simulate", (fs::path(out_dir) / "manifest.json").string());
    } else if (*gibbs_cmd) {
      manifest.input(data_path);
      const auto data = csv::with_input(data_path, [](std::istream& in, const std::string& src) { return csv::read_categorical(in, src); });
      gibbs.seed = RngSeed{seed};
      try {
        gibbs.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      if (chains < 1) throw UsageError("--chains must be at least 1");
      const auto draws = gibbs_sample_chains(data.values, gibbs, chains);
      const SimilarityKernel psm = compute_psm(draws, data_path);
      csv::with_output(psm_out, [&](std::ostream& out) { csv::write_matrix(out, psm.entries); });
      manifest.output(psm_out);
      if (!draws_out.empty()) {
        csv::with_output(draws_out, [&](std::ostream& out) { csv::write_allocations(out, draws); });
        manifest.output(draws_out);
      }
      manifest.seed(seed);
      manifest.set("kmax", gibbs.n_components);
      manifest.set("iters", gibbs.n_iterations);
      manifest.set("burnin", gibbs.burn_in);
      manifest.set("thin", gibbs.thin);
      manifest.set("chains", chains);
      std::cout << "draws=" << draws.n_samples() << '\n';
      if (data.truth) {
        const Partition truth = make_partition(*data.truth);
        if (truth.size() >= 2) std::cout << "ARI(k-means k=" << truth.k << ", truth)="
                                         << csv::format_double(ari(summarise_psm(psm, truth.k, RngSeed{seed}), truth)) << '\n';
      }
      manifest.write("gibbs", psm_out + ".manifest.json");
    } else if (*rep_cmd) {
      try {
        rep.setting = parse_setting(setting_name);
      } catch (const Error& e) {
        throw UsageError(std::string("--setting: ") + e.what());
      }
      if (n_seeds < 1) throw UsageError("--seeds must be at least 1");
      rep.n_seeds = n_seeds;
      rep.w_values = parse_list(w_list, "--w");
      rep.data.n_items = n_items;
      rep.threads = std::max(1u, threads);
      try {
        rep.gibbs.validate();
        rep.data.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      const auto rows = replicate_pipeline(rep);
      csv::with_output(out_path, [&](std::ostream& out) { write_replicate_rows(out, rows); });
      manifest.output(out_path);

      // mean ARI and weight per (subset, method, dataset)
      std::map<std::tuple<std::string, std::string, std::string>, std::pair<double, double>> sums;
      for (const auto& r : rows) {
        auto& s = sums[{r.subset, r.method, r.dataset}];
        s.first += r.ari;
        s.second += r.weight;
      }
      std::ostringstream summary;
      summary << "subset,method,dataset,mean_ari,mean_weight\n";
      for (const auto& [key, s] : sums)
        summary << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ','
                << csv::format_double(s.first / n_seeds) << ',' << csv::format_double(s.second / n_seeds) << '\n';
      std::cout << summary.str();
      if (!summary_out.empty()) {
        csv::with_output(summary_out, [&](std::ostream& out) { out << summary.str(); });
        manifest.output(summary_out);
      }
      for (int i = 0; i < n_seeds; ++i) manifest.seed(rep.first_seed + static_cast<std::uint64_t>(i));
      manifest.set("setting", to_string(rep.setting));
      manifest.set("w", rep.w_values);
      manifest.set("threads", rep.threads);
      manifest.set("gibbs_iters", rep.gibbs.n_iterations);
      manifest.set("chains", rep.n_chains);
      manifest.set("lambda", rep.mkl.svm.lambda);
      manifest.write("replicate", out_path + ".manifest.json");
    }
  } catch (const UsageError& e) {
    std::cerr << "psmkit: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "psmkit: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "psmkit: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
