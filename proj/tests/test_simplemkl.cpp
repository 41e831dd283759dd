#include "support.hpp"

#include <gtest/gtest.h>

using namespace psmkit;

namespace {

std::vector<int> signs(const Partition& p) {
  std::vector<int> y;
  for (int l : p.labels) y.push_back(l == 0 ? 1 : -1);
  return y;
}

SvmOptions tight(double lambda) {
  SvmOptions o;
  o.lambda = lambda;
  o.tol = 1e-10;
  o.max_passes = 50;
  return o;
}

}  // namespace

TEST(Svm, TwoPoints) {
  Matrix k(2, 2);
  k << 1, -1, -1, 1;
  const auto m = svm_train(k, {-1, 1}, tight(10));
  EXPECT_NEAR(m.alpha(0), 0.5, 1e-9);
  EXPECT_NEAR(m.alpha(1), 0.5, 1e-9);
  EXPECT_NEAR(m.bias, 0.0, 1e-9);
  EXPECT_LT(m.decision(k, 0), 0.0);
  EXPECT_GT(m.decision(k, 1), 0.0);
}

TEST(Svm, TwoPointClosedForm) {
  // With alpha_1 = alpha_2 = a the dual is 2a - a^2 (K11 + K22 - 2 K12) / 2.
  for (double hi : {1.0, 3.0, 0.4}) {
    Matrix x(2, 1);
    x << -0.5, hi;
    const Matrix k = x * x.transpose();
    const double a = 2.0 / (k(0, 0) + k(1, 1) - 2.0 * k(0, 1));
    const auto m = svm_train(k, {-1, 1}, tight(10));
    EXPECT_NEAR(m.alpha(0), a, 1e-9);
    EXPECT_NEAR(m.alpha(1), a, 1e-9);
    EXPECT_NEAR(m.dual_objective, a, 1e-9);
  }
}

TEST(Svm, SingleClassIsError) {
  EXPECT_THROW(svm_train(Matrix::Identity(3, 3), {1, 1, 1}), Error);
}

TEST(Svm, MatchesFaceEnumeration) {
  Rng rng = make_rng(RngSeed{1});
  for (int t = 0; t < 40; ++t) {
    const auto n = static_cast<Eigen::Index>(2 + uniform_index(rng, 5));
    const Matrix x = oracle::random_points(rng, n, 2);
    const Matrix k = t % 2 ? Matrix(x * x.transpose()) : oracle::random_psm(rng, static_cast<std::size_t>(n), 10, 3).entries;
    std::vector<int> y(static_cast<std::size_t>(n));
    for (auto& v : y) v = uniform01(rng) < 0.5 ? 1 : -1;
    y[0] = 1;
    y[1] = -1;
    const double lambda = t % 3 == 0 ? 0.3 : 10.0;
    const auto model = svm_train(k, y, tight(lambda));
    const auto ref = oracle::svm_dual_by_faces(k, y, lambda);
    EXPECT_NEAR(model.dual_objective, ref.objective, 1e-7) << "instance " << t;
  }
}

TEST(Svm, DualFeasibility) {
  Rng rng = make_rng(RngSeed{2});
  for (int t = 0; t < 20; ++t) {
    const auto k = oracle::random_psm(rng, 30, 20, 4);
    std::vector<int> y(30);
    for (auto& v : y) v = uniform01(rng) < 0.4 ? 1 : -1;
    y[0] = 1;
    y[1] = -1;
    SvmOptions o;
    o.lambda = 10;
    const auto m = svm_train(k.entries, y, o);
    double balance = 0;
    for (Eigen::Index i = 0; i < 30; ++i) balance += m.alpha(i) * y[static_cast<std::size_t>(i)];
    EXPECT_LE(std::abs(balance), 1e-8);
    EXPECT_GE(m.alpha.minCoeff(), 0.0);
    EXPECT_LE(m.alpha.maxCoeff(), 10.0);
    EXPECT_TRUE(m.converged);
    EXPECT_LE(m.kkt_violation, o.tol);
  }
}

TEST(Svm, SeparableBlocks) {
  const Partition p = oracle::block_partition({7, 5});
  const Matrix k = oracle::block_kernel({7, 5});
  SvmOptions o;
  o.lambda = 10;
  const auto m = svm_train(k, signs(p), o);
  for (Eigen::Index i = 0; i < 12; ++i) EXPECT_GT(m.decision(k, i) * signs(p)[static_cast<std::size_t>(i)], 0.0);
}

TEST(SimpleMklGradient, IdenticalKernelsShareGradient) {
  Rng rng = make_rng(RngSeed{3});
  const auto k = oracle::random_psm(rng, 15);
  const KernelStack stack(std::vector<SimilarityKernel>{k, k});
  std::vector<int> y(15, 1);
  for (int i = 0; i < 7; ++i) y[static_cast<std::size_t>(i)] = -1;
  const auto e = simplemkl_objective_and_grad(stack, y, Vector::Constant(2, 0.5), tight(10));
  EXPECT_NEAR(e.gradient(0), e.gradient(1), 1e-9);
}

TEST(SimpleMklGradient, VertexEqualsSingleKernel) {
  Rng rng = make_rng(RngSeed{4});
  const KernelStack stack(std::vector<SimilarityKernel>{oracle::random_psm(rng, 12), oracle::random_psm(rng, 12)});
  std::vector<int> y(12, 1);
  for (int i = 0; i < 5; ++i) y[static_cast<std::size_t>(2 * i)] = -1;
  Vector theta(2);
  theta << 1, 0;
  const auto e = simplemkl_objective_and_grad(stack, y, theta, tight(10));
  EXPECT_NEAR(e.objective, svm_train(stack.kernels[0], y, tight(10)).dual_objective, 1e-12);
}

TEST(SimpleMklGradient, FiniteDifferences) {
  Rng rng = make_rng(RngSeed{5});
  const double h = 1e-4;
  for (int t = 0; t < 5; ++t) {
    const auto m = static_cast<Eigen::Index>(2 + uniform_index(rng, 3));
    std::vector<SimilarityKernel> ks;
    for (Eigen::Index i = 0; i < m; ++i) ks.push_back(oracle::random_psm(rng, 25, 15, 4));
    const KernelStack stack(ks);
    std::vector<int> y(25);
    for (auto& v : y) v = uniform01(rng) < 0.5 ? 1 : -1;
    y[0] = 1;
    y[1] = -1;
    const Vector theta = oracle::interior_simplex_point(rng, m);
    const auto e = simplemkl_objective_and_grad(stack, y, theta, tight(10));
    Vector dir(m);
    for (Eigen::Index i = 0; i < m; ++i) dir(i) = uniform01(rng) - 0.5;
    dir.array() -= dir.mean();
    dir /= dir.norm();
    const double up = simplemkl_objective_and_grad(stack, y, theta + h * dir, tight(10)).objective;
    const double down = simplemkl_objective_and_grad(stack, y, theta - h * dir, tight(10)).objective;
    const double fd = (up - down) / (2 * h), an = e.gradient.dot(dir);
    EXPECT_LE(std::abs(fd - an), 1e-3 * std::abs(an)) << fd << " vs " << an;
  }
}

TEST(SimpleMkl, SingleKernel) {
  Rng rng = make_rng(RngSeed{6});
  const KernelStack stack(std::vector<SimilarityKernel>{oracle::random_psm(rng, 10)});
  std::vector<int> y{1, -1, 1, -1, 1, -1, 1, -1, 1, 1};
  const auto r = simplemkl(stack, y);
  ASSERT_EQ(r.theta.size(), 1);
  EXPECT_EQ(r.theta(0), 1.0);
}

TEST(SimpleMkl, DropsConstantKernel) {
  const Partition p = oracle::block_partition({10, 10});
  const KernelStack stack(std::vector<Matrix>{oracle::block_kernel({10, 10}), Matrix::Ones(20, 20)});
  const auto r = simplemkl(stack, signs(p));
  EXPECT_LE(r.theta(1), 0.05);
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i) EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1]);
}

TEST(SimpleMkl, IdenticalKernelsFlatObjective) {
  Rng rng = make_rng(RngSeed{7});
  const auto k = oracle::random_psm(rng, 16);
  const KernelStack stack(std::vector<SimilarityKernel>{k, k});
  std::vector<int> y(16, 1);
  for (int i = 0; i < 8; ++i) y[static_cast<std::size_t>(2 * i)] = -1;
  SimpleMklOptions o;
  o.svm = tight(10);
  const auto r = simplemkl(stack, y, o);
  const double uniform = simplemkl_objective_and_grad(stack, y, Vector::Constant(2, 0.5), o.svm).objective;
  EXPECT_LE(std::abs(r.objective - uniform), o.tol * std::abs(uniform));
}

TEST(SimpleMkl, MulticlassReductionAndCounts) {
  Rng rng = make_rng(RngSeed{8});
  const KernelStack stack(std::vector<SimilarityKernel>{oracle::random_psm(rng, 18), oracle::random_psm(rng, 18)});
  std::vector<int> raw(18);
  for (std::size_t i = 0; i < 18; ++i) raw[i] = static_cast<int>(i % 2);
  std::vector<int> y;
  for (int v : raw) y.push_back(v == 0 ? 1 : -1);
  const auto binary = simplemkl(stack, y);
  for (auto mode : {MulticlassMode::OneVsRest, MulticlassMode::OneVsOne}) {
    SimpleMklOptions o;
    o.mode = mode;
    const auto multi = simplemkl_multiclass(stack, make_response(raw), o);
    EXPECT_EQ(multi.n_subproblems, 1u);
    EXPECT_LE((multi.theta - binary.theta).cwiseAbs().maxCoeff(), 1e-9);
  }
  std::vector<int> three(18);
  for (std::size_t i = 0; i < 18; ++i) three[i] = static_cast<int>(i % 3);
  for (auto mode : {MulticlassMode::OneVsRest, MulticlassMode::OneVsOne}) {
    SimpleMklOptions o;
    o.mode = mode;
    o.max_iter = 1;
    EXPECT_EQ(simplemkl_multiclass(stack, make_response(three), o).n_subproblems, 3u);
  }
}

TEST(SimpleMkl, ThreeClassBlocksDropNoise) {
  const Partition p = oracle::block_partition({8, 8, 8});
  const KernelStack stack(std::vector<Matrix>{Matrix::Ones(24, 24), oracle::block_kernel({8, 8, 8})});
  for (auto mode : {MulticlassMode::OneVsRest, MulticlassMode::OneVsOne}) {
    SimpleMklOptions o;
    o.mode = mode;
    const auto r = simplemkl_multiclass(stack, make_response(p.labels), o);
    EXPECT_LE(r.theta(0), 0.05);
  }
}

TEST(SimpleMkl, ConvexCombinationIsPsd) {
  Rng rng = make_rng(RngSeed{9});
  const KernelStack stack(std::vector<SimilarityKernel>{oracle::random_psm(rng, 20), oracle::random_psm(rng, 20), oracle::random_psm(rng, 20)});
  for (int t = 0; t < 20; ++t) EXPECT_TRUE(check_psd(weighted_kernel_sum(stack, oracle::interior_simplex_point(rng, 3, 0.0))).psd);
}

TEST(OutcomeGuided, SingleKernelIsSummary) {
  Rng rng = make_rng(RngSeed{10});
  const auto k = oracle::random_psm(rng, 20, 30, 4);
  std::vector<int> raw(20);
  for (std::size_t i = 0; i < 20; ++i) raw[i] = static_cast<int>(i % 2);
  const auto r = outcome_guided_combine(KernelStack(std::vector<SimilarityKernel>{k}), make_response(raw), 3, RngSeed{4});
  EXPECT_EQ(r.partition, summarise_psm(k, 3, RngSeed{4}));
}

TEST(OutcomeGuided, ClassAlignedBlocks) {
  const Partition p = oracle::block_partition({6, 6, 6});
  const KernelStack stack(std::vector<Matrix>{oracle::block_kernel({6, 6, 6}), oracle::block_kernel({6, 6, 6})});
  const auto r = outcome_guided_combine(stack, make_response(p.labels), 3, RngSeed{5});
  EXPECT_EQ(ari(r.partition, p), 1.0);
}
