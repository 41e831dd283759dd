// Runs the built psmkit binary end to end.

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PSMKIT_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 512> buf{};
  while (fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("psmkit_cli_" + std::to_string(getpid()) + "_" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string at(const std::string& name) const { return (dir / name).string(); }
  void write(const std::string& name, const std::string& text) const { std::ofstream(dir / name) << text; }

  fs::path dir;
};

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("summarise --psm x.csv").code, 1);  // missing --out
  EXPECT_EQ(run("psm --draws a.csv --out b.csv --bogus").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
}

TEST_F(Cli, DataErrorsNameTheFile) {
  const auto missing = run("psm --draws " + at("nope.csv") + " --out " + at("p.csv"));
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.out.find("nope.csv"), std::string::npos) << missing.out;

  write("bad.csv", "item,label\n1,1\n2,two\n");
  const auto bad = run("metrics --labels-a " + at("bad.csv") + " --labels-b " + at("bad.csv"));
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("bad.csv:3"), std::string::npos) << bad.out;
  EXPECT_EQ(std::count(bad.out.begin(), bad.out.end(), '\n'), 1);
}

TEST_F(Cli, MetricsOfIdenticalFiles) {
  write("l.csv", "item,label\n1,1\n2,1\n3,2\n4,3\n5,3\n");
  const auto r = run("metrics --labels-a " + at("l.csv") + " --labels-b " + at("l.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("ARI=1\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("VI=0\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("Binder=0\n"), std::string::npos) << r.out;
}

TEST_F(Cli, PsmThenSummariseAndManifest) {
  write("draws.csv", "item_1,item_2,item_3,item_4\n1,1,2,2\n1,1,2,2\n3,3,1,1\n");
  ASSERT_EQ(run("psm --draws " + at("draws.csv") + " --out " + at("psm.csv")).code, 0);
  EXPECT_EQ(slurp(dir / "psm.csv"), "1,1,0,0\n1,1,0,0\n0,0,1,1\n0,0,1,1\n");
  const std::string manifest = slurp(dir / "psm.csv.manifest.json");
  EXPECT_NE(manifest.find("\"sha256\""), std::string::npos);
  EXPECT_NE(manifest.find("draws.csv"), std::string::npos);

  ASSERT_EQ(run("summarise --psm " + at("psm.csv") + " --k 2 --seed 3 --out " + at("labels.csv")).code, 0);
  EXPECT_EQ(slurp(dir / "labels.csv"), "item,label\n1,1\n2,1\n3,2\n4,2\n");
  const auto sweep = run("summarise --psm " + at("psm.csv") + " --k-min 2 --k-max 3 --out " + at("l2.csv") + " --out-table " + at("t.csv"));
  ASSERT_EQ(sweep.code, 0) << sweep.out;
  EXPECT_NE(sweep.out.find("best_k=2"), std::string::npos);
  EXPECT_EQ(slurp(dir / "t.csv").substr(0, 18), "k,mean_silhouette\n");
}

TEST_F(Cli, CombineAndGuided) {
  write("a.csv", "1,1,0,0\n1,1,0,0\n0,0,1,1\n0,0,1,1\n");
  write("b.csv", "1,1,1,1\n1,1,1,1\n1,1,1,1\n1,1,1,1\n");
  write("y.csv", "item,class\n1,x\n2,x\n3,z\n4,z\n");
  ASSERT_EQ(run("combine --psm " + at("a.csv") + " " + at("b.csv") + " --k 2 --out-labels " + at("l.csv") + " --out-weights " + at("w.csv")).code, 0);
  EXPECT_EQ(slurp(dir / "l.csv"), "item,label\n1,1\n2,1\n3,2\n4,2\n");
  std::istringstream weights(slurp(dir / "w.csv"));
  int lines = 0;
  for (std::string line; std::getline(weights, line);) ++lines;
  EXPECT_EQ(lines, 5);
  const auto g = run("combine-guided --psm " + at("a.csv") + " " + at("b.csv") + " --response " + at("y.csv") +
                     " --k 2 --out-labels " + at("g.csv") + " --out-weights " + at("gw.csv"));
  ASSERT_EQ(g.code, 0) << g.out;
  EXPECT_EQ(slurp(dir / "g.csv"), "item,label\n1,1\n2,1\n3,2\n4,2\n");
}

TEST_F(Cli, BaselineAndSweep) {
  write("a.csv", "1,1,0,0,0\n1,1,0,0,0\n0,0,1,1,1\n0,0,1,1,1\n0,0,1,1,1\n");
  const auto b = run("baseline --psm " + at("a.csv") + " --linkage comp --k-max 4 --out-labels " + at("l.csv"));
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_NE(b.out.find("best_k=2"), std::string::npos) << b.out;
  const auto s = run("silhouette-sweep --psm " + at("a.csv") + " --k-min 2 --k-max 4 --out-table " + at("t.csv"));
  ASSERT_EQ(s.code, 0) << s.out;
  EXPECT_NE(s.out.find("best_k=2"), std::string::npos) << s.out;
}

TEST_F(Cli, SimulateThenGibbs) {
  ASSERT_EQ(run("simulate --setting C --n 30 --seed 4 --out-dir " + at("sim")).code, 0);
  for (const char* f : {"dataset_0.csv", "dataset_3.csv", "truth.csv", "response.csv", "manifest.json"})
    EXPECT_TRUE(fs::exists(dir / "sim" / f)) << f;
  const auto g = run("gibbs --data " + at("sim/dataset_3.csv") + " --iters 100 --burnin 50 --chains 2 --out-psm " + at("p.csv"));
  ASSERT_EQ(g.code, 0) << g.out;
  EXPECT_NE(g.out.find("draws=50"), std::string::npos) << g.out;
}

TEST_F(Cli, ReplicateIsByteIdentical) {
  const std::string common = "replicate --setting B --seeds 2 --n 30 --k 3 --iters 80 --burnin 40 --chains 2";
  ASSERT_EQ(run(common + " --threads 1 --out " + at("r1.csv")).code, 0);
  ASSERT_EQ(run(common + " --threads 2 --out " + at("r2.csv")).code, 0);
  const std::string first = slurp(dir / "r1.csv");
  EXPECT_EQ(first, slurp(dir / "r2.csv"));
  EXPECT_EQ(first.substr(0, 37), "seed,subset,method,dataset,ari,weight");
}
