#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "fgadmm/fgadmm.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " FGADMM_CLI_PATH " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fgadmm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const char* name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, PackWritesOutputs) {
  const Result r = cli("pack --n 3 --iters 2000 --workers 1 --seed 7 --out " + path("sol.json") +
                       " --metrics " + path("m.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("primal_residual"), std::string::npos);
  EXPECT_NE(r.out.find("objective"), std::string::npos);
  const auto doc = nlohmann::json::parse(slurp(path("sol.json")));
  EXPECT_EQ(doc["variables"].size(), 6u);
  const std::string metrics = slurp(path("m.csv"));
  EXPECT_EQ(metrics.substr(0, metrics.find('\n')), "iter,t_x,t_m,t_z,t_u,t_n,primal,dual");
}

TEST_F(Cli, MpcReportsConvergence) {
  const Result r = cli("mpc --k 10 --iters 50000 --tol 1e-8");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("converged yes"), std::string::npos) << r.out;
}

TEST_F(Cli, SvmReportsAccuracy) {
  const Result r = cli("svm --n 100 --dim 2 --sep 4 --lambda 1 --iters 20000 --tol 1e-6 --data-out " +
                       path("data.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const auto pos = r.out.find("accuracy ");
  ASSERT_NE(pos, std::string::npos) << r.out;
  EXPECT_GE(std::stod(r.out.substr(pos + 9)), 0.95) << r.out;
  const std::string data = slurp(path("data.csv"));
  EXPECT_EQ(std::count(data.begin(), data.end(), '\n'), 100);
}

TEST_F(Cli, SerializedGraphSolvesIdentically) {
  for (const std::string gen : {"mpc --k 5", "svm --n 12"}) {
    ASSERT_EQ(cli(gen + " --iters 300 --graph-out " + path("g.json") + " --out " + path("direct.json")).code, 0);
    const Result r = cli("run --graph-in " + path("g.json") + " --iters 300 --out " + path("via.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(slurp(path("direct.json")), slurp(path("via.json"))) << gen;
  }
}

TEST_F(Cli, WorkerCountGivesIdenticalFiles) {
  ASSERT_EQ(cli("pack --n 8 --iters 500 --seed 3 --workers 1 --out " + path("w1.json")).code, 0);
  ASSERT_EQ(cli("pack --n 8 --iters 500 --seed 3 --workers 8 --out " + path("w8.json")).code, 0);
  ASSERT_EQ(cli("pack --n 8 --iters 500 --seed 3 --out " + path("env.json"), "FGADMM_WORKERS=2").code, 0);
  EXPECT_EQ(slurp(path("w1.json")), slurp(path("w8.json")));
  EXPECT_EQ(slurp(path("w1.json")), slurp(path("env.json")));
}

TEST_F(Cli, UnknownOperatorInGraphFile) {
  ASSERT_EQ(cli("mpc --k 2 --iters 1 --graph-out " + path("g.json")).code, 0);
  auto doc = nlohmann::json::parse(slurp(path("g.json")));
  doc["factors"][1]["operator"] = "warp_drive";
  std::ofstream(path("bad.json")) << doc.dump();
  const Result r = cli("run --graph-in " + path("bad.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("warp_drive"), std::string::npos) << r.out;
}

TEST_F(Cli, BenchEmitsOneRowPerCell) {
  const Result r = cli("bench --problem pack --sizes 5,10,20 --workers 1,4 --iters 5 --out " + path("b.csv"));
  ASSERT_EQ(r.code, 0) << r.out;
  const std::string csv = slurp(path("b.csv"));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), fgadmm::kBenchHeader);
}

TEST_F(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("pack --bogus").code, 1);
  EXPECT_EQ(cli("pack --iters 0").code, 1);
  EXPECT_EQ(cli("bench --problem sudoku").code, 1);
  EXPECT_EQ(cli("bench --sizes 5,x").code, 1);
  EXPECT_EQ(cli("run").code, 1);
  EXPECT_EQ(cli("pack --n 3 --rho-radius 0.5").code, 1);
}

TEST_F(Cli, RuntimeErrorsExitWithTwo) {
  EXPECT_EQ(cli("run --graph-in " + path("missing.json")).code, 2);
}
