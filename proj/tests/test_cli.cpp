#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "cli.hpp"
#include "lsketch/sketch.hpp"
#include "lsketch/sketch_io.hpp"
#include "temp_dir.hpp"

namespace {

struct Result {
  int code = 0;
  std::string out, err;
  std::map<std::string, std::string> kv;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = lsketch::cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  std::istringstream is(r.out);
  for (std::string line; std::getline(is, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos && line.find(' ') == std::string::npos) r.kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return r;
}

// A small normalized family written to dir/name.
std::string gen(const TempDir& dir, const std::string& name, const std::string& seed, const std::string& count,
                const std::string& family_seed = "1") {
  const auto path = (dir / name).string();
  const Result r = run({"gen-data", "--out", path, "--n", "24", "--d", "16", "--rank", "3", "--count", count,
                        "--seed", seed, "--family-seed", family_seed, "--normalize", "fro", "--normalize-to", "16"});
  EXPECT_EQ(r.code, 0) << r.err;
  return path;
}

}  // namespace

TEST(Cli, GenDataWritesTheFamily) {
  TempDir dir;
  const Result r = run({"gen-data", "--out", (dir / "d").string(), "--n", "12", "--d", "9", "--rank", "2",
                        "--count", "3", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.kv.at("count"), "3");
  EXPECT_EQ(r.kv.at("rows"), "12");
  EXPECT_EQ(r.kv.at("cols"), "9");
  EXPECT_TRUE(std::filesystem::exists(dir / "d" / "m00002.csv"));
}

TEST(Cli, IdentitySketchHasZeroError) {
  TempDir dir;
  const auto data = gen(dir, "test", "2", "4");
  const Result r = run({"eval", "--sketch", "identity", "--data", data, "--k", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.kv.at("matrices"), "4");
  EXPECT_EQ(r.kv.at("sketch_kind"), "plain");
  EXPECT_LT(std::abs(std::stod(r.kv.at("avg_test_error"))), 1e-8);
}

TEST(Cli, ZeroIterationsSavesTheInit) {
  TempDir dir;
  const auto data = gen(dir, "train", "1", "3");
  const auto out = (dir / "s.json").string();
  const Result r = run({"train", "--method", "ivy", "--data", data, "--m", "5", "--k", "2", "--iterations", "0",
                        "--seed", "4", "--out", out});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.kv.at("iterations"), "0");
  EXPECT_TRUE(r.kv.count("final_train_err"));
  const auto saved = lsketch::cli::load_spec(out);
  EXPECT_EQ(saved, lsketch::init_countsketch(5, 24, 1, lsketch::RngStream(4, lsketch::streams::kInit)));
}

TEST(Cli, LearnedSparsityMeetsItsBudget) {
  TempDir dir;
  const auto train = gen(dir, "train", "1", "10");
  const auto test = gen(dir, "test", "2", "3");
  const auto ood = gen(dir, "ood", "3", "3", "2");
  const auto spec = (dir / "ls.sksp").string();
  const auto trace = (dir / "trace.csv").string();
  const Result r = run({"train", "--method", "ivy-ls", "--data", train, "--test-data", test, "--ood-data", ood,
                        "--m", "6", "--k", "2", "--iterations", "400", "--momentum", "0.9", "--out", spec,
                        "--trace-out", trace, "--checkpoint-dir", (dir / "ckpt").string(), "--eval-every", "50"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.kv.at("sparsity_met"), "true");
  EXPECT_LE(std::stoul(r.kv.at("nnz")), 24u);
  EXPECT_TRUE(r.kv.count("final_test_err"));
  EXPECT_TRUE(r.kv.count("best_ood_err"));
  EXPECT_TRUE(r.kv.count("iters_to_sparsity"));
  EXPECT_TRUE(std::filesystem::exists(dir / "ckpt" / "iter000399.sksp"));
  const std::string csv = slurp(trace);
  EXPECT_EQ(csv.rfind(lsketch::kCurveHeader, 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 401);

  const Result ins = run({"inspect", "--spec", spec});
  ASSERT_EQ(ins.code, 0) << ins.err;
  EXPECT_EQ(ins.kv.at("kind"), "masked");
  EXPECT_EQ(ins.kv.at("rows"), "6");
  EXPECT_EQ(ins.kv.at("nnz"), r.kv.at("nnz"));
  EXPECT_TRUE(ins.kv.count("mask_nnz"));

  const Result ev = run({"eval", "--sketch", spec, "--data", test, "--k", "2"});
  ASSERT_EQ(ev.code, 0) << ev.err;
  EXPECT_EQ(ev.kv.at("avg_test_error"), r.kv.at("final_test_err"));
}

TEST(Cli, SampleSketchDrawsDistinctMatrices) {
  TempDir dir;
  const auto spec_path = dir / "lr.sksp";
  lsketch::io::save_sketch(spec_path, lsketch::SketchSpec::stochastic(lsketch::Matrix(2, 3), lsketch::Matrix(2, 3, 1.0)));
  const Result r = run({"sample-sketch", "--spec", spec_path.string(), "--samples", "3", "--out", (dir / "s").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.kv.at("samples"), "3");
  const auto a = lsketch::io::load_rawbin(dir / "s" / "s00000.bin");
  const auto b = lsketch::io::load_rawbin(dir / "s" / "s00001.bin");
  EXPECT_EQ(a.rows(), 2u);
  EXPECT_NE(a, b);
}

TEST(Cli, SweepOnTheSyntheticFamily) {
  TempDir dir;
  const auto csv = (dir / "r.csv").string();
  const auto json = (dir / "r.json").string();
  const Result r = run({"sweep", "--methods", "countsketch,gaussian", "--m-values", "4,8", "--densities", "1,2",
                        "--reps", "2", "--k", "2", "--n", "20", "--d", "12", "--rank", "3", "--train-count", "3",
                        "--test-count", "2", "--ood-count", "2", "--csv", csv, "--json", json});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.kv.at("cells"), "16");
  EXPECT_EQ(r.kv.at("failed"), "0");
  std::istringstream is(slurp(csv));
  const auto report = lsketch::read_report_csv(is);
  EXPECT_EQ(report.rows.size(), 16u);
  EXPECT_EQ(nlohmann::json::parse(slurp(json)).at("rows").size(), 16u);
}

TEST(Cli, ConfigFileSuppliesDefaultsAndFlagsWin) {
  TempDir dir;
  const auto data = gen(dir, "train", "1", "3");
  const auto cfg = dir.write("run.cfg", "# defaults\nmethod = countsketch\nm=7\nk=2\ndata=" + data + "\nseed=5\n");
  const Result from_file = run({"train", "--config", cfg.string()});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_EQ(from_file.kv.at("method"), "countsketch");
  EXPECT_EQ(from_file.kv.at("m"), "7");
  EXPECT_EQ(from_file.kv.at("seed"), "5");
  const Result overridden = run({"train", "--config", cfg.string(), "--m", "4", "--seed=9"});
  ASSERT_EQ(overridden.code, 0) << overridden.err;
  EXPECT_EQ(overridden.kv.at("m"), "4");
  EXPECT_EQ(overridden.kv.at("seed"), "9");
  EXPECT_EQ(overridden.kv.at("k"), "2");
}

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run({}).code, 2);
  EXPECT_EQ(run({"bogus"}).code, 2);
  const Result unknown = run({"train", "--data", "x", "--no-such-flag", "1"});
  EXPECT_EQ(unknown.code, 2);
  EXPECT_NE(unknown.err.find("usage:"), std::string::npos);
  EXPECT_EQ(run({"train", "--method", "nope", "--data", "x"}).code, 2);
  EXPECT_EQ(run({"train", "--method", "ivy", "--data", "x", "--momentum", "3"}).code, 2);
  EXPECT_EQ(run({"train", "--method", "ivy"}).code, 2);
  EXPECT_EQ(run({"sweep", "--m-values", "4,x"}).code, 2);
  EXPECT_EQ(run({"eval", "--data", "x"}).code, 2);
  TempDir dir;
  EXPECT_EQ(run({"train", "--config", (dir / "missing.cfg").string()}).code, 2);
  dir.write("bad.cfg", "just words\n");
  EXPECT_EQ(run({"train", "--config", (dir / "bad.cfg").string()}).code, 2);
}

TEST(Cli, RuntimeErrorsExitWithOne) {
  TempDir dir;
  const Result missing = run({"train", "--method", "ivy", "--data", (dir / "none").string()});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("none"), std::string::npos);
  EXPECT_EQ(run({"inspect", "--spec", (dir / "nothing.sksp").string()}).code, 1);
  const auto data = gen(dir, "d", "1", "2");
  lsketch::io::save_sketch(dir / "wide.sksp", lsketch::SketchSpec::plain(lsketch::Matrix(2, 5, 1.0)));
  EXPECT_EQ(run({"eval", "--sketch", (dir / "wide.sksp").string(), "--data", data}).code, 1);
}

TEST(Cli, HelpExitsWithZero) {
  const Result top = run({"--help"});
  EXPECT_EQ(top.code, 0);
  EXPECT_NE(top.out.find("train"), std::string::npos);
  const Result sub = run({"train", "--help"});
  EXPECT_EQ(sub.code, 0);
  EXPECT_NE(sub.out.find("--target-sparsity"), std::string::npos);
  EXPECT_NE(sub.out.find("--early-stop-flag"), std::string::npos);
}
