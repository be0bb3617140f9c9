#include <gtest/gtest.h>

#include <sstream>

#include <json.hpp>

#include "golden.hpp"
#include "lsketch/bench.hpp"
#include "lsketch/errors.hpp"
#include "temp_dir.hpp"

using lsketch::DataSource;
using lsketch::Method;
using lsketch::SweepReport;
using lsketch::SweepRow;
using lsketch::SweepSpec;

namespace {

lsketch::SyntheticFamilySpec small_family(std::uint64_t family_seed, std::size_t count) {
  lsketch::SyntheticFamilySpec f;
  f.n = 30;
  f.d = 20;
  f.rank = 4;
  f.family_seed = family_seed;
  f.count = count;
  return f;
}

SweepSpec small_sweep(std::vector<Method> methods, std::vector<std::size_t> ms, std::vector<std::size_t> densities,
                      std::size_t reps) {
  SweepSpec s;
  s.methods = std::move(methods);
  s.m_values = std::move(ms);
  s.densities = std::move(densities);
  s.repetitions = reps;
  s.base.k = 3;
  s.base.iterations = 60;
  s.base.momentum = 0.9;
  s.seed = 99;
  s.train = DataSource::synthetic(small_family(1, 12), 1);
  s.test = DataSource::synthetic(small_family(1, 4), 2);
  s.ood = DataSource::synthetic(small_family(2, 4), 3);
  for (auto* src : {&s.train, &s.test, &*s.ood}) src->normalize_to = 16.0;
  return s;
}

double mean_test(const SweepReport& r, Method m) {
  for (const auto& c : lsketch::summarize(r))
    if (c.method == m) return c.mean_test;
  return -1;
}

}  // namespace

TEST(RunSweep, SingleCellEqualsDirectTrainerRun) {
  const SweepSpec spec = small_sweep({Method::Ivy}, {6}, {1}, 1);
  const SweepReport r = lsketch::run_sweep(spec);
  ASSERT_EQ(r.rows.size(), 1u);
  const SweepRow& row = r.rows[0];
  ASSERT_TRUE(row.ok()) << row.error;
  EXPECT_EQ(row.seed, lsketch::rep_seed(spec.seed, 0));

  const auto train = lsketch::load_dataset(spec.train, lsketch::DatasetRole::Train);
  const auto test = lsketch::load_dataset(spec.test, lsketch::DatasetRole::Test);
  const lsketch::EvalSet set(test, 3);
  lsketch::TrainConfig cfg = spec.base;
  cfg.m = 6;
  cfg.seed = row.seed;
  const auto direct = lsketch::train_ivy(train, cfg);
  EXPECT_EQ(*row.final_test_err, lsketch::avg_test_error(set, direct.spec, lsketch::RngStream(0, 0)));
  EXPECT_FALSE(row.iters_to_sparsity.has_value());
  EXPECT_TRUE(row.final_ood_err.has_value());
}

TEST(RunSweep, FullRowSpaceCountSketchIsExact) {
  SweepSpec spec = small_sweep({Method::CountSketch}, {30}, {30}, 2);
  const SweepReport r = lsketch::run_sweep(spec);
  ASSERT_EQ(r.rows.size(), 2u);
  for (const auto& row : r.rows) {
    ASSERT_TRUE(row.ok()) << row.error;
    EXPECT_LE(*row.final_test_err, 1e-8);
  }
}

TEST(RunSweep, GridOrderAndSharedRepSeeds) {
  const SweepSpec spec = small_sweep({Method::CountSketch, Method::Gaussian}, {4, 8}, {1, 5}, 2);
  const SweepReport r = lsketch::run_sweep(spec);
  // (4,5) is not a grid point, so 3 points x 2 reps x 2 methods.
  ASSERT_EQ(r.rows.size(), 12u);
  EXPECT_EQ(r.rows[0].method, Method::CountSketch);
  EXPECT_EQ(r.rows[0].m, 4u);
  EXPECT_EQ(r.rows[2].m, 8u);
  EXPECT_EQ(r.rows[4].density, 5u);
  EXPECT_EQ(r.rows[6].method, Method::Gaussian);
  for (const auto& row : r.rows) EXPECT_EQ(row.seed, lsketch::rep_seed(spec.seed, row.rep));
  EXPECT_NE(lsketch::rep_seed(spec.seed, 0), lsketch::rep_seed(spec.seed, 1));
}

TEST(RunSweep, IdenticalSpecsGiveIdenticalReports) {
  SweepSpec spec = small_sweep({Method::Ivy, Method::IvyLs, Method::IvyLr}, {6}, {1}, 2);
  spec.base.iterations = 30;
  const SweepReport a = lsketch::run_sweep(spec);
  spec.threads = 3;
  const SweepReport b = lsketch::run_sweep(spec);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].method, b.rows[i].method);
    EXPECT_EQ(a.rows[i].seed, b.rows[i].seed);
    EXPECT_EQ(a.rows[i].final_test_err, b.rows[i].final_test_err);
    EXPECT_EQ(a.rows[i].final_ood_err, b.rows[i].final_ood_err);
    EXPECT_EQ(a.rows[i].iters_to_sparsity, b.rows[i].iters_to_sparsity);
  }
}

TEST(RunSweep, CellFailuresAreRecordedNotThrown) {
  SweepSpec spec = small_sweep({Method::Ivy}, {6}, {1}, 2);
  spec.base.momentum = 2.0;
  const SweepReport r = lsketch::run_sweep(spec);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_FALSE(r.all_ok());
  for (const auto& row : r.rows) EXPECT_NE(row.error.find("momentum"), std::string::npos) << row.error;
}

TEST(RunSweep, DatasetLoadFailureIsFatal) {
  SweepSpec spec = small_sweep({Method::Ivy}, {6}, {1}, 1);
  spec.train = DataSource::directory("/nonexistent/lsketch", lsketch::MatrixFormat::Rawbin);
  EXPECT_THROW(lsketch::run_sweep(spec), lsketch::IoError);
}

TEST(RunSweep, InvalidSpecsAreRejected) {
  SweepSpec spec = small_sweep({}, {6}, {1}, 1);
  EXPECT_THROW(lsketch::run_sweep(spec), lsketch::Error);
  spec = small_sweep({Method::Ivy}, {6}, {1}, 0);
  EXPECT_THROW(lsketch::run_sweep(spec), lsketch::Error);
}

TEST(RunSweep, LearnedSparsityBeatsIvyAtTwiceK) {
  SweepSpec spec = small_sweep({Method::Ivy, Method::IvyLs}, {6}, {1}, 5);
  spec.base.iterations = 200;
  const SweepReport r = lsketch::run_sweep(spec);
  ASSERT_TRUE(r.all_ok());
  EXPECT_LT(mean_test(r, Method::IvyLs), mean_test(r, Method::Ivy));
}

TEST(Summarize, MeanAndSampleStd) {
  SweepReport r;
  r.rows.push_back(SweepRow{Method::Ivy, 5, 1, 0, 1, 1.0, 2.0, 1.0, std::nullopt, {}});
  r.rows.push_back(SweepRow{Method::Ivy, 5, 1, 1, 2, 3.0, 4.0, 3.0, std::nullopt, {}});
  r.rows.push_back(SweepRow{Method::Ivy, 5, 1, 2, 3, std::nullopt, std::nullopt, 0.0, std::nullopt, "boom"});
  const auto s = lsketch::summarize(r);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].count, 2u);
  EXPECT_DOUBLE_EQ(s[0].mean_test, 2.0);
  EXPECT_DOUBLE_EQ(s[0].std_test, std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(*s[0].mean_ood, 3.0);
  EXPECT_DOUBLE_EQ(s[0].mean_seconds, 2.0);
}

TEST(ReportCsv, EmptyReportIsHeaderOnly) {
  std::ostringstream os;
  lsketch::write_report_csv(os, SweepReport{});
  EXPECT_EQ(os.str(), std::string(lsketch::kReportHeader) + "\n");
}

TEST(ReportCsv, RoundTripsThroughParse) {
  SweepReport r;
  r.rows.push_back(SweepRow{Method::IvyLsLr, 40, 2, 3, 0xdeadbeefcafeULL, 0.1 + 0.2, std::nullopt, 12.5, 17, {}});
  std::stringstream ss;
  lsketch::write_report_csv(ss, r);
  const SweepReport back = lsketch::read_report_csv(ss);
  ASSERT_EQ(back.rows.size(), 1u);
  const auto& b = back.rows[0];
  EXPECT_EQ(b.method, Method::IvyLsLr);
  EXPECT_EQ(b.m, 40u);
  EXPECT_EQ(b.density, 2u);
  EXPECT_EQ(b.rep, 3u);
  EXPECT_EQ(b.seed, 0xdeadbeefcafeULL);
  EXPECT_EQ(b.final_test_err, 0.1 + 0.2);
  EXPECT_FALSE(b.final_ood_err.has_value());
  EXPECT_EQ(b.train_seconds, 12.5);
  EXPECT_EQ(b.iters_to_sparsity, 17u);
}

TEST(ReportCsv, MatchesGoldenFileByteForByte) {
  std::ostringstream os;
  lsketch::write_report_csv(os, golden_report());
  EXPECT_EQ(os.str(), slurp(std::filesystem::path(LSKETCH_FIXTURE_DIR) / "report_golden.csv"));
}

TEST(ReportCsv, MalformedInputIsAnError) {
  std::istringstream bad_header("method,m\n"), short_row(std::string(lsketch::kReportHeader) + "\nivy,1,2\n");
  EXPECT_THROW(lsketch::read_report_csv(bad_header), lsketch::IoError);
  EXPECT_THROW(lsketch::read_report_csv(short_row), lsketch::IoError);
}

TEST(ReportCsv, UnwritablePathNamesThePath) {
  try {
    lsketch::emit_csv(SweepReport{}, "/nonexistent/dir/report.csv");
    FAIL() << "expected IoError";
  } catch (const lsketch::IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/report.csv"), std::string::npos);
  }
}

TEST(ReportJson, MirrorsTheCsvFields) {
  SweepReport r = golden_report();
  r.rows[2].error = "bad \"cell\"";
  std::ostringstream os;
  lsketch::write_report_json(os, r);
  const std::string text = os.str();
  EXPECT_NE(text.find("0.10000000000000001"), std::string::npos);
  const auto j = nlohmann::json::parse(text);
  ASSERT_EQ(j.at("rows").size(), 3u);
  const auto& row = j["rows"][1];
  EXPECT_EQ(row.at("method"), "ivy-ls");
  EXPECT_EQ(row.at("seed").get<std::uint64_t>(), 18446744073709551615ULL);
  EXPECT_TRUE(row.at("final_ood_err").is_null());
  EXPECT_EQ(row.at("iters_to_sparsity"), 37);
  EXPECT_FALSE(row.contains("error"));
  EXPECT_EQ(j["rows"][2].at("error"), "bad \"cell\"");
  EXPECT_EQ(j["rows"][2].at("final_ood_err").get<double>(), 1.0 / 3.0);
}

TEST(ReportJson, EmptyReport) {
  std::ostringstream os;
  lsketch::write_report_json(os, SweepReport{});
  EXPECT_TRUE(nlohmann::json::parse(os.str()).at("rows").empty());
}

TEST(CurveExport, OneRecordGivesOneDataRow) {
  lsketch::TrainTrace t;
  lsketch::TraceRecord rec;
  rec.seconds = 0.25;
  rec.loss = 2.0;
  rec.nnz_d = 7;
  rec.test_err = 0.5;
  t.records.push_back(rec);
  std::ostringstream os;
  lsketch::write_curve(os, t);
  EXPECT_EQ(os.str(), std::string(lsketch::kCurveHeader) + "\n0,0.25,2,7,0.5,,0\n");
}

TEST(CurveExport, DecreasingSecondsIsAnError) {
  lsketch::TrainTrace t;
  t.records.resize(2);
  t.records[0].seconds = 1.0;
  t.records[1].seconds = 0.5;
  std::ostringstream os;
  EXPECT_THROW(lsketch::write_curve(os, t), lsketch::Error);
  EXPECT_THROW(lsketch::write_curve(os, lsketch::TrainTrace{}), lsketch::Error);
}

TEST(CurveExport, SparsityFlagTransitionsOnceForLearnedSparsity) {
  const auto train = lsketch::load_dataset(small_sweep({}, {}, {}, 1).train, lsketch::DatasetRole::Train);
  lsketch::TrainConfig c;
  c.m = 6;
  c.k = 3;
  c.iterations = 400;
  c.momentum = 0.9;
  const auto r = lsketch::train_ivy_ls(train, c);
  ASSERT_TRUE(r.trace.sparsity_met);
  TempDir dir;
  lsketch::curve_export(r.trace, dir / "curve.csv");
  std::istringstream is(slurp(dir / "curve.csv"));
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, lsketch::kCurveHeader);
  int transitions = 0, rows = 0;
  char prev = '0';
  while (std::getline(is, line)) {
    ++rows;
    const char flag = line.back();
    if (flag != prev) ++transitions;
    prev = flag;
  }
  EXPECT_EQ(rows, 400);
  EXPECT_EQ(transitions, 1);
  EXPECT_EQ(prev, '1');
}
