#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "lsketch/data_io.hpp"
#include "lsketch/errors.hpp"
#include "lsketch/io.hpp"
#include "lsketch/rng.hpp"
#include "lsketch/scw.hpp"
#include "lsketch/trainers.hpp"

namespace lsketch {

struct SweepSpec {
  std::vector<Method> methods;
  std::vector<std::size_t> m_values;
  std::vector<std::size_t> densities;  // IVY density, and target sparsity for the LS methods
  std::size_t repetitions = 5;
  TrainConfig base;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  DataSource train;
  DataSource test;
  std::optional<DataSource> ood;

  void validate() const {
    if (methods.empty()) throw Error("sweep: no methods");
    if (m_values.empty() || densities.empty()) throw Error("sweep: empty grid");
    if (repetitions == 0) throw Error("sweep: repetitions must be >= 1");
    if (threads == 0) throw Error("sweep: threads must be >= 1");
  }

  /// Grid points (m, density) in report order; points with density > m are not part of the grid.
  std::vector<std::pair<std::size_t, std::size_t>> grid() const {
    std::vector<std::pair<std::size_t, std::size_t>> g;
    for (std::size_t m : m_values)
      for (std::size_t d : densities)
        if (d <= m) g.emplace_back(m, d);
    return g;
  }
};

/// Seed of repetition `rep`. It does not depend on method or grid point, so
/// within one repetition every method starts from the same seed.
inline std::uint64_t rep_seed(std::uint64_t sweep_seed, std::size_t rep) {
  return mix64(sweep_seed ^ mix64(static_cast<std::uint64_t>(rep) + 0x243f6a8885a308d3ULL));
}

struct SweepRow {
  Method method = Method::Ivy;
  std::size_t m = 0;
  std::size_t density = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  std::optional<double> final_test_err;  // sketch after the last iteration
  std::optional<double> final_ood_err;   // best held-out checkpoint
  double train_seconds = 0.0;
  std::optional<std::size_t> iters_to_sparsity;
  std::string error;  // nonempty if the cell failed

  bool ok() const { return error.empty(); }
};

struct SweepReport {
  std::vector<SweepRow> rows;

  bool all_ok() const {
    return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.ok(); });
  }
};

struct CellSummary {
  Method method = Method::Ivy;
  std::size_t m = 0;
  std::size_t density = 0;
  std::size_t count = 0;  // completed repetitions
  double mean_test = 0.0;
  double std_test = 0.0;
  std::optional<double> mean_ood;
  double mean_seconds = 0.0;
};

/// Mean (and sample standard deviation) over repetitions, per method and grid point.
inline std::vector<CellSummary> summarize(const SweepReport& report) {
  std::map<std::tuple<int, std::size_t, std::size_t>, std::vector<const SweepRow*>> cells;
  std::vector<std::tuple<int, std::size_t, std::size_t>> order;
  for (const auto& r : report.rows) {
    auto key = std::make_tuple(static_cast<int>(r.method), r.m, r.density);
    if (!cells.count(key)) order.push_back(key);
    if (r.ok() && r.final_test_err) cells[key].push_back(&r);
    else cells[key];
  }
  std::vector<CellSummary> out;
  for (const auto& key : order) {
    const auto& rows = cells[key];
    CellSummary c;
    c.method = static_cast<Method>(std::get<0>(key));
    c.m = std::get<1>(key);
    c.density = std::get<2>(key);
    c.count = rows.size();
    if (!rows.empty()) {
      double ood = 0.0;
      bool have_ood = true;
      for (const auto* r : rows) {
        c.mean_test += *r->final_test_err;
        c.mean_seconds += r->train_seconds;
        if (r->final_ood_err) ood += *r->final_ood_err;
        else have_ood = false;
      }
      const double n = static_cast<double>(rows.size());
      c.mean_test /= n;
      c.mean_seconds /= n;
      if (have_ood) c.mean_ood = ood / n;
      if (rows.size() > 1) {
        double ss = 0.0;
        for (const auto* r : rows) ss += (*r->final_test_err - c.mean_test) * (*r->final_test_err - c.mean_test);
        c.std_test = std::sqrt(ss / (n - 1.0));
      }
    }
    out.push_back(c);
  }
  return out;
}

/// Config for one cell of a sweep.
inline TrainConfig cell_config(const TrainConfig& base, std::size_t m, std::size_t density, std::uint64_t seed,
                               Method method) {
  TrainConfig c = base;
  c.m = m;
  c.seed = seed;
  if (learns_sparsity(method)) {
    c.density = 1;
    c.target_sparsity = static_cast<double>(density);
  } else {
    c.density = density;
  }
  return c;
}

/// Trains and evaluates one cell; used by run_sweep and usable directly.
inline SweepRow run_cell(Method method, std::size_t m, std::size_t density, std::size_t rep, std::uint64_t seed,
                         const TrainConfig& base, const MatrixDataset& train, const EvalSet& test,
                         const EvalSet* ood) {
  SweepRow row{method, m, density, rep, seed, std::nullopt, std::nullopt, 0.0, std::nullopt, {}};
  try {
    const TrainConfig cfg = cell_config(base, m, density, seed, method);
    TrainHooks hooks;
    hooks.test = &test;
    hooks.ood = ood;
    const TrainResult r = train_sketch(method, train, cfg, hooks);
    EvalOptions eo = cfg.eval;
    eo.noise_var = cfg.noise_var;
    const RngStream eval_rng = RngStream(seed, streams::kEval).split(0xf1a1);
    row.final_test_err = avg_test_error(test, r.spec, eval_rng.split(0), eo);
    if (ood) row.final_ood_err = avg_test_error(*ood, r.best_spec, eval_rng.split(1), eo);
    if (!r.trace.records.empty()) row.train_seconds = r.trace.records.back().seconds;
    row.iters_to_sparsity = r.trace.sparsity_met_iteration;
  } catch (const std::exception& e) {
    row.error = e.what();
  }
  return row;
}

/// Runs every (method, grid point, repetition) cell. Datasets are loaded up
/// front, so a load failure throws before any training; failures inside a cell
/// are recorded in that row.
inline SweepReport run_sweep(const SweepSpec& spec) {
  spec.validate();
  const MatrixDataset train = load_dataset(spec.train, DatasetRole::Train);
  const MatrixDataset test = load_dataset(spec.test, DatasetRole::Test);
  std::optional<MatrixDataset> ood;
  if (spec.ood) ood = load_dataset(*spec.ood, DatasetRole::Ood);
  if (test.rows() != train.rows() || (ood && ood->rows() != train.rows()))
    throw DimensionError("sweep: train, test and ood matrices must have the same number of rows");
  const EvalSet test_set(test, spec.base.k);
  std::optional<EvalSet> ood_set;
  if (ood) ood_set.emplace(*ood, spec.base.k);

  SweepReport report;
  for (Method method : spec.methods)
    for (const auto& [m, density] : spec.grid())
      for (std::size_t rep = 0; rep < spec.repetitions; ++rep)
        report.rows.push_back(SweepRow{method, m, density, rep, rep_seed(spec.seed, rep), std::nullopt,
                                       std::nullopt, 0.0, std::nullopt, {}});

  // Rows are preallocated in grid order, so completion order does not matter.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < report.rows.size(); i = next++) {
      const SweepRow& r = report.rows[i];
      report.rows[i] = run_cell(r.method, r.m, r.density, r.rep, r.seed, spec.base, train, test_set,
                                ood_set ? &*ood_set : nullptr);
    }
  };
  const std::size_t n_threads = std::min(spec.threads, std::max<std::size_t>(report.rows.size(), 1));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return report;
}

inline constexpr const char* kReportHeader =
    "method,m,density,rep,seed,final_test_err,final_ood_err,train_seconds,iters_to_sparsity";

namespace detail {

inline std::string opt_cell(const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); }

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  return os;
}

}  // namespace detail

inline void write_report_csv(std::ostream& os, const SweepReport& report) {
  os << kReportHeader << '\n';
  for (const auto& r : report.rows) {
    os << method_name(r.method) << ',' << r.m << ',' << r.density << ',' << r.rep << ',' << r.seed << ','
       << detail::opt_cell(r.final_test_err) << ',' << detail::opt_cell(r.final_ood_err) << ','
       << io::format_double(r.train_seconds) << ','
       << (r.iters_to_sparsity ? std::to_string(*r.iters_to_sparsity) : std::string()) << '\n';
  }
}

inline void emit_csv(const SweepReport& report, const std::filesystem::path& path) {
  auto os = detail::open_out(path);
  write_report_csv(os, report);
  if (!os) throw IoError("write failed: " + path.string());
}

/// Parses a report written by write_report_csv (the error column is not part of the CSV).
inline SweepReport read_report_csv(std::istream& is, const std::string& what = "report") {
  std::string line;
  if (!std::getline(is, line) || line != kReportHeader) throw IoError(what + ": unexpected header");
  SweepReport report;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 9) throw IoError(what + ": line " + std::to_string(lineno) + " has " +
                                     std::to_string(f.size()) + " fields, expected 9");
    auto opt = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return io::parse_double(s, what);
    };
    SweepRow r;
    r.method = method_from_name(f[0]);
    r.m = std::stoull(f[1]);
    r.density = std::stoull(f[2]);
    r.rep = std::stoull(f[3]);
    r.seed = std::stoull(f[4]);
    r.final_test_err = opt(f[5]);
    r.final_ood_err = opt(f[6]);
    r.train_seconds = io::parse_double(f[7], what);
    if (!f[8].empty()) r.iters_to_sparsity = std::stoull(f[8]);
    report.rows.push_back(std::move(r));
  }
  return report;
}

/// JSON with the CSV's fields per row (plus "error" for failed cells); missing values are null.
inline void write_report_json(std::ostream& os, const SweepReport& report) {
  auto num = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string("null"); };
  os << "{\n  \"rows\": [";
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    os << (i ? ",\n" : "\n") << "    {\"method\": \"" << method_name(r.method) << "\", \"m\": " << r.m
       << ", \"density\": " << r.density << ", \"rep\": " << r.rep << ", \"seed\": " << r.seed
       << ", \"final_test_err\": " << num(r.final_test_err) << ", \"final_ood_err\": " << num(r.final_ood_err)
       << ", \"train_seconds\": " << io::format_double(r.train_seconds) << ", \"iters_to_sparsity\": "
       << (r.iters_to_sparsity ? std::to_string(*r.iters_to_sparsity) : std::string("null"));
    if (!r.ok()) os << ", \"error\": " << nlohmann::json(r.error).dump();
    os << '}';
  }
  os << (report.rows.empty() ? "]\n}\n" : "\n  ]\n}\n");
}

inline void emit_json(const SweepReport& report, const std::filesystem::path& path) {
  auto os = detail::open_out(path);
  write_report_json(os, report);
  if (!os) throw IoError("write failed: " + path.string());
}

inline constexpr const char* kCurveHeader = "iter,seconds,loss,nnz_d,test_err,ood_err,sparsity_met";

/// Streams trace records as curve CSV rows. Rows before the sparsity target is
/// reached have sparsity_met=0, so plots of the LS methods can start there.
class CurveWriter {
 public:
  explicit CurveWriter(std::ostream& os) : os_(os) { os_ << kCurveHeader << '\n'; }

  void write(const TraceRecord& r) {
    if (r.seconds < last_seconds_) throw Error("curve export: seconds column is not monotone");
    last_seconds_ = r.seconds;
    os_ << r.iteration << ',' << io::format_double(r.seconds) << ','
        << (r.skipped ? std::string() : io::format_double(r.loss)) << ',' << r.nnz_d << ','
        << detail::opt_cell(r.test_err) << ',' << detail::opt_cell(r.ood_err) << ',' << (r.sparsity_met ? 1 : 0)
        << '\n';
    os_.flush();
  }

 private:
  std::ostream& os_;
  double last_seconds_ = 0.0;
};

inline void write_curve(std::ostream& os, const TrainTrace& trace) {
  if (trace.records.empty()) throw Error("curve export: empty trace");
  CurveWriter w(os);
  for (const auto& r : trace.records) w.write(r);
}

inline void curve_export(const TrainTrace& trace, const std::filesystem::path& path) {
  auto os = detail::open_out(path);
  write_curve(os, trace);
  if (!os) throw IoError("write failed: " + path.string());
}

}  // namespace lsketch
