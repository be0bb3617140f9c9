#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsketch/bench.hpp"
#include "lsketch/data_io.hpp"
#include "lsketch/io.hpp"
#include "lsketch/scw.hpp"
#include "lsketch/sketch.hpp"
#include "lsketch/sketch_io.hpp"
#include "lsketch/trainers.hpp"

namespace lsketch::cli {

namespace fs = std::filesystem;

/// Argument problems found after CLI11 is done (exit code 2).
struct UsageError : Error {
  using Error::Error;
};

struct DataFlags {
  std::string data, test_data, ood_data;
  std::string format = "rawbin";
  std::string normalize = "none";
  double normalize_to = 1.0;

  void add(CLI::App* app, bool with_splits) {
    app->add_option("--data", data, "Directory of training (or evaluation) matrices");
    if (with_splits) {
      app->add_option("--test-data", test_data, "Directory of held-out test matrices");
      app->add_option("--ood-data", ood_data, "Directory of out-of-distribution matrices");
    }
    app->add_option("--format", format, "Matrix file format")
        ->check(CLI::IsMember({"rawbin", "bin", "csv", "pgm"}))
        ->capture_default_str();
    app->add_option("--normalize", normalize, "Per-matrix normalization")
        ->check(CLI::IsMember({"none", "fro"}))
        ->capture_default_str();
    app->add_option("--normalize-to", normalize_to, "Target Frobenius norm for --normalize fro")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  DataSource source(const std::string& dir) const {
    DataSource s = DataSource::directory(dir, format_from_name(format));
    if (normalize == "fro") s.normalize_to = normalize_to;
    return s;
  }
};

struct TrainFlags {
  TrainConfig cfg;
  double target_sparsity = 0.0;
  double lambda = 0.0;
  std::size_t n_samples = 5;
  CLI::Option* target_opt = nullptr;
  CLI::Option* lambda_opt = nullptr;

  void add(CLI::App* app) {
    app->add_option("--m", cfg.m, "Sketch rows")->capture_default_str();
    app->add_option("--k", cfg.k, "Target rank")->capture_default_str();
    app->add_option("--density", cfg.density, "Nonzeros per column of the CountSketch init")
        ->capture_default_str();
    target_opt = app->add_option("--target-sparsity", target_sparsity,
                                 "Average nonzeros per column allowed in the learned mask [density]");
    lambda_opt = app->add_option("--lambda", lambda,
                                 "L1 weight on the mask [3e-4 if target sparsity is 1, else 1e-4]");
    app->add_option("--epsilon", cfg.epsilon, "Mask prune threshold")->capture_default_str();
    app->add_option("--eta", cfg.eta, "Learning rate")->capture_default_str();
    app->add_option("--momentum", cfg.momentum, "Momentum beta")->capture_default_str();
    app->add_option("--iterations", cfg.iterations, "Training iterations")->capture_default_str();
    app->add_option("--noise-var", cfg.noise_var, "Variance of the sampling noise Z")
        ->capture_default_str();
    app->add_option("--early-stop-flag", cfg.early_stop_flag,
                    "Train the mask of ivy-ls-lr until the target is met (true/false)")
        ->capture_default_str();
    app->add_option("--eval-every", cfg.eval_every, "Held-out evaluation and checkpoint interval")
        ->capture_default_str();
    app->add_flag("--mean-sketch", cfg.eval.mean_sketch, "Evaluate stochastic sketches at their mean");
    app->add_option("--n-samples", n_samples, "Sketch draws per evaluation of a stochastic sketch")
        ->capture_default_str();
    app->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  }

  TrainConfig resolved() const {
    TrainConfig c = cfg;
    if (*target_opt) c.target_sparsity = target_sparsity;
    if (*lambda_opt) c.lambda = lambda;
    c.eval.n_samples = n_samples;
    c.eval.noise_var = c.noise_var;
    try {
      c.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    return c;
  }
};

inline std::vector<std::size_t> parse_size_list(const std::string& s, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(tok, &pos);
      if (pos != tok.size() || v == 0) throw std::invalid_argument(tok);
      out.push_back(v);
    } catch (const std::exception&) {
      throw UsageError(what + ": bad entry '" + tok + "'");
    }
  }
  if (out.empty()) throw UsageError(what + ": empty list");
  return out;
}

inline SketchSpec load_spec(const fs::path& p) {
  if (p.extension() == ".json") {
    std::ifstream is(p);
    if (!is) throw IoError("cannot open " + p.string());
    try {
      return io::sketch_from_json(nlohmann::json::parse(is));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(p.string() + ": " + e.what());
    }
  }
  return io::load_sketch(p);
}

inline void save_spec(const fs::path& p, const SketchSpec& spec) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  if (p.extension() == ".json") {
    std::ofstream os(p);
    if (!os) throw IoError("cannot open " + p.string() + " for writing");
    os << io::sketch_to_json(spec).dump() << '\n';
    return;
  }
  io::save_sketch(p, spec);
}

/// Reads `key=value` lines ('#' comments, blank lines allowed) into flags.
/// Keys already given on the command line are skipped, so flags win.
inline std::vector<std::string> config_args(const fs::path& path, const std::vector<std::string>& given) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open config file " + path.string());
  std::vector<std::string> out;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(is, line)) {
    ++lineno;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    const std::string flag = "--" + key;
    const bool on_cli = std::any_of(given.begin(), given.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!on_cli) out.push_back(flag + "=" + value);
  }
  return out;
}

inline constexpr const char* kUsage =
    "usage: lsketch {train,eval,sweep,gen-data,sample-sketch,inspect} [OPTIONS]\n"
    "       lsketch <subcommand> --help for the options of one subcommand\n";

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(std::vector<std::string> args) {
    CLI::App app{"Learned sketches for low-rank approximation", "lsketch"};
    app.require_subcommand(1);
    std::string config;
    app.add_option("--config", config, "key=value file with defaults for the subcommand's flags");

    TrainFlags tf;
    DataFlags df;

    // train
    auto* train = app.add_subcommand("train", "Train a sketch and report its held-out error");
    std::string method_s = "ivy", out_path, best_out, trace_out, checkpoint_dir;
    train->add_option("--method", method_s, "ivy, ivy-ls, ivy-lr, ivy-ls-lr, countsketch or gaussian")
        ->capture_default_str();
    tf.add(train);
    df.add(train, true);
    train->add_option("--out", out_path, "Write the final sketch here (.json for JSON, else binary)");
    train->add_option("--best-out", best_out, "Write the best held-out checkpoint here");
    train->add_option("--trace-out", trace_out, "Stream the training trace to this CSV file");
    train->add_option("--checkpoint-dir", checkpoint_dir, "Write a binary checkpoint every --eval-every iterations");

    // eval
    auto* eval = app.add_subcommand("eval", "Average test error of a stored sketch on a dataset");
    std::string sketch_s;
    std::size_t eval_k = 10, eval_samples = 5;
    double eval_noise = 0.25;
    bool eval_mean = false;
    std::uint64_t eval_seed = 0;
    eval->add_option("--sketch", sketch_s, "Sketch file, or 'identity'")->required();
    eval->add_option("--k", eval_k, "Target rank")->capture_default_str();
    eval->add_option("--n-samples", eval_samples, "Draws per stochastic sketch")->capture_default_str();
    eval->add_option("--noise-var", eval_noise, "Variance of the sampling noise Z")->capture_default_str();
    eval->add_flag("--mean-sketch", eval_mean, "Evaluate stochastic sketches at their mean");
    eval->add_option("--seed", eval_seed, "Random seed")->capture_default_str();
    DataFlags eval_df;
    eval_df.add(eval, false);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run a method x grid x repetition benchmark");
    std::string methods_s = "ivy,ivy-ls,ivy-lr,ivy-ls-lr,countsketch", m_values_s = "5,10,20,40",
                densities_s = "1,2,5,10", csv_out, json_out;
    std::size_t reps = 5, threads = 1;
    SyntheticFamilySpec family;
    std::uint64_t ood_family_seed = 2;
    std::size_t train_count = 40, test_count = 10, ood_count = 10;
    TrainFlags sweep_tf;
    DataFlags sweep_df;
    sweep->add_option("--methods", methods_s, "Comma-separated methods")->capture_default_str();
    sweep->add_option("--m-values", m_values_s, "Comma-separated sketch sizes")->capture_default_str();
    sweep->add_option("--densities", densities_s, "Comma-separated densities / target sparsities")
        ->capture_default_str();
    sweep->add_option("--reps", reps, "Repetitions per grid point")->capture_default_str();
    sweep->add_option("--threads", threads, "Worker threads")->capture_default_str();
    sweep->add_option("--csv", csv_out, "Write the report as CSV");
    sweep->add_option("--json", json_out, "Write the report as JSON");
    sweep_tf.add(sweep);
    sweep_df.add(sweep, true);
    sweep->add_option("--family-seed", family.family_seed, "Synthetic family (used without --data)")
        ->capture_default_str();
    sweep->add_option("--n", family.n, "Synthetic rows")->capture_default_str();
    sweep->add_option("--d", family.d, "Synthetic columns")->capture_default_str();
    sweep->add_option("--rank", family.rank, "Rank of the synthetic shared subspace")->capture_default_str();
    sweep->add_option("--noise", family.noise_level, "Synthetic additive noise level")->capture_default_str();
    sweep->add_option("--decay", family.decay, "Synthetic per-direction energy decay")->capture_default_str();
    sweep->add_option("--row-spread", family.row_spread, "Synthetic log-stddev of row energies")
        ->capture_default_str();
    sweep->add_option("--profile-seed", family.profile_seed, "Synthetic row-energy profile seed")
        ->capture_default_str();
    sweep->add_option("--ood-family-seed", ood_family_seed, "Synthetic OOD family")->capture_default_str();
    sweep->add_option("--train-count", train_count, "Synthetic training matrices")->capture_default_str();
    sweep->add_option("--test-count", test_count, "Synthetic test matrices")->capture_default_str();
    sweep->add_option("--ood-count", ood_count, "Synthetic OOD matrices")->capture_default_str();

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Write a synthetic shared-subspace family to a directory");
    SyntheticFamilySpec gen_family;
    std::uint64_t gen_seed = 0;
    std::string gen_out, gen_format = "rawbin", gen_normalize = "none";
    double gen_normalize_to = 1.0;
    gen->add_option("--out", gen_out, "Output directory")->required();
    gen->add_option("--format", gen_format, "rawbin, csv or pgm")
        ->check(CLI::IsMember({"rawbin", "bin", "csv", "pgm"}))
        ->capture_default_str();
    gen->add_option("--n", gen_family.n, "Rows")->capture_default_str();
    gen->add_option("--d", gen_family.d, "Columns")->capture_default_str();
    gen->add_option("--rank", gen_family.rank, "Rank of the shared subspace")->capture_default_str();
    gen->add_option("--noise", gen_family.noise_level, "Additive noise level")->capture_default_str();
    gen->add_option("--count", gen_family.count, "Number of matrices")->capture_default_str();
    gen->add_option("--decay", gen_family.decay, "Per-direction energy decay")->capture_default_str();
    gen->add_option("--row-spread", gen_family.row_spread, "Log-stddev of row energies")->capture_default_str();
    gen->add_option("--family-seed", gen_family.family_seed, "Seed of the shared basis")->capture_default_str();
    gen->add_option("--profile-seed", gen_family.profile_seed, "Seed of the row-energy profile")
        ->capture_default_str();
    gen->add_option("--seed", gen_seed, "Seed of the per-matrix draws")->capture_default_str();
    gen->add_option("--normalize", gen_normalize, "Per-matrix normalization")
        ->check(CLI::IsMember({"none", "fro"}))
        ->capture_default_str();
    gen->add_option("--normalize-to", gen_normalize_to, "Target Frobenius norm")->capture_default_str();

    // sample-sketch
    auto* sample = app.add_subcommand("sample-sketch", "Materialize a sketch spec N times");
    std::string sample_spec, sample_out;
    std::size_t sample_n = 1;
    std::uint64_t sample_seed = 0;
    double sample_noise = 0.25;
    sample->add_option("--spec", sample_spec, "Sketch file")->required();
    sample->add_option("--samples", sample_n, "Number of draws")->capture_default_str();
    sample->add_option("--noise-var", sample_noise, "Variance of the sampling noise Z")->capture_default_str();
    sample->add_option("--seed", sample_seed, "Random seed")->capture_default_str();
    sample->add_option("--out", sample_out, "Directory for the sampled matrices (rawbin)")->required();

    // inspect
    auto* inspect = app.add_subcommand("inspect", "Print shape, nonzeros and density of a sketch file");
    std::string inspect_spec;
    inspect->add_option("--spec", inspect_spec, "Sketch file")->required();

    try {
      // A --config file anywhere on the line is expanded before parsing.
      const auto cfg_it = std::find_if(args.begin(), args.end(), [](const std::string& a) {
        return a == "--config" || a.rfind("--config=", 0) == 0;
      });
      if (cfg_it != args.end()) {
        std::string path;
        auto erase_to = cfg_it + 1;
        if (*cfg_it == "--config") {
          if (cfg_it + 1 == args.end()) throw UsageError("--config needs a path");
          path = *(cfg_it + 1);
          erase_to = cfg_it + 2;
        } else {
          path = cfg_it->substr(9);
        }
        args.erase(cfg_it, erase_to);
        const auto extra = config_args(path, args);
        args.insert(args.end(), extra.begin(), extra.end());
      }
      std::vector<std::string> reversed(args.rbegin(), args.rend());
      app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
      const auto subs = app.get_subcommands();
      out_ << (subs.empty() ? app.help() : subs.front()->help());
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out_ << app.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      err_ << "error: " << e.what() << "\n" << kUsage;
      return 2;
    } catch (const UsageError& e) {
      err_ << "error: " << e.what() << "\n" << kUsage;
      return 2;
    }

    try {
      if (*train) return cmd_train(method_s, tf, df, out_path, best_out, trace_out, checkpoint_dir);
      if (*eval) return cmd_eval(sketch_s, eval_k, eval_samples, eval_noise, eval_mean, eval_seed, eval_df);
      if (*sweep) {
        return cmd_sweep(methods_s, m_values_s, densities_s, reps, threads, csv_out, json_out, sweep_tf, sweep_df,
                         family, ood_family_seed, train_count, test_count, ood_count);
      }
      if (*gen) return cmd_gen(gen_family, gen_seed, gen_out, gen_format, gen_normalize, gen_normalize_to);
      if (*sample) return cmd_sample(sample_spec, sample_n, sample_noise, sample_seed, sample_out);
      if (*inspect) return cmd_inspect(inspect_spec);
    } catch (const UsageError& e) {
      err_ << "error: " << e.what() << "\n" << kUsage;
      return 2;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << "\n";
      return 1;
    }
    return 2;
  }

 private:
  template <class T>
  void kv(const std::string& key, const T& value) {
    out_ << key << '=' << value << '\n';
  }
  void kv_double(const std::string& key, double value) { kv(key, io::format_double(value)); }

  static Method parse_method(const std::string& s) {
    try {
      return method_from_name(s);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }

  int cmd_train(const std::string& method_s, const TrainFlags& tf, const DataFlags& df, const std::string& out_path,
                const std::string& best_out, const std::string& trace_out, const std::string& checkpoint_dir) {
    const Method method = parse_method(method_s);
    const TrainConfig cfg = tf.resolved();
    if (df.data.empty()) throw UsageError("train needs --data");
    const MatrixDataset train = load_dataset(df.source(df.data), DatasetRole::Train);
    std::optional<MatrixDataset> test, ood;
    if (!df.test_data.empty()) test = load_dataset(df.source(df.test_data), DatasetRole::Test);
    if (!df.ood_data.empty()) ood = load_dataset(df.source(df.ood_data), DatasetRole::Ood);
    std::optional<EvalSet> test_set, ood_set;
    if (test) test_set.emplace(*test, cfg.k);
    if (ood) ood_set.emplace(*ood, cfg.k);

    TrainHooks hooks;
    hooks.test = test_set ? &*test_set : nullptr;
    hooks.ood = ood_set ? &*ood_set : nullptr;
    std::ofstream trace_os;
    std::optional<CurveWriter> curve;
    if (!trace_out.empty()) {
      trace_os.open(trace_out, std::ios::binary);
      if (!trace_os) throw IoError("cannot open " + trace_out + " for writing");
      curve.emplace(trace_os);
      hooks.on_record = [&](const TraceRecord& r) { curve->write(r); };
    }
    if (!checkpoint_dir.empty()) {
      fs::create_directories(checkpoint_dir);
      hooks.on_checkpoint = [&](std::size_t it, const SketchSpec& spec) {
        char name[32];
        std::snprintf(name, sizeof name, "iter%06zu.sksp", it);
        io::save_sketch(fs::path(checkpoint_dir) / name, spec);
      };
    }

    const TrainResult r = train_sketch(method, train, cfg, hooks);
    if (!out_path.empty()) save_spec(out_path, r.spec);
    if (!best_out.empty()) save_spec(best_out, r.best_spec);

    if (!test_set) test_set.emplace(train, cfg.k);  // no held-out data: report the training error
    const EvalSet& final_set = *test_set;
    EvalOptions eo = cfg.eval;
    const RngStream eval_rng = RngStream(cfg.seed, streams::kEval).split(0xf1a1);
    const double final_err = avg_test_error(final_set, r.spec, eval_rng.split(0), eo);
    const std::size_t n = train.rows();
    const double seconds = r.trace.records.empty() ? 0.0 : r.trace.records.back().seconds;

    kv("method", method_name(method));
    kv("m", cfg.m);
    kv("k", cfg.k);
    kv("n", n);
    kv("iterations", cfg.iterations);
    kv("seed", cfg.seed);
    kv_double(test ? "final_test_err" : "final_train_err", final_err);
    if (r.best_test_err) kv_double("best_test_err", *r.best_test_err);
    if (r.best_iteration) kv("best_iteration", *r.best_iteration);
    if (ood_set) kv_double("best_ood_err", avg_test_error(*ood_set, r.best_spec, eval_rng.split(1), eo));
    const double dens = density_of(r.spec);
    kv("nnz", static_cast<std::size_t>(dens * static_cast<double>(n) + 0.5));
    kv_double("density", dens);
    if (learns_sparsity(method)) {
      kv("sparsity_met", r.trace.sparsity_met ? "true" : "false");
      kv_double("nnz_budget", static_cast<double>(n) * cfg.sparsity());
      if (r.trace.sparsity_met_iteration) kv("iters_to_sparsity", *r.trace.sparsity_met_iteration);
    }
    kv("skipped", r.trace.skipped);
    kv_double("train_seconds", seconds);

    err_ << method_name(method) << ": " << cfg.iterations << " iterations in " << seconds << " s, "
         << (test ? "test" : "train") << " error " << final_err << "\n";
    return 0;
  }

  int cmd_eval(const std::string& sketch_s, std::size_t k, std::size_t n_samples, double noise_var, bool mean,
               std::uint64_t seed, const DataFlags& df) {
    if (df.data.empty()) throw UsageError("eval needs --data");
    if (k == 0) throw UsageError("--k must be positive");
    const MatrixDataset ds = load_dataset(df.source(df.data), DatasetRole::Test);
    const SketchSpec spec =
        sketch_s == "identity" ? SketchSpec::plain(Matrix::identity(ds.rows())) : load_spec(sketch_s);
    if (spec.cols() != ds.rows()) {
      throw DimensionError("sketch has " + std::to_string(spec.cols()) + " columns but matrices have " +
                           std::to_string(ds.rows()) + " rows");
    }
    EvalOptions eo;
    eo.n_samples = n_samples;
    eo.noise_var = noise_var;
    eo.mean_sketch = mean;
    const double err = avg_test_error(EvalSet(ds, k), spec, RngStream(seed, streams::kEval), eo);
    kv("matrices", ds.size());
    kv("k", k);
    kv("sketch_kind", kind_name(spec.kind));
    kv_double("avg_test_error", err);
    err_ << "average test error over " << ds.size() << " matrices: " << err << "\n";
    return 0;
  }

  int cmd_sweep(const std::string& methods_s, const std::string& m_values_s, const std::string& densities_s,
                std::size_t reps, std::size_t threads, const std::string& csv_out, const std::string& json_out,
                const TrainFlags& tf, const DataFlags& df, SyntheticFamilySpec family, std::uint64_t ood_family_seed,
                std::size_t train_count, std::size_t test_count, std::size_t ood_count) {
    SweepSpec spec;
    std::stringstream ss(methods_s);
    for (std::string tok; std::getline(ss, tok, ',');) spec.methods.push_back(parse_method(tok));
    spec.m_values = parse_size_list(m_values_s, "--m-values");
    spec.densities = parse_size_list(densities_s, "--densities");
    spec.repetitions = reps;
    spec.threads = threads;
    spec.base = tf.resolved();
    spec.seed = spec.base.seed;
    if (!df.data.empty()) {
      if (df.test_data.empty()) throw UsageError("sweep with --data also needs --test-data");
      spec.train = df.source(df.data);
      spec.test = df.source(df.test_data);
      if (!df.ood_data.empty()) spec.ood = df.source(df.ood_data);
    } else {
      // Synthetic family: train and test share a basis, OOD uses another family seed.
      try {
        family.validate();
      } catch (const Error& e) {
        throw UsageError(e.what());
      }
      auto synth = [&](std::uint64_t family_seed, std::size_t count, std::uint64_t stream) {
        SyntheticFamilySpec f = family;
        f.family_seed = family_seed;
        f.count = count;
        DataSource s = DataSource::synthetic(f, mix64(spec.seed ^ stream));
        if (df.normalize == "fro") s.normalize_to = df.normalize_to;
        return s;
      };
      spec.train = synth(family.family_seed, train_count, 1);
      spec.test = synth(family.family_seed, test_count, 2);
      spec.ood = synth(ood_family_seed, ood_count, 3);
    }
    try {
      spec.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }

    const SweepReport report = run_sweep(spec);
    if (!csv_out.empty()) emit_csv(report, csv_out);
    if (!json_out.empty()) emit_json(report, json_out);

    std::size_t failed = 0;
    for (const auto& r : report.rows) failed += !r.ok();
    kv("cells", report.rows.size());
    kv("failed", failed);
    for (const auto& c : summarize(report)) {
      out_ << "method=" << method_name(c.method) << " m=" << c.m << " density=" << c.density << " reps=" << c.count
           << " mean_test_err=" << io::format_double(c.mean_test) << " std_test_err=" << io::format_double(c.std_test)
           << " mean_ood_err=" << (c.mean_ood ? io::format_double(*c.mean_ood) : std::string())
           << " mean_train_seconds=" << io::format_double(c.mean_seconds) << '\n';
    }
    for (const auto& r : report.rows) {
      if (!r.ok()) {
        err_ << "cell " << method_name(r.method) << " m=" << r.m << " density=" << r.density << " rep=" << r.rep
             << " failed: " << r.error << "\n";
      }
    }
    err_ << report.rows.size() - failed << " of " << report.rows.size() << " cells completed\n";
    return failed == 0 ? 0 : 1;
  }

  int cmd_gen(const SyntheticFamilySpec& family, std::uint64_t seed, const std::string& out,
              const std::string& format, const std::string& normalize, double normalize_to) {
    try {
      family.validate();
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    DataSource src = DataSource::synthetic(family, seed);
    if (normalize == "fro") src.normalize_to = normalize_to;
    const MatrixDataset ds = load_dataset(src, DatasetRole::Train);
    save_matrix_dir(out, ds, format_from_name(format));
    kv("count", ds.size());
    kv("rows", ds.rows());
    kv("cols", ds.cols());
    kv("dir", out);
    err_ << "wrote " << ds.size() << " matrices of " << ds.rows() << "x" << ds.cols() << " to " << out << "\n";
    return 0;
  }

  int cmd_sample(const std::string& spec_path, std::size_t n, double noise_var, std::uint64_t seed,
                 const std::string& out) {
    const SketchSpec spec = load_spec(spec_path);
    fs::create_directories(out);
    RngStream rng(seed, streams::kNoise);
    for (std::size_t i = 0; i < n; ++i) {
      const Matrix s = is_stochastic(spec.kind) ? materialize_sample(spec, rng, noise_var) : materialize(spec);
      char name[32];
      std::snprintf(name, sizeof name, "s%05zu.bin", i);
      io::save_rawbin(fs::path(out) / name, s);
    }
    kv("samples", n);
    kv("rows", spec.rows());
    kv("cols", spec.cols());
    kv("dir", out);
    if (!is_stochastic(spec.kind)) err_ << "note: sketch is deterministic, every sample is identical\n";
    return 0;
  }

  int cmd_inspect(const std::string& spec_path) {
    const SketchSpec spec = load_spec(spec_path);
    const double dens = density_of(spec);
    kv("kind", kind_name(spec.kind));
    kv("rows", spec.rows());
    kv("cols", spec.cols());
    kv("nnz", static_cast<std::size_t>(dens * static_cast<double>(spec.cols()) + 0.5));
    kv_double("density", dens);
    if (spec.mask) kv("mask_nnz", nnz(*spec.mask));
    err_ << kind_name(spec.kind) << " sketch " << spec.rows() << "x" << spec.cols() << ", " << dens
         << " nonzeros per column\n";
    return 0;
  }

  std::ostream& out_;
  std::ostream& err_;
};

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return Runner(out, err).run(args);
}

}  // namespace lsketch::cli
