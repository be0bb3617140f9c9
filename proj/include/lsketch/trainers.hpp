#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lsketch/dataset.hpp"
#include "lsketch/errors.hpp"
#include "lsketch/matrix.hpp"
#include "lsketch/rng.hpp"
#include "lsketch/scw.hpp"
#include "lsketch/sketch.hpp"
#include "lsketch/svd_grad.hpp"

namespace lsketch {

enum class Method { Ivy, IvyLs, IvyLr, IvyLsLr, CountSketch, Gaussian };

inline std::string_view method_name(Method m) {
  switch (m) {
    case Method::Ivy: return "ivy";
    case Method::IvyLs: return "ivy-ls";
    case Method::IvyLr: return "ivy-lr";
    case Method::IvyLsLr: return "ivy-ls-lr";
    case Method::CountSketch: return "countsketch";
    case Method::Gaussian: return "gaussian";
  }
  return "unknown";
}

inline Method method_from_name(std::string_view s) {
  for (Method m : {Method::Ivy, Method::IvyLs, Method::IvyLr, Method::IvyLsLr, Method::CountSketch,
                   Method::Gaussian}) {
    if (s == method_name(m)) return m;
  }
  // Underscore spellings are accepted too.
  std::string dashed(s);
  for (char& c : dashed)
    if (c == '_') c = '-';
  if (dashed != s) return method_from_name(dashed);
  if (s == "random-countsketch" || s == "random_countsketch") return Method::CountSketch;
  if (s == "random-gaussian" || s == "random_gaussian") return Method::Gaussian;
  throw Error("unknown method '" + std::string(s) + "'");
}

inline bool learns_sparsity(Method m) noexcept { return m == Method::IvyLs || m == Method::IvyLsLr; }
inline bool is_trained(Method m) noexcept { return m != Method::CountSketch && m != Method::Gaussian; }

enum class GradientMode { Analytic, FiniteDifference };

struct TrainConfig {
  std::size_t m = 10;
  std::size_t k = 10;
  std::size_t density = 1;                // support size per column for IVY / IVY+LR
  std::optional<double> target_sparsity;  // nnz(D) <= n * s; defaults to density
  std::optional<double> lambda;           // defaults to 3e-4 at target 1, else 1e-4
  double epsilon = 0.5;
  double eta = 1.0;
  double momentum = 1.0;
  std::size_t iterations = 500;
  double noise_var = 0.25;
  bool early_stop_flag = true;
  std::uint64_t seed = 0;
  std::size_t eval_every = 10;
  GradientMode gradient = GradientMode::Analytic;
  double degeneracy_tol = 1e-6;
  int max_retries = 5;
  double jitter = 1e-8;
  EvalOptions eval;

  double sparsity() const { return target_sparsity.value_or(static_cast<double>(density)); }
  double effective_lambda() const { return lambda.value_or(sparsity() <= 1.0 ? 3e-4 : 1e-4); }

  void validate() const {
    if (m == 0 || k == 0) throw Error("train config: m and k must be positive");
    if (density < 1 || density > m) throw Error("train config: density must lie in [1, m]");
    if (!(sparsity() > 0.0) || sparsity() > static_cast<double>(m))
      throw Error("train config: target sparsity must lie in (0, m]");
    if (effective_lambda() < 0.0 || epsilon < 0.0) throw Error("train config: lambda and epsilon must be >= 0");
    if (!(eta > 0.0)) throw Error("train config: eta must be positive");
    if (momentum < 0.0 || momentum > 1.0) throw Error("train config: momentum must lie in [0, 1]");
    if (noise_var < 0.0) throw Error("train config: noise variance must be >= 0");
  }
};

struct TraceRecord {
  std::size_t iteration = 0;
  double seconds = 0.0;  // cumulative training time, evaluation excluded
  double loss = 0.0;     // scw loss plus the active L1 penalty
  std::size_t nnz_d = 0;
  bool lambda_active = false;
  bool sparsity_met = false;
  bool skipped = false;
  std::optional<double> test_err;
  std::optional<double> ood_err;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  bool sparsity_met = false;
  std::optional<std::size_t> sparsity_met_iteration;
  std::size_t skipped = 0;
};

struct TrainResult {
  SketchSpec spec;       // state after the last iteration
  SketchSpec best_spec;  // lowest held-out error among eligible checkpoints
  std::optional<double> best_test_err;
  std::optional<std::size_t> best_iteration;
  TrainTrace trace;
};

struct TrainHooks {
  const EvalSet* test = nullptr;
  const EvalSet* ood = nullptr;
  std::function<void(const TraceRecord&)> on_record;
  std::function<void(std::size_t, const SketchSpec&)> on_checkpoint;
};

/// Heavy-ball step: vel' = beta * vel + grad; param' = param - eta * vel'.
inline std::pair<Matrix, Matrix> sgd_step(Matrix param, const Matrix& grad, Matrix vel, double eta, double beta) {
  param.require_same_shape(grad, "sgd_step");
  param.require_same_shape(vel, "sgd_step");
  auto p = param.data();
  auto g = grad.data();
  auto v = vel.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    v[i] = beta * v[i] + g[i];
    p[i] -= eta * v[i];
  }
  return {std::move(param), std::move(vel)};
}

namespace detail {

inline void sgd_inplace(Matrix& param, const Matrix& grad, Matrix& vel, double eta, double beta) {
  auto [p, v] = sgd_step(std::move(param), grad, std::move(vel), eta, beta);
  param = std::move(p);
  vel = std::move(v);
}

inline void zero_where_zero(Matrix& g, const Matrix& pattern) {
  auto gd = g.data();
  auto pd = pattern.data();
  for (std::size_t i = 0; i < gd.size(); ++i)
    if (pd[i] == 0.0) gd[i] = 0.0;
}

inline double sum(const Matrix& a) {
  double s = 0.0;
  for (double x : a.data()) s += x;
  return s;
}

// One gradient-descent step on the sparsity mask, keeping frozen zeros frozen.
inline void update_mask(Matrix& d, Matrix& vel_d, Matrix grad_d, const TrainConfig& cfg) {
  zero_where_zero(grad_d, d);
  const Matrix frozen = d;
  sgd_inplace(d, grad_d, vel_d, cfg.eta, cfg.momentum);
  auto dd = d.data();
  auto fd = frozen.data();
  for (std::size_t i = 0; i < dd.size(); ++i) {
    if (fd[i] == 0.0 || dd[i] < 0.0) dd[i] = 0.0;
  }
  d = threshold_mask(std::move(d), cfg.epsilon).mask;
  zero_where_zero(vel_d, d);
}

// Shared bookkeeping: timing, trace records, held-out evaluation, best checkpoint.
class RunState {
 public:
  RunState(const MatrixDataset& train, const TrainConfig& cfg, const TrainHooks& hooks, bool sparsity_gated)
      : train_(train), cfg_(cfg), hooks_(hooks), gated_(sparsity_gated) {
    train.validate();
    cfg.validate();
    if (cfg.m == 0) throw Error("train: m must be positive");
  }

  const Matrix& sample(std::size_t it) const { return train_.matrices[it % train_.size()]; }
  std::size_t n() const { return train_.rows(); }

  void start_clock() { tick_ = clock::now(); }
  void stop_clock() { elapsed_ += std::chrono::duration<double>(clock::now() - tick_).count(); }

  // Calls `attempt(try_index)` until it succeeds or the retry budget is spent.
  template <class F>
  std::optional<LossGrad> with_retries(F&& attempt) {
    for (int t = 0; t <= cfg_.max_retries; ++t) {
      try {
        return attempt(t);
      } catch (const DegenerateSpectrum&) {
      } catch (const ConvergenceError&) {
      }
    }
    return std::nullopt;
  }

  LossGrad loss_grad(const Matrix& a, const Matrix& s) const {
    if (cfg_.gradient == GradientMode::FiniteDifference) return scw_loss_grad_fd(a, s, cfg_.k);
    GradOptions o;
    o.degeneracy_tol = cfg_.degeneracy_tol;
    return scw_loss_grad(a, s, cfg_.k, o);
  }

  void finish_iteration(std::size_t it, TraceRecord rec, const SketchSpec& spec, std::size_t nnz_d) {
    rec.iteration = it;
    rec.seconds = elapsed_;
    rec.nnz_d = nnz_d;
    const bool met = !gated_ || static_cast<double>(nnz_d) <= static_cast<double>(n()) * cfg_.sparsity();
    rec.sparsity_met = met;
    if (gated_ && met && !trace_.sparsity_met) {
      trace_.sparsity_met = true;
      trace_.sparsity_met_iteration = it;
    }
    if (rec.skipped) ++trace_.skipped;
    const bool eval_point =
        cfg_.eval_every > 0 && ((it + 1) % cfg_.eval_every == 0 || it + 1 == cfg_.iterations);
    if (eval_point) {
      evaluate(it, rec, spec, met);
      if (hooks_.on_checkpoint) hooks_.on_checkpoint(it, spec);
    }
    if (hooks_.on_record) hooks_.on_record(rec);
    trace_.records.push_back(std::move(rec));
  }

  TrainResult finish(SketchSpec spec) {
    TrainResult r{spec, best_ ? *best_ : spec, best_err_, best_iter_, std::move(trace_)};
    return r;
  }

 private:
  using clock = std::chrono::steady_clock;

  void evaluate(std::size_t it, TraceRecord& rec, const SketchSpec& spec, bool eligible) {
    RngStream eval_rng = RngStream(cfg_.seed, streams::kEval).split(it);
    EvalOptions eo = cfg_.eval;
    eo.noise_var = cfg_.noise_var;
    if (hooks_.test) {
      rec.test_err = avg_test_error(*hooks_.test, spec, eval_rng.split(0), eo);
      if (eligible && (!best_err_ || *rec.test_err < *best_err_)) {
        best_err_ = rec.test_err;
        best_ = spec;
        best_iter_ = it;
      }
    }
    if (hooks_.ood) rec.ood_err = avg_test_error(*hooks_.ood, spec, eval_rng.split(1), eo);
  }

  const MatrixDataset& train_;
  const TrainConfig& cfg_;
  const TrainHooks& hooks_;
  bool gated_;
  TrainTrace trace_;
  clock::time_point tick_{};
  double elapsed_ = 0.0;
  std::optional<SketchSpec> best_;
  std::optional<double> best_err_;
  std::optional<std::size_t> best_iter_;
};

inline Matrix jittered(const Matrix& s, const Matrix& support, RngStream& rng, double magnitude) {
  Matrix out = s;
  auto od = out.data();
  auto sd = support.data();
  for (std::size_t i = 0; i < od.size(); ++i)
    if (sd[i] != 0.0) od[i] += rng.uniform(-magnitude, magnitude);
  return out;
}

}  // namespace detail

/// IVY: learn the values of a CountSketch with its random support held fixed.
inline TrainResult train_ivy(const MatrixDataset& train, const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  detail::RunState run(train, cfg, hooks, false);
  Matrix s = *init_countsketch(cfg.m, run.n(), cfg.density, RngStream(cfg.seed, streams::kInit)).s_base;
  const Matrix support = s;
  Matrix vel(s.rows(), s.cols());
  RngStream jitter_rng(cfg.seed, streams::kJitter);
  const std::size_t support_nnz = nnz(support);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const Matrix& a = run.sample(it);
    run.start_clock();
    auto lg = run.with_retries([&](int t) {
      return run.loss_grad(a, t == 0 ? s : detail::jittered(s, support, jitter_rng, cfg.jitter));
    });
    TraceRecord rec;
    if (lg) {
      detail::zero_where_zero(lg->grad_s, support);
      detail::sgd_inplace(s, lg->grad_s, vel, cfg.eta, cfg.momentum);
      detail::zero_where_zero(s, support);
      rec.loss = lg->loss;
    } else {
      rec.skipped = true;
    }
    run.stop_clock();
    run.finish_iteration(it, rec, SketchSpec::plain(s), support_nnz);
  }
  return run.finish(SketchSpec::plain(std::move(s)));
}

/// Dense ±1 start for the learned-sparsity value matrix.
inline Matrix random_sign_matrix(std::size_t m, std::size_t n, RngStream rng) {
  Matrix s(m, n);
  for (double& x : s.data()) x = rng.coin() ? 1.0 : -1.0;
  return s;
}

/// IVY+LS: learn values and, through a thresholded L1-penalized mask, positions.
inline TrainResult train_ivy_ls(const MatrixDataset& train, const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  detail::RunState run(train, cfg, hooks, true);
  const std::size_t n = run.n();
  Matrix s_base = random_sign_matrix(cfg.m, n, RngStream(cfg.seed, streams::kInit));
  Matrix d = Matrix::ones(cfg.m, n);
  Matrix vel_s(cfg.m, n), vel_d(cfg.m, n);
  RngStream jitter_rng(cfg.seed, streams::kJitter);
  const double lambda = cfg.effective_lambda();
  const double budget = static_cast<double>(n) * cfg.sparsity();

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const Matrix& a = run.sample(it);
    run.start_clock();
    const Matrix s_eff = hadamard(d, s_base);
    const bool train_mask = static_cast<double>(nnz(d)) > budget;
    auto lg = run.with_retries([&](int t) {
      return run.loss_grad(a, t == 0 ? s_eff : detail::jittered(s_eff, s_eff, jitter_rng, cfg.jitter));
    });
    TraceRecord rec;
    rec.lambda_active = train_mask;
    if (lg) {
      rec.loss = lg->loss + (train_mask ? lambda * detail::sum(d) : 0.0);
      Matrix grad_d = train_mask ? chain_to_mask(lg->grad_s, s_base, d, lambda) : Matrix();
      detail::sgd_inplace(s_base, hadamard(lg->grad_s, d), vel_s, cfg.eta, cfg.momentum);
      if (train_mask) detail::update_mask(d, vel_d, std::move(grad_d), cfg);
    } else {
      rec.skipped = true;
    }
    run.stop_clock();
    run.finish_iteration(it, rec, SketchSpec::masked(s_base, d), nnz(d));
  }
  return run.finish(SketchSpec::masked(std::move(s_base), std::move(d)));
}

namespace detail {

// S = Z ⊙ sqrt(var) + mu
inline Matrix gaussian_sketch(const Matrix& z, const Matrix& mu, const Matrix& var) {
  Matrix s = mu;
  auto sd = s.data();
  auto zd = z.data();
  auto vd = var.data();
  for (std::size_t i = 0; i < sd.size(); ++i) sd[i] += zd[i] * std::sqrt(vd[i]);
  return s;
}

// mu -= eta * v_mu; var = relu(var - eta * v_var)
inline void gaussian_update(Matrix& mu, Matrix& var, Matrix& vel_mu, Matrix& vel_var, const GaussianGrad& g,
                            const TrainConfig& cfg) {
  sgd_inplace(mu, g.grad_mu, vel_mu, cfg.eta, cfg.momentum);
  sgd_inplace(var, g.grad_sigma_var, vel_var, cfg.eta, cfg.momentum);
  for (double& x : var.data()) x = std::max(x, 0.0);
}

}  // namespace detail

/// IVY+LR: learn a Gaussian (mean, variance) per support entry by reparameterization.
inline TrainResult train_ivy_lr(const MatrixDataset& train, const TrainConfig& cfg, const TrainHooks& hooks = {}) {
  detail::RunState run(train, cfg, hooks, false);
  const std::size_t n = run.n();
  Matrix support = *init_countsketch(cfg.m, n, cfg.density, RngStream(cfg.seed, streams::kInit)).s_base;
  for (double& x : support.data()) x = x != 0.0 ? 1.0 : 0.0;
  Matrix mu(cfg.m, n);
  Matrix var = support;  // unit variance on the support, zero elsewhere
  Matrix vel_mu(cfg.m, n), vel_var(cfg.m, n);
  RngStream noise_rng(cfg.seed, streams::kNoise);
  const std::size_t support_nnz = nnz(support);

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const Matrix& a = run.sample(it);
    run.start_clock();
    Matrix z;
    auto lg = run.with_retries([&](int) {
      z = sample_noise_on(var, nullptr, noise_rng, cfg.noise_var);
      return run.loss_grad(a, detail::gaussian_sketch(z, mu, var));
    });
    TraceRecord rec;
    if (lg) {
      GaussianGrad g = chain_to_gaussian(lg->grad_s, z, var);
      detail::zero_where_zero(g.grad_mu, support);
      detail::gaussian_update(mu, var, vel_mu, vel_var, g, cfg);
      rec.loss = lg->loss;
    } else {
      rec.skipped = true;
    }
    run.stop_clock();
    run.finish_iteration(it, rec, SketchSpec::stochastic(mu, var), support_nnz);
  }
  return run.finish(SketchSpec::stochastic(std::move(mu), std::move(var)));
}

/// IVY+LS&LR: Gaussian entries under a learned sparsity mask.
inline TrainResult train_ivy_ls_lr(const MatrixDataset& train, const TrainConfig& cfg,
                                   const TrainHooks& hooks = {}) {
  detail::RunState run(train, cfg, hooks, true);
  const std::size_t n = run.n();
  Matrix d = Matrix::ones(cfg.m, n);
  Matrix mu(cfg.m, n);
  Matrix var = Matrix::ones(cfg.m, n);
  Matrix vel_mu(cfg.m, n), vel_var(cfg.m, n), vel_d(cfg.m, n);
  RngStream noise_rng(cfg.seed, streams::kNoise);
  const double budget = static_cast<double>(n) * cfg.sparsity();

  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const Matrix& a = run.sample(it);
    run.start_clock();
    const bool unmet = static_cast<double>(nnz(d)) > budget;
    const double lambda = unmet ? cfg.effective_lambda() : 0.0;
    Matrix z, inner;
    auto lg = run.with_retries([&](int) {
      z = sample_noise_on(var, &d, noise_rng, cfg.noise_var);
      inner = detail::gaussian_sketch(z, mu, var);
      return run.loss_grad(a, hadamard(d, inner));
    });
    TraceRecord rec;
    rec.lambda_active = lambda > 0.0;
    if (lg) {
      rec.loss = lg->loss + lambda * detail::sum(d);
      Matrix grad_d = chain_to_mask(lg->grad_s, inner, d, lambda);
      GaussianGrad g = chain_to_gaussian(hadamard(lg->grad_s, d), z, var);
      detail::gaussian_update(mu, var, vel_mu, vel_var, g, cfg);
      if (unmet && cfg.early_stop_flag) detail::update_mask(d, vel_d, std::move(grad_d), cfg);
    } else {
      rec.skipped = true;
    }
    run.stop_clock();
    run.finish_iteration(it, rec, SketchSpec::stochastic_masked(mu, var, d), nnz(d));
  }
  return run.finish(SketchSpec::stochastic_masked(std::move(mu), std::move(var), std::move(d)));
}

/// Untrained baselines and dispatch by method.
inline TrainResult train_sketch(Method method, const MatrixDataset& train_set, const TrainConfig& cfg,
                         const TrainHooks& hooks = {}) {
  switch (method) {
    case Method::Ivy: return train_ivy(train_set, cfg, hooks);
    case Method::IvyLs: return train_ivy_ls(train_set, cfg, hooks);
    case Method::IvyLr: return train_ivy_lr(train_set, cfg, hooks);
    case Method::IvyLsLr: return train_ivy_ls_lr(train_set, cfg, hooks);
    case Method::CountSketch:
    case Method::Gaussian: {
      train_set.validate();
      cfg.validate();
      const RngStream rng(cfg.seed, streams::kInit);
      SketchSpec spec = method == Method::CountSketch ? init_countsketch(cfg.m, train_set.rows(), cfg.density, rng)
                                                      : init_gaussian(cfg.m, train_set.rows(), rng);
      TrainResult r{spec, spec, std::nullopt, std::nullopt, {}};
      if (hooks.test) {
        EvalOptions eo = cfg.eval;
        r.best_test_err = avg_test_error(*hooks.test, spec, RngStream(cfg.seed, streams::kEval), eo);
      }
      return r;
    }
  }
  throw Error("train: bad method");
}

}  // namespace lsketch
