#pragma once

#include <cstddef>
#include <vector>

#include "lsketch/dataset.hpp"
#include "lsketch/matrix.hpp"
#include "lsketch/rng.hpp"
#include "lsketch/sketch.hpp"
#include "lsketch/svd.hpp"

namespace lsketch {

struct ApproxResult {
  Matrix approx;            // n x d, rank <= k
  std::size_t sketch_rank;  // rank(S A)
};

/// Sketch-and-project rank-k approximation: with S A = U Σ Vᵀ, returns [A V]_k Vᵀ.
inline ApproxResult scw(const Matrix& a, const Matrix& s, std::size_t k, const SvdOptions& opts = {}) {
  if (k == 0) throw DimensionError("scw: k must be positive");
  if (s.cols() != a.rows()) {
    throw DimensionError("scw: sketch " + s.shape_string() + " does not match data " + a.shape_string());
  }
  const CompactSvd sa = compact_svd(matmul(s, a), opts);
  if (sa.rank() == 0) return {Matrix(a.rows(), a.cols()), 0};
  const CompactSvd av = compact_svd(matmul(a, sa.v), opts);
  const std::size_t kk = std::min(k, av.rank());
  // [AV]_k Vᵀ = Y_k Λ_k (V Z_k)ᵀ
  BasicSvd<double> lifted{take_cols(av.u, 0, kk),
                          std::vector<double>(av.sigma.begin(), av.sigma.begin() + kk),
                          matmul(sa.v, take_cols(av.v, 0, kk))};
  return {reconstruct(lifted), sa.rank()};
}

/// ‖A − A_k‖_F², the optimal rank-k error, as the tail sum of squared singular values.
inline double optimal_error_sq(const Matrix& a, std::size_t k) {
  const auto f = thin_svd(a);
  double tail = 0.0;
  for (std::size_t i = f.sigma.size(); i-- > k;) tail += f.sigma[i] * f.sigma[i];
  return tail;
}

/// Excess squared error of SCW over the optimal rank-k error.
inline double test_error(const Matrix& a, const Matrix& s, std::size_t k) {
  const Matrix approx = scw(a, s, k).approx;
  return frobenius_norm_sq(a - approx) - optimal_error_sq(a, k);
}

/// Evaluation set with the optimal rank-k error of each matrix precomputed.
struct EvalSet {
  const MatrixDataset* data = nullptr;
  std::size_t k = 0;
  std::vector<double> optimal_sq;

  EvalSet() = default;
  EvalSet(const MatrixDataset& ds, std::size_t rank) : data(&ds), k(rank) {
    ds.validate();
    optimal_sq.reserve(ds.size());
    for (const auto& a : ds.matrices) optimal_sq.push_back(optimal_error_sq(a, k));
  }

  double error(std::size_t i, const Matrix& s) const {
    const Matrix& a = data->matrices[i];
    return frobenius_norm_sq(a - scw(a, s, k).approx) - optimal_sq[i];
  }
};

struct EvalOptions {
  std::size_t n_samples = 5;  // fresh draws per stochastic sketch
  bool mean_sketch = false;   // evaluate stochastic sketches at S = mu
  double noise_var = 0.25;
};

/// Mean test error over every matrix (and every sample for stochastic sketches).
inline double avg_test_error(const EvalSet& set, const SketchSpec& spec, RngStream rng,
                             const EvalOptions& opts = {}) {
  if (set.data == nullptr || set.data->empty()) throw Error("avg_test_error: empty dataset");
  std::vector<Matrix> sketches;
  if (!is_stochastic(spec.kind)) {
    sketches.push_back(materialize(spec));
  } else if (opts.mean_sketch) {
    sketches.push_back(materialize_mean(spec));
  } else {
    if (opts.n_samples == 0) throw Error("avg_test_error: stochastic sketch needs n_samples >= 1");
    for (std::size_t t = 0; t < opts.n_samples; ++t) {
      sketches.push_back(materialize_sample(spec, rng, opts.noise_var));
    }
  }
  // Fixed summation order keeps results reproducible.
  double total = 0.0;
  for (const auto& s : sketches)
    for (std::size_t i = 0; i < set.data->size(); ++i) total += set.error(i, s);
  return total / static_cast<double>(sketches.size() * set.data->size());
}

inline double avg_test_error(const MatrixDataset& ds, const SketchSpec& spec, std::size_t k,
                             std::size_t n_samples, RngStream rng) {
  if (ds.empty()) throw Error("avg_test_error: empty dataset");
  EvalOptions opts;
  opts.n_samples = n_samples;
  return avg_test_error(EvalSet(ds, k), spec, rng, opts);
}

}  // namespace lsketch
