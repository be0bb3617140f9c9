#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lsketch/errors.hpp"
#include "lsketch/matrix.hpp"
#include "lsketch/rng.hpp"

namespace lsketch {

enum class SketchKind : std::uint8_t { Plain = 0, Masked = 1, Stochastic = 2, StochasticMasked = 3 };

inline std::string_view kind_name(SketchKind k) {
  switch (k) {
    case SketchKind::Plain: return "plain";
    case SketchKind::Masked: return "masked";
    case SketchKind::Stochastic: return "stochastic";
    case SketchKind::StochasticMasked: return "stochastic_masked";
  }
  return "unknown";
}

inline SketchKind kind_from_name(std::string_view s) {
  if (s == "plain") return SketchKind::Plain;
  if (s == "masked") return SketchKind::Masked;
  if (s == "stochastic") return SketchKind::Stochastic;
  if (s == "stochastic_masked") return SketchKind::StochasticMasked;
  throw Error("unknown sketch kind '" + std::string(s) + "'");
}

inline bool is_stochastic(SketchKind k) noexcept {
  return k == SketchKind::Stochastic || k == SketchKind::StochasticMasked;
}
inline bool is_masked(SketchKind k) noexcept {
  return k == SketchKind::Masked || k == SketchKind::StochasticMasked;
}

/// A sketch matrix in one of four parameterizations.
///
///   Plain             S = s_base
///   Masked            S = mask ⊙ s_base
///   Stochastic        S = Z ⊙ sqrt(sigma_var) + mu
///   StochasticMasked  S = mask ⊙ (Z ⊙ sqrt(sigma_var) + mu)
///
/// Only the fields of the declared kind are populated.
struct SketchSpec {
  SketchKind kind = SketchKind::Plain;
  std::optional<Matrix> s_base;
  std::optional<Matrix> mask;
  std::optional<Matrix> mu;
  std::optional<Matrix> sigma_var;

  static SketchSpec plain(Matrix s) {
    SketchSpec spec;
    spec.kind = SketchKind::Plain;
    spec.s_base = std::move(s);
    spec.validate();
    return spec;
  }
  static SketchSpec masked(Matrix s, Matrix d) {
    SketchSpec spec;
    spec.kind = SketchKind::Masked;
    spec.s_base = std::move(s);
    spec.mask = std::move(d);
    spec.validate();
    return spec;
  }
  static SketchSpec stochastic(Matrix mu, Matrix var) {
    SketchSpec spec;
    spec.kind = SketchKind::Stochastic;
    spec.mu = std::move(mu);
    spec.sigma_var = std::move(var);
    spec.validate();
    return spec;
  }
  static SketchSpec stochastic_masked(Matrix mu, Matrix var, Matrix d) {
    SketchSpec spec;
    spec.kind = SketchKind::StochasticMasked;
    spec.mu = std::move(mu);
    spec.sigma_var = std::move(var);
    spec.mask = std::move(d);
    spec.validate();
    return spec;
  }

  const Matrix& any_field() const {
    if (s_base) return *s_base;
    if (mu) return *mu;
    throw Error("sketch spec has no value field");
  }
  std::size_t rows() const { return any_field().rows(); }
  std::size_t cols() const { return any_field().cols(); }

  void validate() const {
    const bool want_base = !is_stochastic(kind);
    const bool want_mask = is_masked(kind);
    const bool want_gauss = is_stochastic(kind);
    if (s_base.has_value() != want_base || mask.has_value() != want_mask ||
        mu.has_value() != want_gauss || sigma_var.has_value() != want_gauss) {
      throw Error("sketch spec fields do not match kind '" + std::string(kind_name(kind)) + "'");
    }
    const Matrix& ref = any_field();
    if (ref.empty()) throw DimensionError("sketch spec has an empty matrix");
    for (const auto* f : {&s_base, &mask, &mu, &sigma_var}) {
      if (f->has_value()) ref.require_same_shape(**f, "sketch spec");
    }
    if (mask) {
      for (double x : mask->data())
        if (!(x >= 0.0)) throw Error("sketch mask has a negative or non-finite entry");
    }
    if (sigma_var) {
      for (double x : sigma_var->data())
        if (!(x >= 0.0)) throw Error("sketch variance has a negative or non-finite entry");
    }
  }

  friend bool operator==(const SketchSpec&, const SketchSpec&) = default;
};

/// Random sparse sign sketch with exactly `density` nonzero rows per column.
inline SketchSpec init_countsketch(std::size_t m, std::size_t n, std::size_t density, RngStream rng) {
  if (m == 0 || n == 0) throw DimensionError("init_countsketch: m and n must be positive");
  if (density < 1 || density > m) {
    throw Error("init_countsketch: density " + std::to_string(density) + " must be in [1, " +
                std::to_string(m) + "]");
  }
  Matrix s(m, n);
  std::vector<std::size_t> rows(m);
  for (std::size_t j = 0; j < n; ++j) {
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    // Partial Fisher-Yates: first `density` slots are a uniform sample without replacement.
    for (std::size_t t = 0; t < density; ++t) {
      const std::size_t pick = t + static_cast<std::size_t>(rng.below(m - t));
      std::swap(rows[t], rows[pick]);
      s(rows[t], j) = rng.coin() ? 1.0 : -1.0;
    }
  }
  return SketchSpec::plain(std::move(s));
}

/// Dense sketch with i.i.d. Gaussian entries of variance 1/m.
inline SketchSpec init_gaussian(std::size_t m, std::size_t n, RngStream rng) {
  Matrix s(m, n);
  const double sd = 1.0 / std::sqrt(static_cast<double>(m));
  for (double& x : s.data()) x = rng.normal(0.0, sd);
  return SketchSpec::plain(std::move(s));
}

/// I.i.d. N(0, variance) entries.
inline Matrix sample_noise(std::size_t m, std::size_t n, RngStream& rng, double variance = 0.25) {
  Matrix z(m, n);
  if (variance <= 0.0) return z;
  const double sd = std::sqrt(variance);
  for (double& x : z.data()) x = rng.normal(0.0, sd);
  return z;
}

/// Like sample_noise, but draws only the entries a Gaussian sketch actually
/// depends on: positive `sigma_var` and, when given, a nonzero `mask`. The
/// other entries are left at zero, so for a sparse support far fewer normals
/// are drawn while the sketch has the same distribution.
inline Matrix sample_noise_on(const Matrix& sigma_var, const Matrix* mask, RngStream& rng, double variance = 0.25) {
  if (mask) sigma_var.require_same_shape(*mask, "sample_noise_on");
  Matrix z(sigma_var.rows(), sigma_var.cols());
  if (variance <= 0.0) return z;
  const double sd = std::sqrt(variance);
  auto zd = z.data();
  auto vd = sigma_var.data();
  for (std::size_t i = 0; i < zd.size(); ++i)
    if (vd[i] > 0.0 && (!mask || mask->data()[i] != 0.0)) zd[i] = rng.normal(0.0, sd);
  return z;
}

/// Concrete sketch matrix. `noise` is required for stochastic kinds and
/// rejected otherwise.
inline Matrix materialize(const SketchSpec& spec, const Matrix* noise = nullptr) {
  if (is_stochastic(spec.kind) != (noise != nullptr)) {
    throw Error(noise ? "materialize: noise given for a deterministic sketch"
                      : "materialize: stochastic sketch needs a noise matrix");
  }
  switch (spec.kind) {
    case SketchKind::Plain: return *spec.s_base;
    case SketchKind::Masked: return hadamard(*spec.mask, *spec.s_base);
    case SketchKind::Stochastic:
    case SketchKind::StochasticMasked: {
      if (!noise || !spec.mu || !spec.sigma_var) throw Error("materialize: stochastic sketch without mu/var");
      spec.mu->require_same_shape(*noise, "materialize");
      Matrix s = *spec.mu;
      auto sd = s.data();
      auto zd = noise->data();
      auto vd = spec.sigma_var->data();
      for (std::size_t i = 0; i < sd.size(); ++i) sd[i] += zd[i] * std::sqrt(vd[i]);
      if (spec.kind == SketchKind::StochasticMasked) s = hadamard(*spec.mask, s);
      return s;
    }
  }
  throw Error("materialize: bad kind");
}

inline Matrix materialize(const SketchSpec& spec, const Matrix& noise) { return materialize(spec, &noise); }

/// Draws fresh noise when the sketch is stochastic.
inline Matrix materialize_sample(const SketchSpec& spec, RngStream& rng, double noise_var = 0.25) {
  if (!is_stochastic(spec.kind)) return materialize(spec);
  const Matrix z = sample_noise(spec.rows(), spec.cols(), rng, noise_var);
  return materialize(spec, &z);
}

/// Deterministic "mean sketch": mu, masked when applicable.
inline Matrix materialize_mean(const SketchSpec& spec) {
  if (!is_stochastic(spec.kind)) return materialize(spec);
  return spec.kind == SketchKind::StochasticMasked ? hadamard(*spec.mask, *spec.mu) : *spec.mu;
}

struct ThresholdResult {
  Matrix mask;
  std::size_t pruned = 0;  // entries that were nonzero and are now zero
};

/// Zeroes entries strictly below epsilon.
inline ThresholdResult threshold_mask(Matrix mask, double epsilon) {
  std::size_t pruned = 0;
  for (double& x : mask.data()) {
    if (x < epsilon) {
      if (x != 0.0) ++pruned;
      x = 0.0;
    }
  }
  return {std::move(mask), pruned};
}

inline std::size_t nnz(const Matrix& a) noexcept {
  std::size_t c = 0;
  for (double x : a.data()) c += x != 0.0;
  return c;
}

/// Average nonzeros per column of the effective sketch pattern.
inline double density_of(const SketchSpec& spec) {
  std::size_t count = 0;
  switch (spec.kind) {
    case SketchKind::Plain: count = nnz(*spec.s_base); break;
    case SketchKind::Masked: count = nnz(hadamard(*spec.mask, *spec.s_base)); break;
    case SketchKind::Stochastic: {
      // Support is every entry that can be nonzero under sampling.
      const auto mu = spec.mu->data();
      const auto var = spec.sigma_var->data();
      for (std::size_t i = 0; i < mu.size(); ++i) count += (mu[i] != 0.0 || var[i] != 0.0);
      break;
    }
    case SketchKind::StochasticMasked: {
      const auto mu = spec.mu->data();
      const auto var = spec.sigma_var->data();
      const auto d = spec.mask->data();
      for (std::size_t i = 0; i < mu.size(); ++i) count += d[i] != 0.0 && (mu[i] != 0.0 || var[i] != 0.0);
      break;
    }
  }
  return static_cast<double>(count) / static_cast<double>(spec.cols());
}

}  // namespace lsketch
