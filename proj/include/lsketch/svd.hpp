#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "lsketch/errors.hpp"
#include "lsketch/matrix.hpp"

namespace lsketch {

/// Thin or compact singular value decomposition a = u * diag(sigma) * vᵀ.
///
/// `sigma` is non-increasing. After `compact_svd` it is also strictly
/// positive and `rank()` counts the retained triples.
template <std::floating_point T>
struct BasicSvd {
  BasicMatrix<T> u;
  std::vector<T> sigma;
  BasicMatrix<T> v;

  std::size_t rank() const noexcept { return sigma.size(); }
};

using CompactSvd = BasicSvd<double>;

enum class SvdMethod { GolubKahan, Jacobi };

struct SvdOptions {
  double rank_tol = 1e-12;  // relative to sigma_max
  int max_iterations = 75;  // QR sweeps per singular value, or Jacobi sweeps
  SvdMethod method = SvdMethod::GolubKahan;
};

namespace detail {

template <std::floating_point T>
T hypot2(T a, T b) noexcept {
  return std::hypot(a, b);
}

template <std::floating_point T>
T with_sign(T magnitude, T sign_of) noexcept {
  return sign_of >= T(0) ? std::abs(magnitude) : -std::abs(magnitude);
}

// Sort triples by descending sigma.
template <std::floating_point T>
void sort_descending(BasicSvd<T>& f) {
  const std::size_t p = f.sigma.size();
  std::vector<std::size_t> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return f.sigma[a] > f.sigma[b]; });
  BasicSvd<T> out{BasicMatrix<T>(f.u.rows(), p), std::vector<T>(p), BasicMatrix<T>(f.v.rows(), p)};
  for (std::size_t j = 0; j < p; ++j) {
    const std::size_t src = order[j];
    out.sigma[j] = f.sigma[src];
    for (std::size_t i = 0; i < f.u.rows(); ++i) out.u(i, j) = f.u(i, src);
    for (std::size_t i = 0; i < f.v.rows(); ++i) out.v(i, j) = f.v(i, src);
  }
  f = std::move(out);
}

// Golub-Kahan-Reinsch on a tall matrix (rows >= cols). On return `a` holds U.
template <std::floating_point T>
void golub_kahan_tall(BasicMatrix<T>& a, std::vector<T>& w, BasicMatrix<T>& v, int max_iterations) {
  const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(a.rows());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.cols());
  const T eps = std::numeric_limits<T>::epsilon();
  w.assign(static_cast<std::size_t>(n), T(0));
  v = BasicMatrix<T>(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  std::vector<T> e(static_cast<std::size_t>(n), T(0));  // superdiagonal
  auto A = [&](std::ptrdiff_t i, std::ptrdiff_t j) -> T& {
    return a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  };
  auto V = [&](std::ptrdiff_t i, std::ptrdiff_t j) -> T& {
    return v(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  };
  auto W = [&](std::ptrdiff_t i) -> T& { return w[static_cast<std::size_t>(i)]; };
  auto E = [&](std::ptrdiff_t i) -> T& { return e[static_cast<std::size_t>(i)]; };

  // Householder reduction to upper bidiagonal form.
  T g = 0, scale = 0, anorm = 0;
  std::ptrdiff_t l = 0;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    l = i + 1;
    E(i) = scale * g;
    g = scale = 0;
    T s = 0;
    if (i < m) {
      for (std::ptrdiff_t k = i; k < m; ++k) scale += std::abs(A(k, i));
      if (scale != T(0)) {
        for (std::ptrdiff_t k = i; k < m; ++k) {
          A(k, i) /= scale;
          s += A(k, i) * A(k, i);
        }
        const T f = A(i, i);
        g = -with_sign(std::sqrt(s), f);
        const T h = f * g - s;
        A(i, i) = f - g;
        for (std::ptrdiff_t j = l; j < n; ++j) {
          T acc = 0;
          for (std::ptrdiff_t k = i; k < m; ++k) acc += A(k, i) * A(k, j);
          const T ff = acc / h;
          for (std::ptrdiff_t k = i; k < m; ++k) A(k, j) += ff * A(k, i);
        }
        for (std::ptrdiff_t k = i; k < m; ++k) A(k, i) *= scale;
      }
    }
    W(i) = scale * g;
    g = s = scale = 0;
    if (i < m && i != n - 1) {
      for (std::ptrdiff_t k = l; k < n; ++k) scale += std::abs(A(i, k));
      if (scale != T(0)) {
        for (std::ptrdiff_t k = l; k < n; ++k) {
          A(i, k) /= scale;
          s += A(i, k) * A(i, k);
        }
        const T f = A(i, l);
        g = -with_sign(std::sqrt(s), f);
        const T h = f * g - s;
        A(i, l) = f - g;
        for (std::ptrdiff_t k = l; k < n; ++k) E(k) = A(i, k) / h;
        for (std::ptrdiff_t j = l; j < m; ++j) {
          T acc = 0;
          for (std::ptrdiff_t k = l; k < n; ++k) acc += A(j, k) * A(i, k);
          for (std::ptrdiff_t k = l; k < n; ++k) A(j, k) += acc * E(k);
        }
        for (std::ptrdiff_t k = l; k < n; ++k) A(i, k) *= scale;
      }
    }
    anorm = std::max(anorm, std::abs(W(i)) + std::abs(E(i)));
  }

  // Accumulate right-hand transformations into V.
  for (std::ptrdiff_t i = n - 1; i >= 0; --i) {
    if (i < n - 1) {
      if (g != T(0)) {
        for (std::ptrdiff_t j = l; j < n; ++j) V(j, i) = (A(i, j) / A(i, l)) / g;
        for (std::ptrdiff_t j = l; j < n; ++j) {
          T acc = 0;
          for (std::ptrdiff_t k = l; k < n; ++k) acc += A(i, k) * V(k, j);
          for (std::ptrdiff_t k = l; k < n; ++k) V(k, j) += acc * V(k, i);
        }
      }
      for (std::ptrdiff_t j = l; j < n; ++j) V(i, j) = V(j, i) = 0;
    }
    V(i, i) = 1;
    g = E(i);
    l = i;
  }

  // Accumulate left-hand transformations in place.
  for (std::ptrdiff_t i = std::min(m, n) - 1; i >= 0; --i) {
    l = i + 1;
    g = W(i);
    for (std::ptrdiff_t j = l; j < n; ++j) A(i, j) = 0;
    if (g != T(0)) {
      g = T(1) / g;
      for (std::ptrdiff_t j = l; j < n; ++j) {
        T acc = 0;
        for (std::ptrdiff_t k = l; k < m; ++k) acc += A(k, i) * A(k, j);
        const T f = (acc / A(i, i)) * g;
        for (std::ptrdiff_t k = i; k < m; ++k) A(k, j) += f * A(k, i);
      }
      for (std::ptrdiff_t j = i; j < m; ++j) A(j, i) *= g;
    } else {
      for (std::ptrdiff_t j = i; j < m; ++j) A(j, i) = 0;
    }
    A(i, i) += 1;
  }

  // Implicit-shift QR on the bidiagonal.
  for (std::ptrdiff_t k = n - 1; k >= 0; --k) {
    for (int its = 0;; ++its) {
      bool cancel = true;
      std::ptrdiff_t nm = 0;
      for (l = k; l >= 0; --l) {
        nm = l - 1;
        if (l == 0 || std::abs(E(l)) <= eps * anorm) {
          cancel = false;
          break;
        }
        if (std::abs(W(nm)) <= eps * anorm) break;
      }
      if (cancel) {
        // W(nm) is negligible: chase E(l) out with rotations from the left.
        T c = 0, s = 1;
        for (std::ptrdiff_t i = l; i <= k; ++i) {
          const T f = s * E(i);
          E(i) = c * E(i);
          if (std::abs(f) <= eps * anorm) break;
          g = W(i);
          T h = hypot2(f, g);
          W(i) = h;
          h = T(1) / h;
          c = g * h;
          s = -f * h;
          for (std::ptrdiff_t j = 0; j < m; ++j) {
            const T y = A(j, nm);
            const T z = A(j, i);
            A(j, nm) = y * c + z * s;
            A(j, i) = z * c - y * s;
          }
        }
      }
      T z = W(k);
      if (l == k) {
        if (z < T(0)) {
          W(k) = -z;
          for (std::ptrdiff_t j = 0; j < n; ++j) V(j, k) = -V(j, k);
        }
        break;
      }
      if (its >= max_iterations) {
        throw ConvergenceError("golub_kahan_svd: no convergence after " +
                               std::to_string(max_iterations) + " QR iterations");
      }
      // Wilkinson-style shift from the trailing 2x2.
      T x = W(l);
      nm = k - 1;
      T y = W(nm);
      g = E(nm);
      T h = E(k);
      T f = ((y - z) * (y + z) + (g - h) * (g + h)) / (T(2) * h * y);
      g = hypot2(f, T(1));
      f = ((x - z) * (x + z) + h * ((y / (f + with_sign(g, f))) - h)) / x;
      T c = 1, s = 1;
      for (std::ptrdiff_t j = l; j <= nm; ++j) {
        const std::ptrdiff_t i = j + 1;
        g = E(i);
        y = W(i);
        h = s * g;
        g = c * g;
        z = hypot2(f, h);
        E(j) = z;
        c = f / z;
        s = h / z;
        f = x * c + g * s;
        g = g * c - x * s;
        h = y * s;
        y *= c;
        for (std::ptrdiff_t jj = 0; jj < n; ++jj) {
          const T vx = V(jj, j);
          const T vz = V(jj, i);
          V(jj, j) = vx * c + vz * s;
          V(jj, i) = vz * c - vx * s;
        }
        z = hypot2(f, h);
        W(j) = z;
        if (z != T(0)) {
          z = T(1) / z;
          c = f * z;
          s = h * z;
        }
        f = c * g + s * y;
        x = c * y - s * g;
        for (std::ptrdiff_t jj = 0; jj < m; ++jj) {
          const T uy = A(jj, j);
          const T uz = A(jj, i);
          A(jj, j) = uy * c + uz * s;
          A(jj, i) = uz * c - uy * s;
        }
      }
      E(l) = 0;
      E(k) = f;
      W(k) = x;
    }
  }
}

// One-sided (Hestenes) Jacobi on a tall matrix. On return `a` holds U*diag(w).
template <std::floating_point T>
void jacobi_tall(BasicMatrix<T>& a, std::vector<T>& w, BasicMatrix<T>& v, int max_sweeps) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  const T tol = std::numeric_limits<T>::epsilon() * T(m);
  v = BasicMatrix<T>::identity(n);
  bool converged = n < 2;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        T alpha = 0, beta = 0, gamma = 0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += a(i, p) * a(i, p);
          beta += a(i, q) * a(i, q);
          gamma += a(i, p) * a(i, q);
        }
        if (gamma == T(0) || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        converged = false;
        const T zeta = (beta - alpha) / (T(2) * gamma);
        const T t = with_sign(T(1), zeta) / (std::abs(zeta) + std::sqrt(T(1) + zeta * zeta));
        const T c = T(1) / std::sqrt(T(1) + t * t);
        const T s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const T x = a(i, p), y = a(i, q);
          a(i, p) = c * x - s * y;
          a(i, q) = s * x + c * y;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const T x = v(i, p), y = v(i, q);
          v(i, p) = c * x - s * y;
          v(i, q) = s * x + c * y;
        }
      }
    }
  }
  if (!converged) {
    throw ConvergenceError("jacobi_svd: no convergence after " + std::to_string(max_sweeps) +
                           " sweeps");
  }
  w.assign(n, T(0));
  for (std::size_t j = 0; j < n; ++j) {
    T s = 0;
    for (std::size_t i = 0; i < m; ++i) s += a(i, j) * a(i, j);
    w[j] = std::sqrt(s);
    if (w[j] != T(0))
      for (std::size_t i = 0; i < m; ++i) a(i, j) /= w[j];
  }
}

}  // namespace detail

/// Thin SVD with p = min(rows, cols) triples, sorted descending, no truncation.
template <std::floating_point T>
BasicSvd<T> thin_svd(const BasicMatrix<T>& a, SvdMethod method = SvdMethod::GolubKahan,
                     int max_iterations = 75) {
  if (!all_finite(a)) throw NonFiniteError("svd: input " + a.shape_string() + " has non-finite entries");
  const bool wide = a.rows() < a.cols();
  BasicMatrix<T> work = wide ? transpose(a) : a;
  BasicSvd<T> f;
  if (work.cols() == 0) {
    f.u = BasicMatrix<T>(a.rows(), 0);
    f.v = BasicMatrix<T>(a.cols(), 0);
    return f;
  }
  if (method == SvdMethod::GolubKahan) {
    detail::golub_kahan_tall(work, f.sigma, f.v, max_iterations);
  } else {
    detail::jacobi_tall(work, f.sigma, f.v, std::max(max_iterations, 30));
  }
  f.u = std::move(work);
  if (wide) std::swap(f.u, f.v);
  detail::sort_descending(f);
  return f;
}

/// Compact SVD: drops singular values below `rank_tol * sigma_max` and fixes
/// signs so the largest-magnitude entry of each u column is nonnegative.
template <std::floating_point T>
BasicSvd<T> compact_svd(const BasicMatrix<T>& a, const SvdOptions& opts = {}) {
  if (a.empty()) throw DimensionError("compact_svd: empty matrix " + a.shape_string());
  BasicSvd<T> f = thin_svd(a, opts.method, opts.max_iterations);
  const T smax = f.sigma.empty() ? T(0) : f.sigma.front();
  std::size_t r = 0;
  while (r < f.sigma.size() && f.sigma[r] > T(0) && f.sigma[r] >= T(opts.rank_tol) * smax) ++r;
  BasicSvd<T> out{take_cols(f.u, 0, r), std::vector<T>(f.sigma.begin(), f.sigma.begin() + r),
                  take_cols(f.v, 0, r)};
  for (std::size_t j = 0; j < r; ++j) {
    std::size_t arg = 0;
    T best = -1;
    for (std::size_t i = 0; i < out.u.rows(); ++i) {
      if (std::abs(out.u(i, j)) > best) {
        best = std::abs(out.u(i, j));
        arg = i;
      }
    }
    if (out.u(arg, j) < T(0)) {
      for (std::size_t i = 0; i < out.u.rows(); ++i) out.u(i, j) = -out.u(i, j);
      for (std::size_t i = 0; i < out.v.rows(); ++i) out.v(i, j) = -out.v(i, j);
    }
  }
  return out;
}

template <std::floating_point T>
BasicSvd<T> compact_svd(const BasicMatrix<T>& a, double rank_tol) {
  SvdOptions o;
  o.rank_tol = rank_tol;
  return compact_svd(a, o);
}

/// u * diag(sigma) * vᵀ using the leading `k` triples (all when k exceeds rank).
template <std::floating_point T>
BasicMatrix<T> reconstruct(const BasicSvd<T>& f, std::size_t k = static_cast<std::size_t>(-1)) {
  const std::size_t r = std::min(k, f.rank());
  BasicMatrix<T> out(f.u.rows(), f.v.rows());
  for (std::size_t t = 0; t < r; ++t) {
    const T s = f.sigma[t];
    for (std::size_t i = 0; i < out.rows(); ++i) {
      const T ui = f.u(i, t) * s;
      if (ui == T(0)) continue;
      auto oi = out.row(i);
      for (std::size_t j = 0; j < out.cols(); ++j) oi[j] += ui * f.v(j, t);
    }
  }
  return out;
}

/// Best rank-min(k, rank(a)) approximation in Frobenius norm.
template <std::floating_point T>
BasicMatrix<T> truncated_svd(const BasicMatrix<T>& a, std::size_t k, const SvdOptions& opts = {}) {
  if (k == 0) throw DimensionError("truncated_svd: k must be positive");
  return reconstruct(compact_svd(a, opts), k);
}

}  // namespace lsketch
