#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "lsketch/errors.hpp"
#include "lsketch/matrix.hpp"
#include "lsketch/scw.hpp"
#include "lsketch/svd.hpp"

namespace lsketch {

struct LossGrad {
  double loss = 0.0;
  Matrix grad_s;
};

struct GradOptions {
  double degeneracy_tol = 1e-6;  // relative gap sigma_k - sigma_{k+1} of A V
  SvdOptions svd;
};

/// Training loss ‖A − SCW(A, S)‖_F (unsquared).
inline double scw_loss(const Matrix& a, const Matrix& s, std::size_t k, const SvdOptions& opts = {}) {
  return frobenius_norm(a - scw(a, s, k, opts).approx);
}

/// Loss and its gradient with respect to S.
///
/// SCW's output is [A P]_k with P = V Vᵀ the projector onto rowspace(S A), so
///   L² = ‖A‖² − Σ_{i≤k} σ_i(A P)²
/// and with S A = U Σ Vᵀ, A V = Y Λ Zᵀ:
///   ∂L/∂S = −(1/L) · U Σ⁻¹ · Z_k Λ_k Y_kᵀ A (I − P) · Aᵀ.
/// Only the gap at index k of A V enters; ties inside the leading k are harmless.
inline LossGrad scw_loss_grad(const Matrix& a, const Matrix& s, std::size_t k, const GradOptions& opts = {}) {
  if (k == 0) throw DimensionError("scw_loss_grad: k must be positive");
  if (s.cols() != a.rows()) {
    throw DimensionError("scw_loss_grad: sketch " + s.shape_string() + " does not match data " +
                         a.shape_string());
  }
  LossGrad out{0.0, Matrix(s.rows(), s.cols())};
  const CompactSvd sa = compact_svd(matmul(s, a), opts.svd);
  if (sa.rank() == 0) {
    // Empty row space: SCW returns 0 and the gradient is taken as 0.
    out.loss = frobenius_norm(a);
    return out;
  }
  const CompactSvd av = compact_svd(matmul(a, sa.v), opts.svd);
  const std::size_t kk = std::min(k, av.rank());
  if (av.rank() > k) {
    const double gap = av.sigma[k - 1] - av.sigma[k];
    if (gap <= opts.degeneracy_tol * av.sigma.front()) {
      throw DegenerateSpectrum("scw_loss_grad: singular values " + std::to_string(k) + " and " +
                               std::to_string(k + 1) + " of A V are not separated");
    }
  }
  const Matrix zk = take_cols(av.v, 0, kk);
  const Matrix yk = take_cols(av.u, 0, kk);
  const std::vector<double> lam(av.sigma.begin(), av.sigma.begin() + kk);

  const Matrix approx = reconstruct(BasicSvd<double>{yk, lam, matmul(sa.v, zk)});
  out.loss = frobenius_norm(a - approx);
  if (out.loss <= 1e-13 * frobenius_norm(a)) return out;  // at the minimum

  // X = Z_k Λ_k Y_kᵀ A   (r x d)
  Matrix yta = matmul_tn(yk, a);
  for (std::size_t i = 0; i < kk; ++i)
    for (double& x : yta.row(i)) x *= lam[i];
  Matrix x = matmul(zk, yta);
  // X (I − P) = X − (X V) Vᵀ
  x -= matmul_nt(matmul(x, sa.v), sa.v);
  // Σ⁻¹ X (I − P) Aᵀ   (r x n)
  Matrix q = matmul_nt(x, a);
  for (std::size_t i = 0; i < sa.rank(); ++i)
    for (double& v : q.row(i)) v /= sa.sigma[i];
  out.grad_s = matmul(sa.u, q);
  out.grad_s *= -1.0 / out.loss;
  if (!all_finite(out.grad_s)) throw NonFiniteError("scw_loss_grad: gradient has non-finite entries");
  return out;
}

/// Central finite-difference gradient of f at x, entry by entry.
inline Matrix finite_difference_grad(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                     double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  auto pd = probe.data();
  auto gd = g.data();
  for (std::size_t i = 0; i < pd.size(); ++i) {
    const double orig = pd[i];
    pd[i] = orig + h;
    const double fp = f(probe);
    pd[i] = orig - h;
    const double fm = f(probe);
    pd[i] = orig;
    gd[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Loss and finite-difference gradient; the slow reference path.
inline LossGrad scw_loss_grad_fd(const Matrix& a, const Matrix& s, std::size_t k, double h = 1e-5,
                                 const SvdOptions& opts = {}) {
  auto f = [&](const Matrix& probe) { return scw_loss(a, probe, k, opts); };
  return {f(s), finite_difference_grad(f, s, h)};
}

/// ∂L/∂D for S = D ⊙ S_base with penalty λ Σ D_ij (D ≥ 0, subgradient +λ).
inline Matrix chain_to_mask(const Matrix& grad_s, const Matrix& s_base, const Matrix& d, double lambda) {
  grad_s.require_same_shape(s_base, "chain_to_mask");
  grad_s.require_same_shape(d, "chain_to_mask");
  Matrix g = hadamard(grad_s, s_base);
  for (double& x : g.data()) x += lambda;
  return g;
}

struct GaussianGrad {
  Matrix grad_mu;
  Matrix grad_sigma_var;
};

/// Reparameterized gradients for S = Z ⊙ sqrt(Σ_var) + μ.
/// d sqrt(v)/dv is taken as 0 at v = 0.
inline GaussianGrad chain_to_gaussian(const Matrix& grad_s, const Matrix& z, const Matrix& sigma_var) {
  grad_s.require_same_shape(z, "chain_to_gaussian");
  grad_s.require_same_shape(sigma_var, "chain_to_gaussian");
  GaussianGrad g{grad_s, Matrix(grad_s.rows(), grad_s.cols())};
  auto gs = grad_s.data();
  auto zd = z.data();
  auto vd = sigma_var.data();
  auto out = g.grad_sigma_var.data();
  for (std::size_t i = 0; i < gs.size(); ++i) {
    if (vd[i] < 0.0) throw Error("chain_to_gaussian: negative variance");
    out[i] = vd[i] > 0.0 ? gs[i] * zd[i] / (2.0 * std::sqrt(vd[i])) : 0.0;
  }
  return g;
}

}  // namespace lsketch
