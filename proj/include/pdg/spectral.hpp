#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "pdg/common.hpp"
#include "pdg/graph.hpp"
#include "pdg/laplacian.hpp"
#include "pdg/rng.hpp"

namespace pdg {

/// Flips a vector so that its entry of largest absolute value is positive.
/// Ties (within a small relative tolerance, so exact symmetries survive
/// roundoff) go to the lowest index. Idempotent.
inline void sign_fix(Eigen::Ref<Eigen::VectorXd> v) {
  const double max_abs = v.cwiseAbs().maxCoeff();
  if (max_abs == 0.0) return;
  const double cutoff = max_abs * (1.0 - 1e-9);
  for (int i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) >= cutoff) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

enum class EigMode { dense, iterative };

/// Eigendecomposition of the symmetric member L^(1/2,gamma). Eigenvalues are
/// ascending starting from the trivial 0; eigvecs_sym holds the matching
/// orthonormal, sign-fixed columns. k counts the non-trivial pairs
/// (k = n-1 in dense mode).
struct SpectralDecomposition {
  LaplacianParams params;       ///< alpha fixed to 1/2 here
  Eigen::VectorXd eigenvalues;  ///< size k+1
  Eigen::MatrixXd eigvecs_sym;  ///< n x (k+1)
  DiagGamma dgamma;
  int k = 0;
  bool degenerate_lambda1 = false;  ///< gap between lambda^(1) and lambda^(2) < 1e-9
};

namespace detail {

/// Applies L^(1/2,gamma) = gamma * Dg^{-1/2} L Dg^{-1/2}.
struct SymLaplacianApply {
  const Graph* g;
  double gamma;
  Eigen::VectorXd dinv_sqrt;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = dinv_sqrt.cwiseProduct(x);
    y = CombinatorialLaplacian(*g).apply(y);
    return gamma * dinv_sqrt.cwiseProduct(y);
  }
};

inline SpectralDecomposition eig_dense(const Graph& g, double gamma) {
  const int n = g.num_nodes();
  if (n > kDenseLimit)
    throw UsageError("dense eigendecomposition above the dense limit; use iterative mode");
  const LaplacianParams p(0.5, gamma);
  SpectralDecomposition d;
  d.params = p;
  d.dgamma = diag_gamma(g, p);
  const Eigen::MatrixXd m = ParamLaplacian(g, p).dense();
  // Symmetrize away roundoff before handing to the solver.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success)
    throw NumericError("dense eigensolver failed to converge");
  d.eigenvalues = es.eigenvalues();
  d.eigvecs_sym = es.eigenvectors();
  for (int c = 0; c < d.eigvecs_sym.cols(); ++c)
    sign_fix(d.eigvecs_sym.col(c));
  d.k = n - 1;
  if (n >= 3)
    d.degenerate_lambda1 = (d.eigenvalues[2] - d.eigenvalues[1]) < 1e-9;
  return d;
}

/// Lanczos with full reorthogonalization on 2I - L^(1/2,gamma), exploiting
/// the known [0, 2] spectrum so the wanted pairs become extremal. The exact
/// null vector Dg^{1/2} 1 is deflated analytically.
inline SpectralDecomposition eig_lanczos(const Graph& g, double gamma, int k) {
  const int n = g.num_nodes();
  if (k < 1 || k > n - 1)
    throw UsageError("iterative mode requires 1 <= k <= n-1");
  const LaplacianParams p(0.5, gamma);
  SpectralDecomposition d;
  d.params = p;
  d.dgamma = diag_gamma(g, p);

  SymLaplacianApply op{&g, gamma, d.dgamma.pow(-0.5)};

  Eigen::VectorXd null_vec = d.dgamma.pow(0.5);
  null_vec.normalize();

  // One extra pair beyond the request resolves the lambda^(1) degeneracy flag.
  const int want = std::min(k + 1, n - 1);
  const int cap = n - 1;  // dimension of the deflated invariant subspace
  const auto max_steps =
      static_cast<int>(std::min<std::int64_t>(10LL * n, cap));
  const double tol = 1e-8;

  Rng rng(0x1a2c05u);  // fixed seed: results are deterministic by contract
  auto random_direction = [&]() {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform() - 0.5;
    return v;
  };

  std::vector<Eigen::VectorXd> basis;
  std::vector<double> diag, offdiag;

  auto reorthogonalize = [&](Eigen::VectorXd& w) {
    for (int pass = 0; pass < 2; ++pass) {
      w -= null_vec.dot(w) * null_vec;
      for (const auto& b : basis) w -= b.dot(w) * b;
    }
  };

  {
    Eigen::VectorXd v = random_direction();
    reorthogonalize(v);
    v.normalize();
    basis.push_back(v);
  }

  Eigen::VectorXd theta;
  Eigen::MatrixXd ritz_coeff;
  int m = 0;
  int last_inject = -want;  // steps completed when a fresh block was injected
  bool exhausted = false;
  bool converged = false;

  while (true) {
    Eigen::VectorXd w = 2.0 * basis[m] - op(basis[m]);
    const double a = basis[m].dot(w);
    diag.push_back(a);
    w -= a * basis[m];
    if (m > 0) w -= offdiag[m - 1] * basis[m - 1];
    reorthogonalize(w);
    const double b = w.norm();
    ++m;

    if (m >= cap) {
      exhausted = true;  // full deflated space spanned: tridiagonal is exact
    } else if (b < 1e-13) {
      // Invariant-subspace breakdown: start a decoupled block from a fresh
      // direction (zero off-diagonal keeps T symmetric tridiagonal).
      Eigen::VectorXd fresh = random_direction();
      reorthogonalize(fresh);
      const double norm = fresh.norm();
      if (norm < 1e-13) {
        exhausted = true;
      } else {
        offdiag.push_back(0.0);
        basis.push_back(fresh / norm);
        last_inject = m;
      }
    } else {
      offdiag.push_back(b);
      basis.push_back(w / b);
    }

    const bool may_check = exhausted || (m >= want && m >= last_inject + want);
    if (may_check) {
      Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
      for (int i = 0; i < m; ++i) {
        t(i, i) = diag[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = offdiag[i];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
      theta = es.eigenvalues();  // ascending
      ritz_coeff = es.eigenvectors();
      if (exhausted) {
        converged = true;
        break;
      }
      // Wanted pairs are the `want` largest of 2I - L^(1/2,gamma); the Ritz
      // residual is |beta_m * s_m| for each.
      const double beta = offdiag[m - 1];
      bool ok = true;
      for (int i = 0; i < want; ++i) {
        const int col = m - 1 - i;
        if (std::abs(beta * ritz_coeff(m - 1, col)) > tol) {
          ok = false;
          break;
        }
      }
      if (ok) {
        converged = true;
        break;
      }
    }
    if (m >= max_steps) break;
  }

  if (!converged || theta.size() < want)
    throw NumericError("Lanczos failed to converge within the step budget");

  d.eigenvalues.resize(k + 1);
  d.eigvecs_sym.resize(n, k + 1);
  d.eigenvalues[0] = 0.0;
  d.eigvecs_sym.col(0) = null_vec;
  Eigen::VectorXd lambda_all(want);
  for (int i = 0; i < want; ++i)
    lambda_all[i] = 2.0 - theta[theta.size() - 1 - i];  // ascending in lambda
  for (int i = 0; i < k; ++i) {
    const int col = static_cast<int>(theta.size()) - 1 - i;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    for (int r = 0; r < m; ++r) y += ritz_coeff(r, col) * basis[r];
    y.normalize();
    sign_fix(y);
    d.eigenvalues[i + 1] = std::max(0.0, lambda_all[i]);
    d.eigvecs_sym.col(i + 1) = y;
  }
  d.k = k;
  d.degenerate_lambda1 =
      (want >= 2) ? (lambda_all[1] - lambda_all[0]) < 1e-9 : false;
  return d;
}

}  // namespace detail

/// Eigendecomposition of L^(1/2,gamma) for a connected graph. Dense mode
/// computes the full spectrum and serves as the oracle; iterative mode runs
/// deflated Lanczos for the k smallest non-trivial pairs.
inline SpectralDecomposition eig_sym(const Graph& g, double gamma, int k = 0,
                                     EigMode mode = EigMode::dense) {
  if (!is_connected(g))
    throw DataError("eigendecomposition requires a connected graph "
                    "(route through largest_component first)");
  if (mode == EigMode::dense) return detail::eig_dense(g, gamma);
  return detail::eig_lanczos(g, gamma, k);
}

/// Eigenvectors of L^(alpha,gamma): the columns of Dg^{1/2-alpha} U, rescaled
/// to unit Euclidean norm (the distance convention used throughout) with the
/// sign convention re-applied.
struct EigvecView {
  double alpha = 0.5;
  Eigen::VectorXd eigenvalues;  ///< shared with the decomposition
  Eigen::MatrixXd vectors;      ///< n x (k+1), unit columns, sign-fixed
  bool degenerate_lambda1 = false;

  int num_nodes() const { return static_cast<int>(vectors.rows()); }
  bool full() const { return vectors.cols() == vectors.rows(); }
};

inline EigvecView eigvec_view(const SpectralDecomposition& d, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw DataError("alpha must lie in [0, 1]");
  EigvecView view;
  view.alpha = alpha;
  view.eigenvalues = d.eigenvalues;
  view.degenerate_lambda1 = d.degenerate_lambda1;
  const Eigen::VectorXd scale = d.dgamma.pow(0.5 - alpha);
  view.vectors.resize(d.eigvecs_sym.rows(), d.eigvecs_sym.cols());
  for (int c = 0; c < d.eigvecs_sym.cols(); ++c) {
    Eigen::VectorXd col = scale.cwiseProduct(d.eigvecs_sym.col(c));
    col.normalize();
    sign_fix(col);
    view.vectors.col(c) = col;
  }
  return view;
}

/// d_t(i,j) = sqrt(sum_{k>=1} e^{-2 t lambda_k} (phi_i^k - phi_j^k)^2).
/// Requires the full spectrum, since every non-trivial term enters the sum.
inline double diffusion_distance(const EigvecView& view, int i, int j, double t) {
  if (!view.full())
    throw UsageError("diffusion distance requires the full decomposition (dense mode)");
  if (!(t > 0.0)) throw UsageError("diffusion distance requires t > 0");
  double acc = 0.0;
  for (int c = 1; c < view.vectors.cols(); ++c) {
    const double diff = view.vectors(i, c) - view.vectors(j, c);
    acc += std::exp(-2.0 * t * view.eigenvalues[c]) * diff * diff;
  }
  return std::sqrt(acc);
}

struct SpectralDistance {
  double value = 0.0;
  bool degenerate_lambda1 = false;  ///< lambda^(1) nearly tied with lambda^(2)
};

/// d_s(i,j) = |phi_i^(1) - phi_j^(1)| on the sign-fixed first non-trivial
/// eigenvector. Carries a warning flag when lambda^(1) is near-degenerate,
/// since then the eigenvector is only a solver-dependent representative.
inline SpectralDistance spectral_distance(const EigvecView& view, int i, int j) {
  if (view.vectors.cols() < 2)
    throw UsageError("spectral distance requires the first non-trivial eigenvector");
  return {std::abs(view.vectors(i, 1) - view.vectors(j, 1)),
          view.degenerate_lambda1};
}

/// The order-preservation constant: with d_s(m,j) < d_s(i,j), every integer
/// t >= floor(C)+1 satisfies d_t(m,j) < d_t(i,j). Returns -infinity when the
/// k >= 2 terms tie exactly (the ordering then holds for all t > 0).
inline double order_constant(const EigvecView& view, int i, int j, int m) {
  if (!view.full())
    throw UsageError("order constant requires the full decomposition");
  const double ds_mj = spectral_distance(view, m, j).value;
  const double ds_ij = spectral_distance(view, i, j).value;
  if (!(ds_mj < ds_ij))
    throw UsageError("order constant requires d_s(m,j) < d_s(i,j) strictly");
  if (view.vectors.cols() < 3)
    return -std::numeric_limits<double>::infinity();  // no k >= 2 terms at all
  const double lam1 = view.eigenvalues[1];
  const double lam2 = view.eigenvalues[2];
  if (std::abs(lam1 - lam2) < 1e-12)
    throw NumericError("order constant undefined for degenerate lambda^(1) = lambda^(2)");

  const double num = ds_ij * ds_ij - ds_mj * ds_mj;
  double den = 0.0;
  for (int c = 2; c < view.vectors.cols(); ++c) {
    const double dmj = view.vectors(m, c) - view.vectors(j, c);
    const double dij = view.vectors(i, c) - view.vectors(j, c);
    den += std::abs(dmj * dmj - dij * dij);
  }
  if (den == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(num / den) / (2.0 * (lam1 - lam2));
}

struct MonotonicityReport {
  std::vector<double> gammas;
  Eigen::MatrixXd lambdas;  ///< one row per gamma, columns are lambda^(1..n-1)
  double min_forward_difference = 0.0;
  bool pass = false;
};

/// Tabulates every non-trivial eigenvalue across an ascending gamma grid and
/// checks strict growth (dense oracle).
inline MonotonicityReport verify_monotonicity(const Graph& g,
                                              const std::vector<double>& gammas) {
  if (gammas.size() < 2) throw UsageError("monotonicity needs at least two gammas");
  for (std::size_t i = 0; i + 1 < gammas.size(); ++i)
    if (!(gammas[i] < gammas[i + 1]))
      throw UsageError("gammas must be strictly increasing");

  const int n = g.num_nodes();
  MonotonicityReport rep;
  rep.gammas = gammas;
  rep.lambdas.resize(static_cast<int>(gammas.size()), n - 1);
  for (std::size_t r = 0; r < gammas.size(); ++r) {
    const auto d = eig_sym(g, gammas[r], 0, EigMode::dense);
    for (int i = 1; i < n; ++i) rep.lambdas(static_cast<int>(r), i - 1) = d.eigenvalues[i];
  }
  rep.min_forward_difference = std::numeric_limits<double>::infinity();
  for (int r = 0; r + 1 < rep.lambdas.rows(); ++r)
    rep.min_forward_difference =
        std::min(rep.min_forward_difference,
                 (rep.lambdas.row(r + 1) - rep.lambdas.row(r)).minCoeff());
  rep.pass = rep.min_forward_difference > 1e-12;
  return rep;
}

}  // namespace pdg
