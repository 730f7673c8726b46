#pragma once

#include "digs/csv.hpp"
#include "digs/graph.hpp"
#include "digs/rng.hpp"

#include <Eigen/Eigenvalues>

#include <filesystem>
#include <string>

namespace digs {

/// The m smallest eigenpairs of a symmetric normalized Laplacian.
struct SpectralBasis {
  VectorXd lambda;  // ascending, size m
  MatrixXd phi;     // n x m, orthonormal columns

  Index m() const { return lambda.size(); }
  Index n() const { return phi.rows(); }
};

struct EigsOptions {
  double tol = 1e-10;           // Ritz residual tolerance
  int max_iter = 1000;          // Lanczos iteration cap
  std::uint64_t seed = 1;       // start-vector seed
  Index dense_bound = 0;        // delegate to a dense solve when n <= bound
};

/// Flips eigenvector signs so the largest-magnitude entry of each column is
/// positive (first occurrence wins on ties). Makes output files reproducible.
inline void canonicalize_signs(MatrixXd& phi) {
  for (Index k = 0; k < phi.cols(); ++k) {
    Index best = 0;
    double mag = 0.0;
    for (Index i = 0; i < phi.rows(); ++i) {
      const double a = std::abs(phi(i, k));
      if (a > mag) {
        mag = a;
        best = i;
      }
    }
    if (phi(best, k) < 0.0) phi.col(k) = -phi.col(k);
  }
}

struct DenseDecomposition {
  VectorXd lambda;  // all n eigenvalues, ascending
  MatrixXd phi;     // n x n
};

/// Full dense symmetric eigendecomposition; the validation oracle for the
/// iterative solver. Refuses operators above the bound.
inline DenseDecomposition dense_eigen_oracle(const LinearOperator& op, Index bound = 2000) {
  if (!op.symmetric) throw std::invalid_argument("dense_eigen_oracle: operator not symmetric");
  MatrixXd dense = op.dense(bound);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(dense);
  if (es.info() != Eigen::Success) throw std::runtime_error("dense_eigen_oracle: solver failed");
  DenseDecomposition d{es.eigenvalues(), es.eigenvectors()};
  canonicalize_signs(d.phi);
  return d;
}

namespace detail {

inline VectorXd random_unit_orthogonal(SplitMix64& rng, const MatrixXd& v, Index cols, Index n) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    VectorXd x(n);
    for (Index i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);
    for (int pass = 0; pass < 2 && cols > 0; ++pass)
      x -= v.leftCols(cols) * (v.leftCols(cols).transpose() * x);
    const double nrm = x.norm();
    if (nrm > 1e-8) return x / nrm;
  }
  throw std::runtime_error("lanczos: failed to draw an orthogonal start vector");
}

/// Lanczos with full reorthogonalization on the similarity companion
/// S = I - L (D^{-1/2} W D^{-1/2} for graphs, Theta for hypergraphs),
/// targeting the largest eigenvalues mu of S; the smallest eigenvalues of L
/// are 1 - mu. The Ritz residual |beta_k * y_last| bounds ||S z - mu z||,
/// which equals the residual in L exactly.
inline SpectralBasis lanczos_smallest(const LinearOperator& op, Index m, const EigsOptions& opt) {
  const Index n = op.n;
  const Index max_j = std::min<Index>(n, opt.max_iter);
  MatrixXd v(n, max_j + 1);
  VectorXd alpha(max_j), beta(max_j);
  SplitMix64 rng(opt.seed);
  v.col(0) = random_unit_orthogonal(rng, v, 0, n);

  VectorXd best_residuals;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es;

  for (Index j = 0; j < max_j; ++j) {
    VectorXd w = op.companion(v.col(j));
    if (j > 0) w -= beta[j - 1] * v.col(j - 1);
    alpha[j] = v.col(j).dot(w);
    w -= alpha[j] * v.col(j);
    // full reorthogonalization, two classical Gram-Schmidt passes
    for (int pass = 0; pass < 2; ++pass) {
      VectorXd h = v.leftCols(j + 1).transpose() * w;
      w -= v.leftCols(j + 1) * h;
    }
    const double b = w.norm();
    const Index k = j + 1;  // current Krylov dimension
    const double scale = std::max(1.0, alpha.head(k).cwiseAbs().maxCoeff());
    const bool exhausted = (b <= 1e-13 * scale);
    const bool last = (k == max_j) || (k == n);

    if (k >= m && (exhausted || last || k % 4 == 0)) {
      MatrixXd t = MatrixXd::Zero(k, k);
      t.diagonal() = alpha.head(k);
      for (Index r = 0; r + 1 < k; ++r) t(r, r + 1) = t(r + 1, r) = beta[r];
      es.compute(t);
      // largest m Ritz values of S sit at the top of the ascending spectrum
      VectorXd residuals(m);
      for (Index s = 0; s < m; ++s)
        residuals[s] = std::abs(b * es.eigenvectors()(k - 1, k - 1 - s));
      best_residuals = residuals;
      const bool converged = (residuals.array() <= opt.tol).all();
      if (converged || ((exhausted || last) && k >= n)) {
        SpectralBasis basis;
        basis.lambda.resize(m);
        basis.phi.resize(n, m);
        for (Index s = 0; s < m; ++s) {
          basis.lambda[s] = std::max(0.0, 1.0 - es.eigenvalues()[k - 1 - s]);
          basis.phi.col(s) = v.leftCols(k) * es.eigenvectors().col(k - 1 - s);
        }
        canonicalize_signs(basis.phi);
        return basis;
      }
      if (last && !exhausted) break;  // iteration cap hit
    }
    if (last) break;
    if (exhausted) {
      // invariant subspace found early: restart with a fresh direction
      beta[j] = 0.0;
      v.col(j + 1) = random_unit_orthogonal(rng, v, k, n);
    } else {
      beta[j] = b;
      v.col(j + 1) = w / b;
    }
  }

  std::string msg = "lanczos: no convergence within " + std::to_string(max_j) +
                    " iterations; best residuals:";
  for (Index s = 0; s < best_residuals.size(); ++s)
    msg += " " + format_double(best_residuals[s]);
  throw std::runtime_error(msg);
}

}  // namespace detail

/// Computes the m smallest eigenpairs of a symmetric (hyper)graph Laplacian.
/// Delegates to the dense oracle for n <= opts.dense_bound, otherwise runs the
/// Lanczos iteration on the similarity companion. Deterministic under a fixed
/// seed; eigenvector signs are canonicalized.
inline SpectralBasis smallest_eigenpairs(const LinearOperator& op, Index m,
                                         const EigsOptions& opts = {}) {
  if (!op.symmetric) throw std::invalid_argument("smallest_eigenpairs: operator not symmetric");
  if (m < 1 || m > op.n)
    throw std::invalid_argument("smallest_eigenpairs: need 1 <= m <= n, got m=" +
                                std::to_string(m) + " n=" + std::to_string(op.n));
  if (opts.max_iter < m)
    throw std::invalid_argument("smallest_eigenpairs: max_iter must be at least m");
  if (op.n <= opts.dense_bound) {
    DenseDecomposition d = dense_eigen_oracle(op, opts.dense_bound);
    SpectralBasis basis;
    basis.lambda = d.lambda.head(m).cwiseMax(0.0);
    basis.phi = d.phi.leftCols(m);
    return basis;
  }
  return detail::lanczos_smallest(op, m, opts);
}

/// Basis cache on disk: <prefix>.lambda.csv and <prefix>.phi.csv.
/// Values are written with round-trip precision, so a reloaded basis is
/// bit-identical to the computed one.
inline void save_basis(const std::filesystem::path& prefix, const SpectralBasis& basis) {
  write_matrix_csv(prefix.string() + ".lambda.csv", basis.lambda);
  write_matrix_csv(prefix.string() + ".phi.csv", basis.phi);
}

inline bool basis_cached(const std::filesystem::path& prefix) {
  return std::filesystem::exists(prefix.string() + ".lambda.csv") &&
         std::filesystem::exists(prefix.string() + ".phi.csv");
}

inline SpectralBasis load_basis(const std::filesystem::path& prefix) {
  SpectralBasis basis;
  MatrixXd lam = read_matrix_csv(prefix.string() + ".lambda.csv");
  if (lam.cols() != 1) throw std::runtime_error("load_basis: eigenvalue file must have one column");
  basis.lambda = lam.col(0);
  basis.phi = read_matrix_csv(prefix.string() + ".phi.csv");
  if (basis.phi.cols() != basis.lambda.size())
    throw std::runtime_error("load_basis: eigenvector/eigenvalue count mismatch");
  return basis;
}

}  // namespace digs
