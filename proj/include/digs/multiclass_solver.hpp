#pragma once

#include "digs/scalar_solver.hpp"

namespace digs {

/// Known vertices with class labels in {1..K}.
struct MulticlassFidelity {
  std::vector<Index> indices;
  std::vector<int> labels;
  double omega0 = 0.0;
  int k = 0;

  void validate(Index n) const {
    if (indices.size() != labels.size())
      throw std::invalid_argument("MulticlassFidelity: index/label count mismatch");
    if (k < 1) throw std::invalid_argument("MulticlassFidelity: K must be >= 1");
    if (omega0 < 0.0) throw std::invalid_argument("MulticlassFidelity: omega0 must be >= 0");
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (std::size_t t = 0; t < indices.size(); ++t) {
      const Index i = indices[t];
      if (i < 0 || i >= n) throw std::invalid_argument("MulticlassFidelity: index out of range");
      if (seen[static_cast<std::size_t>(i)])
        throw std::invalid_argument("MulticlassFidelity: duplicate index");
      seen[static_cast<std::size_t>(i)] = true;
      if (labels[t] < 1 || labels[t] > k)
        throw std::invalid_argument("MulticlassFidelity: label out of range");
    }
  }
};

/// Symmetric K x K interaction parameters; needs at least one positive
/// eigenvalue. The default choice I - 11^T couples all distinct components
/// equally with no self-interaction.
struct InteractionMatrix {
  MatrixXd t;

  static InteractionMatrix equal_interaction(Index k) {
    InteractionMatrix m;
    m.t = MatrixXd::Identity(k, k) - MatrixXd::Ones(k, k);
    return m;
  }

  void validate() const {
    if (t.rows() != t.cols()) throw std::invalid_argument("InteractionMatrix: not square");
    if ((t - t.transpose()).cwiseAbs().maxCoeff() > 0.0)
      throw std::invalid_argument("InteractionMatrix: not symmetric");
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(t);
    if (es.eigenvalues().maxCoeff() <= 0.0)
      throw std::invalid_argument("InteractionMatrix: needs a positive eigenvalue");
  }
};

/// Row-per-vertex class membership matrix; rows live on the Gibbs simplex
/// after projection.
struct SimplexState {
  MatrixXd u;  // n x K
  int t = 0;
};

/// Euclidean projection onto the Gibbs simplex by sort-and-threshold.
/// Feasible inputs (nonnegative, coordinates summing to exactly 1) pass
/// through unchanged, which makes the projection exactly idempotent; the
/// output sum is nudged onto 1.0 bit-exactly for the same reason.
inline VectorXd simplex_project(const VectorXd& v) {
  const Index k = v.size();
  if (k < 1) throw std::invalid_argument("simplex_project: empty vector");
  if ((v.array() >= 0.0).all() && v.sum() == 1.0) return v;

  std::vector<double> sorted(v.data(), v.data() + k);
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double cumsum = 0.0, mu = 0.0;
  Index rho = 0;
  for (Index j = 0; j < k; ++j) {
    cumsum += sorted[static_cast<std::size_t>(j)];
    const double cand = (1.0 - cumsum) / static_cast<double>(j + 1);
    if (sorted[static_cast<std::size_t>(j)] + cand > 0.0) {
      rho = j + 1;
      mu = cand;
    }
  }
  VectorXd out = (v.array() + mu).max(0.0);
  for (int pass = 0; pass < 8; ++pass) {
    const double gap = 1.0 - out.sum();
    if (gap == 0.0) break;
    Index big = 0;
    out.maxCoeff(&big);
    out[big] += gap;
  }
  return out;
}

inline void simplex_project_rows(MatrixXd& u) {
  for (Index i = 0; i < u.rows(); ++i) u.row(i) = simplex_project(u.row(i).transpose()).transpose();
}

/// Gradient-like matrix T(U) of the L1 multi-well potential, evaluated
/// literally as
///   T_ik = sum_l (1/2)(1 - 2 delta_kl) ||u_i - e_l||_1
///                 prod_{m != l} (1/4) ||u_i - e_m||_1^2 .
/// Pure-phase rows give a zero row.
inline MatrixXd multiclass_potential_gradient(const MatrixXd& ubar) {
  const Index n = ubar.rows(), k = ubar.cols();
  MatrixXd t = MatrixXd::Zero(n, k);
  VectorXd norms(k), quart(k);
  for (Index i = 0; i < n; ++i) {
    for (Index l = 0; l < k; ++l) {
      double s = 0.0;
      for (Index idx = 0; idx < k; ++idx) s += std::abs(ubar(i, idx) - (idx == l ? 1.0 : 0.0));
      norms[l] = s;
      quart[l] = 0.25 * s * s;
    }
    for (Index kk = 0; kk < k; ++kk) {
      double acc = 0.0;
      for (Index l = 0; l < k; ++l) {
        double prod = 1.0;
        for (Index m = 0; m < k; ++m)
          if (m != l) prod *= quart[m];
        acc += 0.5 * (l == kk ? -1.0 : 1.0) * norms[l] * prod;
      }
      t(i, kk) = acc;
    }
  }
  return t;
}

namespace detail {

/// omega .* (Uhat_fid - Ubar) rows as a full n x K matrix.
inline MatrixXd multiclass_fidelity_force(const MulticlassFidelity& fid, const MatrixXd& ubar) {
  MatrixXd d = MatrixXd::Zero(ubar.rows(), ubar.cols());
  for (std::size_t t = 0; t < fid.indices.size(); ++t) {
    const Index i = fid.indices[t];
    for (Index c = 0; c < ubar.cols(); ++c) {
      const double target = (c + 1 == fid.labels[t]) ? 1.0 : 0.0;
      d(i, c) = fid.omega0 * (target - ubar(i, c));
    }
  }
  return d;
}

}  // namespace detail

/// One smooth vector-valued step: diagonal spectral update
///   U_spec = B^{-1} [ (1+c tau) Ubar_spec - (tau/2 eps) Phi^T T(Ubar)
///                     + tau Phi^T (omega (Uhat - Ubar)) ]
/// with B = (1 + c tau) I + eps tau Lambda, followed by row-wise projection
/// onto the Gibbs simplex in vertex space. Requires c >= omega0 + 1/eps for
/// the splitting to be convex (callers flag, the step proceeds).
inline SimplexState step_multiclass_smooth(const SimplexState& state, const SpectralBasis& basis,
                                           const MulticlassFidelity& fid, const SolverConfig& cfg) {
  const double eps = cfg.epsilon, tau = cfg.tau, c = cfg.c;
  const MatrixXd& ubar = state.u;
  MatrixXd ubar_spec = basis.phi.transpose() * ubar;
  MatrixXd numer = (1.0 + c * tau) * ubar_spec -
                   (tau / (2.0 * eps)) * (basis.phi.transpose() * multiclass_potential_gradient(ubar)) +
                   tau * (basis.phi.transpose() * detail::multiclass_fidelity_force(fid, ubar));
  VectorXd b = (eps * tau * basis.lambda).array() + 1.0 + c * tau;
  SimplexState next;
  next.u = basis.phi * b.cwiseInverse().asDiagonal() * numer;
  simplex_project_rows(next.u);
  next.t = state.t + 1;
  return next;
}

namespace detail {

/// Per-component semi-smooth Newton solve of the vector-valued non-smooth
/// step with theta_nu(u) = (1/nu) min(0, u) and active set A = {u < 0}:
///   [ (c + 1/tau) I + eps Lambda + (1/nu) Phi^T chi_A Phi ] u_spec = rhs.
/// The right side is constant across Newton iterations.
inline VectorXd ssn_solve_component(const VectorXd& rhs_spec, const SpectralBasis& basis,
                                    const SolverConfig& cfg, double nu,
                                    const VectorXd& u_hat_init, int* newton_iters) {
  const double a0 = cfg.c + 1.0 / cfg.tau;
  const Index m = basis.m();
  VectorXd diag = (cfg.epsilon * basis.lambda).array() + a0;

  auto residual = [&](const VectorXd& u_hat, const VectorXd& u_vertex) {
    VectorXd penal = u_vertex.cwiseMin(0.0) / nu;
    return VectorXd(diag.cwiseProduct(u_hat) + basis.phi.transpose() * penal - rhs_spec);
  };

  VectorXd u_hat = u_hat_init;
  VectorXd u_vertex = basis.phi * u_hat;
  double r_cur = residual(u_hat, u_vertex).norm();
  const double stop = cfg.newton.eps_rel * r_cur + cfg.newton.eps_abs;

  for (int l = 0; l < cfg.newton.l_max; ++l) {
    std::vector<Index> active;
    for (Index i = 0; i < u_vertex.size(); ++i)
      if (u_vertex[i] < 0.0) active.push_back(i);
    MatrixXd g = MatrixXd::Zero(m, m);
    g.diagonal() = diag;
    if (!active.empty()) {
      MatrixXd phi_a(static_cast<Index>(active.size()), m);
      for (std::size_t r = 0; r < active.size(); ++r)
        phi_a.row(static_cast<Index>(r)) = basis.phi.row(active[r]);
      g.noalias() += (phi_a.transpose() * phi_a) / nu;
    }
    VectorXd full = solve_spd(g, rhs_spec, cfg.linear_solver);
    // full step first, damped only when the residual stalls (see scalar ssn)
    VectorXd cand = full;
    VectorXd cand_vertex = basis.phi * cand;
    double r_new = residual(cand, cand_vertex).norm();
    double s = 1.0;
    while (r_new > (1.0 - 1e-4 * s) * r_cur && r_new > stop && s > 1e-6) {
      s *= 0.5;
      cand = u_hat + s * (full - u_hat);
      cand_vertex = basis.phi * cand;
      r_new = residual(cand, cand_vertex).norm();
    }
    u_hat = cand;
    u_vertex = cand_vertex;
    r_cur = r_new;
    if (newton_iters) *newton_iters = l + 1;
    if (r_cur <= stop) return u_hat;
  }
  throw std::runtime_error("multiclass ssn: no convergence within l_max (residual " +
                           format_double(r_cur) + ")");
}

}  // namespace detail

/// One non-smooth vector-valued step at penalty nu: a semi-smooth Newton solve
/// per class component i with right side
///   (c + 1/tau) Ubar_spec_i + (1/eps) Phi^T (T Ubar^T)_i
///   + Phi^T [omega (Uhat_i - Ubar_i)],
/// where (T Ubar^T)_i = -sum_{j != i} ubar_j for the default interaction.
/// Components share the frozen Ubar, then all rows are projected onto the
/// simplex. Per-component Newton counts are appended to component_iters.
inline SimplexState step_multiclass_nonsmooth(const SimplexState& state, const SpectralBasis& basis,
                                              const MulticlassFidelity& fid,
                                              const SolverConfig& cfg, double nu,
                                              std::vector<int>* component_iters = nullptr,
                                              MatrixXd* warm_spec = nullptr) {
  const Index k = state.u.cols();
  const double a0 = cfg.c + 1.0 / cfg.tau;
  const MatrixXd& ubar = state.u;
  MatrixXd interaction =
      cfg.interaction.size() ? cfg.interaction : InteractionMatrix::equal_interaction(k).t;

  MatrixXd ubar_spec = basis.phi.transpose() * ubar;
  MatrixXd coupling = ubar * interaction.transpose();  // column i holds (T Ubar^T)_i
  MatrixXd force = detail::multiclass_fidelity_force(fid, ubar);
  MatrixXd u_spec(basis.m(), k);
  for (Index i = 0; i < k; ++i) {
    VectorXd rhs = a0 * ubar_spec.col(i) +
                   (basis.phi.transpose() * coupling.col(i)) / cfg.epsilon +
                   basis.phi.transpose() * force.col(i);
    VectorXd init = warm_spec && warm_spec->size() ? warm_spec->col(i) : ubar_spec.col(i);
    int iters = 0;
    try {
      u_spec.col(i) = detail::ssn_solve_component(rhs, basis, cfg, nu, init, &iters);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("component " + std::to_string(i + 1) + ": " + e.what());
    }
    if (component_iters) component_iters->push_back(iters);
  }
  if (warm_spec) *warm_spec = u_spec;
  SimplexState next;
  next.u = basis.phi * u_spec;
  simplex_project_rows(next.u);
  next.t = state.t + 1;
  return next;
}

/// Uniform(0,1) entries projected row-wise to the simplex, fidelity rows
/// overwritten with their pure phases. Bit-identical under a fixed seed.
inline SimplexState init_multiclass(Index n, Index k, const MulticlassFidelity& fid,
                                    std::uint64_t seed) {
  SplitMix64 rng(seed);
  SimplexState state;
  state.u.resize(n, k);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < k; ++c) state.u(i, c) = rng.uniform();
  simplex_project_rows(state.u);
  for (std::size_t t = 0; t < fid.indices.size(); ++t) {
    state.u.row(fid.indices[t]).setZero();
    state.u(fid.indices[t], fid.labels[t] - 1) = 1.0;
  }
  state.t = 0;
  return state;
}

/// Multiclass energy monitor: Ginzburg-Landau with the L1 product potential
/// plus the fidelity term. Uses the operator for the exact quadratic form when
/// given (post-projection states leave span(Phi)).
inline double multiclass_energy(const MatrixXd& u, const SpectralBasis& basis,
                                const MulticlassFidelity& fid, double eps,
                                const LinearOperator* op = nullptr) {
  double dirichlet = 0.0;
  if (op) {
    for (Index c = 0; c < u.cols(); ++c) dirichlet += u.col(c).dot(op->apply(u.col(c)));
  } else {
    MatrixXd u_spec = basis.phi.transpose() * u;
    for (Index c = 0; c < u.cols(); ++c)
      dirichlet += basis.lambda.dot(u_spec.col(c).cwiseProduct(u_spec.col(c)));
  }
  double well = 0.0;
  const Index k = u.cols();
  for (Index i = 0; i < u.rows(); ++i) {
    double prod = 1.0;
    for (Index l = 0; l < k; ++l) {
      double s = 0.0;
      for (Index idx = 0; idx < k; ++idx) s += std::abs(u(i, idx) - (idx == l ? 1.0 : 0.0));
      prod *= 0.25 * s * s;
    }
    well += 0.5 * prod;
  }
  double fidelity = 0.0;
  for (std::size_t t = 0; t < fid.indices.size(); ++t) {
    const Index i = fid.indices[t];
    double d2 = 0.0;
    for (Index c = 0; c < k; ++c) {
      const double target = (c + 1 == fid.labels[t]) ? 1.0 : 0.0;
      d2 += (target - u(i, c)) * (target - u(i, c));
    }
    fidelity += 0.5 * fid.omega0 * d2;
  }
  return 0.5 * eps * dirichlet + well / eps + fidelity;
}

/// Time loop with the relative-change stop on the Frobenius norm of U - Ubar.
/// Non-smooth mode runs the full penalty continuation per component inside
/// each step (components are decoupled given the frozen Ubar).
inline std::pair<SimplexState, Diagnostics> run_multiclass(const SimplexState& initial,
                                                           const SpectralBasis& basis,
                                                           const MulticlassFidelity& fid,
                                                           const SolverConfig& cfg,
                                                           const LinearOperator* op = nullptr) {
  cfg.validate();
  fid.validate(basis.n());
  SimplexState state = initial;
  const Index k = state.u.cols();
  Diagnostics diag;

  for (int t = 0; t < cfg.t_max; ++t) {
    const MatrixXd u_prev = state.u;
    StepDiag row;
    row.component_newton.assign(static_cast<std::size_t>(k), 0);
    if (cfg.potential == Potential::smooth) {
      state = step_multiclass_smooth(state, basis, fid, cfg);
    } else {
      MatrixXd warm = basis.phi.transpose() * state.u;
      SimplexState stage = state;
      for (double nu : cfg.nu_schedule) {
        std::vector<int> iters;
        stage = step_multiclass_nonsmooth(state, basis, fid, cfg, nu, &iters, &warm);
        for (Index c = 0; c < k; ++c) row.component_newton[static_cast<std::size_t>(c)] += iters[static_cast<std::size_t>(c)];
      }
      state = stage;
    }
    row.step = state.t;
    {
      Eigen::Map<const VectorXd> cur(state.u.data(), state.u.size());
      Eigen::Map<const VectorXd> prev(u_prev.data(), u_prev.size());
      row.rel_change = relative_change(cur, prev, cfg.stop_norm);
    }
    row.energy = multiclass_energy(state.u, basis, fid, cfg.epsilon, op);
    row.min_u = state.u.minCoeff();
    row.max_u = state.u.maxCoeff();
    for (int it : row.component_newton) row.newton_iters += it;
    diag.steps.push_back(row);
    if (row.rel_change <= cfg.eps_tol) {
      diag.converged = true;
      break;
    }
  }
  return {state, diag};
}

/// argmax per row; ties broken by the smallest class index.
inline std::vector<int> classify_multiclass(const SimplexState& state) {
  std::vector<int> labels(static_cast<std::size_t>(state.u.rows()));
  for (Index i = 0; i < state.u.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < state.u.cols(); ++c)
      if (state.u(i, c) > state.u(i, best)) best = c;
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best) + 1;
  }
  return labels;
}

}  // namespace digs
