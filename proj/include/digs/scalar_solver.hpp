#pragma once

#include "digs/solver_common.hpp"

#include <Eigen/Cholesky>

namespace digs {

/// Known vertices with target values in {-1, +1} and the fidelity strength
/// omega0. omega(x) is the indicator omega0 * chi_{indices}.
struct FidelitySet {
  std::vector<Index> indices;
  VectorXd values;
  double omega0 = 0.0;

  void validate(Index n) const {
    if (static_cast<Index>(indices.size()) != values.size())
      throw std::invalid_argument("FidelitySet: index/value count mismatch");
    if (omega0 < 0.0) throw std::invalid_argument("FidelitySet: omega0 must be >= 0");
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    for (std::size_t t = 0; t < indices.size(); ++t) {
      const Index i = indices[t];
      if (i < 0 || i >= n) throw std::invalid_argument("FidelitySet: index out of range");
      if (seen[static_cast<std::size_t>(i)])
        throw std::invalid_argument("FidelitySet: duplicate index " + std::to_string(i));
      seen[static_cast<std::size_t>(i)] = true;
      if (values[static_cast<Index>(t)] != 1.0 && values[static_cast<Index>(t)] != -1.0)
        throw std::invalid_argument("FidelitySet: values must be -1 or +1");
    }
  }
};

/// Phase state of the two-class evolution: vertex values u and their spectral
/// coefficients u_hat with u = Phi u_hat after the first step (the initial u
/// may carry an off-span residual that the projection discards).
struct ScalarState {
  VectorXd u;
  VectorXd u_hat;
  int t = 0;
};

/// psi'(u) = u^3 - u for the double well psi(u) = (1/4)(u^2-1)^2.
inline VectorXd smooth_potential_derivative(const VectorXd& u) {
  return u.array().cube().matrix() - u;
}

/// Moreau-Yosida penalty derivative
/// theta_nu(u) = (1/nu) max(0, u-1) + (1/nu) min(0, u+1).
inline VectorXd theta_nu(const VectorXd& u, double nu) {
  if (!(nu > 0.0)) throw std::invalid_argument("theta_nu: nu must be > 0");
  return (u.array() - 1.0).max(0.0).matrix() / nu + (u.array() + 1.0).min(0.0).matrix() / nu;
}

/// Active sets of the obstacle constraint; boundary values |u_i| = 1 are
/// inactive (strict inequalities).
struct ActiveSets {
  std::vector<Index> all, plus, minus;
};

inline ActiveSets active_sets(const VectorXd& u) {
  ActiveSets a;
  for (Index i = 0; i < u.size(); ++i) {
    if (u[i] > 1.0) {
      a.plus.push_back(i);
      a.all.push_back(i);
    } else if (u[i] < -1.0) {
      a.minus.push_back(i);
      a.all.push_back(i);
    }
  }
  return a;
}

namespace detail {

/// omega .* (f - ubar) as a full vector, zero off the fidelity set.
inline VectorXd fidelity_force(const FidelitySet& fid, const VectorXd& ubar, Index n) {
  VectorXd d = VectorXd::Zero(n);
  for (std::size_t t = 0; t < fid.indices.size(); ++t) {
    const Index i = fid.indices[t];
    d[i] = fid.omega0 * (fid.values[static_cast<Index>(t)] - ubar[i]);
  }
  return d;
}

/// Plain conjugate gradient on a small dense SPD system.
inline VectorXd cg_solve(const MatrixXd& a, const VectorXd& b) {
  VectorXd x = VectorXd::Zero(b.size());
  VectorXd r = b;
  VectorXd p = r;
  double rs = r.squaredNorm();
  const double tol2 = 1e-28 * std::max(1.0, b.squaredNorm());
  for (Index it = 0; it < 4 * b.size() && rs > tol2; ++it) {
    VectorXd ap = a * p;
    const double alpha = rs / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    const double rs_new = r.squaredNorm();
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  return x;
}

inline VectorXd solve_spd(const MatrixXd& a, const VectorXd& b, LinearSolverKind kind) {
  if (kind == LinearSolverKind::conjugate_gradient) return cg_solve(a, b);
  return a.ldlt().solve(b);
}

}  // namespace detail

/// One step of the smooth convexity-splitting scheme in spectral coordinates:
///   (1 + eps*tau*lambda_k + c*tau) u_k =
///       -(tau/eps) b_k + (1 + c*tau) ubar_k + tau d_k
/// with b = psi'(Phi ubar_hat) and d = omega (f - Phi ubar_hat) projected by
/// Phi^T. The potential term carries the negative sign (gradient descent on
/// the double well).
inline ScalarState step_smooth(const ScalarState& state, const SpectralBasis& basis,
                               const FidelitySet& fid, const SolverConfig& cfg) {
  const double eps = cfg.epsilon, tau = cfg.tau, c = cfg.c;
  VectorXd ubar = basis.phi * state.u_hat;
  VectorXd b_hat = basis.phi.transpose() * smooth_potential_derivative(ubar);
  VectorXd d_hat = basis.phi.transpose() * detail::fidelity_force(fid, ubar, basis.n());
  VectorXd numer = -(tau / eps) * b_hat + (1.0 + c * tau) * state.u_hat + tau * d_hat;
  VectorXd denom = (eps * tau * basis.lambda).array() + 1.0 + c * tau;
  ScalarState next;
  next.u_hat = numer.cwiseQuotient(denom);
  next.u = basis.phi * next.u_hat;
  next.t = state.t + 1;
  return next;
}

/// Semi-smooth Newton solve of the Moreau-Yosida regularized step
///   F(u) = (c + 1/tau) u + eps L_s u + theta_nu(u)
///        + (1/eps) psi_0'(ubar) - (c + 1/tau) ubar - omega (f - ubar) = 0
/// with psi_0'(u) = -u, iterated on the projected m x m system
///   [ (c + 1/tau) I + eps Lambda + (1/nu) Phi^T chi_A Phi ] u =
///   -(1/nu) Phi^T (chi_A- - chi_A+) 1 + (1/eps + c + 1/tau) Phi^T ubar
///   + Phi^T [omega (f - ubar)].
/// Stops once ||F(u^{l+1})|| <= eps_rel ||F(u^0)|| + eps_abs, measured on the
/// projected residual (the system actually being solved). Returns the
/// spectral coefficients; newton_iters reports the iterations used.
inline VectorXd ssn_solve_scalar(const VectorXd& ubar, const SpectralBasis& basis,
                                 const FidelitySet& fid, const SolverConfig& cfg, double nu,
                                 const VectorXd& u_hat_init, int* newton_iters = nullptr) {
  const double eps = cfg.epsilon, tau = cfg.tau, c = cfg.c;
  const double a0 = c + 1.0 / tau;
  const Index m = basis.m();
  if (!(a0 > 0.0)) throw std::logic_error("ssn_solve_scalar: c + 1/tau must be > 0");

  VectorXd rhs_fixed = (1.0 / eps + a0) * (basis.phi.transpose() * ubar) +
                       basis.phi.transpose() * detail::fidelity_force(fid, ubar, basis.n());
  VectorXd diag = (eps * basis.lambda).array() + a0;

  auto residual = [&](const VectorXd& u_hat, const VectorXd& u_vertex) {
    return VectorXd(diag.cwiseProduct(u_hat) + basis.phi.transpose() * theta_nu(u_vertex, nu) -
                    rhs_fixed);
  };

  VectorXd u_hat = u_hat_init;
  VectorXd u_vertex = basis.phi * u_hat;
  double r_cur = residual(u_hat, u_vertex).norm();
  const double stop = cfg.newton.eps_rel * r_cur + cfg.newton.eps_abs;

  for (int l = 0; l < cfg.newton.l_max; ++l) {
    const ActiveSets act = active_sets(u_vertex);
    MatrixXd g = MatrixXd::Zero(m, m);
    g.diagonal() = diag;
    if (!act.all.empty()) {
      MatrixXd phi_a(static_cast<Index>(act.all.size()), m);
      for (std::size_t r = 0; r < act.all.size(); ++r) phi_a.row(static_cast<Index>(r)) = basis.phi.row(act.all[r]);
      g.noalias() += (phi_a.transpose() * phi_a) / nu;
    }
    VectorXd rhs = rhs_fixed;
    for (Index i : act.plus) rhs += basis.phi.row(i).transpose() / nu;
    for (Index i : act.minus) rhs -= basis.phi.row(i).transpose() / nu;

    VectorXd full = detail::solve_spd(g, rhs, cfg.linear_solver);
    // full Newton step first (exact finite termination in the settled piece);
    // on insufficient decrease, backtrack along the Newton direction to rule
    // out active-set cycling at small nu
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
  throw std::runtime_error("ssn_solve_scalar: no convergence within l_max=" +
                           std::to_string(cfg.newton.l_max) + " (final residual " +
                           format_double(r_cur) + ")");
}

/// Discrete Ginzburg-Landau energy with the smooth double well plus the
/// fidelity term, used as the per-step monitor. u must lie in span(Phi).
inline double scalar_energy(const VectorXd& u, const VectorXd& u_hat, const SpectralBasis& basis,
                            const FidelitySet& fid, double eps) {
  const double dirichlet = 0.5 * eps * basis.lambda.dot(u_hat.cwiseProduct(u_hat));
  const double well = ((u.array().square() - 1.0).square() * 0.25).sum() / eps;
  double fidelity = 0.0;
  for (std::size_t t = 0; t < fid.indices.size(); ++t) {
    const double d = fid.values[static_cast<Index>(t)] - u[fid.indices[t]];
    fidelity += 0.5 * fid.omega0 * d * d;
  }
  return dirichlet + well + fidelity;
}

/// Initial state: fidelity vertices at their labels, all others zero.
inline ScalarState make_initial_scalar(Index n, const SpectralBasis& basis,
                                       const FidelitySet& fid) {
  ScalarState state;
  state.u = VectorXd::Zero(n);
  for (std::size_t t = 0; t < fid.indices.size(); ++t)
    state.u[fid.indices[t]] = fid.values[static_cast<Index>(t)];
  state.u_hat = basis.phi.transpose() * state.u;
  state.t = 0;
  return state;
}

/// Time loop until ||u - ubar|| / ||ubar|| <= eps_tol or t_max steps. In
/// non-smooth mode every step runs the penalty continuation over the full nu
/// schedule, each Newton solve warm-started from the previous one.
inline std::pair<ScalarState, Diagnostics> run_scalar(const ScalarState& initial,
                                                      const SpectralBasis& basis,
                                                      const FidelitySet& fid,
                                                      const SolverConfig& cfg) {
  cfg.validate();
  fid.validate(basis.n());
  ScalarState state = initial;
  Diagnostics diag;
  diag.steps.reserve(static_cast<std::size_t>(cfg.t_max));

  for (int t = 0; t < cfg.t_max; ++t) {
    const VectorXd u_prev = state.u;
    int iters = 0;
    if (cfg.potential == Potential::smooth) {
      state = step_smooth(state, basis, fid, cfg);
    } else {
      VectorXd u_hat = state.u_hat;
      for (double nu : cfg.nu_schedule) {
        int it = 0;
        u_hat = ssn_solve_scalar(u_prev, basis, fid, cfg, nu, u_hat, &it);
        iters += it;
      }
      state.u_hat = u_hat;
      state.u = basis.phi * u_hat;
      state.t += 1;
    }
    StepDiag row;
    row.step = state.t;
    row.rel_change = relative_change(state.u, u_prev, cfg.stop_norm);
    row.energy = scalar_energy(state.u, state.u_hat, basis, fid, cfg.epsilon);
    row.min_u = state.u.minCoeff();
    row.max_u = state.u.maxCoeff();
    row.newton_iters = iters;
    diag.steps.push_back(row);
    if (row.rel_change <= cfg.eps_tol) {
      diag.converged = true;
      break;
    }
  }
  return {state, diag};
}

/// sign(u) with sign(0) := +1.
inline std::vector<int> classify_scalar(const ScalarState& state) {
  std::vector<int> labels(static_cast<std::size_t>(state.u.size()));
  for (Index i = 0; i < state.u.size(); ++i)
    labels[static_cast<std::size_t>(i)] = state.u[i] >= 0.0 ? 1 : -1;
  return labels;
}

}  // namespace digs
