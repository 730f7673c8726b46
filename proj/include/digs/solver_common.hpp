#pragma once

#include "digs/spectral.hpp"

#include <string>
#include <vector>

namespace digs {

enum class Potential { smooth, nonsmooth };
enum class StopNorm { l2, max };
enum class LinearSolverKind { direct, conjugate_gradient };

struct NewtonOptions {
  int l_max = 20;
  double eps_rel = 1e-12;
  double eps_abs = 1e-6;
};

/// Time stepping and potential parameters shared by the scalar and the
/// vector-valued schemes.
struct SolverConfig {
  double epsilon = 0.5;  // interface parameter
  double tau = 0.01;     // time step
  double c = 0.0;        // convexity splitting constant
  double eps_tol = 1e-6;
  int t_max = 500;
  Potential potential = Potential::smooth;
  std::vector<double> nu_schedule = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
  NewtonOptions newton;
  LinearSolverKind linear_solver = LinearSolverKind::direct;
  StopNorm stop_norm = StopNorm::l2;
  MatrixXd interaction;  // K x K; empty selects the default I - 11^T

  void validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("config: epsilon must be > 0");
    if (!(tau > 0.0)) throw std::invalid_argument("config: tau must be > 0");
    if (c < 0.0) throw std::invalid_argument("config: c must be >= 0");
    if (!(eps_tol > 0.0)) throw std::invalid_argument("config: eps_tol must be > 0");
    if (t_max < 1) throw std::invalid_argument("config: t_max must be >= 1");
    if (potential == Potential::nonsmooth) {
      if (nu_schedule.empty()) throw std::invalid_argument("config: nu_schedule empty");
      double prev = std::numeric_limits<double>::infinity();
      for (double nu : nu_schedule) {
        if (!(nu > 0.0)) throw std::invalid_argument("config: nu_schedule must be positive");
        if (!(nu < prev))
          throw std::invalid_argument("config: nu_schedule must be strictly decreasing");
        prev = nu;
      }
    }
    if (newton.l_max < 1) throw std::invalid_argument("config: newton.l_max must be >= 1");
  }
};

/// Per-step record streamed to the diagnostics CSV.
struct StepDiag {
  int step = 0;
  double rel_change = 0.0;
  double energy = 0.0;
  double min_u = 0.0;
  double max_u = 0.0;
  int newton_iters = 0;
  std::vector<int> component_newton;  // multiclass only

  static std::string csv_header(Index k_components = 0) {
    std::string h = "step,rel_change,energy,min_u,max_u,newton_iters";
    for (Index i = 1; i <= k_components; ++i) h += ",newton_c" + std::to_string(i);
    return h;
  }
  std::string csv_row() const {
    std::string r = std::to_string(step) + "," + format_double(rel_change) + "," +
                    format_double(energy) + "," + format_double(min_u) + "," +
                    format_double(max_u) + "," + std::to_string(newton_iters);
    for (int c : component_newton) r += "," + std::to_string(c);
    return r;
  }
};

struct Diagnostics {
  std::vector<StepDiag> steps;
  bool converged = false;  // stopped by the relative-change rule rather than t_max
};

inline double change_norm(const VectorXd& diff, StopNorm norm) {
  return norm == StopNorm::l2 ? diff.norm() : diff.cwiseAbs().maxCoeff();
}

/// Relative change  ||u - ubar|| / ||ubar||  with an absolute fallback when
/// the previous iterate is the zero vector.
inline double relative_change(const VectorXd& u, const VectorXd& ubar, StopNorm norm) {
  const double denom = change_norm(ubar, norm);
  const double num = change_norm(u - ubar, norm);
  return denom > 0.0 ? num / denom : num;
}

}  // namespace digs
