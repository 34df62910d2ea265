#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "cohadm/cohesive.hpp"
#include "cohadm/elasticity.hpp"
#include "cohadm/errors.hpp"
#include "cohadm/mesh.hpp"

namespace cohadm {

/// z = (u, delta, y): nodal displacements, interface openings and multipliers.
struct SolverState {
  Eigen::VectorXd u;
  Eigen::VectorXd delta;
  Eigen::VectorXd y;

  static SolverState zeros(std::size_t num_dofs, std::size_t num_points);
};

struct AdmmConfig {
  double alpha = 100.0;  // rho = alpha * mean(a_i) * sigma_c / delta_c
  double c_primal = 0.01;
  double c_dual = 0.01;
  std::size_t max_iters = 100000;
  double rho_override = 0.0; // > 0 replaces the alpha rule

  void validate() const;
};

double penalty_from_alpha(double alpha, double mean_area, const CohesiveParams& params);

/// Infinity norms of the area-normalized (pressure) residuals.
struct Residuals {
  double primal = 0.0;
  double dual = 0.0;
};

/// rho (A u - delta) with each 2-vector divided by its effective area.
Eigen::VectorXd primal_pressure_residual(const JumpOperator& jump, const Eigen::VectorXd& u,
                                         const Eigen::VectorXd& delta, double rho);
/// rho A^T [(delta_new - delta_old) / a].
Eigen::VectorXd dual_pressure_residual(const JumpOperator& jump, const Eigen::VectorXd& delta_new,
                                       const Eigen::VectorXd& delta_old, double rho);

struct ConvergenceCheck {
  Residuals residuals;
  bool converged;
};

ConvergenceCheck check_convergence(const JumpOperator& jump, const SolverState& state,
                                   const Eigen::VectorXd& prev_delta, double rho, const AdmmConfig& config);

/// Cholesky factorization of the Dirichlet-reduced K + rho A^T A. Built once per run;
/// only right-hand sides change between iterations and load steps.
class SystemFactorization {
public:
  /// `nodes` are the broken-mesh coordinates, used to count rigid modes left free by
  /// the constraints. Throws SingularSystemError if any remain or the factorization fails.
  SystemFactorization(const StiffnessMatrix& K, const JumpOperator& jump, double rho,
                      std::vector<std::size_t> dirichlet_dofs, std::span<const Vec2> nodes);
  ~SystemFactorization();
  SystemFactorization(SystemFactorization&&) noexcept;
  SystemFactorization& operator=(SystemFactorization&&) noexcept;

  /// Solves (K + rho A^T A) u = rhs on the free DOFs with u = bc_values on the constrained ones.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, const Eigen::VectorXd& bc_values) const;

  double rho() const;
  std::size_t num_dofs() const;
  const std::vector<std::size_t>& dirichlet_dofs() const;
  /// FNV-1a hash over the reduced matrix and its Cholesky factor.
  std::uint64_t checksum() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

inline SystemFactorization factorize_system(const StiffnessMatrix& K, const JumpOperator& jump, double rho,
                                            std::vector<std::size_t> dirichlet_dofs, std::span<const Vec2> nodes) {
  return SystemFactorization(K, jump, rho, std::move(dirichlet_dofs), nodes);
}

/// Minimizer of E(u) + y^T A u + rho/2 |A u - delta|^2 subject to u_BC = bc_values.
Eigen::VectorXd u_update(const SystemFactorization& fact, const JumpOperator& jump, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& delta, const Eigen::VectorXd& bc_values);

/// Pointwise solve_local on p_i = y_i + rho (A u)_i.
Eigen::VectorXd delta_update(const JumpOperator& jump, const Eigen::VectorXd& jump_of_u, const Eigen::VectorXd& y,
                             double rho, const CohesiveState& history, const CohesiveParams& params);

/// y + rho (A u - delta)
Eigen::VectorXd multiplier_update(const Eigen::VectorXd& y, double rho, const Eigen::VectorXd& jump_of_u,
                                  const Eigen::VectorXd& delta);

struct StepResult {
  SolverState state;
  std::size_t iterations = 0;
  std::vector<Residuals> history;
  bool converged = false;
};

class NonConvergenceError : public Error {
public:
  NonConvergenceError(const std::string& what, Residuals last, std::size_t iterations)
      : Error(what), last_(last), iterations_(iterations) {}
  const char* kind() const noexcept override { return "non-convergence"; }
  Residuals last_residuals() const noexcept { return last_; }
  std::size_t iterations() const noexcept { return iterations_; }

private:
  Residuals last_;
  std::size_t iterations_;
};

using IterationObserver = std::function<void(std::size_t iteration, const Residuals&)>;

/// One load step of ADMM over a fixed mesh, material and penalty.
class AdmmSolver {
public:
  /// Validates the config and checks rho against the convexity bound at every Gauss point.
  AdmmSolver(const BrokenMesh& mesh, const StiffnessMatrix& K, const JumpOperator& jump,
             const CohesiveParams& params, const AdmmConfig& config, std::vector<std::size_t> dirichlet_dofs);

  double rho() const { return rho_; }
  const SystemFactorization& factorization() const { return fact_; }
  const JumpOperator& jump() const { return jump_; }
  const AdmmConfig& config() const { return config_; }

  /// One u -> delta -> y sweep in place; returns the residuals of the sweep.
  Residuals iterate(SolverState& state, const Eigen::VectorXd& bc_values, const CohesiveState& history) const;

  /// Iterates from `start` until both residuals drop below tolerance. On success the
  /// history is committed; on failure NonConvergenceError is thrown and history is untouched.
  StepResult run_step(const SolverState& start, const Eigen::VectorXd& bc_values, CohesiveState& history,
                      const IterationObserver& observer = {}) const;

private:
  const JumpOperator& jump_;
  Eigen::VectorXd areas_;
  CohesiveParams params_;
  AdmmConfig config_;
  double rho_;
  SystemFactorization fact_;
};

} // namespace cohadm
