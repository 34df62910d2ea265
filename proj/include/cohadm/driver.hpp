#pragma once

#include <limits>
#include <string>
#include <vector>

#include "cohadm/admm.hpp"
#include "cohadm/cohesive.hpp"
#include "cohadm/elasticity.hpp"
#include "cohadm/mesh.hpp"

namespace cohadm {

enum class Axis { x = 0, y = 1 };

struct FixedSet {
  std::string set;
  bool fix_x = true;
  bool fix_y = true;
};

/// Uniform displacement ramp on one node set, applied in n_steps increments.
struct LoadSchedule {
  std::string bc_set;
  Axis direction = Axis::x;
  double u_start = 0.0;
  double u_end = 0.0;
  std::size_t n_steps = 1;
  std::vector<FixedSet> fixed_sets;

  void validate() const;
  /// Prescribed displacement at step k (step 0 is the baseline u_start).
  double applied(std::size_t k) const;
};

struct ExtrapolationPolicy {
  bool enabled = true;
  double quality_threshold = 2.0;

  void validate() const;
};

/// The gate is strict: a quality exactly at the threshold keeps the plain warm start.
inline bool should_extrapolate(double quality, const ExtrapolationPolicy& policy) {
  return policy.enabled && quality > policy.quality_threshold;
}

struct StepRecord {
  std::size_t step = 0;
  double u_applied = 0.0;
  double reaction_force = 0.0;
  double avg_stress = 0.0;
  double avg_strain = 0.0;
  std::size_t iterations = 0;
  bool extrapolated = false;
  double wall_ms = 0.0;
  /// Extrapolation quality that drove the warm-start choice (NaN before step 3).
  double quality = std::numeric_limits<double>::quiet_NaN();
  std::vector<Residuals> residuals; // one entry per ADMM iteration
};

struct RunRecord {
  std::vector<StepRecord> steps;
  double width = 0.0;
  double height = 0.0;
  double thickness = 1.0;
  double rho = 0.0;

  std::size_t total_iterations() const;
  double peak_stress() const;
};

/// Units used to nondimensionalize the stacked state before taking norms.
struct StateScale {
  double length = 1.0; // applied to u and delta
  double force = 1.0;  // applied to y
};

/// 2 z_k - z_{k-1}, componentwise over (u, delta, y).
SolverState extrapolate(const SolverState& current, const SolverState& previous);

/// |z_k - z_{k-1}| / |z_k - z~_k| over the scaled stacked state; +inf when the prediction was exact.
double extrapolation_quality(const SolverState& current, const SolverState& previous, const SolverState& predicted,
                             const StateScale& scale = {});

/// Everything derived from the input mesh that stays fixed for a run.
struct Discretization {
  BrokenMesh mesh;
  JumpOperator jump;
  StiffnessMatrix stiffness;
  Material material;
  Vec2 bbox_min = Vec2::Zero();
  Vec2 bbox_max = Vec2::Zero();
};

Discretization discretize(const InputMesh& input, const Material& material, int gauss_per_edge = 2);

/// Sorted constrained DOFs and, aligned with them, which are driven by the load ramp.
struct DirichletLayout {
  std::vector<std::size_t> dofs;
  std::vector<char> loaded;
  std::vector<std::size_t> loaded_nodes; // private nodes of bc_set

  Eigen::VectorXd values(double applied) const;
};

DirichletLayout dirichlet_layout(const BrokenMesh& mesh, const LoadSchedule& schedule);

/// Receives progress as the run advances; used for crash-safe incremental output.
class RunObserver {
public:
  virtual ~RunObserver() = default;
  virtual void on_iteration(std::size_t /*step*/, std::size_t /*iteration*/, const Residuals& /*r*/) {}
  virtual void on_step(const StepRecord& /*record*/, const SolverState& /*state*/, const CohesiveState& /*history*/) {}
};

struct RunOutcome {
  RunRecord record;
  SolverState final_state;
  CohesiveState history;
};

/// Thrown when a load step fails to converge; carries the steps completed so far.
class RunAborted : public NonConvergenceError {
public:
  RunAborted(const NonConvergenceError& cause, std::size_t step, RunRecord partial)
      : NonConvergenceError("load step " + std::to_string(step) + ": " + cause.what(), cause.last_residuals(),
                            cause.iterations()),
        step_(step), partial_(std::move(partial)) {}
  std::size_t step() const noexcept { return step_; }
  const RunRecord& partial() const noexcept { return partial_; }

private:
  std::size_t step_;
  RunRecord partial_;
};

RunOutcome run_quasistatic(const Discretization& disc, const CohesiveParams& cohesive, const LoadSchedule& schedule,
                           const AdmmConfig& admm, const ExtrapolationPolicy& policy, RunObserver* observer = nullptr);

} // namespace cohadm
