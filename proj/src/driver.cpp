#include "cohadm/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>

#include "cohadm/errors.hpp"

namespace cohadm {

void LoadSchedule::validate() const {
  if (bc_set.empty()) throw ConfigError("schedule.bc_set is required");
  if (n_steps < 1) throw ConfigError("schedule.n_steps must be at least 1");
  if (!std::isfinite(u_start) || !std::isfinite(u_end)) throw ConfigError("schedule displacements must be finite");
}

double LoadSchedule::applied(std::size_t k) const {
  return u_start + (u_end - u_start) * static_cast<double>(k) / static_cast<double>(n_steps);
}

void ExtrapolationPolicy::validate() const {
  if (!(quality_threshold > 1.0)) throw ConfigError("policy.quality_threshold must exceed 1");
}

std::size_t RunRecord::total_iterations() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.iterations;
  return n;
}

double RunRecord::peak_stress() const {
  double peak = 0.0;
  for (const auto& s : steps) peak = std::max(peak, s.avg_stress);
  return peak;
}

SolverState extrapolate(const SolverState& current, const SolverState& previous) {
  SolverState out;
  out.u = 2.0 * current.u - previous.u;
  out.delta = 2.0 * current.delta - previous.delta;
  out.y = 2.0 * current.y - previous.y;
  return out;
}

double extrapolation_quality(const SolverState& current, const SolverState& previous, const SolverState& predicted,
                             const StateScale& scale) {
  auto sq = [&](const SolverState& a, const SolverState& b) {
    const double il = 1.0 / scale.length;
    const double iF = 1.0 / scale.force;
    return (a.u - b.u).squaredNorm() * il * il + (a.delta - b.delta).squaredNorm() * il * il +
           (a.y - b.y).squaredNorm() * iF * iF;
  };
  const double den = sq(current, predicted);
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(sq(current, previous) / den);
}

Discretization discretize(const InputMesh& input, const Material& material, int gauss_per_edge) {
  material.validate();
  Discretization d;
  d.mesh = break_mesh(input);
  d.jump = build_jump_operator(d.mesh, gauss_per_edge, material.thickness);
  d.stiffness = assemble_stiffness(d.mesh, material);
  d.material = material;
  d.bbox_min = d.bbox_max = input.nodes.front();
  for (const auto& x : input.nodes) {
    d.bbox_min = d.bbox_min.cwiseMin(x);
    d.bbox_max = d.bbox_max.cwiseMax(x);
  }
  return d;
}

Eigen::VectorXd DirichletLayout::values(double applied) const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs.size()));
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    if (loaded[k]) v[static_cast<Eigen::Index>(k)] = applied;
  }
  return v;
}

DirichletLayout dirichlet_layout(const BrokenMesh& mesh, const LoadSchedule& schedule) {
  std::vector<std::pair<std::size_t, char>> entries;
  for (const auto& fs : schedule.fixed_sets) {
    for (auto node : mesh.private_nodes_of_set(fs.set)) {
      if (fs.fix_x) entries.emplace_back(2 * node, 0);
      if (fs.fix_y) entries.emplace_back(2 * node + 1, 0);
    }
  }
  DirichletLayout out;
  out.loaded_nodes = mesh.private_nodes_of_set(schedule.bc_set);
  for (auto node : out.loaded_nodes) entries.emplace_back(2 * node + static_cast<std::size_t>(schedule.direction), 1);

  std::sort(entries.begin(), entries.end());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (k > 0 && entries[k].first == entries[k - 1].first) {
      if (entries[k].second != entries[k - 1].second) {
        throw ConfigError("DOF " + std::to_string(entries[k].first) +
                          " is both fixed and driven by the load ramp; fixed_sets overlap bc_set");
      }
      continue;
    }
    out.dofs.push_back(entries[k].first);
    out.loaded.push_back(entries[k].second);
  }
  return out;
}

RunOutcome run_quasistatic(const Discretization& disc, const CohesiveParams& cohesive, const LoadSchedule& schedule,
                           const AdmmConfig& admm, const ExtrapolationPolicy& policy, RunObserver* observer) {
  cohesive.validate();
  schedule.validate();
  policy.validate();

  const DirichletLayout layout = dirichlet_layout(disc.mesh, schedule);
  const AdmmSolver solver(disc.mesh, disc.stiffness, disc.jump, cohesive, admm, layout.dofs);

  const int axis = static_cast<int>(schedule.direction);
  RunRecord record;
  record.width = disc.bbox_max[axis] - disc.bbox_min[axis];
  record.height = disc.bbox_max[1 - axis] - disc.bbox_min[1 - axis];
  record.thickness = disc.material.thickness;
  record.rho = solver.rho();
  const StateScale scale{cohesive.delta_c, disc.jump.mean_area() * cohesive.sigma_c};

  CohesiveState history(disc.jump.num_points());
  std::deque<SolverState> converged; // last three converged states, newest at the back
  SolverState current = SolverState::zeros(disc.mesh.num_dofs(), disc.jump.num_points());

  for (std::size_t k = 0; k <= schedule.n_steps; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    StepRecord rec;
    rec.step = k;
    rec.u_applied = schedule.applied(k);

    SolverState start = converged.empty() ? current : converged.back();
    if (policy.enabled && k >= 3 && converged.size() == 3) {
      const SolverState& z1 = converged[2];
      const SolverState& z2 = converged[1];
      const SolverState& z3 = converged[0];
      rec.quality = extrapolation_quality(z1, z2, extrapolate(z2, z3), scale);
      if (should_extrapolate(rec.quality, policy)) {
        start = extrapolate(z1, z2);
        rec.extrapolated = true;
      }
    }

    StepResult result;
    try {
      IterationObserver iter_obs;
      if (observer) iter_obs = [&](std::size_t it, const Residuals& r) { observer->on_iteration(k, it, r); };
      result = solver.run_step(start, layout.values(rec.u_applied), history, iter_obs);
    } catch (const NonConvergenceError& e) {
      throw RunAborted(e, k, record);
    }

    rec.iterations = result.iterations;
    rec.residuals = std::move(result.history);
    const Vec2 f = reaction_force(disc.stiffness, disc.jump, result.state.u, result.state.y, layout.loaded_nodes);
    rec.reaction_force = f[axis];
    rec.avg_stress = rec.reaction_force / (record.height * record.thickness);
    rec.avg_strain = rec.u_applied / record.width;
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    record.steps.push_back(rec);

    converged.push_back(std::move(result.state));
    if (converged.size() > 3) converged.pop_front();
    if (observer) observer->on_step(rec, converged.back(), history);
  }

  return {std::move(record), converged.back(), std::move(history)};
}

} // namespace cohadm
