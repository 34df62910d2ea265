#pragma once

#include <vector>

#include "cohadm/mesh.hpp"

namespace cohadm {

/// Initially rigid, linearly softening cohesive law with secant unloading.
struct CohesiveParams {
  double sigma_c = 1.0; // critical traction
  double delta_c = 1.0; // effective opening at complete failure
  double beta = 1.0;    // mixity: effective opening = sqrt(dn^2 + beta^2 ds^2)

  void validate() const;

  /// Smallest penalty for which the local subproblem at a point of area `area`
  /// is strongly convex. The beta^2 factor covers the shear direction when beta > 1.
  double convexity_bound(double area) const;
};

/// Largest effective opening ever reached, per Gauss point. Updated only by commit().
struct CohesiveState {
  std::vector<double> delta_max;

  explicit CohesiveState(std::size_t points = 0) : delta_max(points, 0.0) {}
  /// delta_max_i <- max(delta_max_i, |delta_i|_eff). `openings` holds (dn, ds) pairs.
  void commit(const Eigen::VectorXd& openings, const CohesiveParams& params);
};

/// Opening 2-vector in the interface frame: x = normal, y = tangential.
using Opening = Vec2;

double effective_opening(const Opening& delta, double beta);

/// Cohesive energy per unit area at effective opening `eff` given history `delta_max`.
/// Throws DomainError on negative arguments.
double phi_c(double eff, double delta_max, const CohesiveParams& params);

/// d(phi_c)/d(eff). Throws DomainError at eff == delta_max == 0 where phi_c has a kink.
double traction(double eff, double delta_max, const CohesiveParams& params);

/// Irrecoverable part of phi_c once the history has reached `delta_max`.
double dissipated_energy(double delta_max, const CohesiveParams& params);

/// a phi_c(|delta|_eff) + I(dn >= 0) - p.delta + rho/2 |delta|^2. Returns +inf for dn < 0.
double local_objective(const Opening& delta, const Vec2& p, double area, double delta_max, double rho,
                       const CohesiveParams& params);

enum class LocalCase { closed, shear_only, full };

struct LocalSolution {
  Opening delta;
  LocalCase which;
};

/// Exact minimizer of local_objective for p = y_i + rho A_i u. Throws ConfigError
/// when rho does not exceed params.convexity_bound(area).
LocalSolution solve_local_detailed(const Vec2& p, double area, double delta_max, double rho,
                                   const CohesiveParams& params);

inline Opening solve_local(const Vec2& p, double area, double delta_max, double rho, const CohesiveParams& params) {
  return solve_local_detailed(p, area, delta_max, rho, params).delta;
}

/// Same minimizer through the safeguarded radial root find used for beta != 1.
/// Exposed so the beta == 1 closed form can be checked against it.
Opening solve_local_root_find(const Vec2& p, double area, double delta_max, double rho,
                              const CohesiveParams& params);

} // namespace cohadm
