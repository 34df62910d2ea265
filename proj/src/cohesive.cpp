#include "cohadm/cohesive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cohadm/errors.hpp"

namespace cohadm {

namespace {

/// Loading-envelope traction t(s) = sigma_c (1 - s/delta_c), clipped at zero.
double envelope(double s, const CohesiveParams& p) {
  return s < p.delta_c ? p.sigma_c * (1.0 - s / p.delta_c) : 0.0;
}

/// Secant unloading stiffness through the origin for a point with history delta_max > 0.
double secant_stiffness(double delta_max, const CohesiveParams& p) {
  return envelope(delta_max, p) / delta_max;
}

void require_convex(double area, double rho, const CohesiveParams& params) {
  if (!(area > 0.0)) throw DomainError("effective area must be positive");
  const double bound = params.convexity_bound(area);
  if (!(rho > bound)) {
    std::ostringstream os;
    os << "penalty rho = " << rho << " does not exceed the local convexity bound " << bound;
    throw ConfigError(os.str());
  }
}

/// Minimizer r >= 0 of a phi_c(r) - P r + (k/2) r^2. The derivative is monotone in r
/// (strong convexity), so the branch is chosen by its sign at the breakpoints.
double radial_minimizer(double P, double k, double area, double delta_max, const CohesiveParams& p) {
  if (P <= 0.0) return 0.0;
  const double a = area;
  if (delta_max == 0.0 && P <= a * p.sigma_c) return 0.0;

  if (delta_max > 0.0) {
    const double slope_at_max = a * envelope(delta_max, p) - P + k * delta_max;
    if (slope_at_max >= 0.0) {
      // unloading/reloading along the secant (k_sec = 0 once fully failed)
      const double r = P / (k + a * secant_stiffness(delta_max, p));
      return std::min(r, delta_max);
    }
  }
  const double lo = delta_max;
  if (lo < p.delta_c && k * p.delta_c - P >= 0.0) {
    const double r = (P - a * p.sigma_c) / (k - a * p.sigma_c / p.delta_c);
    return std::clamp(r, lo, p.delta_c);
  }
  return std::max(P / k, std::max(p.delta_c, delta_max));
}

/// a phi_c'(r) / r, the isotropic part of the stationarity system. Non-negative for r > 0.
double radial_coefficient(double r, double area, double delta_max, const CohesiveParams& p) {
  if (r < delta_max) return area * secant_stiffness(delta_max, p);
  if (r < p.delta_c) return area * p.sigma_c * (1.0 / r - 1.0 / p.delta_c);
  return 0.0;
}

double radial_coefficient_slope(double r, double delta_max, double area, const CohesiveParams& p) {
  if (r >= delta_max && r < p.delta_c) return -area * p.sigma_c / (r * r);
  return 0.0;
}

} // namespace

void CohesiveParams::validate() const {
  if (!(sigma_c > 0.0)) throw ConfigError("sigma_c must be positive");
  if (!(delta_c > 0.0)) throw ConfigError("delta_c must be positive");
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
}

double CohesiveParams::convexity_bound(double area) const {
  return area * sigma_c / delta_c * std::max(1.0, beta * beta);
}

void CohesiveState::commit(const Eigen::VectorXd& openings, const CohesiveParams& params) {
  if (static_cast<std::size_t>(openings.size()) != 2 * delta_max.size()) {
    throw DomainError("CohesiveState::commit: opening vector has wrong length");
  }
  for (std::size_t i = 0; i < delta_max.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(2 * i);
    const double eff = effective_opening(Opening(openings[k], openings[k + 1]), params.beta);
    delta_max[i] = std::max(delta_max[i], eff);
  }
}

double effective_opening(const Opening& delta, double beta) {
  return std::hypot(delta.x(), beta * delta.y());
}

double phi_c(double eff, double delta_max, const CohesiveParams& p) {
  if (!(eff >= 0.0) || !(delta_max >= 0.0)) throw DomainError("phi_c: openings must be non-negative");
  if (eff >= delta_max) {
    if (eff >= p.delta_c) return 0.5 * p.sigma_c * p.delta_c;
    return p.sigma_c * eff * (1.0 - eff / (2.0 * p.delta_c));
  }
  return dissipated_energy(delta_max, p) + 0.5 * secant_stiffness(delta_max, p) * eff * eff;
}

double traction(double eff, double delta_max, const CohesiveParams& p) {
  if (!(eff >= 0.0) || !(delta_max >= 0.0)) throw DomainError("traction: openings must be non-negative");
  if (eff == 0.0 && delta_max == 0.0) {
    throw DomainError("traction: phi_c is not differentiable at the origin of an intact interface");
  }
  if (eff >= delta_max) return envelope(eff, p);
  return secant_stiffness(delta_max, p) * eff;
}

double dissipated_energy(double delta_max, const CohesiveParams& p) {
  // loaded area minus the recoverable secant triangle: sigma_c * delta_max / 2 before failure
  return 0.5 * p.sigma_c * std::min(delta_max, p.delta_c);
}

double local_objective(const Opening& delta, const Vec2& pvec, double area, double delta_max, double rho,
                       const CohesiveParams& params) {
  if (delta.x() < 0.0) return std::numeric_limits<double>::infinity();
  const double eff = effective_opening(delta, params.beta);
  return area * phi_c(eff, delta_max, params) - pvec.dot(delta) + 0.5 * rho * delta.squaredNorm();
}

LocalSolution solve_local_detailed(const Vec2& p, double area, double delta_max, double rho,
                                   const CohesiveParams& params) {
  require_convex(area, rho, params);
  const double beta = params.beta;
  const double pn_pos = std::max(p.x(), 0.0);
  const double p_eff = std::hypot(pn_pos, p.y() / beta);

  if (delta_max == 0.0 && p_eff <= area * params.sigma_c) return {Opening::Zero(), LocalCase::closed};

  if (p.x() <= 0.0) {
    // dn = 0; in w = beta*ds the problem is radial with drive |ps|/beta and stiffness rho/beta^2
    const double r = radial_minimizer(std::abs(p.y()) / beta, rho / (beta * beta), area, delta_max, params);
    const double ds = std::copysign(r / beta, p.y());
    return {Opening(0.0, r == 0.0 ? 0.0 : ds), LocalCase::shear_only};
  }

  if (beta == 1.0) {
    const double norm = p.norm();
    const double r = radial_minimizer(norm, rho, area, delta_max, params);
    return {p * (r / norm), LocalCase::full};
  }
  return {solve_local_root_find(p, area, delta_max, rho, params), LocalCase::full};
}

Opening solve_local_root_find(const Vec2& p, double area, double delta_max, double rho,
                              const CohesiveParams& params) {
  require_convex(area, rho, params);
  const double beta = params.beta;
  const double b2 = beta * beta;
  if (p.x() <= 0.0) return solve_local_detailed(p, area, delta_max, rho, params).delta;
  if (delta_max == 0.0 && std::hypot(p.x(), p.y() / beta) <= area * params.sigma_c) return Opening::Zero();

  // Scaled unknown w = (dn, beta ds): a phi_c'(|w|) w/|w| + diag(rho, rho/beta^2) w = q.
  const Vec2 q(p.x(), p.y() / beta);
  auto w_of = [&](double c) { return Vec2(q.x() / (rho + c), q.y() / (rho / b2 + c)); };
  auto residual = [&](double r) { return r - w_of(radial_coefficient(r, area, delta_max, params)).norm(); };

  double lo = 0.0;
  double hi = w_of(0.0).norm();
  if (residual(hi) <= 0.0) return Opening(w_of(0.0).x(), w_of(0.0).y() / beta);

  const double tol = 1e-12 * params.delta_c;
  double r = 0.5 * hi;
  for (int it = 0; it < 200 && hi - lo > tol; ++it) {
    const double f = residual(r);
    if (f == 0.0) break;
    (f < 0.0 ? lo : hi) = r;
    // Newton step on the bracketed residual, falling back to bisection
    const double c = radial_coefficient(r, area, delta_max, params);
    const Vec2 w = w_of(c);
    const double wn = w.norm();
    double next = 0.5 * (lo + hi);
    if (wn > 0.0) {
      const double dw_dc = -(w.x() * w.x() / (rho + c) + w.y() * w.y() / (rho / b2 + c)) / wn;
      const double df = 1.0 - dw_dc * radial_coefficient_slope(r, delta_max, area, params);
      if (df > 0.0) {
        const double newton = r - f / df;
        if (newton > lo && newton < hi) next = newton;
      }
    }
    if (std::abs(next - r) < 0.25 * tol) {
      r = next;
      break;
    }
    r = next;
  }
  const Vec2 w = w_of(radial_coefficient(r, area, delta_max, params));
  return Opening(w.x(), w.y() / beta);
}

} // namespace cohadm
