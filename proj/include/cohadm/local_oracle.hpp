#pragma once

#include <cstdint>

#include "cohadm/cohesive.hpp"

namespace cohadm {

/// Derivative-free minimizer of local_objective: a dense grid over a box that must
/// contain the minimizer, then nested golden-section search around the best cell.
/// Shares nothing with solve_local except the objective itself.
struct BruteForceResult {
  Opening delta;
  double objective;
};

BruteForceResult brute_force_local(const Vec2& p, double area, double delta_max, double rho,
                                   const CohesiveParams& params);

struct OracleReport {
  std::size_t samples = 0;
  double max_gap = 0.0;      // max over samples of (f(closed form) - f(brute force)) / (a sigma_c delta_c)
  double min_gap = 0.0;      // most negative gap, i.e. brute force worse than closed form
  std::size_t worst_sample = 0;
};

/// Random instances: p uniform in [-2 a sigma_c, 2 a sigma_c]^2, delta_max either 0 or uniform
/// in [0, delta_c], beta drawn from {1, 0.5, 2}, rho = alpha a sigma_c / delta_c with alpha in [5, 200].
OracleReport run_local_oracle(std::size_t samples, std::uint64_t seed, double sigma_c = 3.0,
                              double delta_c = 0.02287);

} // namespace cohadm
