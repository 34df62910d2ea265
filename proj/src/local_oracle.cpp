#include "cohadm/local_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace cohadm {

namespace {

constexpr double kInvPhi = 0.6180339887498949;

template <typename F>
std::pair<double, double> golden_section(F&& f, double lo, double hi, int iters) {
  double x1 = hi - kInvPhi * (hi - lo);
  double x2 = lo + kInvPhi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvPhi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (hi - lo);
      f2 = f(x2);
    }
  }
  // endpoints matter for minimizers sitting on the dn = 0 face or at the origin
  std::array<std::pair<double, double>, 4> cand{{{x1, f1}, {x2, f2}, {lo, f(lo)}, {hi, f(hi)}}};
  return *std::min_element(cand.begin(), cand.end(), [](auto& a, auto& b) { return a.second < b.second; });
}

} // namespace

BruteForceResult brute_force_local(const Vec2& p, double area, double delta_max, double rho,
                                   const CohesiveParams& params) {
  auto f = [&](double dn, double ds) { return local_objective(Opening(dn, ds), p, area, delta_max, rho, params); };

  // |rho delta| <= |p| + a sigma_c max(1, beta) bounds every stationary point
  const double radius = 1.05 * (p.norm() + area * params.sigma_c * std::max(1.0, params.beta)) / rho + 1e-300;
  constexpr int kGridN = 64;
  constexpr int kGridS = 128;
  const double hn = radius / kGridN;
  const double hs = 2.0 * radius / kGridS;

  double best = std::numeric_limits<double>::infinity();
  int bi = 0;
  int bj = 0;
  for (int i = 0; i <= kGridN; ++i) {
    for (int j = 0; j <= kGridS; ++j) {
      const double v = f(i * hn, -radius + j * hs);
      if (v < best) {
        best = v;
        bi = i;
        bj = j;
      }
    }
  }

  const double n_lo = std::max(0.0, (bi - 3) * hn);
  const double n_hi = (bi + 3) * hn;
  const double s_lo = -radius + (bj - 3) * hs;
  const double s_hi = -radius + (bj + 3) * hs;
  constexpr int kIters = 70;

  auto inner = [&](double dn) { return golden_section([&](double ds) { return f(dn, ds); }, s_lo, s_hi, kIters); };
  const auto [dn, fval] = golden_section([&](double x) { return inner(x).second; }, n_lo, n_hi, kIters);
  const double ds = inner(dn).first;

  BruteForceResult out{Opening(bi * hn, -radius + bj * hs), best};
  if (fval < best) out = {Opening(dn, ds), fval};
  return out;
}

OracleReport run_local_oracle(std::size_t samples, std::uint64_t seed, double sigma_c, double delta_c) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::array<double, 3> betas{1.0, 0.5, 2.0};

  OracleReport rep;
  rep.samples = samples;
  rep.max_gap = -std::numeric_limits<double>::infinity();
  rep.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < samples; ++k) {
    CohesiveParams params{sigma_c, delta_c, betas[k % betas.size()]};
    const double area = std::exp(std::log(0.1) + unit(rng) * std::log(100.0));
    const double alpha = 5.0 + 195.0 * unit(rng);
    const double rho = alpha * area * sigma_c / delta_c;
    const double scale = 2.0 * area * sigma_c;
    const Vec2 p(scale * (2.0 * unit(rng) - 1.0), scale * (2.0 * unit(rng) - 1.0));
    const double delta_max = unit(rng) < 0.5 ? 0.0 : delta_c * unit(rng);

    const Opening closed = solve_local(p, area, delta_max, rho, params);
    const double f_closed = local_objective(closed, p, area, delta_max, rho, params);
    const auto brute = brute_force_local(p, area, delta_max, rho, params);
    const double gap = (f_closed - brute.objective) / (area * sigma_c * delta_c);
    if (gap > rep.max_gap) {
      rep.max_gap = gap;
      rep.worst_sample = k;
    }
    rep.min_gap = std::min(rep.min_gap, gap);
  }
  return rep;
}

} // namespace cohadm
