#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "cohadm/driver.hpp"
#include "cohadm/errors.hpp"
#include "fixtures.hpp"

using namespace cohadm;

namespace {

const Material kConcrete{30000.0, 0.2, PlaneMode::plane_stress, 1.0};
const CohesiveParams kLaw{3.0, 0.02287, 1.0};

LoadSchedule pull_right(double u_end, std::size_t steps) {
  LoadSchedule s;
  s.bc_set = "right";
  s.direction = Axis::x;
  s.u_end = u_end;
  s.n_steps = steps;
  s.fixed_sets = {{"left", true, false}, {"corner", false, true}};
  return s;
}

SolverState filled(double v, Eigen::Index nu, Eigen::Index nd) {
  SolverState s;
  s.u = Eigen::VectorXd::Constant(nu, v);
  s.delta = Eigen::VectorXd::Constant(nd, v);
  s.y = Eigen::VectorXd::Constant(nd, v);
  return s;
}

struct Recorder : RunObserver {
  std::vector<SolverState> states;
  std::vector<std::vector<double>> histories;
  std::size_t iteration_calls = 0;
  void on_iteration(std::size_t, std::size_t, const Residuals&) override { ++iteration_calls; }
  void on_step(const StepRecord&, const SolverState& s, const CohesiveState& h) override {
    states.push_back(s);
    histories.push_back(h.delta_max);
  }
};

} // namespace

TEST_CASE("extrapolate") {
  const SolverState a = filled(1.0, 4, 2);
  const SolverState b = filled(2.0, 4, 2);
  const SolverState same = extrapolate(a, a);
  CHECK(same.u == a.u);
  CHECK(same.delta == a.delta);
  CHECK(same.y == a.y);
  const SolverState next = extrapolate(b, a);
  CHECK(next.u == Eigen::VectorXd::Constant(4, 3.0));
  CHECK(next.delta == Eigen::VectorXd::Constant(2, 3.0));
  CHECK(next.y == Eigen::VectorXd::Constant(2, 3.0));
}

TEST_CASE("extrapolation quality and gate") {
  const SolverState prev = filled(1.0, 3, 2);
  const SolverState cur = filled(2.0, 3, 2);
  CHECK(std::isinf(extrapolation_quality(cur, prev, cur)));
  CHECK(extrapolation_quality(cur, prev, prev) == doctest::Approx(1.0));
  const ExtrapolationPolicy policy;
  CHECK(should_extrapolate(std::numeric_limits<double>::infinity(), policy));
  CHECK_FALSE(should_extrapolate(1.0, policy));
  CHECK_FALSE(should_extrapolate(2.0, policy));
  CHECK(should_extrapolate(std::nextafter(2.0, 3.0), policy));
  CHECK_FALSE(should_extrapolate(std::numeric_limits<double>::quiet_NaN(), policy));
  ExtrapolationPolicy off;
  off.enabled = false;
  CHECK_FALSE(should_extrapolate(100.0, off));
  off.quality_threshold = 1.0;
  CHECK_THROWS_AS(off.validate(), ConfigError);

  // scaling: the length unit divides u and delta, the force unit divides y
  SolverState p2 = prev, c2 = cur, z2 = prev;
  c2.y *= 10.0;
  const double q = extrapolation_quality(c2, p2, z2, StateScale{1.0, 10.0});
  CHECK(std::isfinite(q));
}

TEST_CASE("schedule and layout validation") {
  const Discretization d = discretize(fixtures::structured_rect(4, 2, 4.0, 2.0), kConcrete);
  LoadSchedule s = pull_right(1e-3, 10);
  CHECK(s.applied(0) == 0.0);
  CHECK(s.applied(10) == doctest::Approx(1e-3));
  s.n_steps = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = pull_right(1e-3, 10);
  s.fixed_sets.push_back({"right", true, true});
  CHECK_THROWS_AS(dirichlet_layout(d.mesh, s), ConfigError);
  s = pull_right(1e-3, 10);
  s.bc_set = "missing";
  CHECK_THROWS_AS(dirichlet_layout(d.mesh, s), ConfigError);
  // a set fixed in y and loaded in x is fine
  s = pull_right(1e-3, 10);
  s.fixed_sets.push_back({"right", false, true});
  const auto layout = dirichlet_layout(d.mesh, s);
  CHECK(std::is_sorted(layout.dofs.begin(), layout.dofs.end()));
  CHECK(layout.values(0.5).sum() == doctest::Approx(0.5 * static_cast<double>(layout.loaded_nodes.size())));
}

TEST_CASE("elastic run: linear response, conforming modulus, exact extrapolation") {
  const InputMesh in = fixtures::structured_rect(8, 3, 80.0, 30.0);
  const Discretization d = discretize(in, kConcrete);
  CohesiveParams strong = kLaw;
  strong.sigma_c = 1e3; // peak traction here is about 4, so nothing activates
  AdmmConfig cfg;
  cfg.c_primal = cfg.c_dual = 1e-9;
  const double u_end = 0.01;
  const LoadSchedule s = pull_right(u_end, 6);
  ExtrapolationPolicy policy;
  Recorder rec;
  const RunOutcome out = run_quasistatic(d, strong, s, cfg, policy, &rec);
  REQUIRE(out.record.steps.size() == 7);
  CHECK(rec.states.size() == 7);
  CHECK(rec.iteration_calls == out.record.total_iterations());
  CHECK(out.record.width == doctest::Approx(80.0));
  CHECK(out.record.height == doctest::Approx(30.0));

  // conforming reference
  std::map<std::size_t, double> bc;
  for (auto n : in.boundary_sets.at("left")) bc[2 * n] = 0.0;
  for (auto n : in.boundary_sets.at("corner")) bc[2 * n + 1] = 0.0;
  for (auto n : in.boundary_sets.at("right")) bc[2 * n] = u_end;
  const Eigen::VectorXd uc = fixtures::conforming_solve(in, kConcrete, bc);
  const double f_ref = fixtures::conforming_reaction(in, kConcrete, uc, in.boundary_sets.at("right")).x();
  const double slope_ref = (f_ref / 30.0) / (u_end / 80.0);

  for (std::size_t k = 0; k < out.record.steps.size(); ++k) {
    const auto& st = out.record.steps[k];
    CHECK(st.step == k);
    CHECK(st.iterations >= 1);
    CHECK(st.u_applied == doctest::Approx(s.applied(k)));
    if (k == 0) {
      CHECK(std::abs(st.avg_stress) < 1e-9);
      continue;
    }
    CHECK(st.avg_stress / st.avg_strain == doctest::Approx(slope_ref).epsilon(1e-3));
    if (k < 3) {
      CHECK_FALSE(st.extrapolated);
      CHECK(std::isnan(st.quality));
    }
  }
  // with the prior three states on a line, the prediction is exact up to solver tolerance
  for (std::size_t k = 2; k + 1 < rec.states.size(); ++k) {
    const SolverState pred = extrapolate(rec.states[k], rec.states[k - 1]);
    const auto& z = rec.states[k + 1];
    const double num = std::sqrt((pred.u - z.u).squaredNorm() + (pred.y - z.y).squaredNorm() +
                                 (pred.delta - z.delta).squaredNorm());
    const double den = std::sqrt(z.u.squaredNorm() + z.y.squaredNorm() + z.delta.squaredNorm());
    CHECK(num <= 1e-6 * den);
  }
  CHECK(out.record.steps.back().extrapolated);
  for (double dm : out.history.delta_max) CHECK(dm == 0.0);
}

TEST_CASE("cracking run: determinism and irreversibility") {
  const Discretization d = discretize(fixtures::structured_rect(6, 2, 60.0, 20.0), kConcrete);
  const LoadSchedule s = pull_right(0.03, 20);
  const AdmmConfig cfg;
  const ExtrapolationPolicy policy;
  Recorder r1, r2;
  const RunOutcome a = run_quasistatic(d, kLaw, s, cfg, policy, &r1);
  const RunOutcome b = run_quasistatic(d, kLaw, s, cfg, policy, &r2);
  REQUIRE(a.record.steps.size() == b.record.steps.size());
  for (std::size_t k = 0; k < a.record.steps.size(); ++k) {
    CHECK(a.record.steps[k].iterations == b.record.steps[k].iterations);
    CHECK(a.record.steps[k].extrapolated == b.record.steps[k].extrapolated);
    CHECK(a.record.steps[k].reaction_force == doctest::Approx(b.record.steps[k].reaction_force).epsilon(1e-12));
  }
  CHECK((a.final_state.u - b.final_state.u).norm() <= 1e-12 * a.final_state.u.norm());

  double prev_diss = 0.0;
  const Eigen::VectorXd areas = d.jump.areas();
  for (std::size_t k = 0; k < r1.histories.size(); ++k) {
    double diss = 0.0;
    for (std::size_t i = 0; i < r1.histories[k].size(); ++i) {
      diss += areas[static_cast<Eigen::Index>(i)] * dissipated_energy(r1.histories[k][i], kLaw);
      if (k > 0) CHECK(r1.histories[k][i] >= r1.histories[k - 1][i]);
    }
    CHECK(diss >= prev_diss);
    prev_diss = diss;
  }
  CHECK(prev_diss > 0.0);
  CHECK(a.record.peak_stress() <= kLaw.sigma_c + cfg.c_dual);
  for (std::size_t i = 0; i < d.jump.num_points(); ++i) CHECK(a.final_state.delta[static_cast<Eigen::Index>(2 * i)] >= 0.0);
}

TEST_CASE("non-convergence aborts with the completed steps") {
  const Discretization d = discretize(fixtures::structured_rect(6, 2, 60.0, 20.0), kConcrete);
  AdmmConfig cfg;
  cfg.max_iters = 3;
  try {
    run_quasistatic(d, kLaw, pull_right(0.03, 10), cfg, ExtrapolationPolicy{});
    FAIL("expected RunAborted");
  } catch (const RunAborted& e) {
    CHECK(e.step() >= 1);
    CHECK(e.partial().steps.size() == e.step());
    CHECK(e.iterations() == 3);
    CHECK(std::string(e.what()).find("load step") != std::string::npos);
  }
}
