#include "cohadm/admm.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include <Eigen/QR>
#include <cholmod.h>

#include "cohadm/parallel.hpp"

namespace cohadm {

namespace {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

void fnv_mix(std::uint64_t& h, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xffU;
    h *= 0x100000001b3ULL;
  }
}

double inf_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

/// Rigid motions (2 translations, 1 rotation) not pinned down by the constrained DOFs.
int count_free_rigid_modes(std::span<const Vec2> nodes, const std::vector<std::size_t>& dofs) {
  if (dofs.empty()) return 3;
  Vec2 centre = Vec2::Zero();
  for (const auto& x : nodes) centre += x;
  centre /= static_cast<double>(nodes.size());
  double scale = 0.0;
  for (const auto& x : nodes) scale = std::max(scale, (x - centre).norm());
  if (scale == 0.0) scale = 1.0;

  Eigen::MatrixXd modes(static_cast<Eigen::Index>(dofs.size()), 3);
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    const std::size_t node = dofs[k] / 2;
    const bool is_x = dofs[k] % 2 == 0;
    const Vec2 r = (nodes[node] - centre) / scale;
    const auto row = static_cast<Eigen::Index>(k);
    modes(row, 0) = is_x ? 1.0 : 0.0;
    modes(row, 1) = is_x ? 0.0 : 1.0;
    modes(row, 2) = is_x ? -r.y() : r.x();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(modes);
  qr.setThreshold(1e-10);
  return 3 - static_cast<int>(qr.rank());
}

} // namespace

SolverState SolverState::zeros(std::size_t num_dofs, std::size_t num_points) {
  SolverState s;
  s.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_dofs));
  s.delta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * num_points));
  s.y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * num_points));
  return s;
}

void AdmmConfig::validate() const {
  if (!(alpha > 1.0)) throw ConfigError("admm.alpha must exceed 1");
  if (!(c_primal > 0.0)) throw ConfigError("admm.c_primal must be positive");
  if (!(c_dual > 0.0)) throw ConfigError("admm.c_dual must be positive");
  if (max_iters == 0) throw ConfigError("admm.max_iters must be at least 1");
  if (rho_override < 0.0) throw ConfigError("admm.rho must be positive when given");
}

double penalty_from_alpha(double alpha, double mean_area, const CohesiveParams& params) {
  return alpha * mean_area * params.sigma_c / params.delta_c;
}

Eigen::VectorXd primal_pressure_residual(const JumpOperator& jump, const Eigen::VectorXd& u,
                                         const Eigen::VectorXd& delta, double rho) {
  Eigen::VectorXd r = rho * (jump.A * u - delta);
  for (std::size_t i = 0; i < jump.points.size(); ++i) {
    r.segment<2>(static_cast<Eigen::Index>(2 * i)) /= jump.points[i].effective_area;
  }
  return r;
}

Eigen::VectorXd dual_pressure_residual(const JumpOperator& jump, const Eigen::VectorXd& delta_new,
                                       const Eigen::VectorXd& delta_old, double rho) {
  Eigen::VectorXd d = delta_new - delta_old;
  for (std::size_t i = 0; i < jump.points.size(); ++i) {
    d.segment<2>(static_cast<Eigen::Index>(2 * i)) /= jump.points[i].effective_area;
  }
  return rho * (jump.A.transpose() * d);
}

ConvergenceCheck check_convergence(const JumpOperator& jump, const SolverState& state,
                                   const Eigen::VectorXd& prev_delta, double rho, const AdmmConfig& config) {
  Residuals r;
  r.primal = inf_norm(primal_pressure_residual(jump, state.u, state.delta, rho));
  r.dual = inf_norm(dual_pressure_residual(jump, state.delta, prev_delta, rho));
  return {r, r.primal < config.c_primal && r.dual < config.c_dual};
}

// ---------------------------------------------------------------------------

namespace {

/// Cholesky of a symmetric matrix given by its lower triangle, through CHOLMOD's C API.
/// Simplicial LDL' with a fixed AMD ordering: on these banded 2D operators the
/// column-by-column solve beats the supernodal one, and a single ordering keeps runs
/// reproducible. Solves reuse workspaces, so one instance must not be shared
/// between concurrent solves.
class SparseCholesky {
public:
  SparseCholesky() {
    cholmod_start(&common_);
    common_.supernodal = CHOLMOD_SIMPLICIAL;
    common_.nmethods = 1;
    common_.method[0].ordering = CHOLMOD_AMD;
    common_.postorder = 1;
  }
  ~SparseCholesky() {
    for (cholmod_dense** d : {&x_, &y_, &e_}) {
      if (*d) cholmod_free_dense(d, &common_);
    }
    if (factor_) cholmod_free_factor(&factor_, &common_);
    cholmod_finish(&common_);
  }
  SparseCholesky(const SparseCholesky&) = delete;
  SparseCholesky& operator=(const SparseCholesky&) = delete;

  /// False when the matrix is not positive definite.
  bool compute(ColMatrix& lower) {
    lower.makeCompressed();
    cholmod_sparse a{};
    a.nrow = a.ncol = static_cast<std::size_t>(lower.rows());
    a.nzmax = static_cast<std::size_t>(lower.nonZeros());
    a.p = lower.outerIndexPtr();
    a.i = lower.innerIndexPtr();
    a.x = lower.valuePtr();
    a.stype = -1;
    a.itype = CHOLMOD_INT;
    a.xtype = CHOLMOD_REAL;
    a.dtype = CHOLMOD_DOUBLE;
    a.sorted = 1;
    a.packed = 1;
    factor_ = cholmod_analyze(&a, &common_);
    if (!factor_) return false;
    cholmod_factorize(&a, factor_, &common_);
    return common_.status == CHOLMOD_OK && factor_->minor == factor_->n;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    cholmod_dense bd{};
    bd.nrow = bd.nzmax = bd.d = static_cast<std::size_t>(rhs.size());
    bd.ncol = 1;
    bd.x = const_cast<double*>(rhs.data()); // read only
    bd.xtype = CHOLMOD_REAL;
    bd.dtype = CHOLMOD_DOUBLE;
    cholmod_solve2(CHOLMOD_A, factor_, &bd, nullptr, &x_, nullptr, &y_, &e_, &common_);
    if (!x_) throw AssemblyError("sparse triangular solve failed");
    return Eigen::Map<const Eigen::VectorXd>(static_cast<const double*>(x_->x), rhs.size());
  }

  /// Numeric values and fill-reducing permutation of the factor, for fingerprinting.
  std::span<const double> values() const {
    const std::size_t nnz = factor_->is_super ? factor_->xsize : factor_->nzmax;
    return {static_cast<const double*>(factor_->x), nnz};
  }
  std::span<const int> permutation() const { return {static_cast<const int*>(factor_->Perm), factor_->n}; }

private:
  mutable cholmod_common common_{};
  cholmod_factor* factor_ = nullptr;
  mutable cholmod_dense* x_ = nullptr;
  mutable cholmod_dense* y_ = nullptr;
  mutable cholmod_dense* e_ = nullptr;
};

} // namespace

struct SystemFactorization::Impl {
  double rho = 0.0;
  std::size_t n = 0;
  std::vector<std::size_t> dirichlet;
  std::vector<Eigen::Index> free_of;  // dof -> free index or -1
  std::vector<Eigen::Index> fixed_of; // dof -> constrained index or -1
  std::vector<std::size_t> free_dofs;
  ColMatrix reduced;  // free x free
  ColMatrix coupling; // free x constrained
  SparseCholesky llt;
};

SystemFactorization::SystemFactorization(const StiffnessMatrix& K, const JumpOperator& jump, double rho,
                                         std::vector<std::size_t> dirichlet_dofs, std::span<const Vec2> nodes)
    : impl_(std::make_unique<Impl>()) {
  if (!(rho > 0.0)) throw ConfigError("penalty rho must be positive");
  auto& m = *impl_;
  m.rho = rho;
  m.n = static_cast<std::size_t>(K.K.rows());
  std::sort(dirichlet_dofs.begin(), dirichlet_dofs.end());
  if (std::adjacent_find(dirichlet_dofs.begin(), dirichlet_dofs.end()) != dirichlet_dofs.end()) {
    throw ConfigError("a DOF is constrained more than once");
  }
  for (auto d : dirichlet_dofs) {
    if (d >= m.n) throw ConfigError("Dirichlet DOF " + std::to_string(d) + " out of range");
  }
  m.dirichlet = std::move(dirichlet_dofs);

  const int free_modes = count_free_rigid_modes(nodes, m.dirichlet);
  if (free_modes > 0) {
    throw SingularSystemError("system matrix is singular: " + std::to_string(free_modes) +
                                  " rigid-body mode(s) are not removed by the Dirichlet constraints",
                              free_modes);
  }

  m.free_of.assign(m.n, -1);
  m.fixed_of.assign(m.n, -1);
  for (std::size_t k = 0; k < m.dirichlet.size(); ++k) m.fixed_of[m.dirichlet[k]] = static_cast<Eigen::Index>(k);
  for (std::size_t d = 0; d < m.n; ++d) {
    if (m.fixed_of[d] < 0) {
      m.free_of[d] = static_cast<Eigen::Index>(m.free_dofs.size());
      m.free_dofs.push_back(d);
    }
  }

  const ColMatrix At = ColMatrix(jump.A.transpose());
  const ColMatrix full = ColMatrix(K.K) + rho * (At * ColMatrix(jump.A));
  std::vector<Eigen::Triplet<double>> ff;
  std::vector<Eigen::Triplet<double>> fc;
  ff.reserve(static_cast<std::size_t>(full.nonZeros()));
  for (Eigen::Index col = 0; col < full.outerSize(); ++col) {
    for (ColMatrix::InnerIterator it(full, col); it; ++it) {
      const auto row = static_cast<std::size_t>(it.row());
      const auto c = static_cast<std::size_t>(col);
      if (m.free_of[row] < 0) continue;
      if (m.free_of[c] >= 0) {
        ff.emplace_back(m.free_of[row], m.free_of[c], it.value());
      } else {
        fc.emplace_back(m.free_of[row], m.fixed_of[c], it.value());
      }
    }
  }
  const auto nf = static_cast<Eigen::Index>(m.free_dofs.size());
  m.reduced.resize(nf, nf);
  m.reduced.setFromTriplets(ff.begin(), ff.end());
  m.coupling.resize(nf, static_cast<Eigen::Index>(m.dirichlet.size()));
  m.coupling.setFromTriplets(fc.begin(), fc.end());

  ColMatrix lower = m.reduced.triangularView<Eigen::Lower>();
  if (!m.llt.compute(lower)) {
    throw SingularSystemError("Cholesky factorization of K + rho A^T A failed (matrix not positive definite)", 0);
  }
}

SystemFactorization::~SystemFactorization() = default;
SystemFactorization::SystemFactorization(SystemFactorization&&) noexcept = default;
SystemFactorization& SystemFactorization::operator=(SystemFactorization&&) noexcept = default;

Eigen::VectorXd SystemFactorization::solve(const Eigen::VectorXd& rhs, const Eigen::VectorXd& bc_values) const {
  const auto& m = *impl_;
  if (static_cast<std::size_t>(bc_values.size()) != m.dirichlet.size()) {
    throw DomainError("bc_values length does not match the Dirichlet DOF count");
  }
  Eigen::VectorXd rf(static_cast<Eigen::Index>(m.free_dofs.size()));
  for (std::size_t k = 0; k < m.free_dofs.size(); ++k) {
    rf[static_cast<Eigen::Index>(k)] = rhs[static_cast<Eigen::Index>(m.free_dofs[k])];
  }
  if (m.coupling.cols() > 0) rf -= m.coupling * bc_values;
  const Eigen::VectorXd uf = m.llt.solve(rf);

  Eigen::VectorXd u(static_cast<Eigen::Index>(m.n));
  for (std::size_t k = 0; k < m.free_dofs.size(); ++k) {
    u[static_cast<Eigen::Index>(m.free_dofs[k])] = uf[static_cast<Eigen::Index>(k)];
  }
  for (std::size_t k = 0; k < m.dirichlet.size(); ++k) {
    u[static_cast<Eigen::Index>(m.dirichlet[k])] = bc_values[static_cast<Eigen::Index>(k)];
  }
  return u;
}

double SystemFactorization::rho() const { return impl_->rho; }
std::size_t SystemFactorization::num_dofs() const { return impl_->n; }
const std::vector<std::size_t>& SystemFactorization::dirichlet_dofs() const { return impl_->dirichlet; }

std::uint64_t SystemFactorization::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto& m = *impl_;
  for (Eigen::Index k = 0; k < m.reduced.nonZeros(); ++k) {
    fnv_mix(h, std::bit_cast<std::uint64_t>(m.reduced.valuePtr()[k]));
    fnv_mix(h, static_cast<std::uint64_t>(m.reduced.innerIndexPtr()[k]));
  }
  for (double v : m.llt.values()) fnv_mix(h, std::bit_cast<std::uint64_t>(v));
  for (int p : m.llt.permutation()) fnv_mix(h, static_cast<std::uint64_t>(p));
  return h;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd u_update(const SystemFactorization& fact, const JumpOperator& jump, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& delta, const Eigen::VectorXd& bc_values) {
  const Eigen::VectorXd rhs = -(jump.A.transpose() * (y - fact.rho() * delta));
  return fact.solve(rhs, bc_values);
}

Eigen::VectorXd delta_update(const JumpOperator& jump, const Eigen::VectorXd& jump_of_u, const Eigen::VectorXd& y,
                             double rho, const CohesiveState& history, const CohesiveParams& params) {
  const auto npts = static_cast<std::ptrdiff_t>(jump.points.size());
  Eigen::VectorXd delta(2 * npts);
#ifdef COHADM_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(worker_threads())
#endif
  for (std::ptrdiff_t i = 0; i < npts; ++i) {
    const Vec2 p = y.segment<2>(2 * i) + rho * jump_of_u.segment<2>(2 * i);
    delta.segment<2>(2 * i) = solve_local(p, jump.points[static_cast<std::size_t>(i)].effective_area,
                                          history.delta_max[static_cast<std::size_t>(i)], rho, params);
  }
  return delta;
}

Eigen::VectorXd multiplier_update(const Eigen::VectorXd& y, double rho, const Eigen::VectorXd& jump_of_u,
                                  const Eigen::VectorXd& delta) {
  return y + rho * (jump_of_u - delta);
}

// ---------------------------------------------------------------------------

AdmmSolver::AdmmSolver(const BrokenMesh& mesh, const StiffnessMatrix& K, const JumpOperator& jump,
                       const CohesiveParams& params, const AdmmConfig& config, std::vector<std::size_t> dirichlet_dofs)
    : jump_(jump),
      areas_(jump.areas()),
      params_(params),
      config_(config),
      rho_([&] {
        config.validate();
        params.validate();
        return config.rho_override > 0.0 ? config.rho_override
                                         : penalty_from_alpha(config.alpha, jump.mean_area(), params);
      }()),
      fact_(K, jump, rho_, std::move(dirichlet_dofs), mesh.nodes) {
  for (std::size_t i = 0; i < jump.points.size(); ++i) {
    const double bound = params.convexity_bound(jump.points[i].effective_area);
    if (!(rho_ > bound)) {
      std::ostringstream os;
      os << "penalty rho = " << rho_ << " violates the local convexity bound " << bound << " at Gauss point " << i
         << "; increase admm.alpha";
      throw ConfigError(os.str());
    }
  }
}

Residuals AdmmSolver::iterate(SolverState& state, const Eigen::VectorXd& bc_values,
                              const CohesiveState& history) const {
  state.u = u_update(fact_, jump_, state.y, state.delta, bc_values);
  const Eigen::VectorXd Au = jump_.A * state.u;
  Eigen::VectorXd delta_new = delta_update(jump_, Au, state.y, rho_, history, params_);

  Eigen::VectorXd gap = Au - delta_new;
  state.y.noalias() += rho_ * gap;

  Eigen::VectorXd change = delta_new - state.delta;
  const auto npts = static_cast<Eigen::Index>(areas_.size());
  for (Eigen::Index i = 0; i < npts; ++i) {
    const double inv = 1.0 / areas_[i];
    gap.segment<2>(2 * i) *= rho_ * inv;
    change.segment<2>(2 * i) *= inv;
  }
  state.delta = std::move(delta_new);

  Residuals r;
  r.primal = inf_norm(gap);
  r.dual = rho_ * inf_norm(jump_.A.transpose() * change);
  return r;
}

StepResult AdmmSolver::run_step(const SolverState& start, const Eigen::VectorXd& bc_values, CohesiveState& history,
                                const IterationObserver& observer) const {
  StepResult out;
  out.state = start;
  Residuals last;
  for (std::size_t k = 1; k <= config_.max_iters; ++k) {
    last = iterate(out.state, bc_values, history);
    out.history.push_back(last);
    out.iterations = k;
    if (observer) observer(k, last);
    if (last.primal < config_.c_primal && last.dual < config_.c_dual) {
      out.converged = true;
      history.commit(out.state.delta, params_);
      return out;
    }
  }
  std::ostringstream os;
  os << "ADMM did not converge in " << config_.max_iters << " iterations (primal " << last.primal << ", dual "
     << last.dual << ")";
  throw NonConvergenceError(os.str(), last, config_.max_iters);
}

} // namespace cohadm
