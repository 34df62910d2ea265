#include "fixtures.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

namespace fixtures {

InputMesh two_triangle_square() {
  InputMesh m;
  m.nodes = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.boundary_sets = {{"left", {0, 3}}, {"right", {1, 2}}, {"bottom", {0, 1}}, {"top", {2, 3}}};
  return m;
}

namespace {

void add_edge_sets(InputMesh& m, double w, double h) {
  const double tol = 1e-9 * std::max(w, h);
  for (std::size_t i = 0; i < m.nodes.size(); ++i) {
    const Vec2& x = m.nodes[i];
    if (std::abs(x.x()) < tol) m.boundary_sets["left"].push_back(i);
    if (std::abs(x.x() - w) < tol) m.boundary_sets["right"].push_back(i);
    if (std::abs(x.y()) < tol) m.boundary_sets["bottom"].push_back(i);
    if (std::abs(x.y() - h) < tol) m.boundary_sets["top"].push_back(i);
    if (x.norm() < tol) m.boundary_sets["corner"].push_back(i);
  }
}

} // namespace

InputMesh structured_rect(std::size_t nx, std::size_t ny, double w, double h) {
  InputMesh m;
  auto id = [&](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
  for (std::size_t j = 0; j <= ny; ++j) {
    for (std::size_t i = 0; i <= nx; ++i) m.nodes.emplace_back(w * double(i) / double(nx), h * double(j) / double(ny));
  }
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        m.triangles.push_back({a, b, c});
        m.triangles.push_back({a, c, d});
      } else {
        m.triangles.push_back({a, b, d});
        m.triangles.push_back({b, c, d});
      }
    }
  }
  add_edge_sets(m, w, h);
  return m;
}

InputMesh criss_cross_rect(std::size_t nx, std::size_t ny, double w, double h) {
  InputMesh m;
  auto corner = [&](std::size_t i, std::size_t j) { return j * (nx + 1) + i; };
  for (std::size_t j = 0; j <= ny; ++j) {
    for (std::size_t i = 0; i <= nx; ++i) m.nodes.emplace_back(w * double(i) / double(nx), h * double(j) / double(ny));
  }
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t a = corner(i, j), b = corner(i + 1, j), c = corner(i + 1, j + 1), d = corner(i, j + 1);
      const std::size_t o = m.nodes.size();
      m.nodes.push_back((m.nodes[a] + m.nodes[c]) / 2.0);
      m.triangles.push_back({a, b, o});
      m.triangles.push_back({b, c, o});
      m.triangles.push_back({c, d, o});
      m.triangles.push_back({d, a, o});
    }
  }
  add_edge_sets(m, w, h);
  return m;
}

namespace {

InputMesh compact(const InputMesh& in, const std::vector<char>& keep) {
  InputMesh out;
  std::vector<std::size_t> remap(in.nodes.size(), SIZE_MAX);
  for (std::size_t t = 0; t < in.triangles.size(); ++t) {
    if (!keep[t]) continue;
    std::array<std::size_t, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      const std::size_t n = in.triangles[t][k];
      if (remap[n] == SIZE_MAX) {
        remap[n] = out.nodes.size();
        out.nodes.push_back(in.nodes[n]);
      }
      tri[k] = remap[n];
    }
    out.triangles.push_back(tri);
  }
  for (const auto& [name, ids] : in.boundary_sets) {
    auto& dst = out.boundary_sets[name];
    for (auto n : ids) {
      if (remap[n] != SIZE_MAX) dst.push_back(remap[n]);
    }
  }
  return out;
}

} // namespace

InputMesh porous_plate(std::size_t target_elements, std::size_t pores, std::uint64_t seed, double size) {
  const auto n = static_cast<std::size_t>(std::lround(std::sqrt(double(target_elements) / 4.0 / 0.9)));
  const InputMesh base = criss_cross_rect(n, n, size, size);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double radius = 0.06 * size;

  std::vector<Vec2> centres;
  for (std::size_t attempt = 0; centres.size() < pores && attempt < 100000; ++attempt) {
    const Vec2 c(size * (0.2 + 0.6 * uni(rng)), size * (0.1 + 0.8 * uni(rng)));
    bool ok = true;
    for (const auto& o : centres) ok = ok && (c - o).norm() > 4.0 * radius;
    if (ok) centres.push_back(c);
  }
  if (centres.size() < pores) throw std::runtime_error("porous_plate: could not place pores");

  std::vector<char> keep(base.triangles.size(), 1);
  for (std::size_t t = 0; t < base.triangles.size(); ++t) {
    const auto& tri = base.triangles[t];
    const Vec2 g = (base.nodes[tri[0]] + base.nodes[tri[1]] + base.nodes[tri[2]]) / 3.0;
    for (const auto& c : centres) {
      if ((g - c).norm() < radius) keep[t] = 0;
    }
  }
  InputMesh m = compact(base, keep);
  m.validate();
  return m;
}

InputMesh kite() {
  InputMesh m;
  m.nodes = {{0.0, 0.5}, {1.0, 0.0}, {1.0, 1.0}, {2.0, 0.5}};
  m.triangles = {{0, 1, 2}, {1, 3, 2}};
  m.boundary_sets = {{"left", {0}}, {"right", {3}}, {"mid", {1, 2}}};
  return m;
}

namespace {

// Element stiffness from barycentric gradients: grad(lambda_k) are the rows 1..2 of the
// inverse of [[1,1,1],[x0,x1,x2],[y0,y1,y2]]^T.
Eigen::Matrix<double, 6, 6> element_stiffness(const InputMesh& m, std::size_t t, const cohadm::Material& mat) {
  Eigen::Matrix3d P;
  for (int k = 0; k < 3; ++k) {
    const Vec2& x = m.nodes[m.triangles[t][k]];
    P.row(k) << 1.0, x.x(), x.y();
  }
  const Eigen::Matrix3d G = P.inverse(); // column k holds (c, d/dx, d/dy) of lambda_k
  const double area = 0.5 * std::abs(P.determinant());
  Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
  for (int k = 0; k < 3; ++k) {
    const double gx = G(1, k), gy = G(2, k);
    B(0, 2 * k) = gx;
    B(1, 2 * k + 1) = gy;
    B(2, 2 * k) = gy;
    B(2, 2 * k + 1) = gx;
  }
  const double E = mat.youngs_modulus, nu = mat.poisson_ratio;
  Eigen::Matrix3d D;
  if (mat.mode == cohadm::PlaneMode::plane_stress) {
    D << 1, nu, 0, nu, 1, 0, 0, 0, (1 - nu) / 2;
    D *= E / (1 - nu * nu);
  } else {
    D << 1 - nu, nu, 0, nu, 1 - nu, 0, 0, 0, (1 - 2 * nu) / 2;
    D *= E / ((1 + nu) * (1 - 2 * nu));
  }
  return mat.thickness * area * B.transpose() * D * B;
}

Eigen::SparseMatrix<double> conforming_stiffness(const InputMesh& m, const cohadm::Material& mat) {
  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const auto Ke = element_stiffness(m, t, mat);
    for (int a = 0; a < 6; ++a) {
      for (int b = 0; b < 6; ++b) {
        const auto ra = static_cast<int>(2 * m.triangles[t][a / 2] + a % 2);
        const auto cb = static_cast<int>(2 * m.triangles[t][b / 2] + b % 2);
        trip.emplace_back(ra, cb, Ke(a, b));
      }
    }
  }
  const auto n = static_cast<int>(2 * m.nodes.size());
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

} // namespace

Eigen::VectorXd conforming_solve(const InputMesh& mesh, const cohadm::Material& mat,
                                 const std::map<std::size_t, double>& prescribed) {
  const auto K = conforming_stiffness(mesh, mat);
  const auto n = K.rows();
  std::vector<int> free_index(static_cast<std::size_t>(n), -1);
  int nf = 0;
  for (int i = 0; i < n; ++i) {
    if (!prescribed.count(static_cast<std::size_t>(i))) free_index[static_cast<std::size_t>(i)] = nf++;
  }
  Eigen::VectorXd ubc = Eigen::VectorXd::Zero(n);
  for (const auto& [dof, v] : prescribed) ubc[static_cast<Eigen::Index>(dof)] = v;
  const Eigen::VectorXd rhs_full = -(K * ubc);

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd rhs(nf);
  for (int i = 0; i < n; ++i) {
    const int fi = free_index[static_cast<std::size_t>(i)];
    if (fi < 0) continue;
    rhs[fi] = rhs_full[i];
  }
  for (int k = 0; k < K.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it) {
      const int fr = free_index[static_cast<std::size_t>(it.row())];
      const int fc = free_index[static_cast<std::size_t>(it.col())];
      if (fr >= 0 && fc >= 0) trip.emplace_back(fr, fc, it.value());
    }
  }
  Eigen::SparseMatrix<double> Kff(nf, nf);
  Kff.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Kff);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("conforming_solve: singular system");
  const Eigen::VectorXd uf = ldlt.solve(rhs);
  Eigen::VectorXd u = ubc;
  for (int i = 0; i < n; ++i) {
    const int fi = free_index[static_cast<std::size_t>(i)];
    if (fi >= 0) u[i] = uf[fi];
  }
  return u;
}

Vec2 conforming_reaction(const InputMesh& mesh, const cohadm::Material& mat, const Eigen::VectorXd& u,
                         const std::vector<std::size_t>& set) {
  const Eigen::VectorXd f = conforming_stiffness(mesh, mat) * u;
  Vec2 r = Vec2::Zero();
  for (auto n : set) r += Vec2(f[static_cast<Eigen::Index>(2 * n)], f[static_cast<Eigen::Index>(2 * n + 1)]);
  return r;
}

Eigen::VectorXd spread_to_private(const cohadm::BrokenMesh& broken, const Eigen::VectorXd& uc) {
  Eigen::VectorXd u(static_cast<Eigen::Index>(broken.num_dofs()));
  for (std::size_t p = 0; p < broken.nodes.size(); ++p) {
    const auto o = static_cast<Eigen::Index>(broken.origin_of[p]);
    u[static_cast<Eigen::Index>(2 * p)] = uc[2 * o];
    u[static_cast<Eigen::Index>(2 * p + 1)] = uc[2 * o + 1];
  }
  return u;
}

} // namespace fixtures
