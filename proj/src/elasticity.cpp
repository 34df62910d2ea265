#include "cohadm/elasticity.hpp"

#include <array>
#include <string>
#include <vector>

#include "cohadm/errors.hpp"

namespace cohadm {

void Material::validate() const {
  if (!(youngs_modulus > 0.0)) throw ConfigError("youngs_modulus must be positive");
  if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5)) throw ConfigError("poisson_ratio must lie in (-1, 0.5)");
  if (!(thickness > 0.0)) throw ConfigError("thickness must be positive");
}

Eigen::Matrix3d Material::constitutive() const {
  const double E = youngs_modulus;
  const double nu = poisson_ratio;
  Eigen::Matrix3d D = Eigen::Matrix3d::Zero();
  if (mode == PlaneMode::plane_stress) {
    const double c = E / (1.0 - nu * nu);
    D << c, c * nu, 0.0, c * nu, c, 0.0, 0.0, 0.0, c * (1.0 - nu) / 2.0;
  } else {
    const double c = E / ((1.0 + nu) * (1.0 - 2.0 * nu));
    D << c * (1.0 - nu), c * nu, 0.0, c * nu, c * (1.0 - nu), 0.0, 0.0, 0.0, c * (1.0 - 2.0 * nu) / 2.0;
  }
  return D;
}

Eigen::Matrix<double, 3, 6> cst_strain_matrix(const Vec2& x0, const Vec2& x1, const Vec2& x2) {
  const double two_area = (x1.x() - x0.x()) * (x2.y() - x0.y()) - (x2.x() - x0.x()) * (x1.y() - x0.y());
  if (!(two_area > 0.0)) throw AssemblyError("degenerate or inverted triangle");
  // shape function gradients: dN_i/dx = b_i / 2A, dN_i/dy = c_i / 2A
  const std::array<double, 3> b{x1.y() - x2.y(), x2.y() - x0.y(), x0.y() - x1.y()};
  const std::array<double, 3> c{x2.x() - x1.x(), x0.x() - x2.x(), x1.x() - x0.x()};
  Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
  for (int i = 0; i < 3; ++i) {
    B(0, 2 * i) = b[i];
    B(1, 2 * i + 1) = c[i];
    B(2, 2 * i) = c[i];
    B(2, 2 * i + 1) = b[i];
  }
  return B / two_area;
}

StiffnessMatrix assemble_stiffness(const BrokenMesh& mesh, const Material& mat) {
  mat.validate();
  const Eigen::Matrix3d D = mat.constitutive();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(mesh.triangles.size() * 36);
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec2& x0 = mesh.nodes[tri[0]];
    const Vec2& x1 = mesh.nodes[tri[1]];
    const Vec2& x2 = mesh.nodes[tri[2]];
    const double area = 0.5 * ((x1 - x0).x() * (x2 - x0).y() - (x2 - x0).x() * (x1 - x0).y());
    if (!(area > 0.0)) throw AssemblyError("triangle " + std::to_string(t) + " has non-positive area");
    const auto B = cst_strain_matrix(x0, x1, x2);
    const Eigen::Matrix<double, 6, 6> Ke = mat.thickness * area * B.transpose() * D * B;
    for (int i = 0; i < 6; ++i) {
      const auto gi = static_cast<int>(2 * tri[static_cast<std::size_t>(i / 2)]) + i % 2;
      for (int j = 0; j < 6; ++j) {
        const auto gj = static_cast<int>(2 * tri[static_cast<std::size_t>(j / 2)]) + j % 2;
        trips.emplace_back(gi, gj, Ke(i, j));
      }
    }
  }
  StiffnessMatrix out;
  const auto n = static_cast<Eigen::Index>(mesh.num_dofs());
  out.K.resize(n, n);
  out.K.setFromTriplets(trips.begin(), trips.end());
  return out;
}

double elastic_energy(const StiffnessMatrix& K, const Eigen::VectorXd& u) {
  if (u.size() != K.K.cols()) throw DomainError("displacement size does not match stiffness");
  return 0.5 * u.dot(K.K * u);
}

Vec2 reaction_force(const StiffnessMatrix& K, const JumpOperator& jump, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& y, std::span<const std::size_t> nodes) {
  if (nodes.empty()) throw DomainError("reaction_force: empty node set");
  const Eigen::VectorXd f = K.K * u + jump.A.transpose() * y;
  Vec2 sum = Vec2::Zero();
  for (auto n : nodes) {
    sum.x() += f[static_cast<Eigen::Index>(2 * n)];
    sum.y() += f[static_cast<Eigen::Index>(2 * n + 1)];
  }
  return sum;
}

} // namespace cohadm
