#pragma once

#include <span>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "cohadm/mesh.hpp"

namespace cohadm {

enum class PlaneMode { plane_stress, plane_strain };

struct Material {
  double youngs_modulus = 1.0;
  double poisson_ratio = 0.0;
  PlaneMode mode = PlaneMode::plane_stress;
  double thickness = 1.0;

  /// Throws ConfigError when E <= 0, nu outside (-1, 0.5) or thickness <= 0.
  void validate() const;
  /// 3x3 constitutive matrix in Voigt order (xx, yy, 2xy).
  Eigen::Matrix3d constitutive() const;
};

/// Block-diagonal stiffness over broken-mesh DOFs (node-major: ux, uy per node).
struct StiffnessMatrix {
  SparseMatrix K;
};

/// Constant-strain triangle B matrix (3x6) for the given corner coordinates.
Eigen::Matrix<double, 3, 6> cst_strain_matrix(const Vec2& x0, const Vec2& x1, const Vec2& x2);

StiffnessMatrix assemble_stiffness(const BrokenMesh& mesh, const Material& mat);

/// 0.5 u^T K u
double elastic_energy(const StiffnessMatrix& K, const Eigen::VectorXd& u);

/// Sum of internal nodal forces K u + A^T y over the private nodes in `nodes`.
/// At a converged state this is the external load carried by those nodes.
/// Throws DomainError when `nodes` is empty.
Vec2 reaction_force(const StiffnessMatrix& K, const JumpOperator& jump, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& y, std::span<const std::size_t> nodes);

} // namespace cohadm
