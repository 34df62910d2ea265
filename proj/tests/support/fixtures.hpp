#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cohadm/elasticity.hpp"
#include "cohadm/mesh.hpp"

namespace fixtures {

using cohadm::InputMesh;
using cohadm::Vec2;

/// Unit square split along its (0,0)-(1,1) diagonal. Sets: left, right, bottom, top.
InputMesh two_triangle_square();

/// nx by ny cells on [0,w]x[0,h], two triangles per cell with alternating diagonals.
/// Sets: left, right, bottom, top, corner (the origin).
InputMesh structured_rect(std::size_t nx, std::size_t ny, double w, double h);

/// Each cell split into 4 triangles through its centre.
InputMesh criss_cross_rect(std::size_t nx, std::size_t ny, double w, double h);

/// Square plate of side `size` with circular pores placed at random but at least one
/// diameter apart and away from the loaded edges. Triangles whose centroid falls in a
/// pore are removed. Roughly `target_elements` triangles remain.
InputMesh porous_plate(std::size_t target_elements, std::size_t pores, std::uint64_t seed, double size = 200.0);

/// Two triangles L-B-T and B-R-T meeting on the vertical segment x = 1.
/// Sets: left = {L}, right = {R}, mid = {B, T}.
InputMesh kite();

/// Reference solution on the conforming (unbroken) mesh. `prescribed` maps an input DOF
/// (2 * node + component) to its value. Uses its own element routine and a dense-free
/// sparse LDLT, sharing nothing with the library except the mesh type.
Eigen::VectorXd conforming_solve(const InputMesh& mesh, const cohadm::Material& mat,
                                 const std::map<std::size_t, double>& prescribed);

/// Sum of internal x/y forces on the nodes of `set` for a conforming solution.
Vec2 conforming_reaction(const InputMesh& mesh, const cohadm::Material& mat, const Eigen::VectorXd& u,
                         const std::vector<std::size_t>& set);

/// Broken-mesh displacement field obtained by copying a conforming field to private nodes.
Eigen::VectorXd spread_to_private(const cohadm::BrokenMesh& broken, const Eigen::VectorXd& u_conforming);

} // namespace fixtures
