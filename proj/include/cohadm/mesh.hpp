#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace cohadm {

using Vec2 = Eigen::Vector2d;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Conforming triangulation as read from disk. Triangles are counterclockwise.
struct InputMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<std::size_t, 3>> triangles;
  std::map<std::string, std::vector<std::size_t>> boundary_sets;

  /// Throws TopologyError if an index is out of range, a triangle is not
  /// strictly counterclockwise, or the mesh is not edge-connected.
  void validate() const;

  double signed_area(std::size_t tri) const;
};

/// One side of an interface: a triangle and the local edge (0: v0-v1, 1: v1-v2, 2: v2-v0).
struct EdgeSide {
  std::size_t triangle;
  int local_edge;
};

struct InterfaceEdge {
  EdgeSide minus_side;
  EdgeSide plus_side;
  /// Input-mesh node ids of the segment endpoints, ordered as on the minus side.
  std::array<std::size_t, 2> endpoints;
  Vec2 normal;  // unit, minus -> plus
  Vec2 tangent; // normal rotated +90 degrees
  double length;
};

/// Discontinuous discretization: triangle t owns private nodes 3t, 3t+1, 3t+2.
struct BrokenMesh {
  std::vector<Vec2> nodes;
  std::vector<std::array<std::size_t, 3>> triangles;
  std::vector<std::size_t> origin_of; // private node -> input node
  std::vector<InterfaceEdge> interfaces;
  std::map<std::string, std::vector<std::size_t>> boundary_sets; // input-node ids

  std::size_t num_dofs() const { return 2 * nodes.size(); }
  /// Private copies of every input node in the named set. Throws ConfigError if unknown.
  std::vector<std::size_t> private_nodes_of_set(const std::string& name) const;
  /// Private node owned by `triangle` that is a copy of `input_node`.
  std::size_t private_node(std::size_t triangle, std::size_t input_node) const;
};

/// Node duplication plus interior-edge enumeration. Boundary edges produce no interface.
/// Throws TopologyError on a non-manifold edge.
BrokenMesh break_mesh(const InputMesh& input);

struct InterfaceGaussPoint {
  Vec2 position;
  double effective_area; // weight * edge length * thickness
  std::size_t edge;
};

/// Sparse map from nodal displacements to (normal, tangential) openings.
/// Rows 2i and 2i+1 belong to Gauss point i.
struct JumpOperator {
  SparseMatrix A;
  std::vector<InterfaceGaussPoint> points;

  std::size_t num_points() const { return points.size(); }
  Eigen::VectorXd areas() const;
  double mean_area() const;
};

JumpOperator build_jump_operator(const BrokenMesh& mesh, int gauss_per_edge, double thickness);

/// Gauss-Legendre abscissae on [0, 1] and weights summing to 1.
std::vector<std::pair<double, double>> gauss_rule_unit(int n);

} // namespace cohadm
