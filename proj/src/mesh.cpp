#include "cohadm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "cohadm/errors.hpp"

namespace cohadm {

namespace {

struct PairHash {
  std::size_t operator()(const std::pair<std::size_t, std::size_t>& p) const noexcept {
    return std::hash<std::size_t>()(p.first) * 0x9e3779b97f4a7c15ULL ^ std::hash<std::size_t>()(p.second);
  }
};

std::pair<std::size_t, std::size_t> local_edge_nodes(const std::array<std::size_t, 3>& tri, int e) {
  return {tri[static_cast<std::size_t>(e)], tri[static_cast<std::size_t>((e + 1) % 3)]};
}

} // namespace

double InputMesh::signed_area(std::size_t tri) const {
  const auto& t = triangles[tri];
  const Vec2 e1 = nodes[t[1]] - nodes[t[0]];
  const Vec2 e2 = nodes[t[2]] - nodes[t[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

void InputMesh::validate() const {
  const std::size_t n = nodes.size();
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (auto v : triangles[t]) {
      if (v >= n) {
        throw TopologyError("triangle " + std::to_string(t) + " references node " + std::to_string(v) +
                            " but the mesh has " + std::to_string(n) + " nodes");
      }
    }
    if (!(signed_area(t) > 0.0)) {
      throw TopologyError("triangle " + std::to_string(t) + " is degenerate or clockwise");
    }
  }
  for (const auto& [name, ids] : boundary_sets) {
    for (auto v : ids) {
      if (v >= n) throw TopologyError("node set '" + name + "' references node " + std::to_string(v));
    }
  }
  if (triangles.empty()) return;

  // edge-connectivity by union-find over shared edges
  std::vector<std::size_t> parent(triangles.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::unordered_map<std::pair<std::size_t, std::size_t>, std::size_t, PairHash> first_owner;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int e = 0; e < 3; ++e) {
      auto [a, b] = local_edge_nodes(triangles[t], e);
      auto key = std::minmax(a, b);
      auto [it, inserted] = first_owner.emplace(std::pair{key.first, key.second}, t);
      if (!inserted) parent[find(t)] = find(it->second);
    }
  }
  const std::size_t root = find(0);
  for (std::size_t t = 1; t < triangles.size(); ++t) {
    if (find(t) != root) throw TopologyError("mesh is not edge-connected (triangle " + std::to_string(t) + ")");
  }
}

std::vector<std::size_t> BrokenMesh::private_nodes_of_set(const std::string& name) const {
  auto it = boundary_sets.find(name);
  if (it == boundary_sets.end()) throw ConfigError("unknown node set '" + name + "'");
  std::vector<char> in_set;
  for (auto v : it->second) {
    if (v >= in_set.size()) in_set.resize(v + 1, 0);
    in_set[v] = 1;
  }
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < origin_of.size(); ++p) {
    if (origin_of[p] < in_set.size() && in_set[origin_of[p]]) out.push_back(p);
  }
  return out;
}

std::size_t BrokenMesh::private_node(std::size_t triangle, std::size_t input_node) const {
  for (std::size_t j = 0; j < 3; ++j) {
    if (origin_of[3 * triangle + j] == input_node) return 3 * triangle + j;
  }
  throw TopologyError("triangle " + std::to_string(triangle) + " does not own a copy of node " +
                      std::to_string(input_node));
}

BrokenMesh break_mesh(const InputMesh& input) {
  input.validate();

  BrokenMesh out;
  out.boundary_sets = input.boundary_sets;
  out.nodes.reserve(3 * input.triangles.size());
  out.origin_of.reserve(3 * input.triangles.size());
  out.triangles.reserve(input.triangles.size());
  for (std::size_t t = 0; t < input.triangles.size(); ++t) {
    std::array<std::size_t, 3> priv{};
    for (std::size_t j = 0; j < 3; ++j) {
      priv[j] = 3 * t + j;
      out.nodes.push_back(input.nodes[input.triangles[t][j]]);
      out.origin_of.push_back(input.triangles[t][j]);
    }
    out.triangles.push_back(priv);
  }

  // Triangles are visited in increasing id, so the first owner of an edge is the minus side.
  std::unordered_map<std::pair<std::size_t, std::size_t>, EdgeSide, PairHash> open_edges;
  std::unordered_map<std::pair<std::size_t, std::size_t>, int, PairHash> multiplicity;
  for (std::size_t t = 0; t < input.triangles.size(); ++t) {
    for (int e = 0; e < 3; ++e) {
      auto [a, b] = local_edge_nodes(input.triangles[t], e);
      auto mm = std::minmax(a, b);
      std::pair key{mm.first, mm.second};
      int& count = multiplicity[key];
      ++count;
      if (count > 2) {
        throw TopologyError("non-manifold edge (" + std::to_string(a) + ", " + std::to_string(b) +
                            ") is shared by more than two triangles");
      }
      auto it = open_edges.find(key);
      if (it == open_edges.end()) {
        open_edges.emplace(key, EdgeSide{t, e});
        continue;
      }
      const EdgeSide minus = it->second;
      auto [p, q] = local_edge_nodes(input.triangles[minus.triangle], minus.local_edge);
      const Vec2 d = input.nodes[q] - input.nodes[p];
      const double len = d.norm();
      InterfaceEdge edge;
      edge.minus_side = minus;
      edge.plus_side = EdgeSide{t, e};
      edge.endpoints = {p, q};
      // outward normal of a counterclockwise triangle lies to the right of the edge direction
      edge.normal = Vec2(d.y(), -d.x()) / len;
      edge.tangent = Vec2(-edge.normal.y(), edge.normal.x());
      edge.length = len;
      out.interfaces.push_back(edge);
    }
  }
  return out;
}

std::vector<std::pair<double, double>> gauss_rule_unit(int n) {
  // Golub-Welsch would be overkill; the low orders are tabulated.
  switch (n) {
  case 1:
    return {{0.5, 1.0}};
  case 2: {
    const double h = 0.5 / std::sqrt(3.0);
    return {{0.5 - h, 0.5}, {0.5 + h, 0.5}};
  }
  case 3: {
    const double h = 0.5 * std::sqrt(0.6);
    return {{0.5 - h, 5.0 / 18.0}, {0.5, 8.0 / 18.0}, {0.5 + h, 5.0 / 18.0}};
  }
  default:
    throw DomainError("gauss_per_edge must be 1, 2 or 3 (got " + std::to_string(n) + ")");
  }
}

Eigen::VectorXd JumpOperator::areas() const {
  Eigen::VectorXd a(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) a[static_cast<Eigen::Index>(i)] = points[i].effective_area;
  return a;
}

double JumpOperator::mean_area() const {
  if (points.empty()) return 0.0;
  double s = 0.0;
  for (const auto& p : points) s += p.effective_area;
  return s / static_cast<double>(points.size());
}

JumpOperator build_jump_operator(const BrokenMesh& mesh, int gauss_per_edge, double thickness) {
  if (gauss_per_edge < 1) throw DomainError("gauss_per_edge must be >= 1");
  if (!(thickness > 0.0)) throw DomainError("thickness must be positive");
  const auto rule = gauss_rule_unit(gauss_per_edge);

  JumpOperator op;
  const std::size_t npts = mesh.interfaces.size() * rule.size();
  op.points.reserve(npts);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(npts * 16);

  for (std::size_t e = 0; e < mesh.interfaces.size(); ++e) {
    const InterfaceEdge& edge = mesh.interfaces[e];
    const auto [p, q] = edge.endpoints;
    const std::array<std::size_t, 2> minus{mesh.private_node(edge.minus_side.triangle, p),
                                           mesh.private_node(edge.minus_side.triangle, q)};
    const std::array<std::size_t, 2> plus{mesh.private_node(edge.plus_side.triangle, p),
                                          mesh.private_node(edge.plus_side.triangle, q)};
    const Vec2& xp = mesh.nodes[minus[0]];
    const Vec2& xq = mesh.nodes[minus[1]];
    for (const auto& [s, w] : rule) {
      const auto row = static_cast<int>(2 * op.points.size());
      op.points.push_back({(1.0 - s) * xp + s * xq, w * edge.length * thickness, e});
      const std::array<double, 2> shape{1.0 - s, s};
      for (std::size_t k = 0; k < 2; ++k) {
        for (int c = 0; c < 2; ++c) {
          const auto col_plus = static_cast<int>(2 * plus[k]) + c;
          const auto col_minus = static_cast<int>(2 * minus[k]) + c;
          trips.emplace_back(row, col_plus, shape[k] * edge.normal[c]);
          trips.emplace_back(row, col_minus, -shape[k] * edge.normal[c]);
          trips.emplace_back(row + 1, col_plus, shape[k] * edge.tangent[c]);
          trips.emplace_back(row + 1, col_minus, -shape[k] * edge.tangent[c]);
        }
      }
    }
  }
  op.A.resize(static_cast<Eigen::Index>(2 * npts), static_cast<Eigen::Index>(mesh.num_dofs()));
  op.A.setFromTriplets(trips.begin(), trips.end());
  op.A.prune(0.0);
  return op;
}

} // namespace cohadm
