#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "hoif/linalg.hpp"

namespace hoif {

struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 1.0;
};

/// Joint topology of a skeleton. Construction validates the graph:
/// indices in range, no self-loops, connected.
class SkeletonGraph {
 public:
  SkeletonGraph(std::size_t num_joints, std::vector<Edge> edges, std::size_t root,
                std::vector<std::string> joint_names = {});

  std::size_t num_joints() const { return num_joints_; }
  std::size_t root() const { return root_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Matrix& adjacency() const { return adjacency_; }
  const std::vector<std::string>& joint_names() const { return joint_names_; }

  /// Parent of each joint in the BFS tree rooted at root(); root maps to itself.
  std::vector<std::size_t> bfs_parents() const;
  std::size_t degree(std::size_t joint) const;

  /// Parses {"num_joints": N, "edges": [[i,j],...], "root": r} with optional
  /// "weights" and "joint_names" arrays.
  static SkeletonGraph from_json_text(const std::string& text);
  static SkeletonGraph load_json(const std::string& path);
  std::string to_json_text() const;

  friend bool operator==(const SkeletonGraph& a, const SkeletonGraph& b) {
    return a.num_joints_ == b.num_joints_ && a.root_ == b.root_ && a.adjacency_ == b.adjacency_;
  }

 private:
  std::size_t num_joints_;
  std::vector<Edge> edges_;
  std::size_t root_;
  std::vector<std::string> joint_names_;
  Matrix adjacency_;
};

/// The conventional 17-joint Human3.6M skeleton rooted at the pelvis.
///
///   0 pelvis  1 r_hip  2 r_knee  3 r_ankle  4 l_hip  5 l_knee  6 l_ankle
///   7 spine   8 thorax 9 neck   10 head    11 l_shoulder 12 l_elbow
///   13 l_wrist 14 r_shoulder 15 r_elbow 16 r_wrist
SkeletonGraph default_human36m_skeleton();

/// Normalized operators of a skeleton: S = D̃^{-1/2}(A + I)D̃^{-1/2}, L = I - S,
/// and the matrix powers S^1..S^K.
struct GraphOperators {
  Matrix s_norm;
  Matrix laplacian;
  std::vector<Matrix> s_powers;  // s_powers[k - 1] == S^k
  std::vector<double> degrees;   // diagonal of D̃

  std::size_t num_nodes() const { return s_norm.rows(); }
  std::size_t max_hop() const { return s_powers.size(); }
  const Matrix& power(std::size_t k) const { return s_powers.at(k - 1); }
};

GraphOperators build_operators(const SkeletonGraph& g, std::size_t max_hop);

/// Random connected graph: a random spanning tree plus extra edges with the
/// given probability. Used by tests and the fairing demonstration.
SkeletonGraph random_connected_graph(std::size_t n, double extra_edge_prob, unsigned long long seed);

}  // namespace hoif
