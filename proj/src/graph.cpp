#include "hoif/graph.hpp"

#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>

#include <json.hpp>

namespace hoif {

using nlohmann::json;

SkeletonGraph::SkeletonGraph(std::size_t num_joints, std::vector<Edge> edges, std::size_t root,
                             std::vector<std::string> joint_names)
    : num_joints_(num_joints),
      edges_(std::move(edges)),
      root_(root),
      joint_names_(std::move(joint_names)),
      adjacency_(num_joints, num_joints) {
  if (num_joints_ == 0) throw std::invalid_argument("SkeletonGraph: need at least one joint");
  if (root_ >= num_joints_) {
    throw std::invalid_argument("SkeletonGraph: root " + std::to_string(root_) + " out of range");
  }
  for (const Edge& e : edges_) {
    if (e.a >= num_joints_ || e.b >= num_joints_) {
      throw std::invalid_argument("SkeletonGraph: edge (" + std::to_string(e.a) + "," +
                                  std::to_string(e.b) + ") out of range for " +
                                  std::to_string(num_joints_) + " joints");
    }
    if (e.a == e.b) throw std::invalid_argument("SkeletonGraph: self-loop at joint " + std::to_string(e.a));
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw std::invalid_argument("SkeletonGraph: edge weights must be positive and finite");
    }
    adjacency_(e.a, e.b) = e.weight;
    adjacency_(e.b, e.a) = e.weight;
  }
  if (joint_names_.empty()) {
    for (std::size_t j = 0; j < num_joints_; ++j) joint_names_.push_back("j" + std::to_string(j));
  } else if (joint_names_.size() != num_joints_) {
    throw std::invalid_argument("SkeletonGraph: joint_names length does not match num_joints");
  }
  const auto parents = bfs_parents();
  for (std::size_t j = 0; j < num_joints_; ++j) {
    if (parents[j] == num_joints_) {
      throw std::invalid_argument("SkeletonGraph: graph is disconnected (joint " + std::to_string(j) +
                                  " unreachable from root)");
    }
  }
}

std::vector<std::size_t> SkeletonGraph::bfs_parents() const {
  std::vector<std::size_t> parent(num_joints_, num_joints_);
  std::queue<std::size_t> frontier;
  parent[root_] = root_;
  frontier.push(root_);
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v = 0; v < num_joints_; ++v) {
      if (adjacency_(u, v) != 0.0 && parent[v] == num_joints_) {
        parent[v] = u;
        frontier.push(v);
      }
    }
  }
  return parent;
}

std::size_t SkeletonGraph::degree(std::size_t joint) const {
  std::size_t d = 0;
  for (std::size_t v = 0; v < num_joints_; ++v) d += adjacency_(joint, v) != 0.0 ? 1 : 0;
  return d;
}

SkeletonGraph SkeletonGraph::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("skeleton JSON: ") + e.what());
  }
  for (const char* key : {"num_joints", "edges", "root"}) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("skeleton JSON: missing key '") + key + "'");
  }
  const auto n = j.at("num_joints").get<std::size_t>();
  std::vector<double> weights;
  if (j.contains("weights")) weights = j.at("weights").get<std::vector<double>>();
  std::vector<Edge> edges;
  const auto& raw = j.at("edges");
  if (!weights.empty() && weights.size() != raw.size()) {
    throw std::invalid_argument("skeleton JSON: 'weights' length does not match 'edges'");
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!raw[i].is_array() || raw[i].size() != 2) {
      throw std::invalid_argument("skeleton JSON: edge " + std::to_string(i) + " is not an index pair");
    }
    edges.push_back({raw[i][0].get<std::size_t>(), raw[i][1].get<std::size_t>(),
                     weights.empty() ? 1.0 : weights[i]});
  }
  std::vector<std::string> names;
  if (j.contains("joint_names")) names = j.at("joint_names").get<std::vector<std::string>>();
  return SkeletonGraph(n, std::move(edges), j.at("root").get<std::size_t>(), std::move(names));
}

SkeletonGraph SkeletonGraph::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open skeleton file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::string SkeletonGraph::to_json_text() const {
  json j;
  j["num_joints"] = num_joints_;
  j["root"] = root_;
  json edges = json::array();
  bool weighted = false;
  std::vector<double> weights;
  for (const Edge& e : edges_) {
    edges.push_back({e.a, e.b});
    weights.push_back(e.weight);
    weighted = weighted || e.weight != 1.0;
  }
  j["edges"] = edges;
  if (weighted) j["weights"] = weights;
  j["joint_names"] = joint_names_;
  return j.dump(2);
}

SkeletonGraph default_human36m_skeleton() {
  std::vector<Edge> edges = {{0, 1},  {1, 2},  {2, 3},   {0, 4},   {4, 5},   {5, 6},
                             {0, 7},  {7, 8},  {8, 9},   {9, 10},  {8, 11},  {11, 12},
                             {12, 13}, {8, 14}, {14, 15}, {15, 16}};
  std::vector<std::string> names = {"pelvis",     "r_hip",   "r_knee",  "r_ankle", "l_hip",
                                    "l_knee",     "l_ankle", "spine",   "thorax",  "neck",
                                    "head",       "l_shoulder", "l_elbow", "l_wrist",
                                    "r_shoulder", "r_elbow", "r_wrist"};
  return SkeletonGraph(17, std::move(edges), 0, std::move(names));
}

GraphOperators build_operators(const SkeletonGraph& g, std::size_t max_hop) {
  if (max_hop < 1) throw std::invalid_argument("build_operators: max_hop must be >= 1");
  const std::size_t n = g.num_joints();
  Matrix a_tilde = g.adjacency() + Matrix::identity(n);

  GraphOperators ops;
  ops.degrees.resize(n);
  std::vector<double> inv_sqrt(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += a_tilde(i, j);
    ops.degrees[i] = d;
    inv_sqrt[i] = 1.0 / std::sqrt(d);
  }
  ops.s_norm = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) ops.s_norm(i, j) = inv_sqrt[i] * a_tilde(i, j) * inv_sqrt[j];
  // Entry-by-entry so L + S == I holds exactly.
  ops.laplacian = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) ops.laplacian(i, j) = (i == j ? 1.0 : 0.0) - ops.s_norm(i, j);

  ops.s_powers.push_back(ops.s_norm);
  for (std::size_t k = 2; k <= max_hop; ++k) {
    Matrix next = matmul(ops.s_powers.back(), ops.s_norm);
    // Symmetrize rounding so every power stays exactly symmetric.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double avg = 0.5 * (next(i, j) + next(j, i));
        next(i, j) = avg;
        next(j, i) = avg;
      }
    ops.s_powers.push_back(std::move(next));
  }
  return ops;
}

SkeletonGraph random_connected_graph(std::size_t n, double extra_edge_prob, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  std::vector<std::vector<bool>> present(n, std::vector<bool>(n, false));
  for (std::size_t v = 1; v < n; ++v) {
    std::uniform_int_distribution<std::size_t> pick(0, v - 1);
    const std::size_t u = pick(rng);
    edges.push_back({u, v});
    present[u][v] = present[v][u] = true;
  }
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (!present[u][v] && coin(rng) < extra_edge_prob) edges.push_back({u, v});
  return SkeletonGraph(n, std::move(edges), 0);
}

}  // namespace hoif
