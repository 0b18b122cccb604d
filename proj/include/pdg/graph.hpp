#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pdg/common.hpp"

namespace pdg {

/// Undirected simple graph in compressed sparse row form. Each undirected
/// edge is stored in both directions; neighbor lists are strictly increasing;
/// no self-loops. Immutable after construction and safe to share across
/// threads.
class Graph {
 public:
  Graph() = default;

  /// Builds from an arbitrary list of (u, v) pairs: self-loops are dropped,
  /// duplicates and reversed copies collapse to a single undirected edge.
  static Graph from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    if (n < 0) throw DataError("node count must be non-negative");
    std::vector<std::pair<int, int>> dir;
    dir.reserve(edges.size() * 2);
    for (auto [u, v] : edges) {
      if (u < 0 || v < 0 || u >= n || v >= n)
        throw DataError("edge endpoint out of range");
      if (u == v) continue;
      dir.emplace_back(u, v);
      dir.emplace_back(v, u);
    }
    std::sort(dir.begin(), dir.end());
    dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

    Graph g;
    g.n_ = n;
    g.row_offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
    g.col_indices_.reserve(dir.size());
    for (auto [u, v] : dir) {
      ++g.row_offsets_[static_cast<std::size_t>(u) + 1];
      g.col_indices_.push_back(v);
    }
    for (int i = 0; i < n; ++i) g.row_offsets_[i + 1] += g.row_offsets_[i];
    g.edge_count_ = static_cast<std::int64_t>(dir.size()) / 2;
    return g;
  }

  int num_nodes() const { return n_; }
  std::int64_t num_edges() const { return edge_count_; }

  int degree(int v) const {
    return static_cast<int>(row_offsets_[v + 1] - row_offsets_[v]);
  }

  /// Neighbors of v, strictly increasing.
  std::span<const int> neighbors(int v) const {
    return {col_indices_.data() + row_offsets_[v],
            col_indices_.data() + row_offsets_[v + 1]};
  }

  const std::vector<std::int64_t>& row_offsets() const { return row_offsets_; }
  const std::vector<int>& col_indices() const { return col_indices_; }

  bool has_edge(int u, int v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }

  Eigen::VectorXd degrees() const {
    Eigen::VectorXd d(n_);
    for (int i = 0; i < n_; ++i) d[i] = degree(i);
    return d;
  }

  /// Directed half-edges, i.e. 2|E| (u, v) pairs in CSR order.
  std::vector<std::pair<int, int>> directed_edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(col_indices_.size());
    for (int u = 0; u < n_; ++u)
      for (int v : neighbors(u)) out.emplace_back(u, v);
    return out;
  }

 private:
  int n_ = 0;
  std::vector<std::int64_t> row_offsets_{0};
  std::vector<int> col_indices_;
  std::int64_t edge_count_ = 0;
};

/// Parses the edge-list format: one "u v" pair per line, '#' starts a comment
/// line, blank lines are ignored. Node count is max id + 1. Self-loops are
/// stripped and duplicate edges collapse.
inline Graph parse_edge_list(std::string_view text) {
  std::vector<std::pair<int, int>> edges;
  int max_id = -1;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;
    ++line_no;

    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) continue;
    if (line[first] == '#') continue;

    std::istringstream iss{std::string(line)};
    long long u, v;
    std::string extra;
    if (!(iss >> u >> v) || (iss >> extra)) {
      throw DataError("malformed edge at line " + std::to_string(line_no));
    }
    if (u < 0 || v < 0) {
      throw DataError("negative node id at line " + std::to_string(line_no));
    }
    if (u > INT32_MAX || v > INT32_MAX) {
      throw DataError("node id too large at line " + std::to_string(line_no));
    }
    edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
    max_id = std::max({max_id, static_cast<int>(u), static_cast<int>(v)});
  }
  return Graph::from_edges(max_id + 1, edges);
}

inline Graph load_edge_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open edge list: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_edge_list(ss.str());
}

/// Serializes each undirected edge once as "u v" with u < v.
inline std::string to_edge_list(const Graph& g) {
  std::ostringstream out;
  for (int u = 0; u < g.num_nodes(); ++u)
    for (int v : g.neighbors(u))
      if (u < v) out << u << ' ' << v << '\n';
  return out.str();
}

inline void save_edge_list(const Graph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write edge list: " + path);
  out << to_edge_list(g);
}

/// Component label per node, by breadth-first search.
inline std::vector<int> component_labels(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<int> comp(n, -1);
  int next = 0;
  std::vector<int> queue;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    queue.assign(1, s);
    while (!queue.empty()) {
      const int u = queue.back();
      queue.pop_back();
      for (int v : g.neighbors(u)) {
        if (comp[v] < 0) {
          comp[v] = next;
          queue.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

inline bool is_connected(const Graph& g) {
  if (g.num_nodes() < 1) throw DataError("empty graph");
  const auto comp = component_labels(g);
  return std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
}

struct ComponentExtraction {
  Graph graph;
  std::vector<int> old_to_new;  ///< -1 for nodes outside the kept component
  std::vector<int> new_to_old;
};

/// Induced subgraph of the largest connected component, densely re-indexed.
/// Ties between equally sized components go to the one containing the
/// smallest node id (i.e. the earliest BFS label).
inline ComponentExtraction largest_component(const Graph& g) {
  if (g.num_nodes() < 1) throw DataError("empty graph");
  const auto comp = component_labels(g);
  const int ncomp = *std::max_element(comp.begin(), comp.end()) + 1;
  std::vector<int> size(ncomp, 0);
  for (int c : comp) ++size[c];
  int best = 0;
  for (int c = 1; c < ncomp; ++c)
    if (size[c] > size[best]) best = c;  // first label wins ties

  ComponentExtraction out;
  out.old_to_new.assign(g.num_nodes(), -1);
  for (int v = 0; v < g.num_nodes(); ++v) {
    if (comp[v] == best) {
      out.old_to_new[v] = static_cast<int>(out.new_to_old.size());
      out.new_to_old.push_back(v);
    }
  }
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < g.num_nodes(); ++u) {
    if (comp[u] != best) continue;
    for (int v : g.neighbors(u))
      if (u < v) edges.emplace_back(out.old_to_new[u], out.old_to_new[v]);
  }
  out.graph = Graph::from_edges(static_cast<int>(out.new_to_old.size()), edges);
  return out;
}

/// Shortest-path hop distances from a source node (-1 for unreachable).
inline std::vector<int> bfs_distances(const Graph& g, int source) {
  std::vector<int> dist(g.num_nodes(), -1);
  dist[source] = 0;
  std::queue<int> q;
  q.push(source);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : g.neighbors(u)) {
      if (dist[v] < 0) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  return dist;
}

/// Combinatorial Laplacian L = D - A as a matrix-free operator.
class CombinatorialLaplacian {
 public:
  explicit CombinatorialLaplacian(const Graph& g) : g_(&g) {}

  int size() const { return g_->num_nodes(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    const int n = g_->num_nodes();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      double acc = g_->degree(i) * x[i];
      for (int j : g_->neighbors(i)) acc -= x[j];
      y[i] = acc;
    }
    return y;
  }

  Eigen::MatrixXd dense() const {
    const int n = g_->num_nodes();
    if (n > kDenseLimit)
      throw UsageError("dense Laplacian requested above the dense limit");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      m(i, i) = g_->degree(i);
      for (int j : g_->neighbors(i)) m(i, j) = -1.0;
    }
    return m;
  }

 private:
  const Graph* g_;
};

}  // namespace pdg
