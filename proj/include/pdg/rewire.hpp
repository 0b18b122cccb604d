#pragma once

#include <utility>
#include <vector>

#include <json.hpp>

#include "pdg/common.hpp"
#include "pdg/directional.hpp"
#include "pdg/graph.hpp"
#include "pdg/laplacian.hpp"
#include "pdg/spectral.hpp"

namespace pdg {

/// Node with the maximal entry of phi^(1) under the fixed sign convention,
/// ties broken by lowest id.
inline int gradient_node(const EigvecView& view) {
  if (view.vectors.cols() < 2)
    throw UsageError("gradient node requires the first non-trivial eigenvector");
  const auto phi = view.vectors.col(1);
  int arg = 0;
  for (int i = 1; i < phi.size(); ++i)
    if (phi[i] > phi[arg]) arg = i;
  return arg;
}

struct RewireReport {
  int gradient_node = -1;
  std::vector<std::pair<int, int>> added_edges;
  LaplacianParams params;
  double span = 0.0;       ///< max phi - min phi
  double threshold = 0.0;  ///< half the span
  bool degenerate_lambda1 = false;

  nlohmann::json to_json() const {
    nlohmann::json edges = nlohmann::json::array();
    for (auto [u, v] : added_edges) edges.push_back({u, v});
    return {{"gradient_node", gradient_node},
            {"added_edges", edges},
            {"alpha", params.alpha},
            {"gamma", params.gamma},
            {"span", span},
            {"threshold", threshold},
            {"degenerate_lambda1", degenerate_lambda1}};
  }
};

struct RewireResult {
  Graph graph;
  RewireReport report;
};

/// Connects the gradient node to every node that sits in the lower half of
/// the 1-D spectral embedding (phi_grad - phi_i >= half the span) and is not
/// already adjacent to it. phi is computed once on the input graph.
inline RewireResult rewire(const Graph& g, const LaplacianParams& p) {
  const EigvecView view = first_eigvec_view(g, p);
  const Eigen::VectorXd phi = view.vectors.col(1);
  const int grad = gradient_node(view);

  RewireResult out;
  out.report.gradient_node = grad;
  out.report.params = p;
  out.report.span = phi.maxCoeff() - phi.minCoeff();
  out.report.threshold = 0.5 * out.report.span;
  out.report.degenerate_lambda1 = view.degenerate_lambda1;

  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < g.num_nodes(); ++u)
    for (int v : g.neighbors(u))
      if (u < v) edges.emplace_back(u, v);

  for (int i = 0; i < g.num_nodes(); ++i) {
    if (i == grad) continue;
    if (g.has_edge(grad, i)) continue;
    if (phi[grad] - phi[i] >= out.report.threshold) {
      edges.emplace_back(std::min(i, grad), std::max(i, grad));
      out.report.added_edges.emplace_back(i, grad);
    }
  }
  out.graph = Graph::from_edges(g.num_nodes(), edges);
  return out;
}

}  // namespace pdg
