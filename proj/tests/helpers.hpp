#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pdg/graph.hpp"
#include "pdg/laplacian.hpp"
#include "pdg/rng.hpp"
#include "pdg/spectral.hpp"

namespace testutil {

inline pdg::Graph erdos_renyi(pdg::Rng& rng, int n, double p) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < p) edges.emplace_back(i, j);
  return pdg::Graph::from_edges(n, edges);
}

/// Erdos-Renyi resampled until connected.
inline pdg::Graph random_connected(pdg::Rng& rng, int n, double p) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    pdg::Graph g = erdos_renyi(rng, n, p);
    if (g.num_edges() > 0 && pdg::is_connected(g)) return g;
  }
  throw std::runtime_error("failed to sample a connected graph; raise p");
}

/// Random connected graph with every degree <= cap: a random attachment tree
/// plus extra edges inserted only where both endpoints have spare capacity.
inline pdg::Graph random_connected_capped(pdg::Rng& rng, int n, int extra_edges,
                                          int cap) {
  std::vector<std::pair<int, int>> edges;
  std::vector<int> deg(n, 0);
  for (int v = 1; v < n; ++v) {
    int u = -1;
    for (int tries = 0; tries < 10 * n; ++tries) {
      const int cand = static_cast<int>(rng.uniform_int(0, v - 1));
      if (deg[cand] < cap) {
        u = cand;
        break;
      }
    }
    if (u < 0) {
      for (int cand = 0; cand < v; ++cand)
        if (deg[cand] < cap) {
          u = cand;
          break;
        }
    }
    edges.emplace_back(u, v);
    ++deg[u];
    ++deg[v];
  }
  pdg::Graph g = pdg::Graph::from_edges(n, edges);
  int added = 0;
  for (int tries = 0; tries < 100 * extra_edges && added < extra_edges; ++tries) {
    const int a = static_cast<int>(rng.uniform_int(0, n - 1));
    const int b = static_cast<int>(rng.uniform_int(0, n - 1));
    if (a == b || deg[a] >= cap || deg[b] >= cap || g.has_edge(a, b)) continue;
    edges.emplace_back(a, b);
    ++deg[a];
    ++deg[b];
    ++added;
    g = pdg::Graph::from_edges(n, edges);
  }
  return g;
}

/// Dense evaluation of the defining formula, independent of the operator
/// implementation: gamma * Dg^(-alpha) (D - A) Dg^(alpha-1).
inline Eigen::MatrixXd dense_param_laplacian(const pdg::Graph& g, double alpha,
                                             double gamma) {
  const int n = g.num_nodes();
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j : g.neighbors(i)) adj(i, j) = 1.0;
  const Eigen::VectorXd deg = adj.rowwise().sum();
  const Eigen::MatrixXd lap = deg.asDiagonal().toDenseMatrix() - adj;
  const Eigen::ArrayXd dg = gamma * deg.array() + (1.0 - gamma);
  return gamma * dg.pow(-alpha).matrix().asDiagonal() * lap *
         dg.pow(alpha - 1.0).matrix().asDiagonal();
}

inline Eigen::MatrixXd dense_param_adjacency(const pdg::Graph& g, double alpha,
                                             double gamma) {
  return Eigen::MatrixXd::Identity(g.num_nodes(), g.num_nodes()) -
         dense_param_laplacian(g, alpha, gamma);
}

/// Independent eigenpair route for L^(1,gamma): the generalized problem
/// gamma L v = lambda (gamma D + (1-gamma) I) v solved by Cholesky reduction,
/// rather than the similarity-transform path the library uses. Columns are
/// rescaled to unit norm under the same sign convention.
struct DistanceOracle {
  Eigen::VectorXd lambda;  ///< ascending, size n
  Eigen::MatrixXd phi;     ///< n x n unit columns, sign-fixed
};

inline DistanceOracle alpha1_eigens(const pdg::Graph& g, double gamma) {
  const int n = g.num_nodes();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    lap(i, i) = g.degree(i);
    for (int j : g.neighbors(i)) lap(i, j) = -1.0;
  }
  Eigen::MatrixXd dg = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) dg(i, i) = gamma * g.degree(i) + (1.0 - gamma);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma * lap, dg);
  DistanceOracle out;
  out.lambda = es.eigenvalues();
  out.phi = es.eigenvectors();
  for (int c = 0; c < n; ++c) {
    out.phi.col(c).normalize();
    pdg::sign_fix(out.phi.col(c));
  }
  return out;
}

inline double oracle_dt(const DistanceOracle& o, int i, int j, double t) {
  double acc = 0.0;
  for (int k = 1; k < o.phi.cols(); ++k) {
    const double diff = o.phi(i, k) - o.phi(j, k);
    acc += std::exp(-2.0 * t * o.lambda[k]) * diff * diff;
  }
  return std::sqrt(acc);
}

inline double oracle_ds(const DistanceOracle& o, int i, int j) {
  return std::abs(o.phi(i, 1) - o.phi(j, 1));
}

}  // namespace testutil
