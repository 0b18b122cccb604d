#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pdg/common.hpp"
#include "pdg/graph.hpp"
#include "pdg/laplacian.hpp"
#include "pdg/spectral.hpp"

namespace pdg {

/// Sparse values on the directed-edge pattern of a graph, aligned with CSR
/// order: values[e] belongs to the e-th entry of col_indices.
struct EdgeField {
  const Graph* graph = nullptr;
  Eigen::VectorXd values;  ///< size 2|E|

  double at(int i, int edge_slot) const { return values[edge_slot]; }
};

/// Gradient field of a node signal: entry (i,j) = phi_j - phi_i on edges,
/// antisymmetric on the pattern.
inline EdgeField gradient_field(const Graph& g, const Eigen::VectorXd& phi) {
  if (phi.size() != g.num_nodes())
    throw UsageError("gradient_field: signal length must equal node count");
  EdgeField f;
  f.graph = &g;
  f.values.resize(static_cast<Eigen::Index>(g.col_indices().size()));
  Eigen::Index e = 0;
  for (int i = 0; i < g.num_nodes(); ++i)
    for (int j : g.neighbors(i)) f.values[e++] = phi[j] - phi[i];
  return f;
}

/// Directional average matrix: entrywise absolute value of the field.
inline EdgeField b_av(const EdgeField& field) {
  EdgeField out;
  out.graph = field.graph;
  out.values = field.values.cwiseAbs();
  return out;
}

/// Directional derivative matrix: the field minus the diagonal of its row
/// sums (so every row sums to zero). Off-diagonal values stay on the edge
/// pattern; the diagonal is carried separately.
struct BdxMatrix {
  EdgeField offdiag;
  Eigen::VectorXd diag;  ///< -row sum of the field, per node
};

inline BdxMatrix b_dx(const EdgeField& field) {
  const Graph& g = *field.graph;
  BdxMatrix out;
  out.offdiag = field;
  out.diag.resize(g.num_nodes());
  Eigen::Index e = 0;
  for (int i = 0; i < g.num_nodes(); ++i) {
    double row_sum = 0.0;
    for (int j : g.neighbors(i)) {
      (void)j;
      row_sum += field.values[e++];
    }
    out.diag[i] = -row_sum;
  }
  return out;
}

/// Per-directed-edge features (B_av_ij, B_dx_ij) built from the first
/// non-trivial eigenvector of L^(alpha,gamma). The B_dx diagonal is retained
/// for consumers that add self-pairs.
struct EdgeFeatureTable {
  LaplacianParams params;
  const Graph* graph = nullptr;
  Eigen::VectorXd av;           ///< size 2|E|, CSR-aligned
  Eigen::VectorXd dx;           ///< size 2|E|, CSR-aligned
  Eigen::VectorXd dx_diag;      ///< size n
  bool degenerate_lambda1 = false;

  std::string to_csv() const {
    std::ostringstream out;
    out << "i,j,b_av,b_dx\n";
    Eigen::Index e = 0;
    for (int i = 0; i < graph->num_nodes(); ++i)
      for (int j : graph->neighbors(i)) {
        out << i << ',' << j << ',' << av[e] << ',' << dx[e] << '\n';
        ++e;
      }
    return out.str();
  }
};

/// First non-trivial eigenvector of L^(alpha,gamma), dense when feasible,
/// deflated Lanczos above the dense limit.
inline EigvecView first_eigvec_view(const Graph& g, const LaplacianParams& p) {
  const SpectralDecomposition d =
      (g.num_nodes() <= kDenseLimit)
          ? eig_sym(g, p.gamma, 0, EigMode::dense)
          : eig_sym(g, p.gamma, 1, EigMode::iterative);
  return eigvec_view(d, p.alpha);
}

inline EdgeFeatureTable edge_features(const Graph& g, const LaplacianParams& p) {
  const EigvecView view = first_eigvec_view(g, p);
  const Eigen::VectorXd phi = view.vectors.col(1);
  const EdgeField grad = gradient_field(g, phi);
  const BdxMatrix dx = b_dx(grad);

  EdgeFeatureTable t;
  t.params = p;
  t.graph = &g;
  t.av = grad.values.cwiseAbs();
  t.dx = dx.offdiag.values;
  t.dx_diag = dx.diag;
  t.degenerate_lambda1 = view.degenerate_lambda1;
  return t;
}

}  // namespace pdg
