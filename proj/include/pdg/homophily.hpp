#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "pdg/common.hpp"
#include "pdg/graph.hpp"

namespace pdg {

/// The six homophily measures. h_edge_adjusted and label_informativeness are
/// NaN (with the degenerate flag set) when every node carries the same class.
struct HomophilyReport {
  double h_edge = 0.0;
  double h_node = 0.0;
  double h_class = 0.0;
  double h_edge_adjusted = 0.0;
  double label_informativeness = 0.0;
  double h_agg = 0.0;
  bool has_isolated_nodes = false;   ///< such nodes are skipped in h_node
  bool degenerate_single_class = false;

  nlohmann::json to_json() const {
    auto num = [](double x) -> nlohmann::json {
      if (std::isnan(x)) return nullptr;
      return x;
    };
    return {{"h_edge", num(h_edge)},
            {"h_node", num(h_node)},
            {"h_class", num(h_class)},
            {"h_edge_adjusted", num(h_edge_adjusted)},
            {"label_informativeness", num(label_informativeness)},
            {"h_agg", num(h_agg)},
            {"flags",
             {{"has_isolated_nodes", has_isolated_nodes},
              {"degenerate_single_class", degenerate_single_class}}}};
  }
};

inline HomophilyReport homophily_metrics(const Graph& g,
                                         const std::vector<int>& labels,
                                         int num_classes) {
  const int n = g.num_nodes();
  if (static_cast<int>(labels.size()) != n)
    throw UsageError("labels length must equal node count");
  for (int z : labels)
    if (z < 0 || z >= num_classes) throw UsageError("label out of range");
  if (g.num_edges() == 0) throw DataError("homophily metrics need at least one edge");

  HomophilyReport rep;
  const double half_edges = 2.0 * static_cast<double>(g.num_edges());

  // Edge homophily and per-pair class distribution (over directed half-edges).
  Eigen::MatrixXd pair_prob = Eigen::MatrixXd::Zero(num_classes, num_classes);
  std::int64_t same = 0;
  for (int u = 0; u < n; ++u)
    for (int v : g.neighbors(u)) {
      pair_prob(labels[u], labels[v]) += 1.0;
      if (labels[u] == labels[v]) ++same;
    }
  pair_prob /= half_edges;
  rep.h_edge = static_cast<double>(same) / half_edges;

  // Node homophily, skipping isolated nodes.
  double node_acc = 0.0;
  int counted = 0;
  for (int u = 0; u < n; ++u) {
    const auto nb = g.neighbors(u);
    if (nb.empty()) {
      rep.has_isolated_nodes = true;
      continue;
    }
    int agree = 0;
    for (int v : nb)
      if (labels[v] == labels[u]) ++agree;
    node_acc += static_cast<double>(agree) / static_cast<double>(nb.size());
    ++counted;
  }
  rep.h_node = counted > 0 ? node_acc / counted : std::numeric_limits<double>::quiet_NaN();

  // Class homophily: positive part of the per-class edge-homophily excess.
  std::vector<double> class_deg(num_classes, 0.0), class_same(num_classes, 0.0);
  std::vector<int> class_count(num_classes, 0);
  for (int u = 0; u < n; ++u) {
    ++class_count[labels[u]];
    class_deg[labels[u]] += g.degree(u);
    for (int v : g.neighbors(u))
      if (labels[v] == labels[u]) class_same[labels[u]] += 1.0;
  }
  double hclass = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    if (class_deg[c] <= 0.0) continue;  // no edges incident to this class
    const double hc = class_same[c] / class_deg[c];
    const double excess = hc - static_cast<double>(class_count[c]) / n;
    if (excess > 0.0) hclass += excess;
  }
  rep.h_class = hclass / (num_classes - 1);

  // Degree-weighted class distribution p(c).
  std::vector<double> p(num_classes, 0.0);
  for (int c = 0; c < num_classes; ++c) p[c] = class_deg[c] / half_edges;
  double sum_p2 = 0.0;
  for (double x : p) sum_p2 += x * x;

  int present = 0;
  for (int c = 0; c < num_classes; ++c)
    if (class_count[c] > 0) ++present;
  rep.degenerate_single_class = present <= 1;

  if (rep.degenerate_single_class) {
    rep.h_edge_adjusted = std::numeric_limits<double>::quiet_NaN();
    rep.label_informativeness = std::numeric_limits<double>::quiet_NaN();
  } else {
    rep.h_edge_adjusted = (rep.h_edge - sum_p2) / (1.0 - sum_p2);
    // Label informativeness; 0 * log 0 terms contribute exactly 0.
    double num = 0.0, den = 0.0;
    for (int c1 = 0; c1 < num_classes; ++c1)
      for (int c2 = 0; c2 < num_classes; ++c2)
        if (pair_prob(c1, c2) > 0.0)
          num += pair_prob(c1, c2) * std::log(pair_prob(c1, c2));
    for (double x : p)
      if (x > 0.0) den += x * std::log(x);
    rep.label_informativeness = 2.0 - num / den;
  }

  // Aggregation homophily via M = (A + I) Z, never materializing the n x n
  // similarity matrix: S_ij = M_i . M_j, and the class-wise means only need
  // the per-class sums of M's rows.
  Eigen::MatrixXd agg = Eigen::MatrixXd::Zero(n, num_classes);
  for (int u = 0; u < n; ++u) {
    agg(u, labels[u]) += 1.0;  // self-loop of A + I
    for (int v : g.neighbors(u)) agg(u, labels[v]) += 1.0;
  }
  Eigen::MatrixXd class_sum = Eigen::MatrixXd::Zero(num_classes, num_classes);
  for (int u = 0; u < n; ++u) class_sum.row(labels[u]) += agg.row(u);
  const Eigen::RowVectorXd total_sum = class_sum.colwise().sum();

  int satisfied = 0;
  for (int u = 0; u < n; ++u) {
    const int z = labels[u];
    const double n_same = class_count[z];
    const double n_diff = n - n_same;
    const double mean_same = agg.row(u).dot(class_sum.row(z)) / n_same;
    if (n_diff == 0) {
      ++satisfied;  // empty inter-class multiset counts as satisfying
      continue;
    }
    const double mean_diff =
        agg.row(u).dot(total_sum - class_sum.row(z)) / n_diff;
    if (mean_same >= mean_diff) ++satisfied;
  }
  rep.h_agg = static_cast<double>(satisfied) / n;
  return rep;
}

}  // namespace pdg
