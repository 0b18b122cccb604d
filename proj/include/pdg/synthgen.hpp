#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "pdg/common.hpp"
#include "pdg/dataset.hpp"
#include "pdg/graph.hpp"
#include "pdg/rng.hpp"

namespace pdg {

/// Configuration of the synthetic homophily-graph generator.
struct SynthConfig {
  int n = 0;              ///< node count
  int c = 2;              ///< class count
  double mu = 0.5;        ///< homophily coefficient in [0, 1]
  int m = 2;              ///< edges per new node
  int feature_dim = 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (c < 2) throw DataError("class count must be at least 2");
    if (m < 1) throw DataError("edges per new node must be positive");
    if (n < m + 1) throw DataError("node count must be at least m + 1");
    if (!(mu >= 0.0 && mu <= 1.0)) throw DataError("mu must lie in [0, 1]");
    if (feature_dim < 1) throw DataError("feature_dim must be positive");
  }

  nlohmann::json to_json() const {
    return {{"n", n},   {"c", c},           {"mu", mu},
            {"m", m},   {"feature_dim", feature_dim}, {"seed", seed}};
  }

  static SynthConfig from_json(const nlohmann::json& j) {
    SynthConfig cfg;
    if (!j.contains("n")) throw UsageError("generator config: missing n");
    if (!j.contains("c")) throw UsageError("generator config: missing c");
    if (!j.contains("mu")) throw UsageError("generator config: missing mu");
    cfg.n = j.at("n").get<int>();
    cfg.c = j.at("c").get<int>();
    cfg.mu = j.at("mu").get<double>();
    cfg.m = j.value("m", 2);
    cfg.feature_dim = j.value("feature_dim", 2);
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.validate();
    return cfg;
  }
};

/// Shortest circular distance between two distinct classes numbered 0..c-1.
inline int class_distance(int c, int z1, int z2) {
  if (z1 == z2) throw UsageError("class distance is defined only across classes");
  if (z1 < 0 || z1 >= c || z2 < 0 || z2 >= c)
    throw UsageError("class id out of range");
  const int d = std::abs(z1 - z2);
  return std::min(d, c - d);
}

/// Inter-class attachment weights w_d proportional to exp(-d), normalized to
/// sum to 1 over d = 1..floor(c/2).
inline std::vector<double> interclass_weights(int c) {
  const int dmax = c / 2;
  std::vector<double> w(static_cast<std::size_t>(dmax) + 1, 0.0);
  double total = 0.0;
  for (int d = 1; d <= dmax; ++d) {
    w[d] = std::exp(-static_cast<double>(d));
    total += w[d];
  }
  for (int d = 1; d <= dmax; ++d) w[d] /= total;
  return w;
}

/// Class means sit on the unit circle in the first two feature dimensions;
/// unit covariance makes neighbouring classes overlap.
inline Eigen::VectorXd class_mean(int cls, int num_classes, int feature_dim) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(feature_dim);
  const double angle = 2.0 * M_PI * cls / num_classes;
  mean[0] = std::cos(angle);
  if (feature_dim >= 2) mean[1] = std::sin(angle);
  return mean;
}

/// Row i ~ Gaussian(mean of class labels[i], identity).
inline Eigen::MatrixXd sample_features(const std::vector<int>& labels,
                                       const SynthConfig& cfg, Rng& rng) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(labels.size()), cfg.feature_dim);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Eigen::VectorXd mean = class_mean(labels[i], cfg.c, cfg.feature_dim);
    for (int j = 0; j < cfg.feature_dim; ++j)
      x(static_cast<Eigen::Index>(i), j) = mean[j] + rng.normal();
  }
  return x;
}

struct SynthResult {
  Dataset dataset;
  int uniform_fallbacks = 0;  ///< draws where every attachment weight was zero
};

/// Preferential-attachment growth with class-dependent attachment: a seed
/// clique of m+1 uniformly labelled nodes, then each new node draws a
/// uniform class and attaches to m distinct existing nodes sampled without
/// replacement from p_ij = d_j * mu (same class) or
/// d_j * (1-mu) * w_(class distance) (otherwise), normalized over all
/// existing nodes. Splits are a seeded uniform 60/20/20 partition.
inline SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng root(cfg.seed);
  Rng growth = root.derive("growth");

  SynthResult out;
  std::vector<int> labels(cfg.n);
  std::vector<int> degree(cfg.n, 0);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(cfg.n) * cfg.m);

  const std::vector<double> w = interclass_weights(cfg.c);

  // Seed clique on the first m+1 nodes.
  const int seed_size = cfg.m + 1;
  for (int i = 0; i < seed_size; ++i)
    labels[i] = static_cast<int>(growth.uniform_int(0, cfg.c - 1));
  for (int i = 0; i < seed_size; ++i) {
    for (int j = i + 1; j < seed_size; ++j) edges.emplace_back(i, j);
    degree[i] = seed_size - 1;
  }

  std::vector<double> weight;
  for (int v = seed_size; v < cfg.n; ++v) {
    labels[v] = static_cast<int>(growth.uniform_int(0, cfg.c - 1));
    weight.assign(v, 0.0);
    for (int u = 0; u < v; ++u) {
      if (labels[u] == labels[v]) {
        weight[u] = degree[u] * cfg.mu;
      } else {
        weight[u] = degree[u] * (1.0 - cfg.mu) *
                    w[class_distance(cfg.c, labels[v], labels[u])];
      }
    }
    for (int pick = 0; pick < cfg.m; ++pick) {
      int target = growth.discrete(weight);
      if (target < 0) {
        // Every eligible weight is zero (mu at 0 or 1 with no valid class
        // present): fall back to a uniform draw over the remaining nodes.
        ++out.uniform_fallbacks;
        std::vector<int> eligible;
        for (int u = 0; u < v; ++u)
          if (weight[u] >= 0.0) eligible.push_back(u);
        target = eligible[static_cast<std::size_t>(
            growth.uniform_int(0, static_cast<std::int64_t>(eligible.size()) - 1))];
      }
      edges.emplace_back(target, v);
      ++degree[target];
      ++degree[v];
      weight[target] = -1.0;  // without replacement
    }
  }

  out.dataset.graph = Graph::from_edges(cfg.n, edges);
  out.dataset.labels = labels;
  out.dataset.num_classes = cfg.c;

  Rng feat = root.derive("features");
  out.dataset.features = sample_features(labels, cfg, feat);

  Rng split = root.derive("splits");
  std::vector<int> order(cfg.n);
  std::iota(order.begin(), order.end(), 0);
  split.shuffle(order);
  const int n_train = static_cast<int>(std::lround(0.6 * cfg.n));
  const int n_val = static_cast<int>(std::lround(0.2 * cfg.n));
  out.dataset.train_mask.assign(cfg.n, 0);
  out.dataset.val_mask.assign(cfg.n, 0);
  out.dataset.test_mask.assign(cfg.n, 0);
  for (int i = 0; i < cfg.n; ++i) {
    if (i < n_train)
      out.dataset.train_mask[order[i]] = 1;
    else if (i < n_train + n_val)
      out.dataset.val_mask[order[i]] = 1;
    else
      out.dataset.test_mask[order[i]] = 1;
  }
  out.dataset.check();
  return out;
}

}  // namespace pdg
