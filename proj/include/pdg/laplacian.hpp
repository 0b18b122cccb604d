#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "pdg/common.hpp"
#include "pdg/graph.hpp"

namespace pdg {

/// The (alpha, gamma) pair selecting a member of the parameterized
/// normalized Laplacian family. alpha in [0,1], gamma in (0,1]; gamma = 0
/// is rejected outright (the gamma -> 0 behavior is only observable through
/// limit_check).
struct LaplacianParams {
  double alpha = 1.0;
  double gamma = 1.0;

  LaplacianParams() = default;
  LaplacianParams(double a, double g) : alpha(a), gamma(g) { validate(); }

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw DataError("alpha must lie in [0, 1]");
    if (!(gamma > 0.0 && gamma <= 1.0))
      throw DataError("gamma must lie in (0, 1]");
  }
};

/// The positive diagonal gamma*D + (1-gamma)*I. Fractional powers are taken
/// entrywise, which is well-defined because every entry is positive on
/// graphs without isolated nodes (and >= 1-gamma always).
struct DiagGamma {
  Eigen::VectorXd entries;

  Eigen::VectorXd pow(double p) const {
    return entries.array().pow(p).matrix();
  }
};

inline DiagGamma diag_gamma(const Graph& g, const LaplacianParams& p) {
  p.validate();
  DiagGamma d;
  d.entries = (p.gamma * g.degrees().array() + (1.0 - p.gamma)).matrix();
  return d;
}

/// L^(alpha,gamma) = gamma * Dg^(-alpha) * L * Dg^(alpha-1) with
/// Dg = gamma*D + (1-gamma)*I, applied as three factors: a diagonal scale,
/// the combinatorial Laplacian, another diagonal scale.
class ParamLaplacian {
 public:
  ParamLaplacian(const Graph& g, const LaplacianParams& p)
      : g_(&g), params_(p), lap_(g) {
    p.validate();
    const DiagGamma dg = diag_gamma(g, p);
    left_ = dg.pow(-p.alpha) * p.gamma;
    right_ = dg.pow(p.alpha - 1.0);
  }

  int size() const { return g_->num_nodes(); }
  const LaplacianParams& params() const { return params_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    return left_.cwiseProduct(lap_.apply(right_.cwiseProduct(x)));
  }

  Eigen::MatrixXd dense() const {
    const int n = size();
    if (n > kDenseLimit)
      throw UsageError("dense materialization requested above the dense limit");
    return left_.asDiagonal() * lap_.dense() * right_.asDiagonal();
  }

 private:
  const Graph* g_;
  LaplacianParams params_;
  CombinatorialLaplacian lap_;
  Eigen::VectorXd left_;   // gamma * Dg^(-alpha)
  Eigen::VectorXd right_;  // Dg^(alpha-1)
};

/// P^(alpha,gamma) = I - L^(alpha,gamma). Entrywise non-negative; row sums
/// are exactly 1 at alpha = 1.
class ParamAdjacency {
 public:
  ParamAdjacency(const Graph& g, const LaplacianParams& p) : lap_(g, p) {}

  int size() const { return lap_.size(); }
  const LaplacianParams& params() const { return lap_.params(); }

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
    return x - lap_.apply(x);
  }

  Eigen::MatrixXd dense() const {
    return Eigen::MatrixXd::Identity(lap_.size(), lap_.size()) - lap_.dense();
  }

 private:
  ParamLaplacian lap_;
};

/// Max-abs deviation of (1/gamma) L^(alpha,gamma) from L for each gamma in a
/// strictly decreasing sequence. The deviation shrinks to zero as gamma -> 0.
inline std::vector<double> limit_check(const Graph& g, double alpha,
                                       const std::vector<double>& gammas) {
  if (g.num_nodes() > kDenseLimit)
    throw UsageError("limit_check uses dense evaluation; graph too large");
  for (std::size_t i = 0; i + 1 < gammas.size(); ++i)
    if (!(gammas[i] > gammas[i + 1]))
      throw UsageError("gammas must be strictly decreasing");

  const Eigen::MatrixXd lap = CombinatorialLaplacian(g).dense();
  std::vector<double> dev;
  dev.reserve(gammas.size());
  for (double gamma : gammas) {
    const ParamLaplacian pl(g, LaplacianParams(alpha, gamma));
    dev.push_back(((pl.dense() / gamma) - lap).cwiseAbs().maxCoeff());
  }
  return dev;
}

}  // namespace pdg
