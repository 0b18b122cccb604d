#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "pdg/common.hpp"
#include "pdg/rng.hpp"

namespace pdg::nn {

using Mat = Eigen::MatrixXd;

/// Reverse-mode autodiff handle over a double-precision matrix. Ops build a
/// fresh tape per forward pass; backward() walks it once in reverse
/// topological order. Single-threaded with a fixed reduction order, so a
/// given seed replays bit-identical loss trajectories.
class Tensor {
 public:
  struct Node {
    Mat value;
    Mat grad;
    bool is_param = false;   ///< leaf created with requires_grad
    bool on_grad_path = false;
    std::vector<Tensor> parents;
    std::function<void(Node&)> backward_fn;
  };

  Tensor() = default;
  explicit Tensor(Mat v, bool requires_grad = false)
      : node_(std::make_shared<Node>()) {
    node_->value = std::move(v);
    node_->is_param = requires_grad;
    node_->on_grad_path = requires_grad;
  }

  static Tensor constant(Mat v) { return Tensor(std::move(v), false); }
  static Tensor param(Mat v) { return Tensor(std::move(v), true); }

  bool defined() const { return node_ != nullptr; }
  const Mat& value() const { return node_->value; }
  Mat& value() { return node_->value; }
  const Mat& grad() const { return node_->grad; }
  bool on_grad_path() const { return node_ && node_->on_grad_path; }
  Node* node() const { return node_.get(); }

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }

  void zero_grad() {
    if (node_) node_->grad.setZero(node_->value.rows(), node_->value.cols());
  }

  /// Builds a result node wired to its parents.
  static Tensor make(Mat value, std::vector<Tensor> parents,
                     std::function<void(Node&)> backward_fn) {
    Tensor out(std::move(value), false);
    out.node_->parents = std::move(parents);
    for (const Tensor& p : out.node_->parents)
      if (p.on_grad_path()) out.node_->on_grad_path = true;
    if (out.node_->on_grad_path) out.node_->backward_fn = std::move(backward_fn);
    return out;
  }

 private:
  std::shared_ptr<Node> node_;
};

inline void accumulate(Tensor::Node& parent, const Mat& g) {
  if (!parent.on_grad_path) return;
  parent.grad += g;
}

/// Backpropagates from a scalar loss through the tape.
inline void backward(const Tensor& loss) {
  Tensor::Node* root = loss.node();
  if (root == nullptr || root->value.size() != 1)
    throw UsageError("backward expects a defined scalar tensor");

  std::vector<Tensor::Node*> order;
  std::unordered_set<Tensor::Node*> seen;
  std::vector<std::pair<Tensor::Node*, std::size_t>> stack{{root, 0}};
  seen.insert(root);
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Tensor::Node* p = n->parents[next].node();
      ++next;
      if (seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (Tensor::Node* n : order)
    if (n->on_grad_path) n->grad.setZero(n->value.rows(), n->value.cols());
  root->grad = Mat::Ones(1, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor::Node* n = *it;
    if (n->on_grad_path && n->backward_fn) n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------------------
// Core ops

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) throw UsageError("matmul: inner dimensions disagree");
  return Tensor::make(a.value() * b.value(), {a, b}, [a, b](Tensor::Node& out) {
    accumulate(*a.node(), out.grad * b.value().transpose());
    accumulate(*b.node(), a.value().transpose() * out.grad);
  });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw UsageError("add: shapes disagree");
  return Tensor::make(a.value() + b.value(), {a, b}, [a, b](Tensor::Node& out) {
    accumulate(*a.node(), out.grad);
    accumulate(*b.node(), out.grad);
  });
}

inline Tensor scale(const Tensor& a, double s) {
  return Tensor::make(s * a.value(), {a}, [a, s](Tensor::Node& out) {
    accumulate(*a.node(), s * out.grad);
  });
}

inline Tensor relu(const Tensor& a) {
  return Tensor::make(a.value().cwiseMax(0.0), {a}, [a](Tensor::Node& out) {
    accumulate(*a.node(),
               (a.value().array() > 0.0).select(out.grad.array(), 0.0).matrix());
  });
}

inline Tensor leaky_relu(const Tensor& a, double slope) {
  Mat v = a.value();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (v.data()[i] < 0.0) v.data()[i] *= slope;
  return Tensor::make(std::move(v), {a}, [a, slope](Tensor::Node& out) {
    Mat g = out.grad;
    const Mat& x = a.value();
    for (Eigen::Index i = 0; i < g.size(); ++i)
      if (x.data()[i] < 0.0) g.data()[i] *= slope;
    accumulate(*a.node(), g);
  });
}

inline Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw UsageError("concat_cols: nothing to concatenate");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) throw UsageError("concat_cols: row counts disagree");
    cols += p.cols();
  }
  Mat v(rows, cols);
  Eigen::Index at = 0;
  for (const Tensor& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return Tensor::make(std::move(v), parts, [parts](Tensor::Node& out) {
    Eigen::Index at = 0;
    for (const Tensor& p : parts) {
      accumulate(*p.node(), out.grad.middleCols(at, p.cols()));
      at += p.cols();
    }
  });
}

/// CSR sparse matrix with constant values (aggregation operators).
struct SparseMat {
  int rows = 0;
  int cols = 0;
  std::vector<std::int64_t> offs;
  std::vector<int> idx;
  std::vector<double> vals;

  Mat multiply(const Mat& x) const {
    Mat y = Mat::Zero(rows, x.cols());
    for (int i = 0; i < rows; ++i)
      for (std::int64_t e = offs[i]; e < offs[i + 1]; ++e)
        y.row(i) += vals[e] * x.row(idx[e]);
    return y;
  }

  SparseMat transposed() const {
    SparseMat t;
    t.rows = cols;
    t.cols = rows;
    t.offs.assign(static_cast<std::size_t>(cols) + 1, 0);
    for (int j : idx) ++t.offs[j + 1];
    for (int i = 0; i < cols; ++i) t.offs[i + 1] += t.offs[i];
    t.idx.resize(idx.size());
    t.vals.resize(vals.size());
    std::vector<std::int64_t> at(t.offs.begin(), t.offs.end() - 1);
    for (int i = 0; i < rows; ++i)
      for (std::int64_t e = offs[i]; e < offs[i + 1]; ++e) {
        const int j = idx[e];
        t.idx[at[j]] = i;
        t.vals[at[j]] = vals[e];
        ++at[j];
      }
    return t;
  }

  Mat dense() const {
    Mat d = Mat::Zero(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (std::int64_t e = offs[i]; e < offs[i + 1]; ++e) d(i, idx[e]) = vals[e];
    return d;
  }
};

/// A constant sparse operator together with its transpose for the backward pass.
struct SparseOp {
  std::shared_ptr<const SparseMat> mat;
  std::shared_ptr<const SparseMat> mat_t;

  static SparseOp from(SparseMat m) {
    SparseOp op;
    op.mat_t = std::make_shared<const SparseMat>(m.transposed());
    op.mat = std::make_shared<const SparseMat>(std::move(m));
    return op;
  }
};

inline Tensor spmm(const SparseOp& s, const Tensor& h) {
  if (s.mat->cols != h.rows()) throw UsageError("spmm: dimensions disagree");
  return Tensor::make(s.mat->multiply(h.value()), {h}, [s, h](Tensor::Node& out) {
    accumulate(*h.node(), s.mat_t->multiply(out.grad));
  });
}

inline Tensor gather_rows(const Tensor& a,
                          std::shared_ptr<const std::vector<int>> rows) {
  Mat v(static_cast<Eigen::Index>(rows->size()), a.cols());
  for (std::size_t e = 0; e < rows->size(); ++e)
    v.row(static_cast<Eigen::Index>(e)) = a.value().row((*rows)[e]);
  return Tensor::make(std::move(v), {a}, [a, rows](Tensor::Node& out) {
    if (!a.on_grad_path()) return;
    Mat g = Mat::Zero(a.rows(), a.cols());
    for (std::size_t e = 0; e < rows->size(); ++e)
      g.row((*rows)[e]) += out.grad.row(static_cast<Eigen::Index>(e));
    accumulate(*a.node(), g);
  });
}

/// Row-wise scaling of an E x d matrix by an E x 1 column.
inline Tensor rows_mul(const Tensor& a, const Tensor& w) {
  if (w.cols() != 1 || w.rows() != a.rows())
    throw UsageError("rows_mul: weight must be a column matching a's rows");
  return Tensor::make(a.value().array().colwise() * w.value().col(0).array(),
                      {a, w}, [a, w](Tensor::Node& out) {
                        accumulate(*a.node(),
                                   (out.grad.array().colwise() *
                                    w.value().col(0).array()).matrix());
                        if (w.on_grad_path())
                          accumulate(*w.node(),
                                     (out.grad.array() * a.value().array())
                                         .rowwise()
                                         .sum()
                                         .matrix());
                      });
}

/// Sums rows of an E x d matrix into n bins given by the row's segment id.
inline Tensor segment_sum(const Tensor& a,
                          std::shared_ptr<const std::vector<int>> seg, int n) {
  Mat v = Mat::Zero(n, a.cols());
  for (std::size_t e = 0; e < seg->size(); ++e)
    v.row((*seg)[e]) += a.value().row(static_cast<Eigen::Index>(e));
  return Tensor::make(std::move(v), {a}, [a, seg](Tensor::Node& out) {
    if (!a.on_grad_path()) return;
    Mat g(a.rows(), a.cols());
    for (std::size_t e = 0; e < seg->size(); ++e)
      g.row(static_cast<Eigen::Index>(e)) = out.grad.row((*seg)[e]);
    accumulate(*a.node(), g);
  });
}

/// Softmax within contiguous segments of an E x 1 score column. offsets has
/// one entry per segment boundary (size = #segments + 1).
inline Tensor segment_softmax(const Tensor& scores,
                              std::shared_ptr<const std::vector<std::int64_t>> offsets) {
  if (scores.cols() != 1) throw UsageError("segment_softmax expects a column");
  Mat v(scores.rows(), 1);
  for (std::size_t s = 0; s + 1 < offsets->size(); ++s) {
    const auto lo = (*offsets)[s], hi = (*offsets)[s + 1];
    if (lo == hi) continue;
    const auto block = scores.value().col(0).segment(lo, hi - lo);
    const double mx = block.maxCoeff();
    Eigen::VectorXd ex = (block.array() - mx).exp();
    v.col(0).segment(lo, hi - lo) = ex / ex.sum();
  }
  return Tensor::make(std::move(v), {scores}, [scores, offsets](Tensor::Node& out) {
    Mat g(out.value.rows(), 1);
    for (std::size_t s = 0; s + 1 < offsets->size(); ++s) {
      const auto lo = (*offsets)[s], hi = (*offsets)[s + 1];
      if (lo == hi) continue;
      const auto alpha = out.value.col(0).segment(lo, hi - lo);
      const auto dalpha = out.grad.col(0).segment(lo, hi - lo);
      const double dot = alpha.dot(dalpha);
      g.col(0).segment(lo, hi - lo) =
          alpha.cwiseProduct(dalpha - Eigen::VectorXd::Constant(hi - lo, dot));
    }
    accumulate(*scores.node(), g);
  });
}

/// Inverted dropout; identity when not training or p == 0. The mask is drawn
/// element-wise in row-major order from the given stream.
inline Tensor dropout(const Tensor& a, double p, Rng* rng, bool training) {
  if (!(p >= 0.0 && p < 1.0)) throw UsageError("dropout rate must lie in [0, 1)");
  if (!training || p == 0.0) return a;
  if (rng == nullptr) throw UsageError("dropout in training mode needs a random stream");
  const double keep = 1.0 - p;
  auto mask = std::make_shared<Mat>(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      (*mask)(i, j) = rng->uniform() < keep ? 1.0 / keep : 0.0;
  return Tensor::make(a.value().cwiseProduct(*mask), {a},
                      [a, mask](Tensor::Node& out) {
                        accumulate(*a.node(), out.grad.cwiseProduct(*mask));
                      });
}

inline Tensor softmax_rows(const Tensor& logits) {
  Mat v(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.value().row(i).maxCoeff();
    Eigen::RowVectorXd ex = (logits.value().row(i).array() - mx).exp();
    v.row(i) = ex / ex.sum();
  }
  return Tensor::make(std::move(v), {logits}, [logits](Tensor::Node& out) {
    Mat g(out.value.rows(), out.value.cols());
    for (Eigen::Index i = 0; i < out.value.rows(); ++i) {
      const auto p = out.value.row(i);
      const auto dp = out.grad.row(i);
      const double dot = p.dot(dp);
      g.row(i) = p.cwiseProduct(dp - Eigen::RowVectorXd::Constant(p.cols(), dot));
    }
    accumulate(*logits.node(), g);
  });
}

/// Mean negative log-likelihood of the true class over the masked rows.
/// probs rows must be distributions (post-softmax); the log argument is
/// clamped below at 1e-12.
inline Tensor cross_entropy(const Tensor& probs, const std::vector<int>& labels,
                            std::shared_ptr<const std::vector<int>> mask_idx) {
  if (mask_idx->empty()) throw UsageError("cross entropy over an empty mask");
  if (static_cast<Eigen::Index>(labels.size()) != probs.rows())
    throw UsageError("labels length must match probability rows");
  constexpr double kClamp = 1e-12;
  double acc = 0.0;
  for (int i : *mask_idx) {
    const double p = probs.value()(i, labels[i]);
    acc -= std::log(std::max(p, kClamp));
  }
  const double inv = 1.0 / static_cast<double>(mask_idx->size());
  Mat v(1, 1);
  v(0, 0) = acc * inv;
  auto held_labels = std::make_shared<const std::vector<int>>(labels);
  return Tensor::make(std::move(v), {probs},
                      [probs, held_labels, mask_idx, inv](Tensor::Node& out) {
                        Mat g = Mat::Zero(probs.rows(), probs.cols());
                        const double d = out.grad(0, 0) * inv;
                        for (int i : *mask_idx) {
                          const double p = probs.value()(i, (*held_labels)[i]);
                          if (p > kClamp) g(i, (*held_labels)[i]) -= d / p;
                        }
                        accumulate(*probs.node(), g);
                      });
}

}  // namespace pdg::nn
