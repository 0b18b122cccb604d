#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdg/common.hpp"
#include "pdg/dataset.hpp"
#include "pdg/nn/model.hpp"
#include "pdg/nn/tensor.hpp"
#include "pdg/stats.hpp"

namespace pdg::nn {

/// Adam with L2 weight decay added to the raw gradient.
class Adam {
 public:
  Adam(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::vector<Tensor>& params) {
    if (m_.empty()) {
      for (const Tensor& p : params) {
        m_.push_back(Mat::Zero(p.rows(), p.cols()));
        v_.push_back(Mat::Zero(p.rows(), p.cols()));
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const Mat g = params[i].grad() + wd_ * params[i].value();
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
      params[i].value() -=
          (lr_ / bc1) * m_[i].cwiseQuotient(
                            ((v_[i] / bc2).cwiseSqrt().array() + eps_).matrix());
    }
  }

 private:
  double lr_, wd_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<Mat> m_, v_;
};

// ---------------------------------------------------------------------------
// Metrics

/// Fraction of masked rows whose argmax (ties to the lowest class index)
/// matches the label.
inline double accuracy_from_probs(const Mat& probs, const std::vector<int>& labels,
                                  const std::vector<int>& idx) {
  if (idx.empty()) throw UsageError("accuracy over an empty mask");
  int correct = 0;
  for (int i : idx) {
    int arg = 0;
    for (int c = 1; c < probs.cols(); ++c)
      if (probs(i, c) > probs(i, arg)) arg = c;
    if (arg == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(idx.size());
}

/// Rank-based two-class AUC of the class-1 score, with midranks for ties.
inline double roc_auc_from_scores(const std::vector<double>& scores,
                                  const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw UsageError("roc_auc: scores and labels must align");
  const auto ranks = midranks(scores);
  double pos_rank_sum = 0.0;
  std::int64_t npos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      pos_rank_sum += ranks[i];
      ++npos;
    } else if (labels[i] != 0) {
      throw UsageError("roc_auc needs binary labels");
    }
  }
  const std::int64_t nneg = static_cast<std::int64_t>(labels.size()) - npos;
  if (npos == 0 || nneg == 0)
    throw UsageError("roc_auc needs both classes present");
  return (pos_rank_sum - 0.5 * static_cast<double>(npos) * (npos + 1)) /
         (static_cast<double>(npos) * static_cast<double>(nneg));
}

inline double metric_from_probs(const Mat& probs, const std::vector<int>& labels,
                                const std::vector<int>& idx,
                                const std::string& metric, int num_classes) {
  if (metric == "accuracy") return accuracy_from_probs(probs, labels, idx);
  if (metric == "roc_auc") {
    if (num_classes != 2)
      throw UsageError("roc_auc is defined for two-class tasks only");
    std::vector<double> scores;
    std::vector<int> sub;
    scores.reserve(idx.size());
    sub.reserve(idx.size());
    for (int i : idx) {
      scores.push_back(probs(i, 1));
      sub.push_back(labels[i]);
    }
    return roc_auc_from_scores(scores, sub);
  }
  throw UsageError("unknown metric: " + metric);
}

// ---------------------------------------------------------------------------
// Training

struct TrainReport {
  std::vector<double> train_loss;   ///< per epoch
  std::vector<double> val_metric;   ///< per epoch
  std::vector<double> test_metric;  ///< per epoch (reported at best_epoch)
  int best_epoch = -1;
  double best_val = 0.0;
  double test_at_best = 0.0;
  double wall_seconds = 0.0;  ///< logged, never part of result files

  /// Result-file form: excludes wall time so reruns are byte-identical.
  nlohmann::json to_json() const {
    return {{"epochs", train_loss.size()},
            {"best_epoch", best_epoch},
            {"best_val", best_val},
            {"test_at_best", test_at_best}};
  }

  std::string curves_csv() const {
    std::ostringstream out;
    out << "epoch,train_loss,val_metric,test_metric\n";
    for (std::size_t e = 0; e < train_loss.size(); ++e)
      out << e << ',' << format_double(train_loss[e]) << ','
          << format_double(val_metric[e]) << ',' << format_double(test_metric[e])
          << '\n';
    return out.str();
  }
};

/// Full-batch training with Adam; the best epoch maximizes the validation
/// metric (ties to the earliest epoch) and the test metric is reported there.
inline TrainReport train(Model& model, const Dataset& data) {
  const auto t0 = std::chrono::steady_clock::now();
  const ModelConfig& cfg = model.config();
  data.check();
  if (cfg.metric == "roc_auc" && data.num_classes != 2)
    throw UsageError("roc_auc is defined for two-class tasks only");

  const auto train_idx =
      std::make_shared<const std::vector<int>>(data.mask_indices(data.train_mask));
  const auto val_idx = data.mask_indices(data.val_mask);
  const auto test_idx = data.mask_indices(data.test_mask);
  if (train_idx->empty() || val_idx.empty() || test_idx.empty())
    throw UsageError("training needs non-empty train/val/test masks");

  Tensor x = Tensor::constant(data.features);
  Rng drop = Rng(cfg.seed).derive("dropout");
  Adam opt(cfg.lr, cfg.weight_decay);
  TrainReport rep;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tensor logits = model.forward(x, true, &drop);
    Tensor probs = softmax_rows(logits);
    Tensor loss = cross_entropy(probs, data.labels, train_idx);
    const double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value))
      throw NumericError("non-finite training loss at epoch " +
                         std::to_string(epoch));
    backward(loss);
    opt.step(model.parameters());

    Tensor eval_probs = softmax_rows(model.forward(x, false, nullptr));
    rep.train_loss.push_back(loss_value);
    rep.val_metric.push_back(metric_from_probs(eval_probs.value(), data.labels,
                                               val_idx, cfg.metric,
                                               data.num_classes));
    rep.test_metric.push_back(metric_from_probs(eval_probs.value(), data.labels,
                                                test_idx, cfg.metric,
                                                data.num_classes));
    if (rep.best_epoch < 0 || rep.val_metric.back() > rep.best_val) {
      rep.best_epoch = epoch;
      rep.best_val = rep.val_metric.back();
      rep.test_at_best = rep.test_metric.back();
    }
  }
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

inline TrainReport train(const ModelConfig& cfg, const Dataset& data) {
  Model model(cfg, data);
  return train(model, data);
}

/// Metric of a trained model over an arbitrary mask.
inline double evaluate(Model& model, const Dataset& data,
                       const std::vector<std::uint8_t>& mask,
                       const std::string& metric) {
  std::vector<int> idx;
  for (int i = 0; i < data.num_nodes(); ++i)
    if (mask[i]) idx.push_back(i);
  Tensor probs = softmax_rows(model.forward(Tensor::constant(data.features)));
  return metric_from_probs(probs.value(), data.labels, idx, metric,
                           data.num_classes);
}

}  // namespace pdg::nn
