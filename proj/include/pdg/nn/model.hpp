#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdg/common.hpp"
#include "pdg/dataset.hpp"
#include "pdg/directional.hpp"
#include "pdg/graph.hpp"
#include "pdg/laplacian.hpp"
#include "pdg/nn/tensor.hpp"
#include "pdg/rewire.hpp"
#include "pdg/rng.hpp"

namespace pdg::nn {

enum class Arch { gcn, gat, pd_gcn, pd_gat };

inline Arch arch_from_string(const std::string& s) {
  if (s == "gcn") return Arch::gcn;
  if (s == "gat") return Arch::gat;
  if (s == "pd-gcn") return Arch::pd_gcn;
  if (s == "pd-gat") return Arch::pd_gat;
  throw UsageError("unknown architecture: " + s);
}

inline std::string to_string(Arch a) {
  switch (a) {
    case Arch::gcn: return "gcn";
    case Arch::gat: return "gat";
    case Arch::pd_gcn: return "pd-gcn";
    case Arch::pd_gat: return "pd-gat";
  }
  return "?";
}

inline bool is_attention(Arch a) { return a == Arch::gat || a == Arch::pd_gat; }
inline bool is_parameterized(Arch a) {
  return a == Arch::pd_gcn || a == Arch::pd_gat;
}

struct ModelConfig {
  Arch arch = Arch::gcn;
  int layers = 2;
  int hidden = 64;
  int heads = 8;
  LaplacianParams params;  ///< the (alpha, gamma) of pd architectures
  bool sep = false;
  bool residual = false;
  double dropout = 0.1;
  double lr = 0.01;
  double weight_decay = 1e-3;
  int epochs = 300;
  std::uint64_t seed = 0;
  double leaky_slope = 0.2;
  std::string metric = "accuracy";  ///< accuracy | roc_auc
  std::optional<LaplacianParams> rewire_params;  ///< rewire the graph first

  void validate() const {
    if (layers < 1) throw DataError("layers must be positive");
    if (hidden < 1) throw DataError("hidden width must be positive");
    if (epochs < 0) throw DataError("epochs must be non-negative");
    if (!(dropout >= 0.0 && dropout < 1.0))
      throw DataError("dropout must lie in [0, 1)");
    if (is_attention(arch)) {
      if (heads < 1) throw DataError("attention needs at least one head");
      if (hidden % heads != 0)
        throw DataError("hidden width must be divisible by the head count");
    }
    if (is_parameterized(arch)) params.validate();
    if (rewire_params) rewire_params->validate();
    if (metric != "accuracy" && metric != "roc_auc")
      throw DataError("metric must be accuracy or roc_auc");
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"arch", to_string(arch)},
                     {"layers", layers},
                     {"hidden", hidden},
                     {"heads", heads},
                     {"alpha", params.alpha},
                     {"gamma", params.gamma},
                     {"sep", sep},
                     {"residual", residual},
                     {"dropout", dropout},
                     {"lr", lr},
                     {"weight_decay", weight_decay},
                     {"epochs", epochs},
                     {"seed", seed},
                     {"leaky_slope", leaky_slope},
                     {"metric", metric}};
    if (rewire_params)
      j["rewire"] = {{"alpha", rewire_params->alpha},
                     {"gamma", rewire_params->gamma}};
    return j;
  }

  static ModelConfig from_json(const nlohmann::json& j) {
    ModelConfig c;
    if (!j.contains("arch")) throw UsageError("model config: missing arch");
    c.arch = arch_from_string(j.at("arch").get<std::string>());
    c.layers = j.value("layers", 2);
    c.hidden = j.value("hidden", 64);
    c.heads = j.value("heads", 8);
    c.params.alpha = j.value("alpha", 1.0);
    c.params.gamma = j.value("gamma", 1.0);
    c.sep = j.value("sep", false);
    c.residual = j.value("residual", false);
    c.dropout = j.value("dropout", 0.1);
    c.lr = j.value("lr", 0.01);
    c.weight_decay = j.value("weight_decay", 1e-3);
    c.epochs = j.value("epochs", 300);
    c.seed = j.value("seed", std::uint64_t{0});
    c.leaky_slope = j.value("leaky_slope", 0.2);
    c.metric = j.value("metric", std::string("accuracy"));
    if (j.contains("rewire"))
      c.rewire_params = LaplacianParams(j.at("rewire").value("alpha", 1.0),
                                        j.at("rewire").value("gamma", 1.0));
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------------------
// Constant aggregation structures

/// Standard GCN operator: symmetric-normalized adjacency with self-loops,
/// i.e. the (alpha, gamma) = (1/2, 1) member applied to the self-looped graph.
inline SparseOp gcn_operator(const Graph& g) {
  const int n = g.num_nodes();
  Eigen::VectorXd dtil = g.degrees().array() + 1.0;
  const Eigen::VectorXd scale = dtil.array().rsqrt();
  SparseMat s;
  s.rows = s.cols = n;
  s.offs.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i) s.offs[i + 1] = s.offs[i] + g.degree(i) + 1;
  s.idx.resize(s.offs[n]);
  s.vals.resize(s.offs[n]);
  for (int i = 0; i < n; ++i) {
    std::int64_t at = s.offs[i];
    bool self_done = false;
    auto put_self = [&] {
      s.idx[at] = i;
      s.vals[at] = scale[i] * scale[i];
      ++at;
      self_done = true;
    };
    for (int j : g.neighbors(i)) {
      if (!self_done && j > i) put_self();
      s.idx[at] = j;
      s.vals[at] = scale[i] * scale[j];
      ++at;
    }
    if (!self_done) put_self();
  }
  return SparseOp::from(std::move(s));
}

/// P^(alpha,gamma) as an explicit sparse matrix: off-diagonal
/// gamma * dg_i^{-alpha} dg_j^{alpha-1} on edges, diagonal (1-gamma)/dg_i.
inline SparseOp pd_operator(const Graph& g, const LaplacianParams& p) {
  const int n = g.num_nodes();
  const DiagGamma dg = diag_gamma(g, p);
  const Eigen::VectorXd left = dg.pow(-p.alpha);
  const Eigen::VectorXd right = dg.pow(p.alpha - 1.0);
  SparseMat s;
  s.rows = s.cols = n;
  s.offs.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i) s.offs[i + 1] = s.offs[i] + g.degree(i) + 1;
  s.idx.resize(s.offs[n]);
  s.vals.resize(s.offs[n]);
  for (int i = 0; i < n; ++i) {
    std::int64_t at = s.offs[i];
    bool self_done = false;
    auto put_self = [&] {
      s.idx[at] = i;
      s.vals[at] = (1.0 - p.gamma) * left[i] * right[i];
      ++at;
      self_done = true;
    };
    for (int j : g.neighbors(i)) {
      if (!self_done && j > i) put_self();
      s.idx[at] = j;
      s.vals[at] = p.gamma * left[i] * right[j];
      ++at;
    }
    if (!self_done) put_self();
  }
  return SparseOp::from(std::move(s));
}

/// Directed attention pairs (center attends to src) grouped contiguously per
/// center node, each group ending with the self pair. Edge features follow
/// the same layout; self pairs carry (0, B_dx diagonal).
struct AttnGraph {
  int n = 0;
  std::shared_ptr<const std::vector<int>> src;
  std::shared_ptr<const std::vector<int>> center;
  std::shared_ptr<const std::vector<std::int64_t>> offsets;  ///< n+1 boundaries
  Tensor edge_feats;  ///< E x 2 constant; undefined for plain gat
};

inline AttnGraph build_attn_graph(const Graph& g, const EdgeFeatureTable* feats) {
  const int n = g.num_nodes();
  auto src = std::make_shared<std::vector<int>>();
  auto center = std::make_shared<std::vector<int>>();
  auto offsets = std::make_shared<std::vector<std::int64_t>>();
  src->reserve(g.col_indices().size() + n);
  center->reserve(src->capacity());
  offsets->reserve(static_cast<std::size_t>(n) + 1);
  offsets->push_back(0);

  Mat fe;
  if (feats != nullptr)
    fe.resize(static_cast<Eigen::Index>(g.col_indices().size()) + n, 2);

  Eigen::Index slot = 0;
  Eigen::Index csr = 0;
  for (int i = 0; i < n; ++i) {
    for (int j : g.neighbors(i)) {
      src->push_back(j);
      center->push_back(i);
      if (feats != nullptr) {
        fe(slot, 0) = feats->av[csr];
        fe(slot, 1) = feats->dx[csr];
      }
      ++slot;
      ++csr;
    }
    src->push_back(i);  // self pair closes each segment
    center->push_back(i);
    if (feats != nullptr) {
      fe(slot, 0) = 0.0;
      fe(slot, 1) = feats->dx_diag[i];
    }
    ++slot;
    offsets->push_back(slot);
  }

  AttnGraph a;
  a.n = n;
  a.src = std::move(src);
  a.center = std::move(center);
  a.offsets = std::move(offsets);
  if (feats != nullptr) a.edge_feats = Tensor::constant(std::move(fe));
  return a;
}

// ---------------------------------------------------------------------------
// Layers

/// Unnormalized attention scores for every (center, src) pair:
/// LeakyReLU(a_c . W h_c + a_s . W h_s [+ a_e . W_e f]). Splitting the
/// concatenated a-vector into blocks is algebraically the written form.
inline Tensor attention_scores(const Tensor& wh, const AttnGraph& attn,
                               const Tensor& a_center, const Tensor& a_src,
                               const Tensor* w_edge, const Tensor* a_edge,
                               double leaky_slope) {
  Tensor hs = gather_rows(wh, attn.src);
  Tensor hc = gather_rows(wh, attn.center);
  Tensor s = add(matmul(hc, a_center), matmul(hs, a_src));
  if (w_edge != nullptr) {
    if (!attn.edge_feats.defined())
      throw DataError("edge features missing for an attention layer that needs them");
    s = add(s, matmul(matmul(attn.edge_feats, *w_edge), *a_edge));
  }
  return leaky_relu(s, leaky_slope);
}

struct AttnHeadParams {
  Tensor w;         ///< d_in x d_head
  Tensor a_center;  ///< d_head x 1
  Tensor a_src;     ///< d_head x 1
  Tensor w_edge;    ///< 2 x d_head (pd only)
  Tensor a_edge;    ///< d_head x 1 (pd only)
};

/// One multi-head attention pass: per-head softmax over each center's
/// neighbourhood plus itself, attention-weighted sum, optional per-head
/// activation, head concatenation.
inline Tensor multi_head_attention(const Tensor& h, const AttnGraph& attn,
                                   const std::vector<AttnHeadParams>& heads,
                                   double leaky_slope, bool edge_features,
                                   bool head_activation, double attn_dropout,
                                   Rng* rng, bool training) {
  std::vector<Tensor> outs;
  outs.reserve(heads.size());
  for (const auto& head : heads) {
    Tensor wh = matmul(h, head.w);
    Tensor r = attention_scores(wh, attn, head.a_center, head.a_src,
                                edge_features ? &head.w_edge : nullptr,
                                edge_features ? &head.a_edge : nullptr,
                                leaky_slope);
    Tensor att = segment_softmax(r, attn.offsets);
    att = dropout(att, attn_dropout, rng, training);
    Tensor msg = rows_mul(gather_rows(wh, attn.src), att);
    Tensor agg = segment_sum(msg, attn.center, attn.n);
    outs.push_back(head_activation ? relu(agg) : agg);
  }
  return outs.size() == 1 ? outs.front() : concat_cols(outs);
}

// ---------------------------------------------------------------------------
// The model

class Model {
 public:
  Model(const ModelConfig& cfg, const Dataset& data) : cfg_(cfg) {
    cfg_.validate();
    in_dim_ = static_cast<int>(data.features.cols());
    out_dim_ = data.num_classes;
    graph_ = data.graph;
    if (cfg_.rewire_params) {
      auto res = rewire(graph_, *cfg_.rewire_params);
      graph_ = std::move(res.graph);
      rewire_report_ = std::move(res.report);
    }

    switch (cfg_.arch) {
      case Arch::gcn:
        agg_ = gcn_operator(graph_);
        break;
      case Arch::pd_gcn:
        agg_ = pd_operator(graph_, cfg_.params);
        break;
      case Arch::gat:
        attn_ = build_attn_graph(graph_, nullptr);
        break;
      case Arch::pd_gat: {
        feats_ = edge_features(graph_, cfg_.params);
        attn_ = build_attn_graph(graph_, &feats_);
        break;
      }
    }
    Rng init = Rng(cfg_.seed).derive("init");
    build_parameters(init);
  }

  // The edge-feature table points into graph_, so the model stays put.
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;

  const ModelConfig& config() const { return cfg_; }
  const Graph& graph() const { return graph_; }
  const std::optional<RewireReport>& rewire_report() const { return rewire_report_; }
  std::vector<Tensor>& parameters() { return params_; }

  /// Logits for every node. Training mode applies dropout fed by `rng`.
  Tensor forward(const Tensor& x, bool training = false, Rng* rng = nullptr) {
    Tensor h = x;
    for (int l = 0; l < cfg_.layers; ++l) {
      const bool last = (l + 1 == cfg_.layers);
      Tensor input = h;
      Tensor hd = dropout(h, cfg_.dropout, rng, training);
      Tensor z;
      switch (cfg_.arch) {
        case Arch::gcn:
        case Arch::pd_gcn:
          z = spmm(agg_, matmul(hd, gcn_layers_[l].w));
          if (!last) z = relu(z);
          break;
        case Arch::gat: {
          const auto& layer = attn_layers_[l];
          z = multi_head_attention(hd, attn_, layer.heads, cfg_.leaky_slope,
                                   false, !last, cfg_.dropout, rng, training);
          if (last && cfg_.heads > 1) {
            // Output layer: heads are averaged rather than concatenated.
            z = head_average(z);
          }
          break;
        }
        case Arch::pd_gat: {
          const auto& layer = attn_layers_[l];
          Tensor cat = multi_head_attention(hd, attn_, layer.heads,
                                            cfg_.leaky_slope, true, !last,
                                            cfg_.dropout, rng, training);
          if (cfg_.sep) cat = concat_cols({cat, input});
          z = matmul(cat, layer.w_out);
          break;
        }
      }
      if (cfg_.residual && !last && z.rows() == input.rows() &&
          z.cols() == input.cols())
        z = add(z, input);
      h = z;
    }
    return h;
  }

 private:
  struct GcnLayer {
    Tensor w;
  };
  struct AttnLayer {
    std::vector<AttnHeadParams> heads;
    Tensor w_out;  ///< trailing projection (pd-gat only)
  };

  Tensor glorot(Rng& rng, int fan_in, int fan_out, int rows, int cols) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Mat w(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        w(i, j) = limit * (2.0 * rng.uniform() - 1.0);
    Tensor t = Tensor::param(std::move(w));
    params_.push_back(t);
    return t;
  }

  void build_parameters(Rng& rng) {
    const int L = cfg_.layers;
    if (is_attention(cfg_.arch)) {
      const int dh = cfg_.hidden / cfg_.heads;
      for (int l = 0; l < L; ++l) {
        const bool last = (l + 1 == L);
        const int d_in = (l == 0) ? in_dim_ : cfg_.hidden;
        const int d_out = last ? out_dim_ : cfg_.hidden;
        // Plain gat emits per-head outputs directly, so the final layer's
        // heads each produce class logits; pd-gat heads always emit dh and
        // the trailing projection reshapes.
        const int head_dim =
            (cfg_.arch == Arch::gat && last) ? out_dim_ : dh;
        AttnLayer layer;
        for (int m = 0; m < cfg_.heads; ++m) {
          AttnHeadParams head;
          head.w = glorot(rng, d_in, head_dim, d_in, head_dim);
          head.a_center = glorot(rng, head_dim, 1, head_dim, 1);
          head.a_src = glorot(rng, head_dim, 1, head_dim, 1);
          if (cfg_.arch == Arch::pd_gat) {
            head.w_edge = glorot(rng, 2, head_dim, 2, head_dim);
            head.a_edge = glorot(rng, head_dim, 1, head_dim, 1);
          }
          layer.heads.push_back(std::move(head));
        }
        if (cfg_.arch == Arch::pd_gat) {
          const int cat_dim = cfg_.hidden + (cfg_.sep ? d_in : 0);
          layer.w_out = glorot(rng, cat_dim, d_out, cat_dim, d_out);
        }
        attn_layers_.push_back(std::move(layer));
      }
    } else {
      for (int l = 0; l < L; ++l) {
        const int d_in = (l == 0) ? in_dim_ : cfg_.hidden;
        const int d_out = (l + 1 == L) ? out_dim_ : cfg_.hidden;
        gcn_layers_.push_back({glorot(rng, d_in, d_out, d_in, d_out)});
      }
    }
  }

  /// Mean over head blocks of a concatenated n x (M * c) matrix.
  Tensor head_average(const Tensor& cat) {
    const int m = cfg_.heads;
    const auto block = cat.cols() / m;
    Mat v = Mat::Zero(cat.rows(), block);
    for (int h = 0; h < m; ++h) v += cat.value().middleCols(h * block, block);
    v /= m;
    return Tensor::make(std::move(v), {cat}, [cat, m, block](Tensor::Node& out) {
      Mat g(cat.rows(), cat.cols());
      for (int h = 0; h < m; ++h)
        g.middleCols(h * block, block) = out.grad / m;
      accumulate(*cat.node(), g);
    });
  }

  ModelConfig cfg_;
  int in_dim_ = 0;
  int out_dim_ = 0;
  Graph graph_;
  std::optional<RewireReport> rewire_report_;
  SparseOp agg_;
  AttnGraph attn_;
  EdgeFeatureTable feats_;
  std::vector<GcnLayer> gcn_layers_;
  std::vector<AttnLayer> attn_layers_;
  std::vector<Tensor> params_;
};

}  // namespace pdg::nn
