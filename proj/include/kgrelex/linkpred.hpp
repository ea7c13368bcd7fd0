#ifndef KGRELEX_LINKPRED_HPP
#define KGRELEX_LINKPRED_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "kgrelex/error.hpp"
#include "kgrelex/kg.hpp"
#include "kgrelex/matrix.hpp"
#include "kgrelex/random.hpp"

namespace kgrelex {

enum class Activation : std::uint8_t { ReLU = 0, Identity = 1 };

struct TrainConfig {
  double lr = 0.01;
  std::size_t epochs = 100;
  double dropout_self = 0.2;
  double dropout_other = 0.4;
  double l2_decoder = 0.01;
  std::size_t dim = 200;
  std::size_t neg_per_pos = 10;
  std::uint64_t seed = 42;
  std::size_t rgcn_layers = 1;
  std::size_t blocks = 1;     // block-diagonal weights; 1 = dense
  std::size_t batch_size = 0; // 0 = full batch
  bool decoder_only = false;  // plain DistMult over free embeddings
  Activation activation = Activation::ReLU;           // hidden layers
  Activation output_activation = Activation::Identity; // layer feeding the decoder

  void validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and >= 0");
    if (!(dropout_self >= 0.0 && dropout_self < 1.0)) throw ConfigError("dropout_self must be in [0, 1)");
    if (!(dropout_other >= 0.0 && dropout_other < 1.0)) throw ConfigError("dropout_other must be in [0, 1)");
    if (!(l2_decoder >= 0.0)) throw ConfigError("l2_decoder must be >= 0");
    if (dim < 1) throw ConfigError("dim must be >= 1");
    if (blocks < 1 || dim % blocks != 0) throw ConfigError("blocks must divide dim");
    if (!decoder_only && rgcn_layers < 1) throw ConfigError("rgcn_layers must be >= 1 unless decoder_only");
  }
};

// Block-diagonal square weight. Block k occupies rows [k*b, (k+1)*b) of
// `data` and maps input coordinates k*b.. to output coordinates k*b...
template <class T>
struct BlockWeight {
  std::size_t blocks = 1;
  Matrix<T> data;  // (blocks * b) x b

  BlockWeight() = default;
  BlockWeight(std::size_t dim, std::size_t nblocks) : blocks(nblocks), data(dim, dim / nblocks) {}

  std::size_t dim() const noexcept { return data.rows(); }
  std::size_t block_size() const noexcept { return data.cols(); }

  // out += in * W
  void apply_add(std::span<const T> in, std::span<T> out) const {
    const std::size_t b = block_size();
    for (std::size_t k = 0; k < blocks; ++k)
      for (std::size_t m = 0; m < b; ++m) {
        const T x = in[k * b + m];
        if (x == T{}) continue;
        auto w = data.row(k * b + m);
        for (std::size_t n = 0; n < b; ++n) out[k * b + n] += x * w[n];
      }
  }

  // out += g * W^T
  void apply_transpose_add(std::span<const T> g, std::span<T> out) const {
    const std::size_t b = block_size();
    for (std::size_t k = 0; k < blocks; ++k)
      for (std::size_t m = 0; m < b; ++m) {
        auto w = data.row(k * b + m);
        T acc{};
        for (std::size_t n = 0; n < b; ++n) acc += w[n] * g[k * b + n];
        out[k * b + m] += acc;
      }
  }

  // this += x^T g, restricted to the block diagonal
  void outer_add(std::span<const T> x, std::span<const T> g) {
    const std::size_t b = block_size();
    for (std::size_t k = 0; k < blocks; ++k)
      for (std::size_t m = 0; m < b; ++m) {
        const T xv = x[k * b + m];
        if (xv == T{}) continue;
        auto w = data.row(k * b + m);
        for (std::size_t n = 0; n < b; ++n) w[n] += xv * g[k * b + n];
      }
  }

  friend bool operator==(const BlockWeight&, const BlockWeight&) = default;
};

template <class T>
struct RgcnLayer {
  std::vector<BlockWeight<T>> relation;  // W_r, one per relation
  BlockWeight<T> self;                   // W_0

  friend bool operator==(const RgcnLayer&, const RgcnLayer&) = default;
};

template <class T>
struct BasicModelParams {
  std::size_t dim = 0;
  std::size_t blocks = 1;
  bool decoder_only = false;
  Activation activation = Activation::ReLU;
  Activation output_activation = Activation::Identity;
  Matrix<T> entity_emb;     // |E| x d
  Matrix<T> relation_diag;  // |R| x d
  std::vector<RgcnLayer<T>> layers;

  BasicModelParams() = default;
  BasicModelParams(std::size_t n_entities, std::size_t n_relations, std::size_t d, std::size_t n_layers,
                   std::size_t nblocks, bool decoder, Activation act, Activation out_act = Activation::Identity)
      : dim(d), blocks(nblocks), decoder_only(decoder), activation(act), output_activation(out_act),
        entity_emb(n_entities, d), relation_diag(n_relations, d) {
    if (!decoder_only) {
      layers.resize(n_layers);
      for (auto& layer : layers) {
        layer.relation.assign(n_relations, BlockWeight<T>(d, nblocks));
        layer.self = BlockWeight<T>(d, nblocks);
      }
    }
  }

  std::size_t n_entities() const noexcept { return entity_emb.rows(); }
  std::size_t n_relations() const noexcept { return relation_diag.rows(); }

  Activation layer_activation(std::size_t l) const noexcept {
    return l + 1 == layers.size() ? output_activation : activation;
  }

  // Visits every parameter array in a fixed canonical order.
  template <class Fn>
  void visit(Fn&& fn) {
    fn(entity_emb.flat());
    fn(relation_diag.flat());
    for (auto& layer : layers) {
      for (auto& w : layer.relation) fn(w.data.flat());
      fn(layer.self.data.flat());
    }
  }
  template <class Fn>
  void visit(Fn&& fn) const {
    fn(entity_emb.flat());
    fn(relation_diag.flat());
    for (const auto& layer : layers) {
      for (const auto& w : layer.relation) fn(w.data.flat());
      fn(layer.self.data.flat());
    }
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    visit([&](std::span<const T> s) { n += s.size(); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    visit([&](std::span<const T> s) {
      for (T v : s) ok = ok && std::isfinite(v);
    });
    return ok;
  }

  BasicModelParams zeros_like() const {
    return BasicModelParams(n_entities(), n_relations(), dim, layers.size(), blocks, decoder_only, activation,
                            output_activation);
  }

  template <class U>
  BasicModelParams<U> cast() const {
    BasicModelParams<U> out(n_entities(), n_relations(), dim, layers.size(), blocks, decoder_only, activation,
                            output_activation);
    std::vector<std::span<U>> dst;
    out.visit([&](std::span<U> s) { dst.push_back(s); });
    std::size_t i = 0;
    visit([&](std::span<const T> s) {
      for (std::size_t k = 0; k < s.size(); ++k) dst[i][k] = static_cast<U>(s[k]);
      ++i;
    });
    return out;
  }

  friend bool operator==(const BasicModelParams&, const BasicModelParams&) = default;
};

using ModelParams = BasicModelParams<float>;

struct RankMetrics {
  double hits1 = 0.0;
  double hits3 = 0.0;
  double hits10 = 0.0;
  double mrr = 0.0;
  std::size_t queries = 0;
};

// Incoming-message structure for one R-GCN layer: one group per (node, relation) with
// the in-neighbours j of node i under r.
struct MessageGraph {
  struct Group {
    std::uint32_t dst;
    std::uint32_t relation;
    std::size_t begin;  // into `sources`
    std::size_t end;
  };

  std::size_t n_entities = 0;
  std::size_t n_relations = 0;
  std::vector<Group> groups;
  std::vector<std::uint32_t> sources;

  MessageGraph() = default;
  explicit MessageGraph(const KnowledgeGraph& g)
      : n_entities(g.entities().size()), n_relations(g.relations().size()) {
    for (const auto& [key, heads] : g.reverse_index()) {
      Group grp{key.first.value, key.second.value, sources.size(), 0};
      for (EntityId h : heads) sources.push_back(h.value);
      grp.end = sources.size();
      groups.push_back(grp);
    }
  }

  std::size_t edge_count() const noexcept { return sources.size(); }
};

// Edge dropout. Normalisers c_{i,r} count only kept edges.
struct EdgeMask {
  std::vector<std::uint8_t> edge_keep;  // per entry of MessageGraph::sources
  std::vector<std::uint8_t> self_keep;  // per node

  static EdgeMask all(const MessageGraph& mg) {
    return {std::vector<std::uint8_t>(mg.edge_count(), 1), std::vector<std::uint8_t>(mg.n_entities, 1)};
  }

  static EdgeMask sample(const MessageGraph& mg, double drop_self, double drop_other, Rng& rng) {
    EdgeMask m;
    m.edge_keep.resize(mg.edge_count());
    m.self_keep.resize(mg.n_entities);
    for (auto& k : m.edge_keep) k = rng.uniform01() >= drop_other;
    for (auto& k : m.self_keep) k = rng.uniform01() >= drop_self;
    return m;
  }
};

template <class T>
struct ForwardCache {
  std::vector<Matrix<T>> inputs;    // h^(l)
  std::vector<Matrix<T>> preacts;   // before sigma
};

namespace detail {

template <class T>
void check_dims(const MessageGraph& mg, const BasicModelParams<T>& p) {
  if (p.entity_emb.rows() != mg.n_entities || p.relation_diag.rows() != mg.n_relations)
    throw ConfigError("model has " + std::to_string(p.entity_emb.rows()) + " entities / " +
                      std::to_string(p.relation_diag.rows()) + " relations, graph has " +
                      std::to_string(mg.n_entities) + " / " + std::to_string(mg.n_relations));
  if (p.entity_emb.cols() != p.dim || p.relation_diag.cols() != p.dim)
    throw ConfigError("embedding width does not match model dimension");
  for (const auto& layer : p.layers) {
    if (layer.relation.size() != mg.n_relations) throw ConfigError("R-GCN layer relation count mismatch");
    if (layer.self.dim() != p.dim) throw ConfigError("R-GCN self-loop weight dimension mismatch");
    for (const auto& w : layer.relation)
      if (w.dim() != p.dim) throw ConfigError("R-GCN relation weight dimension mismatch");
  }
}

template <class T>
T activate(Activation a, T x) {
  return a == Activation::ReLU ? (x > T{} ? x : T{}) : x;
}

template <class T>
T activate_grad(Activation a, T pre) {
  return a == Activation::ReLU ? (pre > T{} ? T{1} : T{}) : T{1};
}

}  // namespace detail

// h_i^(l+1) = sigma( sum_r sum_{j in N_i^r} W_r h_j / c_{i,r} + W_0 h_i ),
// c_{i,r} = |N_i^r| after dropout, h^(0) = entity embeddings. sigma is
// `activation` on hidden layers and `output_activation` on the last one.
template <class T>
Matrix<T> rgcn_forward(const MessageGraph& mg, const BasicModelParams<T>& p, const EdgeMask* mask = nullptr,
                       ForwardCache<T>* cache = nullptr) {
  detail::check_dims(mg, p);
  if (cache) *cache = {};
  Matrix<T> h = p.entity_emb;
  if (p.decoder_only) return h;
  std::vector<T> agg(p.dim);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    const Activation act = p.layer_activation(l);
    Matrix<T> pre(mg.n_entities, p.dim);
    for (const auto& grp : mg.groups) {
      std::fill(agg.begin(), agg.end(), T{});
      std::size_t kept = 0;
      for (std::size_t e = grp.begin; e < grp.end; ++e) {
        if (mask && !mask->edge_keep[e]) continue;
        ++kept;
        auto src = h.row(mg.sources[e]);
        for (std::size_t k = 0; k < p.dim; ++k) agg[k] += src[k];
      }
      if (kept == 0) continue;
      const T inv = T{1} / static_cast<T>(kept);
      for (auto& v : agg) v *= inv;
      layer.relation[grp.relation].apply_add(agg, pre.row(grp.dst));
    }
    for (std::size_t i = 0; i < mg.n_entities; ++i)
      if (!mask || mask->self_keep[i]) layer.self.apply_add(h.row(i), pre.row(i));
    Matrix<T> out(mg.n_entities, p.dim);
    auto pf = pre.flat();
    auto of = out.flat();
    for (std::size_t k = 0; k < pf.size(); ++k) of[k] = detail::activate(act, pf[k]);
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->preacts.push_back(std::move(pre));
    }
    h = std::move(out);
  }
  return h;
}

template <class T>
Matrix<T> rgcn_forward(const KnowledgeGraph& g, const BasicModelParams<T>& p, const EdgeMask* mask = nullptr) {
  return rgcn_forward(MessageGraph(g), p, mask);
}

// Backpropagates d(loss)/d(node states) through the encoder into `grad`.
template <class T>
void rgcn_backward(const MessageGraph& mg, const BasicModelParams<T>& p, const EdgeMask* mask,
                   const ForwardCache<T>& cache, Matrix<T> d_states, BasicModelParams<T>& grad) {
  if (!p.decoder_only) {
    std::vector<T> agg(p.dim), d_agg(p.dim);
    for (std::size_t l = p.layers.size(); l-- > 0;) {
      const auto& layer = p.layers[l];
      auto& glayer = grad.layers[l];
      const Matrix<T>& h = cache.inputs[l];
      const Activation act = p.layer_activation(l);
      Matrix<T> d_pre(mg.n_entities, p.dim);
      {
        auto dp = d_pre.flat();
        auto ds = d_states.flat();
        auto pre = cache.preacts[l].flat();
        for (std::size_t k = 0; k < dp.size(); ++k) dp[k] = ds[k] * detail::activate_grad(act, pre[k]);
      }
      Matrix<T> d_in(mg.n_entities, p.dim);
      for (const auto& grp : mg.groups) {
        std::fill(agg.begin(), agg.end(), T{});
        std::size_t kept = 0;
        for (std::size_t e = grp.begin; e < grp.end; ++e) {
          if (mask && !mask->edge_keep[e]) continue;
          ++kept;
          auto src = h.row(mg.sources[e]);
          for (std::size_t k = 0; k < p.dim; ++k) agg[k] += src[k];
        }
        if (kept == 0) continue;
        const T inv = T{1} / static_cast<T>(kept);
        for (auto& v : agg) v *= inv;
        auto g = d_pre.row(grp.dst);
        glayer.relation[grp.relation].outer_add(agg, g);
        std::fill(d_agg.begin(), d_agg.end(), T{});
        layer.relation[grp.relation].apply_transpose_add(g, d_agg);
        for (std::size_t e = grp.begin; e < grp.end; ++e) {
          if (mask && !mask->edge_keep[e]) continue;
          auto dst = d_in.row(mg.sources[e]);
          for (std::size_t k = 0; k < p.dim; ++k) dst[k] += d_agg[k] * inv;
        }
      }
      for (std::size_t i = 0; i < mg.n_entities; ++i) {
        if (mask && !mask->self_keep[i]) continue;
        glayer.self.outer_add(h.row(i), d_pre.row(i));
        layer.self.apply_transpose_add(d_pre.row(i), d_in.row(i));
      }
      d_states = std::move(d_in);
    }
  }
  auto ge = grad.entity_emb.flat();
  auto ds = d_states.flat();
  for (std::size_t k = 0; k < ge.size(); ++k) ge[k] += ds[k];
}

// e_h^T diag(R_r) e_t. Each term is d_k * (h_k * t_k) so swapping h and t
// gives a bit-identical result.
template <class T>
T distmult_score(const BasicModelParams<T>& p, const Matrix<T>& states, EntityId h, RelationId r, EntityId t) {
  auto hs = states.row(h.value);
  auto ts = states.row(t.value);
  auto d = p.relation_diag.row(r.value);
  T s{};
  for (std::size_t k = 0; k < p.dim; ++k) s += d[k] * (hs[k] * ts[k]);
  return s;
}

template <class T>
T sigmoid(T x) {
  if (x >= T{}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

// log(1 + exp(x)) without overflow.
template <class T>
T softplus(T x) {
  return x > T{} ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

struct LabeledTriple {
  EntityId head;
  RelationId relation;
  EntityId tail;
  double label = 1.0;
};

// Mean binary cross-entropy over `samples` plus l2 * mean(relation_diag^2).
// Accumulates the gradient into `grad` when given (grad must be zeroed).
template <class T>
double link_objective(const MessageGraph& mg, const BasicModelParams<T>& p, std::span<const LabeledTriple> samples,
                      double l2, const EdgeMask* mask, BasicModelParams<T>* grad) {
  ForwardCache<T> cache;
  Matrix<T> states = rgcn_forward(mg, p, mask, grad ? &cache : nullptr);
  const double n = static_cast<double>(samples.size());
  double loss = 0.0;
  Matrix<T> d_states(states.rows(), states.cols());
  for (const auto& s : samples) {
    const T score = distmult_score(p, states, s.head, s.relation, s.tail);
    const double x = static_cast<double>(score);
    loss += softplus(x) - s.label * x;
    if (!grad) continue;
    const T ds = static_cast<T>((sigmoid(x) - s.label) / n);
    auto hs = states.row(s.head.value);
    auto ts = states.row(s.tail.value);
    auto d = p.relation_diag.row(s.relation.value);
    auto gh = d_states.row(s.head.value);
    auto gt = d_states.row(s.tail.value);
    auto gd = grad->relation_diag.row(s.relation.value);
    for (std::size_t k = 0; k < p.dim; ++k) {
      gh[k] += ds * d[k] * ts[k];
      gt[k] += ds * d[k] * hs[k];
      gd[k] += ds * hs[k] * ts[k];
    }
  }
  loss = samples.empty() ? 0.0 : loss / n;
  auto diag = p.relation_diag.flat();
  if (l2 > 0.0 && !diag.empty()) {
    const double scale = l2 / static_cast<double>(diag.size());
    double sq = 0.0;
    for (T v : diag) sq += static_cast<double>(v) * static_cast<double>(v);
    loss += scale * sq;
    if (grad) {
      auto gd = grad->relation_diag.flat();
      for (std::size_t k = 0; k < diag.size(); ++k) gd[k] += static_cast<T>(2.0 * scale) * diag[k];
    }
  }
  if (grad) rgcn_backward(mg, p, mask, cache, std::move(d_states), *grad);
  return loss;
}

template <class T>
BasicModelParams<T> init_params(std::size_t n_entities, std::size_t n_relations, const TrainConfig& cfg) {
  cfg.validate();
  BasicModelParams<T> p(n_entities, n_relations, cfg.dim, cfg.decoder_only ? 0 : cfg.rgcn_layers, cfg.blocks,
                        cfg.decoder_only, cfg.activation, cfg.output_activation);
  Rng rng(cfg.seed);
  const double d = static_cast<double>(cfg.dim);
  auto fill = [&](std::span<T> s, double bound) {
    for (auto& v : s) v = static_cast<T>(rng.uniform(-bound, bound));
  };
  fill(p.entity_emb.flat(), std::sqrt(3.0 / d));
  fill(p.relation_diag.flat(), 1.0);
  for (auto& layer : p.layers) {
    const double b = static_cast<double>(cfg.dim / cfg.blocks);
    const double xavier = std::sqrt(6.0 / (2.0 * b));
    for (auto& w : layer.relation) fill(w.data.flat(), xavier);
    fill(layer.self.data.flat(), xavier);
  }
  return p;
}

template <class T>
class Adam {
public:
  Adam(const BasicModelParams<T>& shape, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : m_(shape.zeros_like()), v_(shape.zeros_like()), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(BasicModelParams<T>& params, const BasicModelParams<T>& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    std::vector<std::span<T>> ps, ms, vs;
    std::vector<std::span<const T>> gs;
    params.visit([&](std::span<T> s) { ps.push_back(s); });
    m_.visit([&](std::span<T> s) { ms.push_back(s); });
    v_.visit([&](std::span<T> s) { vs.push_back(s); });
    grad.visit([&](std::span<const T> s) { gs.push_back(s); });
    for (std::size_t a = 0; a < ps.size(); ++a)
      for (std::size_t k = 0; k < ps[a].size(); ++k) {
        const double g = gs[a][k];
        const double m = beta1_ * ms[a][k] + (1.0 - beta1_) * g;
        const double v = beta2_ * vs[a][k] + (1.0 - beta2_) * g * g;
        ms[a][k] = static_cast<T>(m);
        vs[a][k] = static_cast<T>(v);
        const double update = lr_ * (m / c1) / (std::sqrt(v / c2) + eps_);
        ps[a][k] = static_cast<T>(ps[a][k] - update);
      }
  }

private:
  BasicModelParams<T> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
};

// Uniform head-or-tail corruption.
inline LabeledTriple corrupt(const Triple& t, std::size_t n_entities, Rng& rng) {
  LabeledTriple neg{t.head, t.relation, t.tail, 0.0};
  const EntityId e{static_cast<std::uint32_t>(rng.below(n_entities))};
  if (rng.below(2) == 0)
    neg.head = e;
  else
    neg.tail = e;
  return neg;
}

// Trains encoder + decoder with Adam on BCE over positives and corrupted
// negatives. Deterministic for a fixed seed.
template <class T = float>
BasicModelParams<T> train(const KnowledgeGraph& graph, const TrainConfig& cfg,
                          std::vector<double>* loss_history = nullptr) {
  cfg.validate();
  if (graph.empty()) throw TrainingError("cannot train on an empty graph");
  const MessageGraph mg(graph);
  BasicModelParams<T> params = init_params<T>(mg.n_entities, mg.n_relations, cfg);
  Adam<T> adam(params, cfg.lr);
  // Stream separate from initialisation so that changing epochs leaves init fixed.
  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<Triple> positives = graph.triples();
  const std::size_t batch = cfg.batch_size == 0 ? positives.size() : cfg.batch_size;
  std::vector<LabeledTriple> samples;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(positives);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < positives.size(); start += batch) {
      const std::size_t stop = std::min(positives.size(), start + batch);
      samples.clear();
      for (std::size_t i = start; i < stop; ++i) {
        samples.push_back({positives[i].head, positives[i].relation, positives[i].tail, 1.0});
        for (std::size_t n = 0; n < cfg.neg_per_pos; ++n) samples.push_back(corrupt(positives[i], mg.n_entities, rng));
      }
      EdgeMask mask;
      const EdgeMask* mask_ptr = nullptr;
      if (!cfg.decoder_only) {
        mask = EdgeMask::sample(mg, cfg.dropout_self, cfg.dropout_other, rng);
        mask_ptr = &mask;
      }
      BasicModelParams<T> grad = params.zeros_like();
      const double loss = link_objective<T>(mg, params, samples, cfg.l2_decoder, mask_ptr, &grad);
      if (!std::isfinite(loss))
        throw TrainingError("link prediction loss diverged at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches) + " (loss=" + std::to_string(loss) + ")");
      adam.step(params, grad);
      if (!params.all_finite())
        throw TrainingError("non-finite parameters after epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches));
      epoch_loss += loss;
      ++batches;
    }
    if (loss_history) loss_history->push_back(batches ? epoch_loss / static_cast<double>(batches) : 0.0);
  }
  return params;
}

namespace detail {

inline std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> known_set(const KnowledgeGraph& g,
                                                                                  std::span<const Triple> extra) {
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> known;
  for (const auto& t : g.triples()) known.emplace(t.head.value, t.relation.value, t.tail.value);
  for (const auto& t : extra) known.emplace(t.head.value, t.relation.value, t.tail.value);
  return known;
}

}  // namespace detail

// Ranks the true tail (and head) of each test triple among all entities by
// descending score. Equal scores rank the lower entity id first. Filtered
// mode skips candidates that form another known triple (graph or test set).
template <class T>
RankMetrics rank_metrics_from_states(const BasicModelParams<T>& p, const Matrix<T>& states, const KnowledgeGraph& graph,
                                     std::span<const Triple> test, bool filtered) {
  RankMetrics m;
  if (test.empty()) return m;
  const auto known = filtered ? detail::known_set(graph, test) : decltype(detail::known_set(graph, test)){};
  const std::size_t n = states.rows();
  auto add_rank = [&](std::size_t rank) {
    m.hits1 += rank <= 1;
    m.hits3 += rank <= 3;
    m.hits10 += rank <= 10;
    m.mrr += 1.0 / static_cast<double>(rank);
    ++m.queries;
  };
  for (const auto& t : test) {
    const T truth = distmult_score(p, states, t.head, t.relation, t.tail);
    std::size_t tail_rank = 1, head_rank = 1;
    for (std::uint32_t c = 0; c < n; ++c) {
      const EntityId e{c};
      if (e != t.tail && !(filtered && known.contains({t.head.value, t.relation.value, c}))) {
        const T s = distmult_score(p, states, t.head, t.relation, e);
        tail_rank += s > truth || (s == truth && e < t.tail);
      }
      if (e != t.head && !(filtered && known.contains({c, t.relation.value, t.tail.value}))) {
        const T s = distmult_score(p, states, e, t.relation, t.tail);
        head_rank += s > truth || (s == truth && e < t.head);
      }
    }
    add_rank(tail_rank);
    add_rank(head_rank);
  }
  const double q = static_cast<double>(m.queries);
  m.hits1 /= q;
  m.hits3 /= q;
  m.hits10 /= q;
  m.mrr /= q;
  return m;
}

template <class T>
RankMetrics rank_metrics(const BasicModelParams<T>& p, const KnowledgeGraph& graph, std::span<const Triple> test,
                         bool filtered = true) {
  const Matrix<T> states = rgcn_forward(MessageGraph(graph), p);
  return rank_metrics_from_states(p, states, graph, test, filtered);
}

}  // namespace kgrelex

#endif  // KGRELEX_LINKPRED_HPP
