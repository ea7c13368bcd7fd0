#ifndef KGRELEX_REASONING_HPP
#define KGRELEX_REASONING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "kgrelex/error.hpp"
#include "kgrelex/ingestion.hpp"
#include "kgrelex/kg.hpp"
#include "kgrelex/linkpred.hpp"
#include "kgrelex/matrix.hpp"
#include "kgrelex/random.hpp"

namespace kgrelex {

// Intra-sentence, logical (bridge entity) and co-reference paths.
enum class PathKind : std::uint8_t { PI = 0, PL = 1, PC = 2 };

inline std::string_view to_string(PathKind k) {
  switch (k) {
    case PathKind::PI: return "PI";
    case PathKind::PL: return "PL";
    case PathKind::PC: return "PC";
  }
  return "?";
}

struct ReasoningPath {
  PathKind kind = PathKind::PI;
  Mention head_mention;
  Mention tail_mention;
  std::vector<Mention> bridge_mentions;  // PL only: bridge mention in s1, then in s2
  std::vector<std::size_t> sentence_ids;

  friend bool operator==(const ReasoningPath&, const ReasoningPath&) = default;
};

namespace detail {

inline auto mention_key(const Mention& m) { return std::tuple(m.sent_id, m.start, m.end, m.entity_index); }

inline auto path_key(const ReasoningPath& p) {
  std::size_t bridge = p.bridge_mentions.empty() ? 0 : p.bridge_mentions.front().entity_index + 1;
  return std::tuple(static_cast<int>(p.kind), p.sentence_ids, mention_key(p.head_mention), mention_key(p.tail_mention),
                    bridge);
}

// mentions of each entity grouped by sentence, in document order
inline std::vector<std::map<std::size_t, std::vector<const Mention*>>> mentions_by_sentence(const Document& doc) {
  std::vector<std::map<std::size_t, std::vector<const Mention*>>> out(doc.entity_clusters.size());
  for (std::size_t e = 0; e < doc.entity_clusters.size(); ++e)
    for (const auto& m : doc.entity_clusters[e]) out[e][m.sent_id].push_back(&m);
  for (auto& by_sent : out)
    for (auto& [s, ms] : by_sent)
      std::sort(ms.begin(), ms.end(), [](const Mention* a, const Mention* b) { return mention_key(*a) < mention_key(*b); });
  return out;
}

}  // namespace detail

inline bool path_less(const ReasoningPath& a, const ReasoningPath& b) { return detail::path_key(a) < detail::path_key(b); }

// All PI/PL/PC paths from entity `head` to entity `tail`:
//   PI: a head and a tail mention share sentence s.
//   PL: head mention in s1, tail mention in s2 != s1, and a bridge entity with
//       mentions in both sentences; one path per bridge entity.
//   PC: head mention in s1, tail mention in s2 != s1, and some third entity
//       co-occurs in both sentences; no bridge recorded.
// Ordered by (kind, sentence ids, head mention, tail mention, bridge).
inline std::vector<ReasoningPath> extract_paths(const Document& doc, std::size_t head, std::size_t tail) {
  const std::size_t n = doc.entity_clusters.size();
  if (head >= n || tail >= n) throw ValidationError("entity index out of range in " + doc.doc_id);
  if (head == tail) throw ValidationError("head equals tail in " + doc.doc_id);
  const auto by_sent = detail::mentions_by_sentence(doc);
  std::vector<ReasoningPath> out;

  for (const auto& [s, hms] : by_sent[head]) {
    auto it = by_sent[tail].find(s);
    if (it == by_sent[tail].end()) continue;
    for (const Mention* mh : hms)
      for (const Mention* mt : it->second) out.push_back({PathKind::PI, *mh, *mt, {}, {s}});
  }

  for (const auto& [s1, hms] : by_sent[head])
    for (const auto& [s2, tms] : by_sent[tail]) {
      if (s1 == s2) continue;
      std::vector<std::size_t> bridges;
      for (std::size_t l = 0; l < n; ++l)
        if (l != head && l != tail && by_sent[l].contains(s1) && by_sent[l].contains(s2)) bridges.push_back(l);
      if (bridges.empty()) continue;
      for (const Mention* mh : hms)
        for (const Mention* mt : tms) {
          for (std::size_t l : bridges)
            out.push_back({PathKind::PL, *mh, *mt, {*by_sent[l].at(s1).front(), *by_sent[l].at(s2).front()}, {s1, s2}});
          out.push_back({PathKind::PC, *mh, *mt, {}, {s1, s2}});
        }
    }

  std::sort(out.begin(), out.end(), path_less);
  return out;
}

// Entity-type vocabulary used for the type one-hot slots.
struct FeatureSpec {
  std::vector<std::string> types;

  // kind(3) + distance + bridge count + head/tail mention counts
  // + 2 type one-hots (types + unknown) + kg link count + sentence overlap
  std::size_t dim() const noexcept { return 3 + 1 + 1 + 2 + 2 * (types.size() + 1) + 1 + 1; }

  std::size_t type_slot(const std::string& t) const {
    auto it = std::lower_bound(types.begin(), types.end(), t);
    return (it != types.end() && *it == t) ? static_cast<std::size_t>(it - types.begin()) : types.size();
  }

  static FeatureSpec from_documents(const std::vector<Document>& docs) {
    std::vector<std::string> types;
    for (const auto& d : docs)
      for (const auto& c : d.entity_clusters)
        for (const auto& m : c) types.push_back(m.etype);
    std::sort(types.begin(), types.end());
    types.erase(std::unique(types.begin(), types.end()), types.end());
    return {std::move(types)};
  }

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

using ReasoningFeatures = std::vector<double>;

// Number of non-label triples joining the two names in either direction.
inline std::size_t kg_link_count(const KnowledgeGraph& graph, const std::string& a, const std::string& b) {
  auto ea = graph.entities().find(a);
  auto eb = graph.entities().find(b);
  if (!ea || !eb) return 0;
  std::size_t count = 0;
  auto tally = [&](EntityId from, EntityId to) {
    graph.for_each_out_edge(from, [&](RelationId r, EntityId t) {
      if (t == to && graph.provenance(from, r, t) != Provenance::CoreLabel) ++count;
    });
  };
  tally(*ea, *eb);
  if (*ea != *eb) tally(*eb, *ea);
  return count;
}

inline ReasoningFeatures featurize(const ReasoningPath& path, const Document& doc, const KnowledgeGraph& graph,
                                   const FeatureSpec& spec) {
  ReasoningFeatures f(spec.dim(), 0.0);
  std::size_t i = 0;
  f[i + static_cast<std::size_t>(path.kind)] = 1.0;
  i += 3;
  const auto [lo, hi] = std::minmax_element(path.sentence_ids.begin(), path.sentence_ids.end());
  f[i++] = static_cast<double>(*hi - *lo);
  const std::size_t bridge_mentions =
      path.kind == PathKind::PL ? doc.entity_clusters.at(path.bridge_mentions.front().entity_index).size() : 0;
  f[i++] = std::log1p(static_cast<double>(bridge_mentions));
  const auto& head = doc.entity_clusters.at(path.head_mention.entity_index);
  const auto& tail = doc.entity_clusters.at(path.tail_mention.entity_index);
  f[i++] = std::log1p(static_cast<double>(head.size()));
  f[i++] = std::log1p(static_cast<double>(tail.size()));
  f[i + spec.type_slot(head.front().etype)] = 1.0;
  i += spec.types.size() + 1;
  f[i + spec.type_slot(tail.front().etype)] = 1.0;
  i += spec.types.size() + 1;
  f[i++] = std::log1p(static_cast<double>(kg_link_count(graph, head.front().surface, tail.front().surface)));
  std::size_t both = 0;
  for (std::size_t s : path.sentence_ids) {
    auto in = [s](const std::vector<Mention>& c) {
      return std::any_of(c.begin(), c.end(), [s](const Mention& m) { return m.sent_id == s; });
    };
    both += in(head) && in(tail);
  }
  f[i++] = static_cast<double>(both) / static_cast<double>(path.sentence_ids.size());
  return f;
}

struct ScorerConfig {
  double lr = 0.05;
  std::size_t epochs = 200;
  std::uint64_t seed = 7;
  std::size_t depth = 1;   // 1 = logistic, 2 = one hidden ReLU layer
  std::size_t hidden = 16;

  void validate() const {
    if (!(lr >= 0.0)) throw ConfigError("scorer lr must be >= 0");
    if (depth != 1 && depth != 2) throw ConfigError("scorer depth must be 1 or 2");
    if (depth == 2 && hidden == 0) throw ConfigError("scorer hidden width must be >= 1");
  }
};

// One small MLP per relation, sigmoid on top.
template <class T>
struct BasicReasoningScorer {
  FeatureSpec spec;
  std::size_t feature_dim = 0;
  std::size_t depth = 1;
  std::size_t hidden = 0;
  Matrix<T> hidden_w;  // depth 2: |R| x (hidden * F)
  Matrix<T> hidden_b;  // depth 2: |R| x hidden
  Matrix<T> weights;   // |R| x (depth 1 ? F : hidden)
  std::vector<T> bias; // |R|

  BasicReasoningScorer() = default;
  BasicReasoningScorer(FeatureSpec s, std::size_t n_relations, std::size_t nfeat, std::size_t d, std::size_t h)
      : spec(std::move(s)), feature_dim(nfeat), depth(d), hidden(d == 2 ? h : 0),
        hidden_w(d == 2 ? n_relations : 0, d == 2 ? h * nfeat : 0), hidden_b(d == 2 ? n_relations : 0, d == 2 ? h : 0),
        weights(n_relations, d == 2 ? h : nfeat), bias(n_relations, T{}) {}

  std::size_t n_relations() const noexcept { return bias.size(); }

  template <class Fn>
  void visit(Fn&& fn) {
    fn(hidden_w.flat());
    fn(hidden_b.flat());
    fn(weights.flat());
    fn(std::span<T>(bias));
  }
  template <class Fn>
  void visit(Fn&& fn) const {
    fn(hidden_w.flat());
    fn(hidden_b.flat());
    fn(weights.flat());
    fn(std::span<const T>(bias));
  }

  // MLP_r(f), before the sigmoid. `act` receives the hidden activations when non-null.
  double logit(std::size_t r, std::span<const double> f, std::vector<double>* act = nullptr) const {
    if (f.size() != feature_dim)
      throw ConfigError("feature vector has " + std::to_string(f.size()) + " entries, scorer expects " +
                        std::to_string(feature_dim));
    auto w = weights.row(r);
    double z = static_cast<double>(bias[r]);
    if (depth == 1) {
      for (std::size_t k = 0; k < feature_dim; ++k) z += static_cast<double>(w[k]) * f[k];
      return z;
    }
    auto hw = hidden_w.row(r);
    auto hb = hidden_b.row(r);
    if (act) act->assign(hidden, 0.0);
    for (std::size_t j = 0; j < hidden; ++j) {
      double a = static_cast<double>(hb[j]);
      for (std::size_t k = 0; k < feature_dim; ++k) a += static_cast<double>(hw[j * feature_dim + k]) * f[k];
      a = a > 0.0 ? a : 0.0;
      if (act) (*act)[j] = a;
      z += static_cast<double>(w[j]) * a;
    }
    return z;
  }

  template <class U>
  BasicReasoningScorer<U> cast() const {
    BasicReasoningScorer<U> out(spec, n_relations(), feature_dim, depth, hidden);
    std::vector<std::span<U>> dst;
    out.visit([&](std::span<U> s) { dst.push_back(s); });
    std::size_t i = 0;
    visit([&](std::span<const T> s) {
      for (std::size_t k = 0; k < s.size(); ++k) dst[i][k] = static_cast<U>(s[k]);
      ++i;
    });
    return out;
  }

  friend bool operator==(const BasicReasoningScorer&, const BasicReasoningScorer&) = default;
};

using ReasoningScorer = BasicReasoningScorer<float>;

struct PairReasoning {
  std::vector<double> prob;           // per relation
  std::vector<std::ptrdiff_t> best;   // per relation: index of the winning path, -1 if none
  std::optional<PathKind> winning_kind;
};

// P(r | pair) = max over paths of sigmoid(MLP_r(features)).
template <class T>
PairReasoning score_pair(const std::vector<ReasoningPath>& paths, const std::vector<ReasoningFeatures>& features,
                         const BasicReasoningScorer<T>& scorer) {
  if (paths.size() != features.size()) throw ConfigError("one feature vector per path required");
  const std::size_t nr = scorer.n_relations();
  PairReasoning out{std::vector<double>(nr, 0.0), std::vector<std::ptrdiff_t>(nr, -1), std::nullopt};
  if (paths.empty()) return out;
  double global = -1.0;
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t p = 0; p < paths.size(); ++p) {
      const double prob = sigmoid(scorer.logit(r, features[p]));
      if (out.best[r] < 0 || prob > out.prob[r]) {
        out.prob[r] = prob;
        out.best[r] = static_cast<std::ptrdiff_t>(p);
      }
    }
    if (out.prob[r] > global) {
      global = out.prob[r];
      out.winning_kind = paths[static_cast<std::size_t>(out.best[r])].kind;
    }
  }
  return out;
}

// Training unit: the feature vectors of every path of one entity pair plus
// the relation ids that hold for the pair.
struct PairExample {
  std::vector<ReasoningFeatures> path_features;
  std::vector<std::uint32_t> positives;
};

template <class T = float>
BasicReasoningScorer<T> init_scorer(const FeatureSpec& spec, std::size_t n_relations, const ScorerConfig& cfg) {
  cfg.validate();
  BasicReasoningScorer<double> s(spec, n_relations, spec.dim(), cfg.depth, cfg.hidden);
  Rng rng(cfg.seed);
  const double fan = static_cast<double>(cfg.depth == 2 ? s.hidden : s.feature_dim);
  const double bound = 1.0 / std::sqrt(std::max(1.0, fan));
  for (auto& v : s.weights.flat()) v = rng.uniform(-bound, bound);
  const double hbound = 1.0 / std::sqrt(std::max<double>(1.0, static_cast<double>(s.feature_dim)));
  for (auto& v : s.hidden_w.flat()) v = rng.uniform(-hbound, hbound);
  return s.template cast<T>();
}

// Mean BCE of max-over-paths probabilities over (pair, relation) cells. Pairs
// without paths are skipped. Gradient flows through the arg-max path.
template <class T>
double scorer_objective(const BasicReasoningScorer<T>& s, const std::vector<PairExample>& examples,
                        BasicReasoningScorer<T>* grad) {
  const std::size_t nr = s.n_relations();
  double loss = 0.0;
  std::size_t cells = 0;
  std::vector<char> label(nr);
  std::vector<double> act, best_act;
  for (const auto& ex : examples) {
    if (ex.path_features.empty()) continue;
    std::fill(label.begin(), label.end(), 0);
    for (auto r : ex.positives) label.at(r) = 1;
    cells += nr;
    for (std::size_t r = 0; r < nr; ++r) {
      double z = 0.0;
      std::size_t arg = 0;
      for (std::size_t p = 0; p < ex.path_features.size(); ++p) {
        const double zp = s.logit(r, ex.path_features[p], grad ? &act : nullptr);
        if (p == 0 || zp > z) {
          z = zp;
          arg = p;
          if (grad) best_act = act;
        }
      }
      const double y = label[r];
      loss += softplus(z) - y * z;
      if (!grad) continue;
      const double dz = sigmoid(z) - y;
      const auto& f = ex.path_features[arg];
      grad->bias[r] += static_cast<T>(dz);
      auto gw = grad->weights.row(r);
      if (s.depth == 1) {
        for (std::size_t k = 0; k < s.feature_dim; ++k) gw[k] += static_cast<T>(dz * f[k]);
        continue;
      }
      auto w = s.weights.row(r);
      auto ghw = grad->hidden_w.row(r);
      auto ghb = grad->hidden_b.row(r);
      for (std::size_t j = 0; j < s.hidden; ++j) {
        gw[j] += static_cast<T>(dz * best_act[j]);
        if (best_act[j] <= 0.0) continue;
        const double da = dz * static_cast<double>(w[j]);
        ghb[j] += static_cast<T>(da);
        for (std::size_t k = 0; k < s.feature_dim; ++k) ghw[j * s.feature_dim + k] += static_cast<T>(da * f[k]);
      }
    }
  }
  if (cells == 0) return 0.0;
  const double inv = 1.0 / static_cast<double>(cells);
  if (grad) grad->visit([&](std::span<T> v) {
      for (auto& x : v) x = static_cast<T>(x * inv);
    });
  return loss * inv;
}

template <class T = float>
BasicReasoningScorer<T> train_scorer(const std::vector<PairExample>& examples, const FeatureSpec& spec,
                                     std::size_t n_relations, const ScorerConfig& cfg,
                                     std::vector<double>* loss_history = nullptr) {
  cfg.validate();
  bool any_positive = false;
  for (const auto& ex : examples) {
    for (auto r : ex.positives)
      if (r >= n_relations) throw ValidationError("relation id " + std::to_string(r) + " outside scorer vocabulary");
    any_positive = any_positive || (!ex.path_features.empty() && !ex.positives.empty());
  }
  if (!any_positive) throw TrainingError("reasoning scorer has no positive examples for any relation");

  auto s = init_scorer<double>(spec, n_relations, cfg);
  for (const auto& ex : examples)
    for (const auto& f : ex.path_features)
      if (f.size() != s.feature_dim) throw ConfigError("feature dimensionality mismatch in training data");

  // Adam over the flattened parameter list.
  std::vector<std::span<double>> params;
  s.visit([&](std::span<double> v) { params.push_back(v); });
  std::vector<std::vector<double>> m, v;
  for (auto p : params) {
    m.emplace_back(p.size(), 0.0);
    v.emplace_back(p.size(), 0.0);
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    BasicReasoningScorer<double> g(spec, n_relations, s.feature_dim, s.depth, s.hidden);
    const double loss = scorer_objective(s, examples, &g);
    if (!std::isfinite(loss)) throw TrainingError("reasoning scorer loss diverged at epoch " + std::to_string(epoch));
    if (loss_history) loss_history->push_back(loss);
    std::vector<std::span<const double>> grads;
    g.visit([&](std::span<const double> x) { grads.push_back(x); });
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(epoch + 1));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(epoch + 1));
    for (std::size_t a = 0; a < params.size(); ++a)
      for (std::size_t k = 0; k < params[a].size(); ++k) {
        m[a][k] = b1 * m[a][k] + (1 - b1) * grads[a][k];
        v[a][k] = b2 * v[a][k] + (1 - b2) * grads[a][k] * grads[a][k];
        params[a][k] -= cfg.lr * (m[a][k] / c1) / (std::sqrt(v[a][k] / c2) + eps);
      }
  }
  return s.template cast<T>();
}

// Builds one PairExample per ordered entity pair of every document.
// Relations are resolved against the graph vocabulary.
inline std::vector<PairExample> build_pair_examples(const std::vector<Document>& docs, const KnowledgeGraph& graph,
                                                    const FeatureSpec& spec) {
  std::vector<PairExample> out;
  for (const auto& doc : docs) {
    const std::size_t n = doc.entity_clusters.size();
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::uint32_t>> gold;
    for (const auto& f : doc.gold_facts) gold[{f.head_idx, f.tail_idx}].push_back(graph.relations().at(f.relation).value);
    for (std::size_t h = 0; h < n; ++h)
      for (std::size_t t = 0; t < n; ++t) {
        if (h == t) continue;
        PairExample ex;
        for (const auto& p : extract_paths(doc, h, t)) ex.path_features.push_back(featurize(p, doc, graph, spec));
        if (auto it = gold.find({h, t}); it != gold.end()) {
          ex.positives = it->second;
          std::sort(ex.positives.begin(), ex.positives.end());
          ex.positives.erase(std::unique(ex.positives.begin(), ex.positives.end()), ex.positives.end());
        }
        out.push_back(std::move(ex));
      }
  }
  return out;
}

}  // namespace kgrelex

#endif  // KGRELEX_REASONING_HPP
