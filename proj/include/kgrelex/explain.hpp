#ifndef KGRELEX_EXPLAIN_HPP
#define KGRELEX_EXPLAIN_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kgrelex/error.hpp"
#include "kgrelex/kg.hpp"
#include "kgrelex/linkpred.hpp"

namespace kgrelex {

struct ExplanationPath {
  std::vector<EntityId> nodes;    // e_0 .. e_k
  std::vector<RelationId> edges;  // k relations
  double score = 0.0;

  std::size_t length() const noexcept { return edges.size(); }

  friend bool operator==(const ExplanationPath&, const ExplanationPath&) = default;
};

struct ExplanationAnswer {
  EntityId entity;
  ExplanationPath best_path;
  double score = 0.0;

  friend bool operator==(const ExplanationAnswer&, const ExplanationAnswer&) = default;
};

struct BeamConfig {
  std::size_t beam = 128;
  std::size_t max_len = 4;
  std::size_t top_n = 10;

  void validate() const {
    if (beam < 1) throw ConfigError("beam must be >= 1");
    if (max_len < 1 || max_len > 4) throw ConfigError("max_len must be in [1, 4]");
    if (top_n < 1) throw ConfigError("top_n must be >= 1");
  }
};

// Training graph plus predicted triples. Vocabularies must already cover the
// predictions; a training triple keeps its provenance.
inline KnowledgeGraph build_explanation_graph(const KnowledgeGraph& train_graph,
                                              const std::vector<NamedTriple>& predicted) {
  KnowledgeGraph g = train_graph;
  for (const auto& p : predicted) {
    Triple t{g.entities().at(p.head), g.relations().at(p.relation), g.entities().at(p.tail), Provenance::Predicted};
    g.add_triple(t);
  }
  return g;
}

inline double log_sigmoid(double x) { return -softplus(-x); }

namespace detail {

// Preference between two paths of equal score: shorter, then lexicographic
// (edges, nodes).
inline bool path_tiebreak(const ExplanationPath& a, const ExplanationPath& b) {
  if (a.length() != b.length()) return a.length() < b.length();
  if (a.edges != b.edges) return a.edges < b.edges;
  return a.nodes < b.nodes;
}

inline bool better_path(const ExplanationPath& a, const ExplanationPath& b) {
  if (a.score != b.score) return a.score > b.score;
  return path_tiebreak(a, b);
}

// Beam order: score, then end entity, then the path tie-break.
inline bool beam_order(const ExplanationPath& a, const ExplanationPath& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.nodes.back() != b.nodes.back()) return a.nodes.back() < b.nodes.back();
  return path_tiebreak(a, b);
}

inline std::vector<ExplanationAnswer> finalize_answers(const std::map<EntityId, ExplanationPath>& best,
                                                       std::size_t top_n) {
  std::vector<ExplanationAnswer> out;
  out.reserve(best.size());
  for (const auto& [e, path] : best) out.push_back({e, path, path.score});
  std::sort(out.begin(), out.end(), [](const ExplanationAnswer& a, const ExplanationAnswer& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entity < b.entity;
  });
  if (out.size() > top_n) out.resize(top_n);
  return out;
}

}  // namespace detail

// Answers the query (head, relation, ?) by expanding simple paths out of
// `head` breadth-wise, keeping the `beam` best partial paths per step.
//   path score = sum_i log sigmoid(f(n_i, r_i, n_{i+1})) + log sigmoid(f(head, relation, n_k))
// where `score_fn(h, r, t)` returns a raw (pre-sigmoid) triple score. Every
// entity reached at any depth is a candidate answer carrying the best path
// found to it.
template <class ScoreFn>
std::vector<ExplanationAnswer> beam_search(const KnowledgeGraph& graph, EntityId head, RelationId relation,
                                           ScoreFn&& score_fn, const BeamConfig& cfg) {
  cfg.validate();
  graph.entities().check(head);
  graph.relations().check(relation);
  std::map<EntityId, ExplanationPath> best;
  std::vector<ExplanationPath> frontier{{{head}, {}, 0.0}};
  std::vector<double> edge_sums{0.0};
  for (std::size_t step = 0; step < cfg.max_len && !frontier.empty(); ++step) {
    std::vector<std::pair<ExplanationPath, double>> candidates;
    for (std::size_t i = 0; i < frontier.size(); ++i) {
      const auto& p = frontier[i];
      const EntityId last = p.nodes.back();
      graph.for_each_out_edge(last, [&](RelationId r, EntityId t) {
        if (std::find(p.nodes.begin(), p.nodes.end(), t) != p.nodes.end()) return;
        ExplanationPath next = p;
        next.nodes.push_back(t);
        next.edges.push_back(r);
        const double edge_sum = edge_sums[i] + log_sigmoid(static_cast<double>(score_fn(last, r, t)));
        next.score = edge_sum + log_sigmoid(static_cast<double>(score_fn(head, relation, t)));
        candidates.emplace_back(std::move(next), edge_sum);
      });
    }
    for (const auto& [c, sum] : candidates) {
      auto [it, inserted] = best.try_emplace(c.nodes.back(), c);
      if (!inserted && detail::better_path(c, it->second)) it->second = c;
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const auto& a, const auto& b) { return detail::beam_order(a.first, b.first); });
    if (candidates.size() > cfg.beam) candidates.resize(cfg.beam);
    frontier.clear();
    edge_sums.clear();
    for (auto& [c, sum] : candidates) {
      frontier.push_back(std::move(c));
      edge_sums.push_back(sum);
    }
  }
  return detail::finalize_answers(best, cfg.top_n);
}

// DistMult triple scorer over precomputed node states.
template <class T>
struct DistMultScorer {
  const BasicModelParams<T>& params;
  const Matrix<T>& states;

  double operator()(EntityId h, RelationId r, EntityId t) const {
    return static_cast<double>(distmult_score(params, states, h, r, t));
  }
};

template <class T>
std::vector<ExplanationAnswer> beam_search(const KnowledgeGraph& graph, EntityId head, RelationId relation,
                                           const BasicModelParams<T>& params, const Matrix<T>& states,
                                           const BeamConfig& cfg) {
  return beam_search(graph, head, relation, DistMultScorer<T>{params, states}, cfg);
}

// Every consecutive (node, edge, node) is a triple of `graph`.
inline bool walkable(const ExplanationPath& p, const KnowledgeGraph& graph) {
  if (p.nodes.size() != p.edges.size() + 1) return false;
  for (std::size_t i = 0; i < p.edges.size(); ++i)
    if (!graph.contains(p.nodes[i], p.edges[i], p.nodes[i + 1])) return false;
  return true;
}

// Short labels for the reserved context relations in rendered explanations.
inline std::string_view display_relation(std::string_view name) {
  if (name == KnowledgeGraph::kHasSynonym) return "synonym";
  if (name == KnowledgeGraph::kHasEntityType) return "type";
  return name;
}

// One "{head, relation, tail}" line per hop.
inline std::vector<std::string> format_explanation(const ExplanationAnswer& answer, const KnowledgeGraph& graph) {
  std::vector<std::string> lines;
  const auto& p = answer.best_path;
  for (std::size_t i = 0; i < p.edges.size(); ++i)
    lines.push_back("{" + graph.entities().name(p.nodes[i]) + ", " +
                    std::string(display_relation(graph.relations().name(p.edges[i]))) + ", " +
                    graph.entities().name(p.nodes[i + 1]) + "}");
  return lines;
}

namespace detail {

inline std::optional<RelationId> relation_from_display(const KnowledgeGraph& g, const std::string& s) {
  if (auto r = g.relations().find(s)) return r;
  if (s == "synonym") return g.has_synonym();
  if (s == "type") return g.has_entity_type();
  return std::nullopt;
}

inline std::string join(const std::vector<std::string>& parts, std::size_t lo, std::size_t hi) {
  std::string out;
  for (std::size_t i = lo; i < hi; ++i) {
    if (i > lo) out += ", ";
    out += parts[i];
  }
  return out;
}

}  // namespace detail

// Inverse of format_explanation. Names containing ", " are resolved against
// the graph vocabularies.
inline ExplanationPath parse_explanation(const std::vector<std::string>& lines, const KnowledgeGraph& graph) {
  ExplanationPath p;
  for (std::size_t li = 0; li < lines.size(); ++li) {
    const std::string& line = lines[li];
    if (line.size() < 2 || line.front() != '{' || line.back() != '}')
      throw ParseError("explanation line " + std::to_string(li) + ": expected {head, relation, tail}");
    std::vector<std::string> parts;
    std::string body = line.substr(1, line.size() - 2);
    for (std::size_t pos = 0;;) {
      auto next = body.find(", ", pos);
      parts.push_back(body.substr(pos, next - pos));
      if (next == std::string::npos) break;
      pos = next + 2;
    }
    bool found = false;
    for (std::size_t i = 1; i + 1 < parts.size() && !found; ++i)
      for (std::size_t j = i + 1; j < parts.size() && !found; ++j) {
        auto h = graph.entities().find(detail::join(parts, 0, i));
        auto r = detail::relation_from_display(graph, detail::join(parts, i, j));
        auto t = graph.entities().find(detail::join(parts, j, parts.size()));
        if (!h || !r || !t) continue;
        if (p.nodes.empty()) p.nodes.push_back(*h);
        if (p.nodes.back() != *h) throw ParseError("explanation line " + std::to_string(li) + ": broken chain");
        p.edges.push_back(*r);
        p.nodes.push_back(*t);
        found = true;
      }
    if (!found) throw ParseError("explanation line " + std::to_string(li) + ": unresolvable names");
  }
  return p;
}

inline nlohmann::json explanation_json(const KnowledgeGraph& graph, EntityId head, RelationId relation,
                                       const std::vector<ExplanationAnswer>& answers) {
  using nlohmann::json;
  json arr = json::array();
  for (const auto& a : answers) {
    json path = json::array();
    for (std::size_t i = 0; i < a.best_path.edges.size(); ++i)
      path.push_back({{"h", graph.entities().name(a.best_path.nodes[i])},
                      {"r", graph.relations().name(a.best_path.edges[i])},
                      {"t", graph.entities().name(a.best_path.nodes[i + 1])}});
    arr.push_back({{"entity", graph.entities().name(a.entity)}, {"score", a.score}, {"path", std::move(path)}});
  }
  return {{"query", {{"h", graph.entities().name(head)}, {"r", graph.relations().name(relation)}}},
          {"answers", std::move(arr)}};
}

}  // namespace kgrelex

#endif  // KGRELEX_EXPLAIN_HPP
