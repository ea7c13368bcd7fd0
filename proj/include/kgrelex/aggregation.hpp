#ifndef KGRELEX_AGGREGATION_HPP
#define KGRELEX_AGGREGATION_HPP

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "kgrelex/error.hpp"
#include "kgrelex/kg.hpp"
#include "kgrelex/reasoning.hpp"

namespace kgrelex {

enum class AggregationMode : std::uint8_t { Convex = 0, Max = 1 };

struct AggregationConfig {
  AggregationMode mode = AggregationMode::Convex;
  double lambda = 0.5;  // weight on the reasoning probability
};

namespace detail {
inline void check_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(std::string(what) + " must be in [0, 1], got " + std::to_string(v));
}
}  // namespace detail

// lambda * reasoning + (1 - lambda) * linkpred, or the max of the two.
inline double aggregate(double reasoning_prob, double linkpred_prob, double lambda,
                        AggregationMode mode = AggregationMode::Convex) {
  detail::check_unit(reasoning_prob, "reasoning probability");
  detail::check_unit(linkpred_prob, "link prediction probability");
  detail::check_unit(lambda, "lambda");
  if (mode == AggregationMode::Max) return std::max(reasoning_prob, linkpred_prob);
  return lambda * reasoning_prob + (1.0 - lambda) * linkpred_prob;
}

struct PairScore {
  std::string doc_id;
  std::size_t head = 0;  // entity-cluster indexes within the document
  std::size_t tail = 0;
  std::vector<std::uint32_t> relations;  // relation ids, parallel to the vectors below
  std::vector<double> reasoning_prob;
  std::vector<double> linkpred_prob;
  std::vector<double> final_prob;
  std::optional<PathKind> winning_kind;
};

// (doc_id, head index, relation name, tail index)
struct Fact {
  std::string doc_id;
  std::size_t head = 0;
  std::string relation;
  std::size_t tail = 0;

  auto operator<=>(const Fact&) const = default;
};

struct Prediction {
  Fact fact;
  double score = 0.0;
};

// Ordered by fact; no duplicates.
using PredictionSet = std::vector<Prediction>;

struct Thresholds {
  double global = 0.5;
  std::map<std::string, double> per_relation;

  double for_relation(const std::string& r) const {
    auto it = per_relation.find(r);
    return it == per_relation.end() ? global : it->second;
  }

  void validate() const {
    auto ok = [](double t) { return t > 0.0 && t <= 1.0; };
    if (!ok(global)) throw ConfigError("threshold must be in (0, 1]");
    for (const auto& [r, t] : per_relation)
      if (!ok(t)) throw ConfigError("threshold for '" + r + "' must be in (0, 1]");
  }
};

// Emits (h, r, t) iff final_prob >= threshold(r).
inline PredictionSet predict(const std::vector<PairScore>& scores, const KnowledgeGraph& graph,
                             const Thresholds& thresholds) {
  thresholds.validate();
  std::map<Fact, double> kept;
  for (const auto& ps : scores)
    for (std::size_t i = 0; i < ps.relations.size(); ++i) {
      const std::string& rel = graph.relations().name(RelationId{ps.relations[i]});
      if (ps.final_prob[i] < thresholds.for_relation(rel)) continue;
      Fact f{ps.doc_id, ps.head, rel, ps.tail};
      auto [it, inserted] = kept.emplace(f, ps.final_prob[i]);
      if (!inserted) it->second = std::max(it->second, ps.final_prob[i]);
    }
  PredictionSet out;
  out.reserve(kept.size());
  for (const auto& [f, s] : kept) out.push_back({f, s});
  return out;
}

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double ign_f1 = 0.0;
  std::size_t n_pred = 0;
  std::size_t n_gold = 0;
  std::size_t n_correct = 0;
  bool ign_empty = false;  // Ign F1 had an empty denominator
};

// (head name, relation, tail name) triples annotated in training data.
using TrainFactSet = std::set<std::tuple<std::string, std::string, std::string>>;

namespace detail {
inline double f1_of(std::size_t correct, std::size_t n_pred, std::size_t n_gold) {
  if (n_pred == 0 || n_gold == 0 || correct == 0) return 0.0;
  const double p = static_cast<double>(correct) / static_cast<double>(n_pred);
  const double r = static_cast<double>(correct) / static_cast<double>(n_gold);
  return 2.0 * p * r / (p + r);
}
}  // namespace detail

// Micro F1, and Ign F1 after dropping from both sides every fact whose named
// triple appears in `train_facts`. `name_of(fact)` maps a fact to its
// (head name, relation, tail name). An empty Ign denominator scores 0 and
// sets `ign_empty`.
template <class NameOf>
F1Result f1_metrics(const std::set<Fact>& pred, const std::set<Fact>& gold, const TrainFactSet& train_facts,
                    NameOf&& name_of) {
  F1Result res;
  res.n_pred = pred.size();
  res.n_gold = gold.size();
  std::size_t ign_pred = 0, ign_gold = 0, ign_correct = 0;
  for (const auto& f : pred) {
    const bool hit = gold.contains(f);
    res.n_correct += hit;
    if (train_facts.contains(name_of(f))) continue;
    ++ign_pred;
    ign_correct += hit;
  }
  for (const auto& f : gold)
    if (!train_facts.contains(name_of(f))) ++ign_gold;
  res.precision = res.n_pred ? static_cast<double>(res.n_correct) / static_cast<double>(res.n_pred) : 0.0;
  res.recall = res.n_gold ? static_cast<double>(res.n_correct) / static_cast<double>(res.n_gold) : 0.0;
  res.f1 = detail::f1_of(res.n_correct, res.n_pred, res.n_gold);
  res.ign_empty = ign_pred == 0 || ign_gold == 0;
  if (res.ign_empty && !(pred.empty() && gold.empty()))
    std::clog << "warning: Ign F1 denominator is empty; reporting 0\n";
  res.ign_f1 = detail::f1_of(ign_correct, ign_pred, ign_gold);
  return res;
}

// Clamped mean binary cross-entropy over all cells.
inline double bce_loss(std::span<const double> probs, std::span<const double> labels) {
  if (probs.size() != labels.size()) throw ValidationError("bce_loss: size mismatch");
  if (probs.empty()) return 0.0;
  constexpr double eps = 1e-7;
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], eps, 1.0 - eps);
    sum -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(probs.size());
}

}  // namespace kgrelex

#endif  // KGRELEX_AGGREGATION_HPP
