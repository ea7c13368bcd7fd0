#ifndef KGRELEX_PIPELINE_HPP
#define KGRELEX_PIPELINE_HPP

#include <filesystem>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgrelex/aggregation.hpp"
#include "kgrelex/checkpoint.hpp"
#include "kgrelex/context.hpp"
#include "kgrelex/error.hpp"
#include "kgrelex/explain.hpp"
#include "kgrelex/ingestion.hpp"
#include "kgrelex/kg.hpp"
#include "kgrelex/linkpred.hpp"
#include "kgrelex/reasoning.hpp"

namespace kgrelex {

struct PipelineConfig {
  // inputs
  std::string train_docs;
  std::string dev_docs;
  std::string test_docs;
  std::string external_triples;
  std::string entity_context;
  std::string context_paths;
  std::size_t context_max_hops = 4;

  // outputs
  std::string output_dir = "out";
  std::string checkpoint;  // defaults to <output_dir>/model.ckpt

  std::uint64_t seed = 42;
  TrainConfig link;
  ScorerConfig scorer;
  AggregationConfig aggregation;
  Thresholds thresholds;
  bool filtered = true;
  BeamConfig beam;

  std::filesystem::path checkpoint_path() const {
    return checkpoint.empty() ? std::filesystem::path(output_dir) / "model.ckpt" : std::filesystem::path(checkpoint);
  }

  // Seeds every stochastic component from `seed`.
  void propagate_seed() {
    link.seed = seed;
    scorer.seed = seed + 1;
  }

  void validate() const {
    link.validate();
    scorer.validate();
    thresholds.validate();
    beam.validate();
    if (!(aggregation.lambda >= 0.0 && aggregation.lambda <= 1.0)) throw ConfigError("lambda must be in [0, 1]");
    if (context_max_hops < 1 || context_max_hops > kMaxContextHops)
      throw ConfigError("context_max_hops must be in [1, 4]");
  }
};

inline std::string_view to_string(Activation a) { return a == Activation::ReLU ? "relu" : "identity"; }
inline std::string_view to_string(AggregationMode m) { return m == AggregationMode::Max ? "max" : "convex"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::ReLU;
  if (s == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + s + "' (relu|identity)");
}

inline AggregationMode aggregation_from_string(const std::string& s) {
  if (s == "convex") return AggregationMode::Convex;
  if (s == "max") return AggregationMode::Max;
  throw ConfigError("unknown aggregation '" + s + "' (convex|max)");
}

// "rel=0.7;other=0.4"
inline std::map<std::string, double> parse_relation_thresholds(const std::string& spec) {
  std::map<std::string, double> out;
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ';')) {
    if (item.empty()) continue;
    auto eq = item.rfind('=');
    if (eq == std::string::npos) throw ConfigError("relation threshold '" + item + "' is not name=value");
    try {
      out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("relation threshold '" + item + "' has a bad value");
    }
  }
  return out;
}

// Echo of every model-affecting setting, stored in checkpoints.
inline nlohmann::json config_echo(const PipelineConfig& c) {
  return {
      {"seed", c.seed},
      {"context_max_hops", c.context_max_hops},
      {"link",
       {{"lr", c.link.lr},
        {"epochs", c.link.epochs},
        {"dropout_self", c.link.dropout_self},
        {"dropout_other", c.link.dropout_other},
        {"l2_decoder", c.link.l2_decoder},
        {"dim", c.link.dim},
        {"neg_per_pos", c.link.neg_per_pos},
        {"rgcn_layers", c.link.rgcn_layers},
        {"blocks", c.link.blocks},
        {"batch_size", c.link.batch_size},
        {"decoder_only", c.link.decoder_only},
        {"activation", to_string(c.link.activation)},
        {"output_activation", to_string(c.link.output_activation)}}},
      {"scorer",
       {{"lr", c.scorer.lr}, {"epochs", c.scorer.epochs}, {"depth", c.scorer.depth}, {"hidden", c.scorer.hidden}}},
  };
}

// Label relations: every relation carried by at least one CoreLabel triple.
inline std::vector<std::uint32_t> label_relations(const KnowledgeGraph& g) {
  std::set<std::uint32_t> rels;
  for (const auto& t : g.triples())
    if (t.provenance == Provenance::CoreLabel) rels.insert(t.relation.value);
  return {rels.begin(), rels.end()};
}

inline std::vector<Document> load_documents(const std::string& path) { return parse_documents(read_file(path)); }

// Builds the provenance-tagged training graph from the configured inputs.
// Returns it frozen.
inline KnowledgeGraph build_training_graph(const PipelineConfig& cfg, const std::vector<Document>& train_docs,
                                           std::ostream* log = nullptr) {
  KnowledgeGraph g;
  const std::size_t core = core_triples(train_docs, g);
  for (const auto& d : train_docs)
    for (std::size_t e = 0; e < d.entity_clusters.size(); ++e) g.intern_entity(d.canonical_name(e));
  std::size_t extracted = 0, synonyms = 0, types = 0, paths = 0;
  if (!cfg.external_triples.empty())
    extracted = load_external_triples(read_file(cfg.external_triples), Provenance::Extracted, g);
  if (!cfg.entity_context.empty())
    for (const auto& rec : parse_entity_context(read_file(cfg.entity_context))) {
      for (const auto& t : synonym_triples(rec)) synonyms += g.add_named(t);
      for (const auto& t : type_triples(rec)) types += g.add_named(t);
    }
  if (!cfg.context_paths.empty())
    for (const auto& p : select_context_paths(parse_context_paths(read_file(cfg.context_paths)), cfg.context_max_hops))
      for (const auto& t : path_to_triples(p)) paths += g.add_named(t);
  g.freeze_vocab();
  if (log)
    *log << "graph: " << g.entities().size() << " entities, " << g.relations().size() << " relations, " << g.size()
         << " triples (core " << core << ", extracted " << extracted << ", synonym " << synonyms << ", type " << types
         << ", path " << paths << ")\n";
  return g;
}

inline DatasetStats cmd_stats(const PipelineConfig& cfg, std::ostream& out) {
  std::vector<std::string> files;
  for (const auto* f : {&cfg.train_docs, &cfg.dev_docs, &cfg.test_docs})
    if (!f->empty()) files.push_back(*f);
  if (files.empty()) throw ConfigError("stats needs at least one of train_docs, dev_docs, test_docs");
  std::vector<Document> all;
  for (const auto& f : files) {
    auto docs = load_documents(f);
    all.insert(all.end(), std::make_move_iterator(docs.begin()), std::make_move_iterator(docs.end()));
  }
  const DatasetStats s = dataset_stats(all);
  nlohmann::json j = {{"n_triples", s.n_triples},
                      {"n_relations", s.n_relations},
                      {"n_entities", s.n_entities},
                      {"n_entity_types", s.n_entity_types},
                      {"n_docs", s.n_docs}};
  std::filesystem::create_directories(cfg.output_dir);
  write_file_atomic(std::filesystem::path(cfg.output_dir) / "stats.json", j.dump(2) + "\n");
  out << "#Triples  #Rel  #Entities  #EntityTypes  #Doc\n"
      << s.n_triples << "  " << s.n_relations << "  " << s.n_entities << "  " << s.n_entity_types << "  " << s.n_docs
      << "\n";
  return s;
}

inline Checkpoint cmd_train(PipelineConfig cfg, std::ostream& out) {
  cfg.propagate_seed();
  cfg.validate();
  if (cfg.train_docs.empty()) throw ConfigError("train needs train_docs");
  const auto docs = load_documents(cfg.train_docs);
  Checkpoint ck;
  ck.config = config_echo(cfg);
  ck.graph = build_training_graph(cfg, docs, &out);

  std::vector<double> history;
  ck.model = train<float>(ck.graph, cfg.link, &history);
  if (!history.empty()) out << "link prediction: final loss " << history.back() << "\n";

  const FeatureSpec spec = FeatureSpec::from_documents(docs);
  const auto examples = build_pair_examples(docs, ck.graph, spec);
  history.clear();
  ck.scorer = train_scorer<float>(examples, spec, ck.graph.relations().size(), cfg.scorer, &history);
  if (!history.empty()) out << "reasoning scorer: final loss " << history.back() << "\n";

  const auto path = cfg.checkpoint_path();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  save_checkpoint(path, ck);
  out << "checkpoint written to " << path.string() << "\n";
  return ck;
}

// Reasoning, link prediction and fused probabilities for every ordered
// entity pair of every document, over the label relations.
inline std::vector<PairScore> score_documents(const Checkpoint& ck, const Matrix<float>& states,
                                              const std::vector<Document>& docs, const AggregationConfig& agg) {
  const auto labels = label_relations(ck.graph);
  std::vector<PairScore> out;
  for (const auto& doc : docs) {
    const std::size_t n = doc.entity_clusters.size();
    std::vector<std::optional<EntityId>> ids(n);
    for (std::size_t e = 0; e < n; ++e) ids[e] = ck.graph.entities().find(doc.canonical_name(e));
    for (std::size_t h = 0; h < n; ++h)
      for (std::size_t t = 0; t < n; ++t) {
        if (h == t) continue;
        const auto paths = extract_paths(doc, h, t);
        std::vector<ReasoningFeatures> feats;
        feats.reserve(paths.size());
        for (const auto& p : paths) feats.push_back(featurize(p, doc, ck.graph, ck.scorer.spec));
        const PairReasoning reasoning = score_pair(paths, feats, ck.scorer);
        PairScore ps;
        ps.doc_id = doc.doc_id;
        ps.head = h;
        ps.tail = t;
        ps.winning_kind = reasoning.winning_kind;
        for (auto r : labels) {
          double lp = 0.0;
          if (ids[h] && ids[t])
            lp = sigmoid(static_cast<double>(distmult_score(ck.model, states, *ids[h], RelationId{r}, *ids[t])));
          const double rp = reasoning.prob[r];
          ps.relations.push_back(r);
          ps.reasoning_prob.push_back(rp);
          ps.linkpred_prob.push_back(lp);
          ps.final_prob.push_back(aggregate(rp, lp, agg.lambda, agg.mode));
        }
        out.push_back(std::move(ps));
      }
  }
  return out;
}

inline std::string predictions_jsonl(const PredictionSet& preds) {
  std::string out;
  for (const auto& p : preds) {
    nlohmann::json j = {{"title", p.fact.doc_id},
                        {"h_idx", p.fact.head},
                        {"t_idx", p.fact.tail},
                        {"r", p.fact.relation},
                        {"score", p.score}};
    out += j.dump() + "\n";
  }
  return out;
}

inline PredictionSet run_predictions(const Checkpoint& ck, const std::vector<Document>& docs,
                                     const PipelineConfig& cfg) {
  const Matrix<float> states = rgcn_forward(MessageGraph(ck.graph), ck.model);
  return predict(score_documents(ck, states, docs, cfg.aggregation), ck.graph, cfg.thresholds);
}

inline PredictionSet cmd_predict(const PipelineConfig& cfg, std::ostream& out) {
  cfg.validate();
  if (cfg.test_docs.empty()) throw ConfigError("predict needs test_docs");
  const Checkpoint ck = load_checkpoint(cfg.checkpoint_path());
  const auto docs = load_documents(cfg.test_docs);
  const auto preds = run_predictions(ck, docs, cfg);
  std::filesystem::create_directories(cfg.output_dir);
  const auto path = std::filesystem::path(cfg.output_dir) / "predictions.jsonl";
  write_file_atomic(path, predictions_jsonl(preds));
  out << preds.size() << " predictions written to " << path.string() << "\n";
  return preds;
}

struct EvaluationReport {
  F1Result f1;
  RankMetrics ranking;
};

inline std::string report_json(const EvaluationReport& r) {
  nlohmann::json j = {{"f1", r.f1.f1},
                      {"ign_f1", r.f1.ign_f1},
                      {"precision", r.f1.precision},
                      {"recall", r.f1.recall},
                      {"n_pred", r.f1.n_pred},
                      {"n_gold", r.f1.n_gold},
                      {"n_correct", r.f1.n_correct},
                      {"hits1", r.ranking.hits1},
                      {"hits3", r.ranking.hits3},
                      {"hits10", r.ranking.hits10},
                      {"mrr", r.ranking.mrr},
                      {"rank_queries", r.ranking.queries}};
  return j.dump(2) + "\n";
}

inline EvaluationReport cmd_evaluate(const PipelineConfig& cfg, std::ostream& out) {
  cfg.validate();
  if (cfg.dev_docs.empty()) throw ConfigError("evaluate needs dev_docs");
  const Checkpoint ck = load_checkpoint(cfg.checkpoint_path());
  const auto docs = load_documents(cfg.dev_docs);
  const auto& g = ck.graph;

  std::set<Fact> gold;
  std::vector<Triple> rank_test;
  std::set<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>> seen;
  for (const auto& d : docs)
    for (const auto& f : d.gold_facts) {
      auto rel = g.relations().find(f.relation);
      if (!rel)
        throw VocabularyError("vocabulary mismatch: relation '" + f.relation + "' in " + d.doc_id +
                              " is unknown to the checkpoint");
      gold.insert({d.doc_id, f.head_idx, f.relation, f.tail_idx});
      auto h = g.entities().find(d.canonical_name(f.head_idx));
      auto t = g.entities().find(d.canonical_name(f.tail_idx));
      if (h && t && seen.insert({h->value, rel->value, t->value}).second) rank_test.push_back({*h, *rel, *t});
    }

  TrainFactSet train_facts;
  for (const auto& t : g.triples())
    if (t.provenance == Provenance::CoreLabel) {
      auto n = g.named(t);
      train_facts.emplace(n.head, n.relation, n.tail);
    }

  std::map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id[d.doc_id] = &d;
  auto name_of = [&](const Fact& f) {
    const Document& d = *by_id.at(f.doc_id);
    return std::tuple(d.canonical_name(f.head), f.relation, d.canonical_name(f.tail));
  };

  const Matrix<float> states = rgcn_forward(MessageGraph(g), ck.model);
  const PredictionSet preds = predict(score_documents(ck, states, docs, cfg.aggregation), g, cfg.thresholds);
  std::set<Fact> pred;
  for (const auto& p : preds) pred.insert(p.fact);

  EvaluationReport rep;
  rep.f1 = f1_metrics(pred, gold, train_facts, name_of);
  rep.ranking = rank_metrics_from_states(ck.model, states, g, rank_test, cfg.filtered);

  std::filesystem::create_directories(cfg.output_dir);
  write_file_atomic(std::filesystem::path(cfg.output_dir) / "report.json", report_json(rep));
  auto old = out.flags();
  out << std::fixed << std::setprecision(4) << "F1      " << rep.f1.f1 << "\nIgn F1  " << rep.f1.ign_f1
      << "\nHits@1  " << rep.ranking.hits1 << "\nHits@3  " << rep.ranking.hits3 << "\nHits@10 " << rep.ranking.hits10
      << "\nMRR     " << rep.ranking.mrr << "\n";
  out.flags(old);
  return rep;
}

struct ExplainResult {
  KnowledgeGraph graph;  // explanation graph the answers walk
  std::vector<ExplanationAnswer> answers;
};

inline ExplainResult cmd_explain(const PipelineConfig& cfg, const std::string& head, const std::string& relation,
                                 std::ostream& out) {
  cfg.validate();
  const Checkpoint ck = load_checkpoint(cfg.checkpoint_path());
  const EntityId h = ck.graph.entities().at(head);
  const RelationId r = ck.graph.relations().at(relation);
  const Matrix<float> states = rgcn_forward(MessageGraph(ck.graph), ck.model);

  std::vector<NamedTriple> predicted;
  if (!cfg.test_docs.empty()) {
    const auto docs = load_documents(cfg.test_docs);
    std::map<std::string, const Document*> by_id;
    for (const auto& d : docs) by_id[d.doc_id] = &d;
    for (const auto& p : predict(score_documents(ck, states, docs, cfg.aggregation), ck.graph, cfg.thresholds)) {
      const Document& d = *by_id.at(p.fact.doc_id);
      NamedTriple t{d.canonical_name(p.fact.head), p.fact.relation, d.canonical_name(p.fact.tail),
                    Provenance::Predicted};
      // Predictions about entities the model never saw cannot join the graph.
      if (ck.graph.entities().find(t.head) && ck.graph.entities().find(t.tail)) predicted.push_back(std::move(t));
    }
  }
  ExplainResult res{build_explanation_graph(ck.graph, predicted), {}};
  res.answers = beam_search(res.graph, h, r, ck.model, states, cfg.beam);

  std::filesystem::create_directories(cfg.output_dir);
  write_file_atomic(std::filesystem::path(cfg.output_dir) / "explanations.jsonl",
                    explanation_json(res.graph, h, r, res.answers).dump() + "\n");
  out << "Query: (" << head << ", " << relation << ", ?x)\n";
  for (const auto& a : res.answers) {
    out << "Answer: " << res.graph.entities().name(a.entity) << " (score " << a.score << ")\nExplanation:\n";
    for (const auto& line : format_explanation(a, res.graph)) out << "  " << line << "\n";
  }
  if (res.answers.empty()) out << "No answers.\n";
  return res;
}

}  // namespace kgrelex

#endif  // KGRELEX_PIPELINE_HPP
