#ifndef KGRELEX_INGESTION_HPP
#define KGRELEX_INGESTION_HPP

#include <cstddef>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "kgrelex/error.hpp"
#include "kgrelex/kg.hpp"

namespace kgrelex {

struct Mention {
  std::size_t entity_index = 0;
  std::size_t sent_id = 0;
  std::size_t start = 0;  // token span [start, end) within the sentence
  std::size_t end = 0;
  std::string surface;
  std::string etype;

  friend bool operator==(const Mention&, const Mention&) = default;
};

struct LabeledFact {
  std::size_t head_idx = 0;
  std::size_t tail_idx = 0;
  std::string relation;
  std::vector<std::size_t> evidence;

  friend bool operator==(const LabeledFact&, const LabeledFact&) = default;
};

struct Document {
  std::string doc_id;
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::vector<Mention>> entity_clusters;
  std::vector<LabeledFact> gold_facts;

  // Surface form of the cluster's first mention.
  const std::string& canonical_name(std::size_t entity) const {
    return entity_clusters.at(entity).front().surface;
  }

  friend bool operator==(const Document&, const Document&) = default;
};

struct DatasetStats {
  std::size_t n_triples = 0;
  std::size_t n_relations = 0;
  std::size_t n_entities = 0;
  std::size_t n_entity_types = 0;
  std::size_t n_docs = 0;

  friend bool operator==(const DatasetStats&, const DatasetStats&) = default;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace detail {

using nlohmann::json;

inline std::string where(std::size_t doc, std::string_view field) {
  return "document " + std::to_string(doc) + ", field '" + std::string(field) + "'";
}

template <class T>
T get_field(const json& obj, const char* key, std::size_t doc, std::string_view path) {
  std::string field = std::string(path) + key;
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(where(doc, field) + ": missing");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where(doc, field) + ": " + e.what());
  }
}

inline const json& get_array(const json& obj, const char* key, std::size_t doc, std::string_view path) {
  std::string field = std::string(path) + key;
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(where(doc, field) + ": missing");
  const json& v = obj.at(key);
  if (!v.is_array()) throw ParseError(where(doc, field) + ": expected array");
  return v;
}

inline Document parse_document(const json& rec, std::size_t idx) {
  if (!rec.is_object()) throw ParseError("document " + std::to_string(idx) + ": expected object");
  Document doc;
  doc.doc_id = get_field<std::string>(rec, "title", idx, "");

  for (const json& sent : get_array(rec, "sents", idx, "")) {
    if (!sent.is_array()) throw ParseError(where(idx, "sents") + ": sentence is not an array");
    auto& tokens = doc.sentences.emplace_back();
    for (const json& tok : sent) {
      if (!tok.is_string()) throw ParseError(where(idx, "sents") + ": token is not a string");
      tokens.push_back(tok.get<std::string>());
    }
  }
  if (doc.sentences.empty()) throw ValidationError(where(idx, "sents") + ": document has no sentences");

  const json& vertex_set = get_array(rec, "vertexSet", idx, "");
  for (std::size_t e = 0; e < vertex_set.size(); ++e) {
    const json& cluster = vertex_set[e];
    std::string path = "vertexSet[" + std::to_string(e) + "].";
    if (!cluster.is_array()) throw ParseError(where(idx, path) + ": expected array");
    if (cluster.empty()) throw ValidationError(where(idx, path) + ": empty entity cluster");
    auto& mentions = doc.entity_clusters.emplace_back();
    for (const json& m : cluster) {
      Mention mention;
      mention.entity_index = e;
      mention.surface = get_field<std::string>(m, "name", idx, path);
      auto sent_id = get_field<long long>(m, "sent_id", idx, path);
      auto pos = get_field<std::vector<long long>>(m, "pos", idx, path);
      mention.etype = get_field<std::string>(m, "type", idx, path);
      if (pos.size() != 2) throw ParseError(where(idx, path + "pos") + ": expected [start, end]");
      if (sent_id < 0 || static_cast<std::size_t>(sent_id) >= doc.sentences.size())
        throw ValidationError(where(idx, path + "sent_id") + ": sentence " + std::to_string(sent_id) +
                              " out of range");
      mention.sent_id = static_cast<std::size_t>(sent_id);
      auto len = static_cast<long long>(doc.sentences[mention.sent_id].size());
      if (pos[0] < 0 || pos[0] >= pos[1] || pos[1] > len)
        throw ValidationError(where(idx, path + "pos") + ": span [" + std::to_string(pos[0]) + ", " +
                              std::to_string(pos[1]) + ") outside sentence of length " + std::to_string(len));
      mention.start = static_cast<std::size_t>(pos[0]);
      mention.end = static_cast<std::size_t>(pos[1]);
      mentions.push_back(std::move(mention));
    }
  }

  // Test-set releases omit "labels".
  if (rec.contains("labels")) {
    const json& labels = get_array(rec, "labels", idx, "");
    for (std::size_t l = 0; l < labels.size(); ++l) {
      std::string path = "labels[" + std::to_string(l) + "].";
      LabeledFact fact;
      auto h = get_field<long long>(labels[l], "h", idx, path);
      auto t = get_field<long long>(labels[l], "t", idx, path);
      fact.relation = get_field<std::string>(labels[l], "r", idx, path);
      auto n = static_cast<long long>(doc.entity_clusters.size());
      if (h < 0 || h >= n || t < 0 || t >= n)
        throw ValidationError(where(idx, path + "h/t") + ": entity index out of range");
      if (h == t) throw ValidationError(where(idx, path + "h/t") + ": head equals tail");
      fact.head_idx = static_cast<std::size_t>(h);
      fact.tail_idx = static_cast<std::size_t>(t);
      if (labels[l].contains("evidence")) {
        for (long long s : get_field<std::vector<long long>>(labels[l], "evidence", idx, path)) {
          if (s < 0 || s >= static_cast<long long>(doc.sentences.size()))
            throw ValidationError(where(idx, path + "evidence") + ": sentence " + std::to_string(s) +
                                  " out of range");
          fact.evidence.push_back(static_cast<std::size_t>(s));
        }
      }
      doc.gold_facts.push_back(std::move(fact));
    }
  }
  return doc;
}

}  // namespace detail

// Parses a DocRED-style JSON array of documents.
inline std::vector<Document> parse_documents(std::string_view content) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(content);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("document file: ") + e.what());
  }
  if (!root.is_array()) throw ParseError("document file: top level must be an array");
  std::vector<Document> docs;
  docs.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) docs.push_back(detail::parse_document(root[i], i));
  return docs;
}

inline nlohmann::json to_json(const Document& doc) {
  using nlohmann::json;
  json vertex_set = json::array();
  for (const auto& cluster : doc.entity_clusters) {
    json c = json::array();
    for (const auto& m : cluster)
      c.push_back({{"name", m.surface}, {"sent_id", m.sent_id}, {"pos", {m.start, m.end}}, {"type", m.etype}});
    vertex_set.push_back(std::move(c));
  }
  json labels = json::array();
  for (const auto& f : doc.gold_facts)
    labels.push_back({{"h", f.head_idx}, {"t", f.tail_idx}, {"r", f.relation}, {"evidence", f.evidence}});
  return {{"title", doc.doc_id}, {"sents", doc.sentences}, {"vertexSet", std::move(vertex_set)}, {"labels", std::move(labels)}};
}

inline std::string serialize_documents(const std::vector<Document>& docs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : docs) arr.push_back(to_json(d));
  return arr.dump();
}

// One CoreLabel triple per gold fact. Returns the number of new triples.
inline std::size_t core_triples(const std::vector<Document>& docs, KnowledgeGraph& graph) {
  std::size_t inserted = 0;
  for (const auto& doc : docs)
    for (const auto& fact : doc.gold_facts)
      inserted += graph.add_named({doc.canonical_name(fact.head_idx), fact.relation,
                                   doc.canonical_name(fact.tail_idx), Provenance::CoreLabel});
  return inserted;
}

// Parses JSON Lines of {"h","r","t"[,"score"]}. Blank lines are skipped.
inline std::vector<NamedTriple> parse_triple_lines(std::string_view content, Provenance provenance) {
  using nlohmann::json;
  std::vector<NamedTriple> out;
  std::istringstream in{std::string(content)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& why) {
      return ParseError("triple file line " + std::to_string(lineno) + ": " + why);
    };
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw fail(e.what());
    }
    if (!rec.is_object()) throw fail("expected object");
    for (const char* key : {"h", "r", "t"})
      if (!rec.contains(key) || !rec[key].is_string()) throw fail(std::string("missing string field '") + key + "'");
    if (rec.contains("score") && !rec["score"].is_number()) throw fail("'score' must be a number");
    out.push_back({rec["h"].get<std::string>(), rec["r"].get<std::string>(), rec["t"].get<std::string>(), provenance});
  }
  return out;
}

// Inserts every record of a triple file with `provenance`. Returns the number
// of new triples; duplicates of stronger triples leave them untouched.
inline std::size_t load_external_triples(std::string_view content, Provenance provenance, KnowledgeGraph& graph) {
  std::size_t inserted = 0;
  for (const auto& t : parse_triple_lines(content, provenance)) inserted += graph.add_named(t);
  return inserted;
}

inline DatasetStats dataset_stats(const std::vector<Document>& docs) {
  DatasetStats s;
  std::set<std::string> relations, entities, types;
  for (const auto& doc : docs) {
    s.n_triples += doc.gold_facts.size();
    for (const auto& f : doc.gold_facts) relations.insert(f.relation);
    for (std::size_t e = 0; e < doc.entity_clusters.size(); ++e) {
      entities.insert(doc.canonical_name(e));
      for (const auto& m : doc.entity_clusters[e]) types.insert(m.etype);
    }
  }
  s.n_relations = relations.size();
  s.n_entities = entities.size();
  s.n_entity_types = types.size();
  s.n_docs = docs.size();
  return s;
}

}  // namespace kgrelex

#endif  // KGRELEX_INGESTION_HPP
