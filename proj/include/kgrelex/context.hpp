#ifndef KGRELEX_CONTEXT_HPP
#define KGRELEX_CONTEXT_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kgrelex/error.hpp"
#include "kgrelex/kg.hpp"

namespace kgrelex {

inline constexpr std::size_t kMaxContextHops = 4;

struct EntityContextRecord {
  std::string entity;
  std::vector<std::string> synonyms;
  std::optional<std::string> etype;
};

struct ContextHop {
  std::string relation;
  std::string node;

  friend bool operator==(const ContextHop&, const ContextHop&) = default;
};

struct ContextPath {
  std::string head;
  std::string tail;
  std::vector<ContextHop> hops;
  std::optional<double> pagerank;

  friend bool operator==(const ContextPath&, const ContextPath&) = default;
};

inline void validate(const EntityContextRecord& rec) {
  std::set<std::string> seen;
  for (const auto& s : rec.synonyms) {
    if (s == rec.entity) throw ValidationError("entity '" + rec.entity + "' lists itself as a synonym");
    if (!seen.insert(s).second)
      throw ValidationError("entity '" + rec.entity + "' has duplicate synonym '" + s + "'");
  }
}

inline void validate(const ContextPath& path) {
  if (path.hops.empty() || path.hops.size() > kMaxContextHops)
    throw ValidationError("context path " + path.head + " -> " + path.tail + " has " +
                          std::to_string(path.hops.size()) + " hops (allowed 1.." +
                          std::to_string(kMaxContextHops) + ")");
  if (path.hops.back().node != path.tail)
    throw ValidationError("context path " + path.head + " -> " + path.tail + " ends at '" +
                          path.hops.back().node + "'");
}

// {e, hasSynonym, s} for every synonym s.
inline std::vector<NamedTriple> synonym_triples(const EntityContextRecord& rec) {
  std::vector<NamedTriple> out;
  out.reserve(rec.synonyms.size());
  for (const auto& s : rec.synonyms)
    out.push_back({rec.entity, std::string(KnowledgeGraph::kHasSynonym), s, Provenance::SynonymContext});
  return out;
}

inline std::vector<NamedTriple> type_triples(const EntityContextRecord& rec) {
  if (!rec.etype) return {};
  return {{rec.entity, std::string(KnowledgeGraph::kHasEntityType), *rec.etype, Provenance::TypeContext}};
}

// Chains head -> hop nodes; triple i is (node_{i-1}, rel_i, node_i) with node_0 = head.
inline std::vector<NamedTriple> path_to_triples(const ContextPath& path) {
  validate(path);
  std::vector<NamedTriple> out;
  out.reserve(path.hops.size());
  const std::string* prev = &path.head;
  for (const auto& hop : path.hops) {
    out.push_back({*prev, hop.relation, hop.node, Provenance::PathContext});
    prev = &hop.node;
  }
  return out;
}

// Inverse of path_to_triples: walks a chain of triples back into a path.
inline ContextPath triples_to_path(const std::vector<NamedTriple>& chain) {
  if (chain.empty()) throw ValidationError("empty triple chain");
  ContextPath path;
  path.head = chain.front().head;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (i > 0 && chain[i].head != chain[i - 1].tail)
      throw ValidationError("broken chain at triple " + std::to_string(i));
    path.hops.push_back({chain[i].relation, chain[i].tail});
  }
  path.tail = chain.back().tail;
  return path;
}

namespace detail {

// Total order for path selection: highest pagerank (absent ranks last), then
// fewest hops, then lexicographic relation sequence, then node sequence.
inline bool better_path(const ContextPath& a, const ContextPath& b) {
  if (a.pagerank.has_value() != b.pagerank.has_value()) return a.pagerank.has_value();
  if (a.pagerank && *a.pagerank != *b.pagerank) return *a.pagerank > *b.pagerank;
  if (a.hops.size() != b.hops.size()) return a.hops.size() < b.hops.size();
  auto rels = [](const ContextPath& p) {
    std::vector<std::string_view> v;
    for (const auto& h : p.hops) v.push_back(h.relation);
    return v;
  };
  auto ra = rels(a), rb = rels(b);
  if (ra != rb) return ra < rb;
  auto nodes = [](const ContextPath& p) {
    std::vector<std::string_view> v{p.head};
    for (const auto& h : p.hops) v.push_back(h.node);
    return v;
  };
  return nodes(a) < nodes(b);
}

}  // namespace detail

inline std::optional<ContextPath> select_context_path(const std::vector<ContextPath>& candidates,
                                                      std::size_t max_hops) {
  if (max_hops < 1 || max_hops > kMaxContextHops)
    throw ConfigError("max_hops must be in [1, " + std::to_string(kMaxContextHops) + "]");
  const ContextPath* best = nullptr;
  for (const auto& c : candidates) {
    if (c.hops.empty() || c.hops.size() > max_hops) continue;
    if (!best || detail::better_path(c, *best)) best = &c;
  }
  if (!best) return std::nullopt;
  return *best;
}

// One selected path per (head, tail) pair, in pair order.
inline std::vector<ContextPath> select_context_paths(const std::vector<ContextPath>& all, std::size_t max_hops) {
  std::map<std::pair<std::string, std::string>, std::vector<ContextPath>> by_pair;
  for (const auto& p : all) by_pair[{p.head, p.tail}].push_back(p);
  std::vector<ContextPath> out;
  for (const auto& [pair, cands] : by_pair)
    if (auto best = select_context_path(cands, max_hops)) out.push_back(std::move(*best));
  return out;
}

namespace detail {

template <class Fn>
void for_each_json_line(std::string_view content, std::string_view what, Fn&& fn) {
  using nlohmann::json;
  std::istringstream in{std::string(content)};
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string prefix = std::string(what) + " line " + std::to_string(lineno) + ": ";
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(prefix + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(prefix + e.what());
    }
  }
}

}  // namespace detail

// JSON Lines: {"entity": str, "synonyms": [str], "type": str|null}
inline std::vector<EntityContextRecord> parse_entity_context(std::string_view content) {
  std::vector<EntityContextRecord> out;
  detail::for_each_json_line(content, "entity context", [&](const nlohmann::json& j) {
    EntityContextRecord rec;
    rec.entity = j.at("entity").get<std::string>();
    if (j.contains("synonyms")) rec.synonyms = j.at("synonyms").get<std::vector<std::string>>();
    if (j.contains("type") && !j.at("type").is_null()) rec.etype = j.at("type").get<std::string>();
    validate(rec);
    out.push_back(std::move(rec));
  });
  return out;
}

// JSON Lines: {"head": str, "tail": str, "hops": [{"rel": str, "node": str}], "pagerank": float|null}
inline std::vector<ContextPath> parse_context_paths(std::string_view content) {
  std::vector<ContextPath> out;
  detail::for_each_json_line(content, "context path", [&](const nlohmann::json& j) {
    ContextPath p;
    p.head = j.at("head").get<std::string>();
    p.tail = j.at("tail").get<std::string>();
    for (const auto& h : j.at("hops")) p.hops.push_back({h.at("rel").get<std::string>(), h.at("node").get<std::string>()});
    if (j.contains("pagerank") && !j.at("pagerank").is_null()) p.pagerank = j.at("pagerank").get<double>();
    validate(p);
    out.push_back(std::move(p));
  });
  return out;
}

}  // namespace kgrelex

#endif  // KGRELEX_CONTEXT_HPP
