#ifndef KGRELEX_KG_HPP
#define KGRELEX_KG_HPP

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgrelex/error.hpp"

namespace kgrelex {

// Provenance tags in priority order: a lower value is a stronger claim and
// wins when the same (head, relation, tail) is inserted twice.
enum class Provenance : std::uint8_t {
  CoreLabel = 0,
  Extracted = 1,
  PathContext = 2,
  SynonymContext = 3,
  TypeContext = 4,
  Predicted = 5,
};

inline constexpr std::size_t kProvenanceCount = 6;

inline constexpr bool stronger(Provenance a, Provenance b) noexcept {
  return static_cast<std::uint8_t>(a) < static_cast<std::uint8_t>(b);
}

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::CoreLabel: return "core";
    case Provenance::Extracted: return "extracted";
    case Provenance::PathContext: return "path";
    case Provenance::SynonymContext: return "synonym";
    case Provenance::TypeContext: return "type";
    case Provenance::Predicted: return "predicted";
  }
  return "unknown";
}

inline Provenance provenance_from_index(std::uint8_t v) {
  if (v >= kProvenanceCount) throw ValidationError("invalid provenance tag " + std::to_string(v));
  return static_cast<Provenance>(v);
}

template <class Tag>
struct StrongId {
  std::uint32_t value = 0;
  constexpr auto operator<=>(const StrongId&) const = default;
};

struct EntityTag {};
struct RelationTag {};
using EntityId = StrongId<EntityTag>;
using RelationId = StrongId<RelationTag>;

template <class Id>
class Vocabulary {
public:
  explicit Vocabulary(std::string kind) : kind_(std::move(kind)) {}

  // Returns the id of `name`, adding it if absent.
  Id intern(std::string_view name) {
    if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
    if (frozen_) throw VocabularyError(kind_ + " vocabulary is frozen; cannot add '" + std::string(name) + "'");
    Id id{static_cast<std::uint32_t>(names_.size())};
    names_.emplace_back(name);
    index_.emplace(names_.back(), id);
    return id;
  }

  std::optional<Id> find(std::string_view name) const {
    if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
    return std::nullopt;
  }

  Id at(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw VocabularyError("unknown " + kind_ + " '" + std::string(name) + "'");
  }

  const std::string& name(Id id) const {
    check(id);
    return names_[id.value];
  }

  bool contains(Id id) const noexcept { return id.value < names_.size(); }

  void check(Id id) const {
    if (!contains(id))
      throw VocabularyError("unknown " + kind_ + " id " + std::to_string(id.value));
  }

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  bool frozen() const noexcept { return frozen_; }
  void freeze() noexcept { frozen_ = true; }

private:
  std::string kind_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, Id> index_;
  bool frozen_ = false;
};

struct Triple {
  EntityId head;
  RelationId relation;
  EntityId tail;
  Provenance provenance = Provenance::CoreLabel;

  friend bool operator==(const Triple&, const Triple&) = default;
};

// Triple addressed by names, before interning.
struct NamedTriple {
  std::string head;
  std::string relation;
  std::string tail;
  Provenance provenance = Provenance::CoreLabel;

  friend bool operator==(const NamedTriple&, const NamedTriple&) = default;
};

enum class Direction { Out, In };

struct VocabSummary {
  std::size_t n_entities = 0;
  std::size_t n_relations = 0;
  std::size_t n_triples = 0;
  std::array<std::size_t, kProvenanceCount> by_provenance{};

  friend bool operator==(const VocabSummary&, const VocabSummary&) = default;
};

class KnowledgeGraph {
public:
  static constexpr std::string_view kHasSynonym = "hasSynonym";
  static constexpr std::string_view kHasEntityType = "hasEntityType";

  using Key = std::tuple<EntityId, RelationId, EntityId>;
  using AdjacencyKey = std::pair<EntityId, RelationId>;
  using Adjacency = std::map<AdjacencyKey, std::vector<EntityId>>;

  KnowledgeGraph() {
    relations_.intern(kHasSynonym);
    relations_.intern(kHasEntityType);
  }

  const Vocabulary<EntityId>& entities() const noexcept { return entities_; }
  const Vocabulary<RelationId>& relations() const noexcept { return relations_; }

  EntityId intern_entity(std::string_view name) { return entities_.intern(name); }
  RelationId intern_relation(std::string_view name) { return relations_.intern(name); }

  RelationId has_synonym() const { return relations_.at(kHasSynonym); }
  RelationId has_entity_type() const { return relations_.at(kHasEntityType); }

  // True if (head, relation, tail) was not present before. A duplicate with
  // a stronger provenance upgrades the stored tag and still returns false.
  bool add_triple(const Triple& t) {
    entities_.check(t.head);
    entities_.check(t.tail);
    relations_.check(t.relation);
    Key key{t.head, t.relation, t.tail};
    auto [it, inserted] = triples_.try_emplace(key, t.provenance);
    if (!inserted) {
      if (stronger(t.provenance, it->second)) it->second = t.provenance;
      return false;
    }
    insert_sorted(fwd_[{t.head, t.relation}], t.tail);
    insert_sorted(rev_[{t.tail, t.relation}], t.head);
    return true;
  }

  bool add_named(const NamedTriple& t) {
    Triple id_triple{entities_.intern(t.head), relations_.intern(t.relation),
                     entities_.intern(t.tail), t.provenance};
    return add_triple(id_triple);
  }

  // N_e^r: sorted, duplicate-free.
  std::span<const EntityId> neighbors(EntityId e, RelationId r, Direction dir) const {
    entities_.check(e);
    relations_.check(r);
    const Adjacency& idx = dir == Direction::Out ? fwd_ : rev_;
    if (auto it = idx.find({e, r}); it != idx.end()) return it->second;
    return {};
  }

  // Calls fn(relation, tail) for every outgoing edge of `e`, ordered by
  // (relation, tail).
  template <class Fn>
  void for_each_out_edge(EntityId e, Fn&& fn) const {
    for (auto it = fwd_.lower_bound({e, RelationId{0}}); it != fwd_.end() && it->first.first == e; ++it)
      for (EntityId t : it->second) fn(it->first.second, t);
  }

  bool contains(EntityId h, RelationId r, EntityId t) const {
    return triples_.contains(Key{h, r, t});
  }

  std::optional<Provenance> provenance(EntityId h, RelationId r, EntityId t) const {
    if (auto it = triples_.find(Key{h, r, t}); it != triples_.end()) return it->second;
    return std::nullopt;
  }

  std::size_t size() const noexcept { return triples_.size(); }
  bool empty() const noexcept { return triples_.empty(); }

  // All triples in (head, relation, tail) order.
  std::vector<Triple> triples() const {
    std::vector<Triple> out;
    out.reserve(triples_.size());
    for (const auto& [key, prov] : triples_)
      out.push_back({std::get<0>(key), std::get<1>(key), std::get<2>(key), prov});
    return out;
  }

  const Adjacency& forward_index() const noexcept { return fwd_; }
  const Adjacency& reverse_index() const noexcept { return rev_; }

  // Rebuilds both adjacency indexes from the triple set and compares.
  bool indexes_consistent() const {
    Adjacency fwd, rev;
    for (const auto& [key, prov] : triples_) {
      fwd[{std::get<0>(key), std::get<1>(key)}].push_back(std::get<2>(key));
      rev[{std::get<2>(key), std::get<1>(key)}].push_back(std::get<0>(key));
    }
    // Map iteration is key-ordered, so pushed tails are already sorted.
    return fwd == fwd_ && rev == rev_;
  }

  bool frozen() const noexcept { return entities_.frozen(); }

  VocabSummary freeze_vocab() {
    entities_.freeze();
    relations_.freeze();
    return summary();
  }

  VocabSummary summary() const {
    VocabSummary s;
    s.n_entities = entities_.size();
    s.n_relations = relations_.size();
    s.n_triples = triples_.size();
    for (const auto& [key, prov] : triples_) ++s.by_provenance[static_cast<std::size_t>(prov)];
    return s;
  }

  NamedTriple named(const Triple& t) const {
    return {entities_.name(t.head), relations_.name(t.relation), entities_.name(t.tail), t.provenance};
  }

private:
  static void insert_sorted(std::vector<EntityId>& v, EntityId e) {
    auto pos = std::lower_bound(v.begin(), v.end(), e);
    if (pos == v.end() || *pos != e) v.insert(pos, e);
  }

  Vocabulary<EntityId> entities_{"entity"};
  Vocabulary<RelationId> relations_{"relation"};
  std::map<Key, Provenance> triples_;
  Adjacency fwd_;
  Adjacency rev_;
};

}  // namespace kgrelex

#endif  // KGRELEX_KG_HPP
