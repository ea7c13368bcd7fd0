// Synthetic graphs and documents shared by unit and acceptance tests.
#ifndef KGRELEX_TESTS_SYNTHETIC_HPP
#define KGRELEX_TESTS_SYNTHETIC_HPP

#include <string>
#include <vector>

#include "kgrelex/kgrelex.hpp"

#ifndef KGRELEX_FIXTURE_DIR
#define KGRELEX_FIXTURE_DIR "tests/fixtures"
#endif

namespace synth {

using namespace kgrelex;

inline std::string fixture(const std::string& rel) { return std::string(KGRELEX_FIXTURE_DIR) + "/" + rel; }

// 50 triples over 4 relations. Heads come from e0..e14 and tails from
// e15..e29, so no relation needs to be asymmetric.
inline KnowledgeGraph memorization_kg(std::uint64_t seed) {
  KnowledgeGraph g;
  Rng rng(seed * 77);
  while (g.size() < 50) {
    auto h = "e" + std::to_string(rng.below(15));
    auto t = "e" + std::to_string(15 + rng.below(15));
    g.add_named({h, "r" + std::to_string(rng.below(4)), t});
  }
  g.freeze_vocab();
  return g;
}

struct Benchmark {
  KnowledgeGraph graph;
  std::vector<Triple> test;
};

// Shortcut benchmark. Five clusters, each with 8 members linked by `target`
// edges, a city and a country. Two test entities per cluster must be linked
// by `target` to members of their own cluster; without context they are
// isolated, with context a 2-hop path (country -contains-> city -contains->
// test entity) ties them to their cluster.
inline Benchmark context_benchmark(bool with_context) {
  constexpr int kClusters = 5, kMembers = 8, kTests = 2;
  Benchmark b;
  auto& g = b.graph;
  std::vector<NamedTriple> test_named;
  std::vector<ContextPath> paths;
  for (int c = 0; c < kClusters; ++c) {
    const std::string cs = std::to_string(c);
    auto member = [&](int i) { return "c" + cs + "_m" + std::to_string(i); };
    auto tester = [&](int i) { return "c" + cs + "_t" + std::to_string(i); };
    const std::string city = "city" + cs, country = "country" + cs;
    for (int i = 0; i < kMembers; ++i) g.intern_entity(member(i));
    for (int i = 0; i < kTests; ++i) g.intern_entity(tester(i));
    g.intern_entity(city);
    g.intern_entity(country);
    for (int i = 0; i < kMembers; ++i) {
      for (int k = 1; k <= 3; ++k) g.add_named({member(i), "target", member((i + k) % kMembers)});
      g.add_named({member(i), "located_in", city});
      g.add_named({city, "contains", member(i)});
    }
    g.add_named({city, "country", country});
    g.add_named({country, "contains", city});
    for (int i = 0; i < kTests; ++i) {
      for (int k = 0; k < 2; ++k) test_named.push_back({tester(i), "target", member((i * 3 + k) % kMembers)});
      paths.push_back({country, tester(i), {{"contains", city}, {"contains", tester(i)}}, 1.0});
    }
  }
  for (const char* r : {"target", "located_in", "country", "contains"}) g.intern_relation(r);
  if (with_context)
    for (const auto& p : select_context_paths(paths, 4))
      for (const auto& t : path_to_triples(p)) g.add_named(t);
  g.freeze_vocab();
  for (const auto& n : test_named)
    b.test.push_back({g.entities().at(n.head), g.relations().at(n.relation), g.entities().at(n.tail)});
  return b;
}

// Random document with the given sentence and entity bounds. Entities get
// 1..3 mentions in random sentences.
inline Document random_document(Rng& rng, std::size_t max_sents, std::size_t max_entities, const std::string& id) {
  Document d;
  d.doc_id = id;
  const std::size_t ns = 1 + rng.below(max_sents);
  for (std::size_t s = 0; s < ns; ++s) d.sentences.push_back(std::vector<std::string>(12, "w"));
  const std::size_t ne = 2 + rng.below(max_entities - 1);
  std::vector<std::size_t> next_pos(ns, 0);
  static const char* types[] = {"PER", "ORG", "LOC", "MISC"};
  for (std::size_t e = 0; e < ne; ++e) {
    auto& cluster = d.entity_clusters.emplace_back();
    const std::size_t nm = 1 + rng.below(3);
    const std::string etype = types[rng.below(4)];
    for (std::size_t m = 0; m < nm; ++m) {
      const std::size_t s = rng.below(ns);
      if (next_pos[s] >= 12) continue;
      Mention mention;
      mention.entity_index = e;
      mention.sent_id = s;
      mention.start = next_pos[s]++;
      mention.end = mention.start + 1;
      mention.surface = id + "_e" + std::to_string(e);
      mention.etype = etype;
      cluster.push_back(mention);
    }
    if (cluster.empty()) {
      // every sentence is full; extend the first one
      d.sentences[0].push_back("w");
      cluster.push_back({e, 0, d.sentences[0].size() - 1, d.sentences[0].size(), id + "_e" + std::to_string(e), etype});
    }
  }
  return d;
}

// Random directed multigraph; entities "n0".."n{n-1}", relations "p0"...
inline KnowledgeGraph random_graph(Rng& rng, std::size_t n_entities, std::size_t n_relations, std::size_t n_edges) {
  KnowledgeGraph g;
  for (std::size_t i = 0; i < n_entities; ++i) g.intern_entity("n" + std::to_string(i));
  for (std::size_t r = 0; r < n_relations; ++r) g.intern_relation("p" + std::to_string(r));
  for (std::size_t i = 0; i < n_edges; ++i) {
    auto h = rng.below(n_entities), t = rng.below(n_entities);
    if (h == t) continue;
    g.add_named({"n" + std::to_string(h), "p" + std::to_string(rng.below(n_relations)), "n" + std::to_string(t)});
  }
  g.freeze_vocab();
  return g;
}

// Random model parameters with every value drawn uniformly from [-1, 1].
template <class T>
BasicModelParams<T> random_params(Rng& rng, std::size_t ne, std::size_t nr, std::size_t d, std::size_t layers,
                                  std::size_t blocks, Activation act, Activation out_act) {
  BasicModelParams<T> p(ne, nr, d, layers, blocks, layers == 0, act, out_act);
  p.visit([&](std::span<T> s) {
    for (auto& v : s) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  });
  return p;
}

}  // namespace synth

#endif  // KGRELEX_TESTS_SYNTHETIC_HPP
