#include <gtest/gtest.h>

#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace kgrelex;

TEST(Vocabulary, InternIsIdempotentAndDense) {
  Vocabulary<EntityId> v("entity");
  EXPECT_EQ(v.intern("a").value, 0u);
  EXPECT_EQ(v.intern("b").value, 1u);
  EXPECT_EQ(v.intern("a").value, 0u);
  EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(v.name(EntityId{1}), "b");
  EXPECT_FALSE(v.find("c").has_value());
}

TEST(Vocabulary, FrozenRejectsNewNames) {
  Vocabulary<EntityId> v("entity");
  v.intern("a");
  v.freeze();
  EXPECT_EQ(v.intern("a").value, 0u);
  EXPECT_THROW(v.intern("b"), VocabularyError);
  EXPECT_THROW(v.at("b"), VocabularyError);
  EXPECT_THROW(v.name(EntityId{7}), VocabularyError);
}

TEST(KnowledgeGraph, ReservedRelationsComeFirst) {
  KnowledgeGraph g;
  EXPECT_EQ(g.has_synonym().value, 0u);
  EXPECT_EQ(g.has_entity_type().value, 1u);
  EXPECT_EQ(g.relations().name(RelationId{0}), "hasSynonym");
  EXPECT_EQ(g.relations().name(RelationId{1}), "hasEntityType");
}

TEST(KnowledgeGraph, DuplicateInsertIsNoOp) {
  KnowledgeGraph g;
  EXPECT_TRUE(g.add_named({"a", "r", "b"}));
  EXPECT_FALSE(g.add_named({"a", "r", "b"}));
  EXPECT_EQ(g.size(), 1u);
  auto a = g.entities().at("a"), b = g.entities().at("b");
  auto r = g.relations().at("r");
  ASSERT_EQ(g.neighbors(a, r, Direction::Out).size(), 1u);
  EXPECT_EQ(g.neighbors(a, r, Direction::Out)[0], b);
  EXPECT_EQ(g.neighbors(b, r, Direction::In)[0], a);
}

TEST(KnowledgeGraph, StrongerProvenanceWinsForAllPairs) {
  for (std::uint8_t i = 0; i < kProvenanceCount; ++i)
    for (std::uint8_t j = 0; j < kProvenanceCount; ++j) {
      KnowledgeGraph g;
      const auto a = provenance_from_index(i), b = provenance_from_index(j);
      g.add_named({"x", "r", "y", a});
      g.add_named({"x", "r", "y", b});
      const auto expect = provenance_from_index(std::min(i, j));
      EXPECT_EQ(g.provenance(g.entities().at("x"), g.relations().at("r"), g.entities().at("y")), expect)
          << "first=" << to_string(a) << " second=" << to_string(b);
      EXPECT_EQ(g.size(), 1u);
    }
}

TEST(KnowledgeGraph, NeighborsMatchFullScan) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = synth::random_graph(rng, 12, 4, 60);
    ASSERT_TRUE(g.indexes_consistent());
    for (std::uint32_t e = 0; e < g.entities().size(); ++e)
      for (std::uint32_t r = 0; r < g.relations().size(); ++r)
        for (auto dir : {Direction::Out, Direction::In}) {
          auto got = g.neighbors(EntityId{e}, RelationId{r}, dir);
          auto want = oracle::neighbors(g, EntityId{e}, RelationId{r}, dir);
          EXPECT_EQ(std::vector<EntityId>(got.begin(), got.end()), want);
        }
  }
}

TEST(KnowledgeGraph, UnknownIdsAreRejected) {
  KnowledgeGraph g;
  g.add_named({"a", "r", "b"});
  EXPECT_THROW(g.neighbors(EntityId{9}, RelationId{2}, Direction::Out), VocabularyError);
  EXPECT_THROW(g.add_triple({EntityId{0}, RelationId{99}, EntityId{1}}), VocabularyError);
}

TEST(KnowledgeGraph, FreezeReportsSummaryAndBlocksNewEntities) {
  KnowledgeGraph g;
  g.add_named({"a", "r", "b"});
  g.add_named({"a", "hasSynonym", "A", Provenance::SynonymContext});
  g.add_named({"b", "r", "c", Provenance::Predicted});
  const auto s = g.freeze_vocab();
  EXPECT_EQ(s.n_entities, 4u);
  EXPECT_EQ(s.n_relations, 3u);
  EXPECT_EQ(s.n_triples, 3u);
  EXPECT_EQ(s.by_provenance[static_cast<std::size_t>(Provenance::CoreLabel)], 1u);
  EXPECT_EQ(s.by_provenance[static_cast<std::size_t>(Provenance::SynonymContext)], 1u);
  EXPECT_EQ(s.by_provenance[static_cast<std::size_t>(Provenance::Predicted)], 1u);
  EXPECT_TRUE(g.frozen());
  EXPECT_THROW(g.add_named({"a", "r", "zzz"}), VocabularyError);
  EXPECT_TRUE(g.add_named({"a", "r", "c"}));
}

TEST(KnowledgeGraph, OutEdgesAreOrdered) {
  KnowledgeGraph g;
  g.add_named({"a", "s", "c"});
  g.add_named({"a", "r", "d"});
  g.add_named({"a", "r", "b"});
  std::vector<std::pair<std::string, std::string>> seen;
  g.for_each_out_edge(g.entities().at("a"), [&](RelationId r, EntityId t) {
    seen.emplace_back(g.relations().name(r), g.entities().name(t));
  });
  // relation ids: s=2, r=3; entity ids: a=0, c=1, d=2, b=3
  std::vector<std::pair<std::string, std::string>> want{{"s", "c"}, {"r", "d"}, {"r", "b"}};
  EXPECT_EQ(seen, want);
}
