#include <gtest/gtest.h>

#include <cmath>

#include "support/oracles.hpp"

using namespace kgrelex;

namespace {

using NameKey = std::tuple<std::string, std::string, std::string>;

// Names are just "doc:idx" so train facts can be addressed directly.
NameKey names(const Fact& f) {
  return {f.doc_id + ":" + std::to_string(f.head), f.relation, f.doc_id + ":" + std::to_string(f.tail)};
}

Fact fact(const std::string& doc, std::size_t h, const std::string& r, std::size_t t) { return {doc, h, r, t}; }

}  // namespace

TEST(Aggregate, ConvexCombination) {
  EXPECT_DOUBLE_EQ(aggregate(0.8, 0.4, 0.5), 0.6);
  EXPECT_DOUBLE_EQ(aggregate(0.3, 0.3, 0.17), 0.3);
  EXPECT_DOUBLE_EQ(aggregate(0.7, 0.1, 1.0), 0.7);
  EXPECT_DOUBLE_EQ(aggregate(0.7, 0.1, 0.0), 0.1);
  EXPECT_DOUBLE_EQ(aggregate(0.2, 0.9, 0.5, AggregationMode::Max), 0.9);
}

TEST(Aggregate, RejectsOutOfRange) {
  EXPECT_THROW(aggregate(1.2, 0.4, 0.5), ValidationError);
  EXPECT_THROW(aggregate(0.2, -0.1, 0.5), ValidationError);
  EXPECT_THROW(aggregate(0.2, 0.4, 1.5), ValidationError);
  EXPECT_THROW(aggregate(std::nan(""), 0.4, 0.5), ValidationError);
}

TEST(Aggregate, MonotoneInEachInput) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const double r = rng.uniform01(), l = rng.uniform01(), lam = rng.uniform01(), d = rng.uniform01() * (1 - r);
    for (auto mode : {AggregationMode::Convex, AggregationMode::Max}) {
      EXPECT_LE(aggregate(r, l, lam, mode), aggregate(r + d, l, lam, mode));
      EXPECT_LE(aggregate(l, r, lam, mode), aggregate(l, r + d, lam, mode));
    }
  }
}

TEST(Predict, ThresholdFilter) {
  KnowledgeGraph g;
  const auto r1 = g.intern_relation("r1"), r2 = g.intern_relation("r2");
  PairScore ps{"d", 0, 1, {r1.value, r2.value}, {0.9, 0.3}, {0.9, 0.3}, {0.9, 0.3}, std::nullopt};
  auto out = predict({ps}, g, Thresholds{0.5, {}});
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].fact, fact("d", 0, "r1", 1));
  EXPECT_TRUE(predict({ps}, g, Thresholds{1.0, {}}).empty());
  // per-relation override
  EXPECT_EQ(predict({ps}, g, Thresholds{0.5, {{"r2", 0.25}}}).size(), 2u);
  ps.final_prob = {0.0, 0.0};
  EXPECT_TRUE(predict({ps}, g, Thresholds{}).empty());
  EXPECT_THROW(predict({ps}, g, Thresholds{0.0, {}}), ConfigError);
}

TEST(Predict, RandomScoresMatchDirectFilter) {
  KnowledgeGraph g;
  std::vector<std::uint32_t> rels;
  for (int r = 0; r < 4; ++r) rels.push_back(g.intern_relation("r" + std::to_string(r)).value);
  Rng rng(2);
  std::vector<PairScore> scores;
  for (std::size_t h = 0; h < 6; ++h)
    for (std::size_t t = 0; t < 6; ++t) {
      if (h == t) continue;
      PairScore ps{"doc", h, t, rels, {}, {}, {}, std::nullopt};
      for (std::size_t k = 0; k < rels.size(); ++k) ps.final_prob.push_back(rng.uniform01());
      scores.push_back(ps);
    }
  const Thresholds th{0.6, {{"r1", 0.3}}};
  std::set<Fact> want;
  for (const auto& ps : scores)
    for (std::size_t k = 0; k < ps.relations.size(); ++k) {
      const auto& name = g.relations().name(RelationId{ps.relations[k]});
      if (ps.final_prob[k] >= (name == "r1" ? 0.3 : 0.6)) want.insert(fact(ps.doc_id, ps.head, name, ps.tail));
    }
  std::set<Fact> got;
  for (const auto& p : predict(scores, g, th)) got.insert(p.fact);
  EXPECT_EQ(got, want);
}

TEST(F1, PerfectPrediction) {
  std::set<Fact> s{fact("d", 0, "r", 1), fact("d", 1, "r", 2)};
  auto m = f1_metrics(s, s, {}, names);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
  EXPECT_DOUBLE_EQ(m.ign_f1, 1.0);
}

TEST(F1, HalfOverlap) {
  auto a = fact("d", 0, "r", 1), b = fact("d", 1, "r", 2), c = fact("d", 2, "r", 3);
  auto m = f1_metrics({a, b}, {b, c}, {}, names);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.f1, 0.5);
  EXPECT_DOUBLE_EQ(m.ign_f1, 0.5);
}

TEST(F1, IgnRemovesTrainingFactsFromBothSides) {
  auto a = fact("d", 0, "r", 1), b = fact("d", 1, "r", 2), c = fact("d", 2, "r", 3), x = fact("d", 3, "r", 4);
  // pred {a, b, x}, gold {b, c, x}; x was annotated in training
  TrainFactSet train{names(x)};
  auto m = f1_metrics({a, b, x}, {b, c, x}, train, names);
  // F1: 2 correct of 3 / 3 -> p = r = 2/3
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-12);
  // Ign: pred {a, b}, gold {b, c}, 1 correct -> 0.5
  EXPECT_NEAR(m.ign_f1, 0.5, 1e-12);
}

TEST(F1, EmptyIgnDenominatorIsZero) {
  auto x = fact("d", 0, "r", 1);
  auto m = f1_metrics({x}, {x}, TrainFactSet{names(x)}, names);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
  EXPECT_DOUBLE_EQ(m.ign_f1, 0.0);
  EXPECT_TRUE(m.ign_empty);
}

TEST(F1, NoPredictions) {
  auto m = f1_metrics({}, {fact("d", 0, "r", 1)}, {}, names);
  EXPECT_DOUBLE_EQ(m.precision, 0.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.0);
  EXPECT_DOUBLE_EQ(m.f1, 0.0);
}

TEST(F1, TrainFactsMatchByNameAcrossDocuments) {
  // the same named triple appears in another document; Ign still removes it
  auto in_dev = fact("dev", 0, "r", 1);
  auto other = fact("dev", 1, "r", 0);
  TrainFactSet train{{"Paris", "r", "France"}};
  auto by_name = [](const Fact& f) {
    return NameKey{f.head == 0 ? "Paris" : "France", f.relation, f.tail == 0 ? "Paris" : "France"};
  };
  auto m = f1_metrics({in_dev, other}, {in_dev}, train, by_name);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.ign_f1, 0.0);
  EXPECT_TRUE(m.ign_empty);  // gold side is empty after removal
}

TEST(Bce, ClosedFormsAndNaiveLoop) {
  std::vector<double> half(8, 0.5), y{1, 0, 1, 0, 1, 1, 0, 0};
  EXPECT_NEAR(bce_loss(half, y), std::log(2.0), 1e-12);
  EXPECT_LT(bce_loss(y, y), 1e-6);
  Rng rng(5);
  std::vector<double> p(50), lab(50);
  for (std::size_t i = 0; i < 50; ++i) {
    p[i] = rng.uniform01();
    lab[i] = static_cast<double>(rng.below(2));
  }
  p[3] = 0.0;
  p[4] = 1.0;
  EXPECT_NEAR(bce_loss(p, lab), oracle::bce(p, lab), 1e-12);
  EXPECT_THROW(bce_loss(p, half), ValidationError);
}
