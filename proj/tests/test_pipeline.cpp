#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support/synthetic.hpp"

using namespace kgrelex;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("kgrelex_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
             std::to_string(counter++) + "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string str(const std::string& leaf = "") const { return leaf.empty() ? path_.string() : (path_ / leaf).string(); }

private:
  fs::path path_;
};

PipelineConfig toy_config(const TempDir& dir) {
  PipelineConfig c;
  c.train_docs = synth::fixture("toy/train.json");
  c.dev_docs = synth::fixture("toy/dev.json");
  c.test_docs = synth::fixture("toy/test.json");
  c.external_triples = synth::fixture("toy/external.jsonl");
  c.entity_context = synth::fixture("toy/entity_context.jsonl");
  c.context_paths = synth::fixture("toy/context_paths.jsonl");
  c.output_dir = dir.str();
  c.link.dim = 16;
  c.link.epochs = 40;
  c.scorer.epochs = 60;
  c.seed = 5;
  return c;
}

std::string slurp(const fs::path& p) { return read_file(p.string()); }

}  // namespace

TEST(Checkpoint, RoundTripsExactly) {
  TempDir dir;
  std::ostringstream log;
  auto ck = cmd_train(toy_config(dir), log);
  auto bytes = encode_checkpoint(ck);
  auto back = decode_checkpoint(bytes);
  EXPECT_EQ(back.model, ck.model);
  EXPECT_EQ(back.scorer, ck.scorer);
  EXPECT_EQ(back.config, ck.config);
  EXPECT_EQ(back.graph.triples(), ck.graph.triples());
  EXPECT_EQ(back.graph.entities().names(), ck.graph.entities().names());
  EXPECT_EQ(back.graph.relations().names(), ck.graph.relations().names());
  EXPECT_TRUE(back.graph.frozen());
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_EQ(slurp(toy_config(dir).checkpoint_path()), bytes);
  EXPECT_FALSE(fs::exists(dir.str("model.ckpt.tmp")));
}

TEST(Checkpoint, CorruptInputIsParseError) {
  TempDir dir;
  std::ostringstream log;
  auto bytes = encode_checkpoint(cmd_train(toy_config(dir), log));
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() / 2)), ParseError);
  EXPECT_THROW(decode_checkpoint("NOTACKPT" + bytes.substr(8)), ParseError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), ParseError);
  auto bumped = bytes;
  bumped[8] = 9;
  EXPECT_THROW(decode_checkpoint(bumped), ParseError);
}

TEST(Pipeline, StatsFixture) {
  TempDir dir;
  PipelineConfig c;
  c.train_docs = synth::fixture("stats/docs.json");
  c.output_dir = dir.str("out");
  std::ostringstream out;
  auto s = cmd_stats(c, out);
  EXPECT_EQ(s.n_triples, 11u);
  auto j = nlohmann::json::parse(slurp(dir.path() / "out" / "stats.json"));
  EXPECT_EQ(j, nlohmann::json::parse(slurp(synth::fixture("stats/expected.json"))));
  EXPECT_NE(out.str().find("11  8  11  6  5"), std::string::npos) << out.str();
}

TEST(Pipeline, StatsMissingFileLeavesNoOutput) {
  TempDir dir;
  PipelineConfig c;
  c.train_docs = synth::fixture("stats/docs.json");
  c.dev_docs = dir.str("missing.json");
  c.output_dir = dir.str("out");
  std::ostringstream out;
  try {
    cmd_stats(c, out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.exit_code(), 2);
  }
  EXPECT_TRUE(out.str().empty());
  EXPECT_FALSE(fs::exists(dir.path() / "out" / "stats.json"));
}

TEST(Pipeline, TrainBuildsProvenanceTaggedGraph) {
  TempDir dir;
  std::ostringstream log;
  auto ck = cmd_train(toy_config(dir), log);
  const auto s = ck.graph.summary();
  EXPECT_GT(s.by_provenance[static_cast<std::size_t>(Provenance::CoreLabel)], 0u);
  EXPECT_GT(s.by_provenance[static_cast<std::size_t>(Provenance::SynonymContext)], 0u);
  EXPECT_GT(s.by_provenance[static_cast<std::size_t>(Provenance::TypeContext)], 0u);
  EXPECT_GT(s.by_provenance[static_cast<std::size_t>(Provenance::PathContext)], 0u);
  EXPECT_TRUE(ck.graph.frozen());
  EXPECT_EQ(ck.config["seed"], 5);
  EXPECT_EQ(ck.config["link"]["seed"], nullptr);
}

TEST(Pipeline, TrainAndEvaluateAreByteDeterministic) {
  TempDir a, b;
  std::ostringstream log;
  auto ca = toy_config(a), cb = toy_config(b);
  cmd_train(ca, log);
  cmd_train(cb, log);
  EXPECT_EQ(slurp(ca.checkpoint_path()), slurp(cb.checkpoint_path()));
  cmd_evaluate(ca, log);
  const auto first = slurp(a.path() / "report.json");
  cmd_evaluate(ca, log);
  EXPECT_EQ(slurp(a.path() / "report.json"), first);
  cmd_evaluate(cb, log);
  EXPECT_EQ(slurp(b.path() / "report.json"), first);
  auto other = toy_config(b);
  other.seed = 6;
  cmd_train(other, log);
  EXPECT_NE(slurp(ca.checkpoint_path()), slurp(other.checkpoint_path()));
}

TEST(Pipeline, EvaluateReportsMetricsInRange) {
  TempDir dir;
  std::ostringstream log;
  auto c = toy_config(dir);
  cmd_train(c, log);
  auto rep = cmd_evaluate(c, log);
  EXPECT_GT(rep.f1.n_gold, 0u);
  EXPECT_GT(rep.ranking.queries, 0u);
  for (double v : {rep.f1.f1, rep.f1.ign_f1, rep.ranking.hits1, rep.ranking.mrr}) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_LE(rep.ranking.hits1, rep.ranking.hits3);
  EXPECT_LE(rep.ranking.hits3, rep.ranking.hits10);
  c.thresholds.global = 1.0;
  auto strict = cmd_evaluate(c, log);
  EXPECT_EQ(strict.f1.n_pred, 0u);
  EXPECT_DOUBLE_EQ(strict.f1.f1, 0.0);
}

TEST(Pipeline, EvaluateRejectsUnknownRelations) {
  TempDir dir;
  std::ostringstream log;
  auto c = toy_config(dir);
  cmd_train(c, log);
  auto docs = parse_documents(slurp(c.dev_docs));
  docs[0].gold_facts[0].relation = "never_seen";
  std::ofstream(dir.str("dev_bad.json")) << serialize_documents(docs);
  c.dev_docs = dir.str("dev_bad.json");
  EXPECT_THROW(cmd_evaluate(c, log), VocabularyError);
}

TEST(Pipeline, PredictWritesJsonLines) {
  TempDir dir;
  std::ostringstream log;
  auto c = toy_config(dir);
  cmd_train(c, log);
  c.thresholds.global = 0.3;
  auto preds = cmd_predict(c, log);
  std::ifstream in(dir.path() / "predictions.jsonl");
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    for (const char* key : {"title", "h_idx", "t_idx", "r", "score"}) EXPECT_TRUE(j.contains(key)) << line;
    EXPECT_GE(j["score"].get<double>(), 0.3);
    ++n;
  }
  EXPECT_EQ(n, preds.size());
  EXPECT_GT(n, 0u);
}

TEST(Pipeline, MissingCheckpointIsDataError) {
  TempDir dir;
  auto c = toy_config(dir);
  std::ostringstream log;
  try {
    cmd_evaluate(c, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.exit_code(), 2);
  }
}

TEST(Pipeline, ConfigErrorsAreUsageErrors) {
  TempDir dir;
  auto c = toy_config(dir);
  c.aggregation.lambda = 2.0;
  std::ostringstream log;
  try {
    cmd_train(c, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.exit_code(), 1);
  }
  EXPECT_THROW(parse_relation_thresholds("r1=0.5;broken"), ConfigError);
  EXPECT_EQ(parse_relation_thresholds("a=0.5;b c=0.25").at("b c"), 0.25);
  EXPECT_THROW(activation_from_string("tanh"), ConfigError);
}

TEST(Pipeline, ExplainFixtureQueries) {
  TempDir dir;
  PipelineConfig c;
  c.train_docs = synth::fixture("explain/docs.json");
  c.entity_context = synth::fixture("explain/entity_context.jsonl");
  c.output_dir = dir.str();
  c.link.dim = 8;
  c.link.epochs = 50;
  c.scorer.epochs = 50;
  c.seed = 11;
  std::ostringstream log;
  cmd_train(c, log);

  std::ostringstream out;
  auto res = cmd_explain(c, "Piraeus", "country", out);
  auto it = std::find_if(res.answers.begin(), res.answers.end(),
                         [&](const auto& a) { return res.graph.entities().name(a.entity) == "Greece"; });
  ASSERT_NE(it, res.answers.end()) << out.str();
  EXPECT_EQ(format_explanation(*it, res.graph),
            (std::vector<std::string>{"{Piraeus, located_in_the_administrative_territorial_entity, Kiato}",
                                      "{Kiato, country, Greece}"}));
  auto j = nlohmann::json::parse(slurp(dir.path() / "explanations.jsonl"));
  EXPECT_EQ(j["query"]["h"], "Piraeus");

  std::ostringstream quiet;
  EXPECT_TRUE(cmd_explain(c, "United States", "country", quiet).answers.empty());
  EXPECT_THROW(cmd_explain(c, "Atlantis", "country", quiet), VocabularyError);
  EXPECT_THROW(cmd_explain(c, "Piraeus", "no_such_relation", quiet), VocabularyError);
}
