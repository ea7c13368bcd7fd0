// kgrelex command-line front end.
//
//   kgrelex stats    --train-docs F [--dev-docs F] [--test-docs F]
//   kgrelex train    --train-docs F [context inputs] [model options]
//   kgrelex evaluate --dev-docs F
//   kgrelex predict  --test-docs F
//   kgrelex explain  HEAD RELATION [--test-docs F]
//
// Every option may also come from an INI/TOML file given with --config.
// Exit codes: 0 ok, 1 usage, 2 data, 3 numerical.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "kgrelex/kgrelex.hpp"

int main(int argc, char** argv) {
  using namespace kgrelex;
  PipelineConfig cfg;
  std::string activation = "relu", output_activation = "identity", aggregation = "convex", rel_thresholds;
  std::string head, relation;

  CLI::App app{"Document-level relation extraction with knowledge-graph context"};
  app.set_config("--config", "", "INI or TOML file with option values");
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--train-docs", cfg.train_docs, "training documents (JSON array)");
  app.add_option("--dev-docs", cfg.dev_docs, "development documents");
  app.add_option("--test-docs", cfg.test_docs, "test documents");
  app.add_option("--external-triples", cfg.external_triples, "extracted triples, JSONL {h,r,t[,score]}");
  app.add_option("--entity-context", cfg.entity_context, "entity synonyms and types, JSONL");
  app.add_option("--context-paths", cfg.context_paths, "candidate context paths, JSONL");
  app.add_option("--context-max-hops", cfg.context_max_hops)->capture_default_str();
  app.add_option("--output-dir", cfg.output_dir)->capture_default_str();
  app.add_option("--checkpoint", cfg.checkpoint, "checkpoint path (default <output-dir>/model.ckpt)");
  app.add_option("--seed", cfg.seed)->envname("KGRELEX_SEED")->capture_default_str();

  app.add_option("--lr", cfg.link.lr)->capture_default_str();
  app.add_option("--epochs", cfg.link.epochs)->capture_default_str();
  app.add_option("--dropout-self", cfg.link.dropout_self)->capture_default_str();
  app.add_option("--dropout-other", cfg.link.dropout_other)->capture_default_str();
  app.add_option("--l2", cfg.link.l2_decoder, "decoder L2 coefficient")->capture_default_str();
  app.add_option("--dim", cfg.link.dim)->capture_default_str();
  app.add_option("--negatives", cfg.link.neg_per_pos, "negatives per positive")->capture_default_str();
  app.add_option("--layers", cfg.link.rgcn_layers)->capture_default_str();
  app.add_option("--blocks", cfg.link.blocks)->capture_default_str();
  app.add_option("--batch-size", cfg.link.batch_size, "0 = full batch")->capture_default_str();
  app.add_flag("--decoder-only", cfg.link.decoder_only, "skip the R-GCN encoder");
  app.add_option("--activation", activation, "hidden-layer activation (relu|identity)")->capture_default_str();
  app.add_option("--output-activation", output_activation, "last-layer activation")->capture_default_str();

  app.add_option("--scorer-lr", cfg.scorer.lr)->capture_default_str();
  app.add_option("--scorer-epochs", cfg.scorer.epochs)->capture_default_str();
  app.add_option("--scorer-depth", cfg.scorer.depth, "1 = logistic, 2 = MLP")->capture_default_str();
  app.add_option("--scorer-hidden", cfg.scorer.hidden)->capture_default_str();

  app.add_option("--aggregation", aggregation, "convex|max")->capture_default_str();
  app.add_option("--lambda", cfg.aggregation.lambda, "weight on the reasoning probability")->capture_default_str();
  app.add_option("--threshold", cfg.thresholds.global)->capture_default_str();
  app.add_option("--relation-thresholds", rel_thresholds, "name=value;name=value");
  app.add_flag("!--raw", cfg.filtered, "unfiltered ranking metrics");

  app.add_option("--beam", cfg.beam.beam)->capture_default_str();
  app.add_option("--max-len", cfg.beam.max_len)->capture_default_str();
  app.add_option("--top-n", cfg.beam.top_n)->capture_default_str();

  auto* stats = app.add_subcommand("stats", "dataset statistics");
  auto* train = app.add_subcommand("train", "build the graph and train both models");
  auto* evaluate = app.add_subcommand("evaluate", "F1, Ign F1 and ranking metrics on dev documents");
  auto* predict = app.add_subcommand("predict", "write predictions for test documents");
  auto* explain = app.add_subcommand("explain", "answer (head, relation, ?x) with paths");
  explain->add_option("head", head, "head entity name")->required();
  explain->add_option("relation", relation, "query relation")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorKind::Usage);
  }

  try {
    cfg.link.activation = activation_from_string(activation);
    cfg.link.output_activation = activation_from_string(output_activation);
    cfg.aggregation.mode = aggregation_from_string(aggregation);
    cfg.thresholds.per_relation = parse_relation_thresholds(rel_thresholds);
    cfg.propagate_seed();
    if (stats->parsed()) cmd_stats(cfg, std::cout);
    else if (train->parsed()) cmd_train(cfg, std::cout);
    else if (evaluate->parsed()) cmd_evaluate(cfg, std::cout);
    else if (predict->parsed()) cmd_predict(cfg, std::cout);
    else if (explain->parsed()) cmd_explain(cfg, head, relation, std::cout);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::Data);
  }
  return 0;
}
