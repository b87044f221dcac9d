#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "docee/corpus/io.hpp"
#include "docee/corpus/synth.hpp"
#include "docee/evalkit/metrics.hpp"
#include "docee/hetgraph/graph.hpp"
#include "docee/train/checkpoint.hpp"
#include "docee/train/trainer.hpp"
#include "docee/util/errors.hpp"
#include "docee/util/logging.hpp"

namespace {

using namespace docee;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const nlohmann::ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("failed writing " + path);
}

train::TrainConfig make_config(const std::string& config_path,
                               const std::vector<std::string>& sets,
                               const std::optional<std::uint64_t>& seed) {
  nlohmann::ordered_json base = nlohmann::ordered_json::object();
  if (!config_path.empty()) {
    nlohmann::json file = read_json_file(config_path);
    if (!file.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : file.items()) base[k] = v;
  }
  for (const auto& s : sets) train::apply_override(base, s);
  if (seed) base["seed"] = *seed;
  return train::config_from_json(base);
}

int ner_kinds_of(const std::vector<corpus::Document>& docs) {
  int max_kind = 0;
  for (const auto& d : docs)
    for (const auto& m : d.gold_mentions) max_kind = std::max(max_kind, m.kind);
  return max_kind + 1;
}

std::vector<evalkit::DocPrediction> predict_all(train::Model& model,
                                                const std::vector<corpus::Document>& docs) {
  std::vector<evalkit::DocPrediction> preds;
  preds.reserve(docs.size());
  for (const auto& d : docs) preds.push_back(model.predict(d));
  return preds;
}

int run(int argc, char** argv) {
  CLI::App app{"document-level event record extraction"};
  app.require_subcommand(1);

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  corpus::SynthConfig sc;
  std::uint64_t synth_seed = 7;
  std::string synth_out, synth_schema_out;
  synth->add_option("--out", synth_out, "corpus JSON path")->required();
  synth->add_option("--schema-out", synth_schema_out, "schema JSON path");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--docs", sc.num_docs, "number of documents");
  synth->add_option("--vocab", sc.vocab_size, "filler vocabulary size");
  synth->add_option("--types", sc.num_types, "event type count");
  synth->add_option("--roles", sc.roles_per_type, "roles per type");
  synth->add_option("--max-records", sc.max_records_per_doc, "records per document cap");
  synth->add_option("--multi-frac", sc.multi_record_fraction,
                    "fraction of documents with more than one record");
  synth->add_option("--scatter", sc.scatter_radius, "argument scatter radius (sentences)");
  synth->add_option("--min-sentences", sc.min_sentences, "sentences per doc, lower bound");
  synth->add_option("--max-sentences", sc.max_sentences, "sentences per doc, upper bound");
  synth->add_option("--min-tokens", sc.min_tokens, "filler tokens per sentence, lower bound");
  synth->add_option("--max-tokens", sc.max_tokens, "filler tokens per sentence, upper bound");
  synth->add_option("--entity-pool", sc.entity_pool, "global entity surface pool size");
  synth->add_option("--null-frac", sc.null_role_fraction, "probability a role stays null");
  synth->add_option("--shared-frac", sc.shared_arg_fraction,
                    "probability a later record reuses an earlier argument");
  synth->add_option("--extra-mention-prob", sc.extra_mention_prob,
                    "probability of an extra coreferent mention");
  synth->add_option("--distractors", sc.distractors_per_doc,
                    "mentioned entities that fill no role");

  // ---- import ----
  auto* import = app.add_subcommand("import", "convert the released corpus layout");
  std::string import_in, import_out, import_schema_out;
  import->add_option("--in", import_in, "released-layout JSON")->required();
  import->add_option("--out", import_out, "canonical corpus JSON")->required();
  import->add_option("--schema-out", import_schema_out, "schema JSON path");

  // ---- train ----
  auto* tr = app.add_subcommand("train", "train a model");
  std::string tr_corpus, tr_dev, tr_schema, tr_out, tr_config;
  std::vector<std::string> tr_sets;
  std::optional<std::uint64_t> tr_seed;
  tr->add_option("--corpus", tr_corpus, "training corpus JSON")->required();
  tr->add_option("--dev", tr_dev, "development corpus JSON");
  tr->add_option("--schema", tr_schema, "schema JSON")->required();
  tr->add_option("--out", tr_out, "output directory")->required();
  tr->add_option("--config", tr_config, "config JSON (defaults for absent keys)");
  tr->add_option("--set", tr_sets, "config override key=value (repeatable)");
  tr->add_option("--seed", tr_seed, "override the config seed");

  // ---- predict ----
  auto* pr = app.add_subcommand("predict", "run a checkpoint over a corpus");
  std::string pr_ckpt, pr_corpus, pr_out, pr_graphs;
  pr->add_option("--ckpt", pr_ckpt, "checkpoint path")->required();
  pr->add_option("--corpus", pr_corpus, "corpus JSON")->required();
  pr->add_option("--out", pr_out, "predictions JSON path")->required();
  pr->add_option("--dump-graphs", pr_graphs, "also dump the document graphs");

  // ---- eval ----
  auto* ev = app.add_subcommand("eval", "score predictions against gold");
  std::string ev_corpus, ev_schema, ev_preds, ev_out;
  ev->add_option("--corpus", ev_corpus, "gold corpus JSON")->required();
  ev->add_option("--schema", ev_schema, "schema JSON")->required();
  ev->add_option("--preds", ev_preds, "predictions JSON")->required();
  ev->add_option("--out", ev_out, "write the report JSON here");

  // ---- ablate ----
  auto* ab = app.add_subcommand("ablate", "train tracker/edge variants and compare");
  std::string ab_corpus, ab_dev, ab_schema, ab_out, ab_config;
  std::vector<std::string> ab_sets;
  std::optional<std::uint64_t> ab_seed;
  bool ab_edges = false;
  ab->add_option("--corpus", ab_corpus, "training corpus JSON")->required();
  ab->add_option("--dev", ab_dev, "development corpus JSON")->required();
  ab->add_option("--schema", ab_schema, "schema JSON")->required();
  ab->add_option("--out", ab_out, "output directory")->required();
  ab->add_option("--config", ab_config, "config JSON");
  ab->add_option("--set", ab_sets, "config override key=value (repeatable)");
  ab->add_option("--seed", ab_seed, "override the config seed");
  ab->add_flag("--edges", ab_edges, "also ablate each graph edge type");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (synth->parsed()) {
    auto docs = corpus::synth_corpus(sc, synth_seed);
    corpus::save_corpus(synth_out, docs);
    if (!synth_schema_out.empty())
      corpus::save_schema(synth_schema_out, corpus::synth_schema(sc));
    std::printf("wrote %zu documents to %s\n", docs.size(), synth_out.c_str());
    return 0;
  }

  if (import->parsed()) {
    auto docs = corpus::import_chfinann(import_in);
    corpus::save_corpus(import_out, docs);
    if (!import_schema_out.empty())
      corpus::save_schema(import_schema_out, corpus::chfinann_schema());
    std::printf("imported %zu documents to %s\n", docs.size(), import_out.c_str());
    return 0;
  }

  if (tr->parsed()) {
    const train::TrainConfig cfg = make_config(tr_config, tr_sets, tr_seed);
    const corpus::EventSchema schema = corpus::load_schema(tr_schema);
    const auto train_docs = corpus::load_corpus(tr_corpus, schema);
    std::vector<corpus::Document> dev_docs;
    if (!tr_dev.empty()) dev_docs = corpus::load_corpus(tr_dev, schema);

    train::Model model(cfg, schema, enc::Vocab::build(train_docs),
                       ner_kinds_of(train_docs));
    std::filesystem::create_directories(tr_out);
    write_json_file(tr_out + "/config.json", train::config_to_json(cfg));
    const auto result = train::train_model(model, train_docs, dev_docs, tr_out);
    if (result.best_epoch >= 0)
      std::printf("best epoch %d dev record F1 %.4f\n", result.best_epoch,
                  result.best_dev_record_f1);
    else
      std::printf("trained %d epochs (no dev set)\n", cfg.epochs);
    return 0;
  }

  if (pr->parsed()) {
    auto model = train::load_checkpoint(pr_ckpt);
    const auto docs = corpus::load_corpus(pr_corpus, model->schema());
    const auto preds = predict_all(*model, docs);
    write_json_file(pr_out, evalkit::predictions_to_json(docs, preds));
    if (!pr_graphs.empty()) {
      auto arr = nlohmann::ordered_json::array();
      for (std::size_t d = 0; d < docs.size(); ++d) {
        auto g = graph::build_graph(static_cast<int>(docs[d].sentences.size()),
                                    preds[d].mentions);
        nlohmann::ordered_json gj;
        gj["doc_id"] = docs[d].doc_id;
        gj["graph"] = graph::graph_to_json(g);
        arr.push_back(std::move(gj));
      }
      write_json_file(pr_graphs, arr);
    }
    std::printf("wrote predictions for %zu documents to %s\n", docs.size(),
                pr_out.c_str());
    return 0;
  }

  if (ev->parsed()) {
    const corpus::EventSchema schema = corpus::load_schema(ev_schema);
    const auto docs = corpus::load_corpus(ev_corpus, schema);
    const auto preds =
        evalkit::predictions_from_json(read_json_file(ev_preds), schema, docs);
    const auto report = evalkit::evaluate(docs, preds);
    std::fputs(evalkit::report_to_text(report).c_str(), stdout);
    if (!ev_out.empty()) write_json_file(ev_out, evalkit::report_to_json(report));
    return 0;
  }

  if (ab->parsed()) {
    const train::TrainConfig base = make_config(ab_config, ab_sets, ab_seed);
    const corpus::EventSchema schema = corpus::load_schema(ab_schema);
    const auto train_docs = corpus::load_corpus(ab_corpus, schema);
    const auto dev_docs = corpus::load_corpus(ab_dev, schema);
    const auto vocab = enc::Vocab::build(train_docs);
    const int kinds = ner_kinds_of(train_docs);

    struct Variant {
      std::string name;
      train::TrainConfig cfg;
    };
    std::vector<Variant> variants;
    for (const char* mode : {"full", "git-ot", "git-op", "git-nt", "greedy"}) {
      train::TrainConfig c = base;
      c.tracker_mode = mode;
      variants.push_back({mode, c});
    }
    if (ab_edges) {
      for (int k = 0; k < graph::kNumEdgeTypes; ++k) {
        train::TrainConfig c = base;
        c.tracker_mode = "full";
        c.edge_types[static_cast<std::size_t>(k)] = false;
        variants.push_back(
            {std::string("no_") + graph::edge_type_name(static_cast<graph::EdgeType>(k)), c});
      }
      train::TrainConfig c = base;
      c.tracker_mode = "full";
      c.gcn_layers = 0;
      variants.push_back({"no_graph", c});
    }

    std::filesystem::create_directories(ab_out);
    std::vector<std::pair<std::string, double>> scores;
    for (const auto& v : variants) {
      train::Model model(v.cfg, schema, vocab, kinds);
      const auto result =
          train::train_model(model, train_docs, dev_docs, ab_out + "/" + v.name);
      scores.emplace_back(v.name, result.best_dev_record_f1);
    }
    const double full_f1 = scores.front().second;
    std::printf("%-16s %12s %10s\n", "variant", "dev rec F1", "vs full");
    for (const auto& [name, f1] : scores)
      std::printf("%-16s %12.4f %+10.4f\n", name.c_str(), f1, f1 - full_f1);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const docee::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 2;
  } catch (const docee::SchemaError& e) {
    std::fprintf(stderr, "schema error: %s\n", e.what());
    return 3;
  } catch (const docee::NanError& e) {
    std::fprintf(stderr, "training aborted: %s\n", e.what());
    return 4;
  } catch (const docee::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
