#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "docee/corpus/synth.hpp"
#include "docee/train/checkpoint.hpp"
#include "docee/train/config.hpp"
#include "docee/train/trainer.hpp"
#include "docee/util/errors.hpp"

namespace corpus = docee::corpus;
namespace train = docee::train;
namespace enc = docee::enc;
using docee::ConfigError;
using docee::IoError;
using docee::NanError;
namespace graph = docee::graph;

namespace {

train::TrainConfig small_config() {
  train::TrainConfig c;
  c.d_m = 8;
  c.enc_layers = 1;
  c.heads = 2;
  c.d_ff = 12;
  c.gcn_layers = 1;
  c.dec_layers = 1;
  c.epochs = 2;
  c.batch_size = 4;
  c.dropout = 0.0;
  return c;
}

struct Corpus {
  corpus::EventSchema schema;
  std::vector<corpus::Document> docs;
  enc::Vocab vocab;
};

Corpus small_corpus(int n_docs, std::uint64_t seed) {
  corpus::SynthConfig sc;
  sc.num_docs = n_docs;
  Corpus c;
  c.schema = corpus::synth_schema(sc);
  c.docs = corpus::synth_corpus(sc, seed);
  c.vocab = enc::Vocab::build(c.docs);
  return c;
}

std::string tmp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

}  // namespace

TEST_CASE("config json round trip preserves every field") {
  train::TrainConfig c;
  c.d_m = 24;
  c.heads = 3;
  c.tracker_mode = "git-op";
  c.edge_types = {true, false, true, false};
  c.lambda_ner = 0.5;
  c.seed = 99;
  c.ss_start = 3;
  c.ss_end = 9;
  const auto j = train::config_to_json(c);
  const auto back = train::config_from_json(j);
  CHECK(back.d_m == 24);
  CHECK(back.heads == 3);
  CHECK(back.tracker_mode == "git-op");
  CHECK(back.edge_types == c.edge_types);
  CHECK(back.lambda_ner == 0.5);
  CHECK(back.seed == 99);
  CHECK(back.ss_start == 3);
  CHECK(back.ss_end == 9);
}

TEST_CASE("absent keys keep defaults; unknown keys are rejected") {
  const auto c = train::config_from_json(nlohmann::json::object());
  const train::TrainConfig d;
  CHECK(c.d_m == d.d_m);
  CHECK(c.lr == d.lr);
  CHECK(c.tracker_mode == d.tracker_mode);

  CHECK_THROWS_AS(train::config_from_json({{"d_mm", 32}}), ConfigError);
  CHECK_THROWS_AS(train::config_from_json({{"learning_rate", 0.1}}), ConfigError);
}

TEST_CASE("config value validation") {
  CHECK_THROWS_AS(train::config_from_json({{"d_m", 0}}), ConfigError);
  CHECK_THROWS_AS(train::config_from_json({{"d_m", 9}, {"heads", 2}}), ConfigError);
  CHECK_THROWS_AS(train::config_from_json({{"lr", -0.1}}), ConfigError);
  CHECK_THROWS_AS(train::config_from_json({{"tau_type", 1.5}}), ConfigError);
  CHECK_THROWS_AS(train::config_from_json({{"tracker_mode", "bogus"}}), ConfigError);
  CHECK_THROWS_AS(train::config_from_json({{"ss_start", 5}, {"ss_end", 4}}), ConfigError);
  CHECK_THROWS_AS(train::config_from_json({{"edge_types", {"sent_sent", "nope"}}}),
                  ConfigError);
  CHECK_THROWS_AS(train::config_from_json({{"gcn_layers", -1}}), ConfigError);
  // gcn_layers 0 is the no-graph variant and must be accepted.
  CHECK(train::config_from_json({{"gcn_layers", 0}}).gcn_layers == 0);
}

TEST_CASE("apply_override parses json values with string fallback") {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  train::apply_override(j, "d_m=16");
  train::apply_override(j, "lr=0.01");
  train::apply_override(j, "tracker_mode=git-nt");
  train::apply_override(j, "edge_types=[\"sent_sent\"]");
  CHECK(j["d_m"] == 16);
  CHECK(j["lr"] == 0.01);
  CHECK(j["tracker_mode"] == "git-nt");
  CHECK(j["edge_types"].is_array());

  CHECK_THROWS_AS(train::apply_override(j, "no-equals-sign"), ConfigError);
  const auto cfg = train::config_from_json(j);
  CHECK(cfg.d_m == 16);
  CHECK(cfg.edge_types == graph::EdgeMask{true, false, false, false});
}

TEST_CASE("scheduled sampling fraction ramps linearly") {
  CHECK(train::scheduled_sampling_fraction(0, 10, 20) == 0.0);
  CHECK(train::scheduled_sampling_fraction(10, 10, 20) == 0.0);
  CHECK(train::scheduled_sampling_fraction(15, 10, 20) == 0.5);
  CHECK(train::scheduled_sampling_fraction(20, 10, 20) == 1.0);
  CHECK(train::scheduled_sampling_fraction(99, 10, 20) == 1.0);
  // Degenerate window: jumps straight to 1 at the boundary.
  CHECK(train::scheduled_sampling_fraction(4, 5, 5) == 0.0);
  CHECK(train::scheduled_sampling_fraction(5, 5, 5) == 1.0);
}

TEST_CASE("model loss is finite and prediction is well-formed") {
  auto c = small_corpus(4, 5);
  train::Model model(small_config(), c.schema, c.vocab, 1);
  docee::Rng rng(3);
  const auto parts = model.eval_loss(c.docs[0]);
  CHECK(std::isfinite(parts.total));
  CHECK(parts.total > 0.0);
  CHECK(std::isfinite(parts.ner));
  CHECK(std::isfinite(parts.detect));
  CHECK(std::isfinite(parts.record));

  const auto pred = model.predict(c.docs[0]);
  for (const auto& r : pred.records) {
    CHECK(c.schema.type_index(r.event_type) >= 0);
    CHECK(r.args.size() == c.schema.roles.at(r.event_type).size());
    CHECK(r.filled_count() > 0);  // all-null records are dropped
  }
}

TEST_CASE("lambda weights isolate the loss terms") {
  auto c = small_corpus(3, 9);

  auto grads_with = [&](double l_ner, double l_detect, double l_record) {
    auto cfg = small_config();
    cfg.lambda_ner = l_ner;
    cfg.lambda_detect = l_detect;
    cfg.lambda_record = l_record;
    train::Model model(cfg, c.schema, c.vocab, 1);
    docee::Rng rng(3);
    model.train_step(c.docs[0], false, rng);
    std::vector<std::string> touched;
    for (const auto& [name, slot] : model.store().slots())
      if (slot.grad.cwiseAbs().maxCoeff() > 0.0) touched.push_back(name);
    return touched;
  };

  // Only the CRF head (and encoder below it) learns when just ner is on.
  const auto ner_only = grads_with(1.0, 0.0, 0.0);
  for (const auto& name : ner_only) {
    CHECK(name.find("recdec.") == std::string::npos);
    CHECK(name.find("detect.") == std::string::npos);
    CHECK(name.find("gcn.") == std::string::npos);
  }
  bool has_crf = false, has_enc = false;
  for (const auto& name : ner_only) {
    has_crf = has_crf || name.find("ner.") == 0;
    has_enc = has_enc || name.find("enc.") == 0;
  }
  CHECK(has_crf);
  CHECK(has_enc);

  const auto detect_only = grads_with(0.0, 1.0, 0.0);
  for (const auto& name : detect_only) {
    CHECK(name.find("recdec.") == std::string::npos);
    CHECK(name.find("ner.") == std::string::npos);
  }
  bool has_det = false;
  for (const auto& name : detect_only) has_det = has_det || name.find("detect.") == 0;
  CHECK(has_det);

  const auto record_only = grads_with(0.0, 0.0, 1.0);
  for (const auto& name : record_only) {
    CHECK(name.find("detect.") == std::string::npos);
    CHECK(name.find("ner.") == std::string::npos);
  }
  bool has_rd = false;
  for (const auto& name : record_only) has_rd = has_rd || name.find("recdec.") == 0;
  CHECK(has_rd);
}

TEST_CASE("checkpoint round trip is bit exact") {
  auto c = small_corpus(4, 21);
  train::Model model(small_config(), c.schema, c.vocab, 1);

  // Take a couple of steps so Adam moments are nonzero.
  docee::Rng rng(5);
  for (int k = 0; k < 2; ++k) {
    model.train_step(c.docs[k], false, rng);
    model.store().adam_step({1e-3, 0.9, 0.999, 1e-8});
  }

  const std::string dir = tmp_dir("docee_ckpt_test");
  const std::string path = dir + "/m.ckpt";
  train::save_checkpoint(path, model);
  const auto back = train::load_checkpoint(path);

  CHECK(back->config().d_m == model.config().d_m);
  CHECK(back->schema().types == model.schema().types);
  CHECK(back->vocab().token_to_id == model.vocab().token_to_id);
  CHECK(back->store().adam_t() == model.store().adam_t());
  REQUIRE(back->store().slots().size() == model.store().slots().size());
  for (const auto& [name, slot] : model.store().slots()) {
    const auto& other = back->store().at(name);
    CHECK(slot.value == other.value);      // bitwise
    CHECK(slot.adam_m == other.adam_m);
    CHECK(slot.adam_v == other.adam_v);
  }

  // Predictions agree exactly.
  const auto a = model.predict(c.docs[3]);
  const auto b = back->predict(c.docs[3]);
  CHECK(a.mentions == b.mentions);
  CHECK(a.types == b.types);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i)
    CHECK(a.records[i].args == b.records[i].args);

  CHECK_THROWS_AS(train::load_checkpoint("/nonexistent/x.ckpt"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("corrupt checkpoints are refused") {
  const std::string dir = tmp_dir("docee_ckpt_bad");
  const std::string path = dir + "/bad.ckpt";
  std::ofstream(path, std::ios::binary) << "DOCEECKPT1\ngarbage";
  CHECK_THROWS_AS(train::load_checkpoint(path), IoError);
  std::ofstream(path, std::ios::binary) << "NOTACKPT";
  CHECK_THROWS_AS(train::load_checkpoint(path), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("two identical training runs produce identical artifacts") {
  auto c = small_corpus(6, 33);
  auto cfg = small_config();
  cfg.epochs = 2;
  cfg.dropout = 0.1;  // exercise the dropout rng path too

  auto run = [&](const std::string& dir_name) {
    train::Model model(cfg, c.schema, c.vocab, 1);
    const std::string dir = tmp_dir(dir_name);
    return std::make_pair(train::train_model(model, c.docs, c.docs, dir), dir);
  };
  auto [r1, d1] = run("docee_det_a");
  auto [r2, d2] = run("docee_det_b");

  REQUIRE(r1.history.size() == r2.history.size());
  for (std::size_t e = 0; e < r1.history.size(); ++e) {
    CHECK(r1.history[e].loss_total == r2.history[e].loss_total);  // bitwise
    CHECK(r1.history[e].dev_record_f1 == r2.history[e].dev_record_f1);
  }

  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(d1 + "/metrics.jsonl") == slurp(d2 + "/metrics.jsonl"));
  CHECK(slurp(d1 + "/last.ckpt") == slurp(d2 + "/last.ckpt"));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST_CASE("metrics jsonl has one well-formed line per epoch") {
  auto c = small_corpus(4, 50);
  auto cfg = small_config();
  cfg.epochs = 3;
  train::Model model(cfg, c.schema, c.vocab, 1);
  const std::string dir = tmp_dir("docee_metrics_test");
  const auto result = train::train_model(model, c.docs, c.docs, dir);

  std::ifstream in(dir + "/metrics.jsonl");
  REQUIRE(in);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("epoch") == lines);
    CHECK(j.contains("loss_total"));
    CHECK(j.contains("ss_fraction"));
    CHECK(j.contains("dev_record_f1"));
    ++lines;
  }
  CHECK(lines == 3);
  CHECK(result.history.size() == 3);
  CHECK(std::filesystem::exists(dir + "/best.ckpt"));
  CHECK(std::filesystem::exists(dir + "/last.ckpt"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("nan in the loss aborts with NanError") {
  auto c = small_corpus(2, 60);
  train::Model model(small_config(), c.schema, c.vocab, 1);
  // Poison one parameter so the forward pass goes non-finite.
  model.store().slots().begin()->second.value.setConstant(
      std::numeric_limits<double>::quiet_NaN());
  docee::Rng rng(1);
  CHECK_THROWS_AS(model.train_step(c.docs[0], false, rng), NanError);
}

TEST_CASE("scheduled sampling uses predicted mentions after ss_end") {
  auto c = small_corpus(4, 70);
  auto cfg = small_config();
  cfg.epochs = 1;
  cfg.ss_start = 0;
  cfg.ss_end = 0;  // fraction 1 from epoch 0: every doc uses predictions
  train::Model model(cfg, c.schema, c.vocab, 1);
  docee::Rng rng(2);
  const auto parts = model.train_step(c.docs[0], true, rng);
  CHECK(parts.used_pred_mentions);
  CHECK(std::isfinite(parts.total));
}
