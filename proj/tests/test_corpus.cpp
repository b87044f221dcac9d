#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "docee/corpus/bio.hpp"
#include "docee/corpus/io.hpp"
#include "docee/corpus/synth.hpp"
#include "docee/corpus/types.hpp"
#include "docee/util/errors.hpp"

namespace corpus = docee::corpus;
using docee::ConfigError;
using docee::IoError;
using docee::SchemaError;

namespace {

corpus::EventSchema tiny_schema() {
  corpus::EventSchema s;
  s.types = {"Buy", "Sell"};
  s.roles["Buy"] = {"agent", "item"};
  s.roles["Sell"] = {"agent", "item", "price"};
  return s;
}

corpus::Document tiny_doc() {
  corpus::Document d;
  d.doc_id = "d0";
  d.sentences = {{"alice", "buys", "red", "apples"}, {"she", "met", "bob", "today"}};
  d.gold_mentions = {{0, 0, 1, "alice", 0}, {0, 2, 4, "redapples", 0}, {1, 2, 3, "bob", 0}};
  d.gold_types = {"Buy"};
  corpus::EventRecord r;
  r.event_type = "Buy";
  r.args = {{"agent", "alice"}, {"item", "redapples"}};
  d.gold_records = {r};
  return d;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void check_docs_equal(const corpus::Document& a, const corpus::Document& b) {
  CHECK(a.doc_id == b.doc_id);
  CHECK(a.sentences == b.sentences);
  CHECK(a.gold_mentions == b.gold_mentions);
  CHECK(a.gold_types == b.gold_types);
  REQUIRE(a.gold_records.size() == b.gold_records.size());
  for (std::size_t i = 0; i < a.gold_records.size(); ++i) {
    CHECK(a.gold_records[i].event_type == b.gold_records[i].event_type);
    CHECK(a.gold_records[i].args == b.gold_records[i].args);
  }
}

}  // namespace

TEST_CASE("chfinann schema shape") {
  const auto s = corpus::chfinann_schema();
  CHECK(s.types.size() == 5);
  CHECK(s.total_roles() == 35);
  CHECK(s.type_index("EquityPledge") == 4);
  CHECK(s.type_index("nope") == -1);
  for (const auto& t : s.types) CHECK(s.roles.count(t) == 1);
}

TEST_CASE("validate accepts a well-formed document") {
  CHECK_NOTHROW(corpus::validate_document(tiny_doc(), tiny_schema()));
}

TEST_CASE("validate rejects each invariant break") {
  const auto schema = tiny_schema();

  auto d = tiny_doc();
  d.sentences.clear();
  CHECK_THROWS_AS(corpus::validate_document(d, schema), SchemaError);

  d = tiny_doc();
  d.sentences[1].clear();
  CHECK_THROWS_AS(corpus::validate_document(d, schema), SchemaError);

  d = tiny_doc();
  d.gold_mentions[0].sentence_index = 5;
  CHECK_THROWS_AS(corpus::validate_document(d, schema), SchemaError);

  d = tiny_doc();
  d.gold_mentions[0].end = 9;
  CHECK_THROWS_AS(corpus::validate_document(d, schema), SchemaError);

  d = tiny_doc();
  d.gold_mentions[0].surface = "wrong";
  CHECK_THROWS_AS(corpus::validate_document(d, schema), SchemaError);

  d = tiny_doc();
  d.gold_types.insert("Steal");
  CHECK_THROWS_AS(corpus::validate_document(d, schema), SchemaError);

  d = tiny_doc();
  d.gold_records[0].event_type = "Steal";
  CHECK_THROWS_AS(corpus::validate_document(d, schema), SchemaError);

  d = tiny_doc();
  d.gold_records[0].args.pop_back();  // wrong arity
  CHECK_THROWS_AS(corpus::validate_document(d, schema), SchemaError);

  d = tiny_doc();
  std::swap(d.gold_records[0].args[0], d.gold_records[0].args[1]);  // order
  CHECK_THROWS_AS(corpus::validate_document(d, schema), SchemaError);

  d = tiny_doc();
  d.gold_records[0].args[0].second = std::nullopt;
  d.gold_records[0].args[1].second = std::nullopt;  // all-null record
  CHECK_THROWS_AS(corpus::validate_document(d, schema), SchemaError);

  d = tiny_doc();
  d.gold_records[0].args[0].second = "ghost";  // no mention carries it
  CHECK_THROWS_AS(corpus::validate_document(d, schema), SchemaError);

  d = tiny_doc();
  d.gold_types = {};  // record type not announced
  CHECK_THROWS_AS(corpus::validate_document(d, schema), SchemaError);
}

TEST_CASE("bio labels a simple document") {
  const corpus::BioScheme scheme;
  const auto res = corpus::to_bio(tiny_doc(), scheme);
  CHECK(res.dropped == 0);
  CHECK(res.kept.size() == 3);
  // alice buys red apples -> B O B I
  CHECK(res.labels[0] == std::vector<int>{scheme.b(), scheme.o(), scheme.b(), scheme.i()});
  // she met bob today -> O O B O
  CHECK(res.labels[1] == std::vector<int>{scheme.o(), scheme.o(), scheme.b(), scheme.o()});
}

TEST_CASE("bio resolves overlaps longest-first then earliest") {
  corpus::Document d;
  d.doc_id = "ov";
  d.sentences = {{"a", "b", "c", "d", "e"}};
  d.gold_mentions = {
      {0, 1, 3, "bc", 0},   // loses: overlaps the longer [1,4)
      {0, 1, 4, "bcd", 0},  // kept (longest)
      {0, 3, 5, "de", 0},   // loses: overlaps kept [1,4)
      {0, 0, 1, "a", 0},    // kept (disjoint)
  };
  const corpus::BioScheme scheme;
  const auto res = corpus::to_bio(d, scheme);
  CHECK(res.dropped == 2);
  REQUIRE(res.kept.size() == 2);
  CHECK(res.kept[0].start == 0);
  CHECK(res.kept[1].start == 1);
  CHECK(res.kept[1].end == 4);
  CHECK(res.labels[0] ==
        std::vector<int>{scheme.b(), scheme.b(), scheme.i(), scheme.i(), scheme.o()});
}

TEST_CASE("bio equal-length ties keep the earlier start") {
  corpus::Document d;
  d.doc_id = "tie";
  d.sentences = {{"a", "b", "c"}};
  d.gold_mentions = {{0, 1, 3, "bc", 0}, {0, 0, 2, "ab", 0}};
  const auto res = corpus::to_bio(d, {});
  CHECK(res.dropped == 1);
  REQUIRE(res.kept.size() == 1);
  CHECK(res.kept[0].start == 0);
}

TEST_CASE("typed bio uses per-kind label pairs") {
  corpus::BioScheme scheme{2};
  CHECK(scheme.num_labels() == 5);
  CHECK(scheme.b(1) == 2);
  CHECK(scheme.i(1) == 3);
  CHECK(scheme.o() == 4);
  CHECK(scheme.is_b(2));
  CHECK(scheme.is_i(3));
  CHECK(!scheme.is_b(4));
  CHECK(scheme.kind_of(3) == 1);

  corpus::Document d;
  d.doc_id = "ty";
  d.sentences = {{"x", "y"}};
  d.gold_mentions = {{0, 0, 1, "x", 1}, {0, 1, 2, "y", 0}};
  const auto res = corpus::to_bio(d, scheme);
  CHECK(res.labels[0] == std::vector<int>{scheme.b(1), scheme.b(0)});
}

TEST_CASE("corpus json round trip") {
  const auto schema = tiny_schema();
  auto d = tiny_doc();
  corpus::EventRecord r;
  r.event_type = "Sell";
  r.args = {{"agent", "bob"}, {"item", std::nullopt}, {"price", "alice"}};
  d.gold_records.push_back(r);
  d.gold_types.insert("Sell");

  const std::string path = tmp_path("docee_corpus_rt.json");
  corpus::save_corpus(path, {d});
  const auto back = corpus::load_corpus(path, schema);
  REQUIRE(back.size() == 1);
  check_docs_equal(back[0], d);
  std::remove(path.c_str());
}

TEST_CASE("schema json round trip") {
  const std::string path = tmp_path("docee_schema_rt.json");
  corpus::save_schema(path, tiny_schema());
  const auto s = corpus::load_schema(path);
  CHECK(s.types == tiny_schema().types);
  CHECK(s.roles == tiny_schema().roles);
  std::remove(path.c_str());
}

TEST_CASE("load errors carry the right exception types") {
  CHECK_THROWS_AS(corpus::load_corpus("/nonexistent/x.json", tiny_schema()), IoError);
  CHECK_THROWS_AS(corpus::load_schema("/nonexistent/x.json"), IoError);

  const std::string path = tmp_path("docee_bad.json");
  std::ofstream(path) << "{not json";
  CHECK_THROWS_AS(corpus::load_corpus(path, tiny_schema()), IoError);

  std::ofstream(path) << "{\"a\": 1}";  // object, not array
  CHECK_THROWS_AS(corpus::load_corpus(path, tiny_schema()), SchemaError);

  // Structurally fine but invariant-breaking: unknown event type.
  std::ofstream(path) << R"([{"doc_id":"d","sentences":[["tok"]],"mentions":[],
      "event_types":["Nope"],"records":[]}])";
  CHECK_THROWS_AS(corpus::load_corpus(path, tiny_schema()), SchemaError);
  std::remove(path.c_str());
}

TEST_CASE("chfinann import resolves codepoint spans") {
  const std::string path = tmp_path("docee_chf.json");
  // "买入" spans codepoints [2,4) of a mixed ascii/CJK sentence.
  std::ofstream(path) << R"([
    ["doc1", {
      "sentences": ["ab买入cd", "xx甲公司yy"],
      "ann_mspan2dranges": {
        "买入": [[0, 2, 4]],
        "甲公司": [[1, 2, 5]],
        "bogus": [[1, 90, 95]]
      },
      "recguid_eventname_eventdict_list": [
        [0, "EquityRepurchase", {"CompanyName": "甲公司",
                                 "HighestTradingPrice": "买入",
                                 "LowestTradingPrice": null,
                                 "RepurchasedShares": null,
                                 "ClosingDate": null,
                                 "RepurchaseAmount": null}]
      ]
    }]
  ])";
  const auto docs = corpus::import_chfinann(path);
  REQUIRE(docs.size() == 1);
  const auto& d = docs[0];
  CHECK(d.sentences[0].size() == 6);  // one token per codepoint
  CHECK(d.sentences[0][2] == "买");
  REQUIRE(d.gold_mentions.size() == 2);  // bogus span dropped
  CHECK(d.gold_mentions[0].surface == "买入");
  CHECK(d.gold_mentions[1].surface == "甲公司");
  CHECK(d.gold_types == std::set<std::string>{"EquityRepurchase"});
  REQUIRE(d.gold_records.size() == 1);
  CHECK(d.gold_records[0].args.size() == 6);  // schema role order, nulls kept
  CHECK(*d.gold_records[0].find_arg("CompanyName") == "甲公司");
  CHECK(!d.gold_records[0].find_arg("ClosingDate")->has_value());
  corpus::validate_document(d, corpus::chfinann_schema());
  std::remove(path.c_str());
}

TEST_CASE("chfinann import fails when no argument of a record resolves") {
  const std::string path = tmp_path("docee_chf_bad.json");
  std::ofstream(path) << R"([
    ["doc1", {
      "sentences": ["abcd"],
      "ann_mspan2dranges": {"zz": [[0, 90, 92]]},
      "recguid_eventname_eventdict_list": [
        [0, "EquityFreeze", {"EquityHolder": "zz", "FrozeShares": null,
          "LegalInstitution": null, "TotalHoldingShares": null,
          "TotalHoldingRatio": null, "StartDate": null, "EndDate": null,
          "UnfrozeDate": null}]
      ]
    }]
  ])";
  CHECK_THROWS_AS(corpus::import_chfinann(path), SchemaError);
  std::remove(path.c_str());
}

TEST_CASE("synth corpus is a pure function of config and seed") {
  corpus::SynthConfig cfg;
  cfg.num_docs = 20;
  const auto a = corpus::synth_corpus(cfg, 42);
  const auto b = corpus::synth_corpus(cfg, 42);
  REQUIRE(a.size() == b.size());
  const std::string pa = tmp_path("docee_synth_a.json");
  const std::string pb = tmp_path("docee_synth_b.json");
  const std::string pc = tmp_path("docee_synth_c.json");
  corpus::save_corpus(pa, a);
  corpus::save_corpus(pb, b);
  corpus::save_corpus(pc, corpus::synth_corpus(cfg, 43));
  CHECK(slurp(pa) == slurp(pb));  // byte-identical across runs
  CHECK(slurp(pa) != slurp(pc));  // seed actually matters
  std::remove(pa.c_str());
  std::remove(pb.c_str());
  std::remove(pc.c_str());
}

TEST_CASE("synth respects the exact multi-record count") {
  corpus::SynthConfig cfg;
  cfg.num_docs = 40;
  cfg.multi_record_fraction = 0.3;
  const auto docs = corpus::synth_corpus(cfg, 7);
  int multi = 0;
  for (const auto& d : docs) multi += d.gold_records.size() > 1 ? 1 : 0;
  CHECK(multi == 12);  // lround(0.3 * 40)

  cfg.multi_record_fraction = 0.0;
  for (const auto& d : corpus::synth_corpus(cfg, 7)) CHECK(d.gold_records.size() == 1);
}

TEST_CASE("synth documents validate and honor the scatter radius") {
  corpus::SynthConfig cfg;
  cfg.num_docs = 30;
  cfg.scatter_radius = 3;
  const auto schema = corpus::synth_schema(cfg);
  const auto docs = corpus::synth_corpus(cfg, 11);
  REQUIRE(docs.size() == 30);
  for (const auto& d : docs) {
    corpus::validate_document(d, schema);
    // Every record must fit one window: some span of `scatter_radius`
    // consecutive sentences holds a mention of each filled argument.
    for (const auto& rec : d.gold_records) {
      const int n = static_cast<int>(d.sentences.size());
      bool fits = false;
      for (int w = 0; w < n && !fits; ++w) {
        bool all = true;
        for (const auto& [role, val] : rec.args) {
          if (!val) continue;
          bool here = false;
          for (const auto& m : d.gold_mentions)
            here = here || (m.surface == *val && m.sentence_index >= w &&
                            m.sentence_index < w + cfg.scatter_radius);
          all = all && here;
        }
        fits = all;
      }
      CHECK(fits);
    }
  }
}

TEST_CASE("synth schema matches the config") {
  corpus::SynthConfig cfg;
  cfg.num_types = 3;
  cfg.roles_per_type = 4;
  const auto s = corpus::synth_schema(cfg);
  CHECK(s.types == std::vector<std::string>{"ET0", "ET1", "ET2"});
  CHECK(s.roles.at("ET1") == std::vector<std::string>{"r0", "r1", "r2", "r3"});
}

TEST_CASE("synth rejects inconsistent configs") {
  corpus::SynthConfig cfg;
  cfg.multi_record_fraction = 0.5;
  cfg.max_records_per_doc = 1;
  CHECK_THROWS_AS(corpus::synth_corpus(cfg, 1), ConfigError);

  cfg = {};
  cfg.entity_pool = 1;
  CHECK_THROWS_AS(corpus::synth_corpus(cfg, 1), ConfigError);

  cfg = {};
  cfg.min_sentences = 5;
  cfg.max_sentences = 4;
  CHECK_THROWS_AS(corpus::synth_corpus(cfg, 1), ConfigError);

  cfg = {};
  cfg.null_role_fraction = 1.5;
  CHECK_THROWS_AS(corpus::synth_corpus(cfg, 1), ConfigError);
}
