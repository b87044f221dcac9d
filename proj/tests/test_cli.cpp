#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = -1;
  std::string output;  // stdout + stderr interleaved
};

std::string tmp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

CliResult run_cli(const std::string& dir, const std::string& args) {
  const std::string capture = dir + "/.cli_capture";
  const std::string cmd = std::string(DOCEE_BIN) + " " + args + " >" + capture + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(capture);
  std::ostringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

nlohmann::json slurp_json(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  return j;
}

// Small, fast model settings shared by every training invocation below.
const char* kTinyModel =
    " --set d_m=8 --set enc_layers=1 --set heads=2 --set d_ff=12"
    " --set gcn_layers=1 --set dec_layers=1 --set batch_size=4 --set dropout=0";

}  // namespace

TEST_CASE("pipeline round trip through the binary") {
  const std::string dir = tmp_dir("docee_cli_pipe");
  const std::string corpus = dir + "/c.json";
  const std::string schema = dir + "/s.json";

  auto synth = run_cli(dir, "synth --out " + corpus + " --schema-out " + schema +
                                " --docs 10 --types 2 --roles 2 --min-sentences 3"
                                " --max-sentences 5 --seed 3");
  CHECK(synth.code == 0);
  CHECK(synth.output.find("wrote 10 documents") != std::string::npos);
  CHECK(slurp_json(corpus).is_array());
  CHECK(slurp_json(schema).contains("types"));

  const std::string run = dir + "/run";
  auto train = run_cli(dir, "train --corpus " + corpus + " --schema " + schema +
                                " --out " + run + " --set epochs=2" + kTinyModel +
                                " --dev " + corpus);
  CHECK(train.code == 0);
  CHECK(train.output.find("best epoch") != std::string::npos);
  CHECK(fs::exists(run + "/config.json"));
  CHECK(fs::exists(run + "/best.ckpt"));
  CHECK(fs::exists(run + "/last.ckpt"));
  CHECK(fs::exists(run + "/metrics.jsonl"));
  CHECK(slurp_json(run + "/config.json").at("d_m") == 8);

  const std::string preds = dir + "/p.json";
  const std::string graphs = dir + "/g.json";
  auto predict = run_cli(dir, "predict --ckpt " + run + "/last.ckpt --corpus " +
                                  corpus + " --out " + preds +
                                  " --dump-graphs " + graphs);
  CHECK(predict.code == 0);
  const auto pj = slurp_json(preds);
  REQUIRE(pj.is_array());
  CHECK(pj.size() == 10);
  CHECK(pj[0].contains("doc_id"));
  const auto gj = slurp_json(graphs);
  REQUIRE(gj.is_array());
  CHECK(gj.size() == 10);
  CHECK(gj[0].contains("graph"));

  const std::string report = dir + "/r.json";
  auto eval = run_cli(dir, "eval --corpus " + corpus + " --schema " + schema +
                               " --preds " + preds + " --out " + report);
  CHECK(eval.code == 0);
  CHECK(eval.output.find("entity") != std::string::npos);
  CHECK(eval.output.find("record") != std::string::npos);
  CHECK(eval.output.find("bucket1") != std::string::npos);
  const auto rj = slurp_json(report);
  CHECK(rj.contains("record"));
  CHECK(rj.contains("buckets"));

  // Training without a dev set reports epochs instead of a best checkpoint.
  auto nodev = run_cli(dir, "train --corpus " + corpus + " --schema " + schema +
                                " --out " + dir + "/run2 --set epochs=1" + kTinyModel);
  CHECK(nodev.code == 0);
  CHECK(nodev.output.find("no dev set") != std::string::npos);

  fs::remove_all(dir);
}

TEST_CASE("unreadable inputs exit with the io code") {
  const std::string dir = tmp_dir("docee_cli_io");
  const std::string schema = dir + "/s.json";
  run_cli(dir, "synth --out " + dir + "/c.json --schema-out " + schema + " --docs 2");

  auto train = run_cli(dir, "train --corpus " + dir + "/missing.json --schema " +
                                schema + " --out " + dir + "/run");
  CHECK(train.code == 2);
  CHECK(train.output.find("io error") != std::string::npos);

  auto predict = run_cli(dir, "predict --ckpt " + dir + "/missing.ckpt --corpus " +
                                  dir + "/c.json --out " + dir + "/p.json");
  CHECK(predict.code == 2);

  auto eval = run_cli(dir, "eval --corpus " + dir + "/c.json --schema " + schema +
                               " --preds " + dir + "/missing.json");
  CHECK(eval.code == 2);

  // Valid path, invalid JSON inside.
  std::ofstream(dir + "/broken.json") << "{ not json";
  auto broken = run_cli(dir, "train --corpus " + dir + "/broken.json --schema " +
                                 schema + " --out " + dir + "/run");
  CHECK(broken.code == 2);
  fs::remove_all(dir);
}

TEST_CASE("structural violations exit with the schema code") {
  const std::string dir = tmp_dir("docee_cli_schema");
  const std::string schema = dir + "/s.json";
  const std::string corpus = dir + "/c.json";
  run_cli(dir, "synth --out " + corpus + " --schema-out " + schema + " --docs 2");

  std::ofstream(dir + "/notarray.json") << "{\"docs\": 1}";
  auto notarray = run_cli(dir, "train --corpus " + dir + "/notarray.json --schema " +
                                   schema + " --out " + dir + "/run");
  CHECK(notarray.code == 3);
  CHECK(notarray.output.find("schema error") != std::string::npos);

  std::ofstream(dir + "/noid.json") << "[{\"sentences\": []}]";
  auto noid = run_cli(dir, "train --corpus " + dir + "/noid.json --schema " + schema +
                               " --out " + dir + "/run");
  CHECK(noid.code == 3);

  // Predictions that do not line up with the gold corpus.
  std::ofstream(dir + "/empty_preds.json") << "[]";
  auto misaligned = run_cli(dir, "eval --corpus " + corpus + " --schema " + schema +
                                     " --preds " + dir + "/empty_preds.json");
  CHECK(misaligned.code == 3);
  fs::remove_all(dir);
}

TEST_CASE("bad configuration exits with the config code") {
  const std::string dir = tmp_dir("docee_cli_config");
  const std::string schema = dir + "/s.json";
  const std::string corpus = dir + "/c.json";
  run_cli(dir, "synth --out " + corpus + " --schema-out " + schema + " --docs 2");
  const std::string base = "train --corpus " + corpus + " --schema " + schema +
                           " --out " + dir + "/run";

  auto unknown = run_cli(dir, base + " --set learning_rat=0.1");
  CHECK(unknown.code == 5);
  CHECK(unknown.output.find("config error") != std::string::npos);

  auto mode = run_cli(dir, base + " --set tracker_mode=bogus");
  CHECK(mode.code == 5);

  auto malformed = run_cli(dir, base + " --set no_equals_here");
  CHECK(malformed.code == 5);

  std::ofstream(dir + "/cfg.json") << "[1, 2]";
  auto nonobject = run_cli(dir, base + " --config " + dir + "/cfg.json");
  CHECK(nonobject.code == 5);
  fs::remove_all(dir);
}

TEST_CASE("usage errors come from the argument parser") {
  const std::string dir = tmp_dir("docee_cli_usage");

  auto help = run_cli(dir, "--help");
  CHECK(help.code == 0);
  CHECK(help.output.find("synth") != std::string::npos);
  CHECK(help.output.find("train") != std::string::npos);

  auto bare = run_cli(dir, "");
  CHECK(bare.code != 0);

  auto missing = run_cli(dir, "train");
  CHECK(missing.code != 0);
  CHECK(missing.code != 2);  // parser errors are not io/schema/config failures
  CHECK(missing.code != 3);
  CHECK(missing.code != 5);
  fs::remove_all(dir);
}
