#include "docee/train/config.hpp"

#include <fstream>
#include <set>

#include "docee/recdec/decoder.hpp"
#include "docee/util/errors.hpp"

namespace docee::train {

namespace {

const std::set<std::string> kKeys = {
    "d_m",        "enc_layers", "heads",        "d_ff",       "max_len",
    "gcn_layers", "max_sentences", "dec_layers", "dropout",
    "tau_type",   "tau_role",   "b_max",        "tracker_mode", "edge_types",
    "lambda_ner", "lambda_detect", "lambda_record",
    "lr",         "epochs",     "batch_size",   "seed",
    "ss_start",   "ss_end"};

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

TrainConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");

  TrainConfig c;
  read(j, "d_m", c.d_m);
  read(j, "enc_layers", c.enc_layers);
  read(j, "heads", c.heads);
  read(j, "d_ff", c.d_ff);
  read(j, "max_len", c.max_len);
  read(j, "gcn_layers", c.gcn_layers);
  read(j, "max_sentences", c.max_sentences);
  read(j, "dec_layers", c.dec_layers);
  read(j, "dropout", c.dropout);
  read(j, "tau_type", c.tau_type);
  read(j, "tau_role", c.tau_role);
  read(j, "b_max", c.b_max);
  read(j, "tracker_mode", c.tracker_mode);
  read(j, "lambda_ner", c.lambda_ner);
  read(j, "lambda_detect", c.lambda_detect);
  read(j, "lambda_record", c.lambda_record);
  read(j, "lr", c.lr);
  read(j, "epochs", c.epochs);
  read(j, "batch_size", c.batch_size);
  read(j, "seed", c.seed);
  read(j, "ss_start", c.ss_start);
  read(j, "ss_end", c.ss_end);

  if (j.contains("edge_types")) {
    if (!j.at("edge_types").is_array())
      throw ConfigError("config key 'edge_types' must be a list of edge type names");
    c.edge_types = {false, false, false, false};
    for (const auto& e : j.at("edge_types")) {
      const std::string name = e.get<std::string>();
      bool known = false;
      for (int k = 0; k < graph::kNumEdgeTypes; ++k)
        if (name == graph::edge_type_name(static_cast<graph::EdgeType>(k))) {
          c.edge_types[static_cast<std::size_t>(k)] = true;
          known = true;
        }
      if (!known) throw ConfigError("unknown edge type '" + name + "'");
    }
  }

  // value sanity
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("config: " + msg);
  };
  require(c.d_m >= 1, "d_m must be >= 1");
  require(c.enc_layers >= 0, "enc_layers must be >= 0");
  require(c.heads >= 1 && c.d_m % c.heads == 0, "heads must divide d_m");
  require(c.d_ff >= 1, "d_ff must be >= 1");
  require(c.max_len >= 1, "max_len must be >= 1");
  require(c.gcn_layers >= 0, "gcn_layers must be >= 0");
  require(c.max_sentences >= 1, "max_sentences must be >= 1");
  require(c.dec_layers >= 0, "dec_layers must be >= 0");
  require(c.dropout >= 0.0 && c.dropout < 1.0, "dropout must lie in [0,1)");
  require(c.tau_type > 0.0 && c.tau_type < 1.0, "tau_type must lie in (0,1)");
  require(c.tau_role > 0.0 && c.tau_role < 1.0, "tau_role must lie in (0,1)");
  require(c.b_max >= 1, "b_max must be >= 1");
  require(c.lr > 0.0, "lr must be > 0");
  require(c.epochs >= 0, "epochs must be >= 0");
  require(c.batch_size >= 1, "batch_size must be >= 1");
  require(c.ss_start >= 0 && c.ss_end >= c.ss_start,
          "scheduled sampling window needs 0 <= ss_start <= ss_end");
  recdec::mode_from_string(c.tracker_mode);  // validates
  return c;
}

nlohmann::ordered_json config_to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["d_m"] = c.d_m;
  j["enc_layers"] = c.enc_layers;
  j["heads"] = c.heads;
  j["d_ff"] = c.d_ff;
  j["max_len"] = c.max_len;
  j["gcn_layers"] = c.gcn_layers;
  j["max_sentences"] = c.max_sentences;
  j["dec_layers"] = c.dec_layers;
  j["dropout"] = c.dropout;
  j["tau_type"] = c.tau_type;
  j["tau_role"] = c.tau_role;
  j["b_max"] = c.b_max;
  j["tracker_mode"] = c.tracker_mode;
  auto edges = nlohmann::ordered_json::array();
  for (int k = 0; k < graph::kNumEdgeTypes; ++k)
    if (c.edge_types[static_cast<std::size_t>(k)])
      edges.push_back(graph::edge_type_name(static_cast<graph::EdgeType>(k)));
  j["edge_types"] = edges;
  j["lambda_ner"] = c.lambda_ner;
  j["lambda_detect"] = c.lambda_detect;
  j["lambda_record"] = c.lambda_record;
  j["lr"] = c.lr;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["ss_start"] = c.ss_start;
  j["ss_end"] = c.ss_end;
  return j;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("invalid JSON in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_override(nlohmann::ordered_json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  auto parsed = nlohmann::ordered_json::parse(raw, nullptr, false);
  if (parsed.is_discarded()) parsed = raw;  // plain string value
  j[key] = parsed;
}

double scheduled_sampling_fraction(int epoch, int ss_start, int ss_end) {
  if (ss_start < 0 || ss_end < ss_start)
    throw ConfigError("scheduled sampling window needs 0 <= ss_start <= ss_end");
  if (epoch < ss_start) return 0.0;
  if (epoch >= ss_end) return 1.0;
  return double(epoch - ss_start) / double(ss_end - ss_start);
}

}  // namespace docee::train
