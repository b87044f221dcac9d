#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "docee/hetgraph/graph.hpp"

namespace docee::train {

// Full run configuration. JSON holds any subset of the keys; the rest keep
// these desk-scale defaults. Unknown keys are rejected.
struct TrainConfig {
  // model dimensions
  int d_m = 32;
  int enc_layers = 2;
  int heads = 2;
  int d_ff = 64;
  int max_len = 128;
  int gcn_layers = 2;
  int max_sentences = 64;
  int dec_layers = 2;
  double dropout = 0.1;

  // decoding
  double tau_type = 0.5;
  double tau_role = 0.5;
  int b_max = 6;
  std::string tracker_mode = "full";
  graph::EdgeMask edge_types = graph::kAllEdges;

  // loss weights: ner, detect, record
  double lambda_ner = 0.05;
  double lambda_detect = 1.0;
  double lambda_record = 1.0;

  // optimization
  double lr = 1e-4;
  int epochs = 30;
  int batch_size = 8;
  std::uint64_t seed = 7;

  // scheduled sampling window (epochs)
  int ss_start = 10;
  int ss_end = 20;
};

TrainConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const TrainConfig& c);

TrainConfig load_config(const std::string& path);

// Applies one "key=value" override onto a config JSON object. The value is
// parsed as JSON when possible, otherwise taken as a string.
void apply_override(nlohmann::ordered_json& j, const std::string& assignment);

// 0 before ss_start, 1 at/after ss_end, linear in between.
double scheduled_sampling_fraction(int epoch, int ss_start, int ss_end);

}  // namespace docee::train
