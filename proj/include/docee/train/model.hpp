#pragma once

#include <string>
#include <vector>

#include "docee/corpus/bio.hpp"
#include "docee/corpus/types.hpp"
#include "docee/detect/detector.hpp"
#include "docee/encoder/encoder.hpp"
#include "docee/evalkit/metrics.hpp"
#include "docee/hetgraph/graph.hpp"
#include "docee/ner/crf.hpp"
#include "docee/recdec/decoder.hpp"
#include "docee/train/config.hpp"

namespace docee::train {

struct LossParts {
  double ner = 0.0, detect = 0.0, record = 0.0, total = 0.0;
  int ss_unmatched = 0;       // gold args with no candidate entity, forced to NA
  bool used_pred_mentions = false;
};

// The full pipeline over one document: sentence encoder -> CRF entity head ->
// document graph + relational GCN -> type detector -> record decoder.
class Model {
 public:
  Model(const TrainConfig& cfg, corpus::EventSchema schema, enc::Vocab vocab,
        int ner_kinds = 1);

  const TrainConfig& config() const { return cfg_; }
  const corpus::EventSchema& schema() const { return schema_; }
  const enc::Vocab& vocab() const { return vocab_; }
  int ner_kinds() const { return scheme_.kinds; }
  ad::ParamStore& store() { return store_; }
  const ad::ParamStore& store() const { return store_; }

  // Weighted loss with backward pass; gradients accumulate into the store.
  // With use_pred_mentions the graph is built from the CRF's own decoded
  // mentions instead of the gold ones (scheduled sampling).
  LossParts train_step(const corpus::Document& doc, bool use_pred_mentions,
                       Rng& rng);

  // Forward-only loss (no gradients); used for dev monitoring and tests.
  LossParts eval_loss(const corpus::Document& doc);

  // End-to-end prediction with dropout disabled.
  evalkit::DocPrediction predict(const corpus::Document& doc);

  // Document graph over the gold mentions (corpus tooling / dumps).
  graph::Graph gold_graph(const corpus::Document& doc) const;

 private:
  LossParts run_loss(const corpus::Document& doc, bool use_pred_mentions,
                     bool train, Rng& rng, ad::ParamUse& p, ad::Var* total_out);

  std::vector<int> token_ids(const std::vector<std::string>& sentence) const;
  std::vector<corpus::EntityMention> predict_mentions(
      const std::vector<ad::Var>& reps, const corpus::Document& doc) const;

  TrainConfig cfg_;
  corpus::EventSchema schema_;
  enc::Vocab vocab_;
  corpus::BioScheme scheme_;
  ad::ParamStore store_;
  Rng init_rng_;  // parameter initialization stream
  enc::Encoder encoder_;
  ner::CrfHead crf_;
  graph::HetGcn gcn_;
  detect::TypeDetector detector_;
  recdec::RecordDecoder recdec_;
  recdec::TrackerMode mode_;
};

}  // namespace docee::train
