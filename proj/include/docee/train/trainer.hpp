#pragma once

#include <string>
#include <vector>

#include "docee/train/model.hpp"

namespace docee::train {

struct EpochLog {
  int epoch = 0;
  double ss_fraction = 0.0;
  double loss_total = 0.0, loss_ner = 0.0, loss_detect = 0.0, loss_record = 0.0;
  int ss_unmatched = 0;
  double dev_entity_f1 = 0.0, dev_type_f1 = 0.0, dev_record_f1 = 0.0;
};

struct TrainResult {
  int best_epoch = -1;  // -1 when no dev set was given
  double best_dev_record_f1 = 0.0;
  std::vector<EpochLog> history;
};

// Trains in place. Per epoch: shuffled document order, per-document
// backward passes accumulated into batches, one Adam step per batch, then a
// dev evaluation. Model selection is by dev record F1 (strict improvement).
// With a non-empty out_dir, writes metrics.jsonl, best.ckpt (on improvement),
// and last.ckpt.
TrainResult train_model(Model& model, const std::vector<corpus::Document>& train_docs,
                        const std::vector<corpus::Document>& dev_docs,
                        const std::string& out_dir);

}  // namespace docee::train
