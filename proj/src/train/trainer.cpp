#include "docee/train/trainer.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "docee/train/checkpoint.hpp"
#include "docee/util/errors.hpp"
#include "docee/util/logging.hpp"

namespace docee::train {

namespace {

nlohmann::ordered_json epoch_json(const EpochLog& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["ss_fraction"] = e.ss_fraction;
  j["loss_total"] = e.loss_total;
  j["loss_ner"] = e.loss_ner;
  j["loss_detect"] = e.loss_detect;
  j["loss_record"] = e.loss_record;
  j["ss_unmatched"] = e.ss_unmatched;
  j["dev_entity_f1"] = e.dev_entity_f1;
  j["dev_type_f1"] = e.dev_type_f1;
  j["dev_record_f1"] = e.dev_record_f1;
  return j;
}

}  // namespace

TrainResult train_model(Model& model, const std::vector<corpus::Document>& train_docs,
                        const std::vector<corpus::Document>& dev_docs,
                        const std::string& out_dir) {
  if (train_docs.empty()) throw ConfigError("trainer: no training documents");
  const TrainConfig& cfg = model.config();

  std::ofstream metrics;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    metrics.open(out_dir + "/metrics.jsonl", std::ios::trunc);
    if (!metrics) throw IoError("cannot open " + out_dir + "/metrics.jsonl");
  }

  Rng order_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Rng ss_rng(cfg.seed ^ 0x517cc1b727220a95ULL);
  Rng dropout_rng(cfg.seed ^ 0x2545f4914f6cdd1dULL);

  const ad::AdamConfig adam{cfg.lr, 0.9, 0.999, 1e-8};
  TrainResult result;

  std::vector<std::size_t> order(train_docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochLog log_row;
    log_row.epoch = epoch;
    log_row.ss_fraction =
        scheduled_sampling_fraction(epoch, cfg.ss_start, cfg.ss_end);
    order_rng.shuffle(order);

    int in_batch = 0;
    for (std::size_t idx : order) {
      const bool use_pred = ss_rng.bernoulli(log_row.ss_fraction);
      LossParts parts = model.train_step(train_docs[idx], use_pred, dropout_rng);
      log_row.loss_total += parts.total;
      log_row.loss_ner += parts.ner;
      log_row.loss_detect += parts.detect;
      log_row.loss_record += parts.record;
      log_row.ss_unmatched += parts.ss_unmatched;
      if (++in_batch == cfg.batch_size) {
        model.store().adam_step(adam, 1.0 / in_batch);
        in_batch = 0;
      }
    }
    if (in_batch > 0) model.store().adam_step(adam, 1.0 / in_batch);

    const double n = double(train_docs.size());
    log_row.loss_total /= n;
    log_row.loss_ner /= n;
    log_row.loss_detect /= n;
    log_row.loss_record /= n;

    if (!dev_docs.empty()) {
      std::vector<evalkit::DocPrediction> preds;
      preds.reserve(dev_docs.size());
      for (const auto& d : dev_docs) preds.push_back(model.predict(d));
      log_row.dev_entity_f1 = evalkit::entity_prf(dev_docs, preds).f1();
      log_row.dev_type_f1 = evalkit::type_prf(dev_docs, preds).f1();
      log_row.dev_record_f1 = evalkit::record_prf(dev_docs, preds).f1();
      if (log_row.dev_record_f1 > result.best_dev_record_f1 ||
          result.best_epoch < 0) {
        result.best_epoch = epoch;
        result.best_dev_record_f1 = log_row.dev_record_f1;
        if (!out_dir.empty()) save_checkpoint(out_dir + "/best.ckpt", model);
      }
    }

    if (metrics.is_open()) metrics << epoch_json(log_row).dump() << "\n";
    log::info("epoch " + std::to_string(epoch) + " loss " +
              std::to_string(log_row.loss_total) + " dev record F1 " +
              std::to_string(log_row.dev_record_f1));
    result.history.push_back(log_row);
  }

  if (!out_dir.empty()) save_checkpoint(out_dir + "/last.ckpt", model);
  return result;
}

}  // namespace docee::train
