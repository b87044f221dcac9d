#include "docee/train/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "docee/util/errors.hpp"
#include "docee/util/logging.hpp"

namespace docee::train {

namespace {

std::vector<int> roles_per_type(const corpus::EventSchema& schema) {
  std::vector<int> out;
  for (const auto& t : schema.types)
    out.push_back(static_cast<int>(schema.roles.at(t).size()));
  return out;
}

}  // namespace

Model::Model(const TrainConfig& cfg, corpus::EventSchema schema, enc::Vocab vocab,
             int ner_kinds)
    : cfg_(cfg),
      schema_(std::move(schema)),
      vocab_(std::move(vocab)),
      scheme_{ner_kinds},
      store_(),
      init_rng_(cfg.seed),
      encoder_(store_, "enc",
               enc::EncoderConfig{cfg.d_m, cfg.enc_layers, cfg.heads, cfg.d_ff,
                                  cfg.max_len, cfg.dropout},
               vocab_.size(), init_rng_),
      crf_(store_, "ner", cfg.d_m, scheme_.num_labels(), init_rng_),
      gcn_(store_, "gcn", graph::GcnConfig{cfg.d_m, cfg.gcn_layers, cfg.max_sentences},
           init_rng_),
      detector_(store_, "detect",
                detect::DetectConfig{cfg.d_m, cfg.heads, cfg.tau_type},
                static_cast<int>(schema_.types.size()), init_rng_),
      recdec_(store_, "recdec",
              recdec::RecDecConfig{cfg.d_m, cfg.dec_layers, cfg.heads, cfg.d_ff,
                                   cfg.dropout, cfg.tau_role, cfg.b_max},
              static_cast<int>(schema_.types.size()), roles_per_type(schema_),
              init_rng_),
      mode_(recdec::mode_from_string(cfg.tracker_mode)) {
  if (schema_.types.empty()) throw ConfigError("model: schema has no event types");
  if (ner_kinds < 1) throw ConfigError("model: ner_kinds must be >= 1");
}

std::vector<int> Model::token_ids(const std::vector<std::string>& sentence) const {
  std::vector<int> ids;
  ids.reserve(sentence.size());
  for (const auto& t : sentence) ids.push_back(vocab_.id(t));
  return ids;
}

std::vector<corpus::EntityMention> Model::predict_mentions(
    const std::vector<ad::Var>& reps, const corpus::Document& doc) const {
  std::vector<std::vector<int>> labels;
  std::vector<std::vector<std::string>> sents = doc.sentences;
  for (std::size_t s = 0; s < reps.size(); ++s) {
    labels.push_back(crf_.viterbi(store_, reps[s].value()));
    sents[s].resize(labels.back().size());  // match encoder truncation
  }
  return ner::extract_mentions(labels, sents, scheme_).mentions;
}

graph::Graph Model::gold_graph(const corpus::Document& doc) const {
  return graph::build_graph(static_cast<int>(doc.sentences.size()),
                            corpus::to_bio(doc, scheme_).kept);
}

LossParts Model::run_loss(const corpus::Document& doc, bool use_pred_mentions,
                          bool train, Rng& rng, ad::ParamUse& p,
                          ad::Var* total_out) {
  ad::Tape& tape = p.tape();
  LossParts parts;
  parts.used_pred_mentions = use_pred_mentions;
  const double rate = train ? cfg_.dropout : 0.0;

  std::vector<ad::Var> reps;
  reps.reserve(doc.sentences.size());
  for (const auto& sent : doc.sentences)
    reps.push_back(encoder_.encode_sentence(p, token_ids(sent), train, rng));

  ad::Var total = tape.scalar_const(0.0);
  corpus::BioResult bio = corpus::to_bio(doc, scheme_);

  if (cfg_.lambda_ner != 0.0) {
    ad::Var nll = tape.scalar_const(0.0);
    for (std::size_t s = 0; s < reps.size(); ++s) {
      std::vector<int> labels = bio.labels[s];
      if (static_cast<long>(labels.size()) > reps[s].rows())
        labels.resize(static_cast<std::size_t>(reps[s].rows()));
      nll = ad::add(nll, crf_.nll(p, reps[s], labels));
    }
    parts.ner = nll.scalar();
    total = ad::add(total, ad::scale(nll, cfg_.lambda_ner));
  }

  const auto mentions = use_pred_mentions ? predict_mentions(reps, doc) : bio.kept;
  graph::Graph g =
      graph::build_graph(static_cast<int>(doc.sentences.size()), mentions);
  ad::Var nodes = gcn_.forward(p, g, gcn_.init_node_states(p, g, reps),
                               cfg_.edge_types);
  ad::Var sents = graph::sentence_states(g, nodes);

  if (cfg_.lambda_detect != 0.0) {
    std::vector<int> hot(schema_.types.size(), 0);
    for (const auto& t : doc.gold_types)
      hot[static_cast<std::size_t>(schema_.type_index(t))] = 1;
    ad::Var dl = detector_.loss(p, sents, hot);
    parts.detect = dl.scalar();
    total = ad::add(total, ad::scale(dl, cfg_.lambda_detect));
  }

  if (cfg_.lambda_record != 0.0 && !doc.gold_records.empty()) {
    if (g.clusters.empty()) {
      log::warn("model: doc " + doc.doc_id +
                " has no candidate entities; record loss skipped");
    } else {
      std::map<std::string, int> cluster_of;
      for (std::size_t i = 0; i < g.clusters.size(); ++i)
        cluster_of[g.clusters[i].surface] = static_cast<int>(i);

      std::map<int, std::vector<std::vector<int>>> by_type;
      for (const auto& rec : doc.gold_records) {
        std::vector<int> keys;
        for (const auto& [role, v] : rec.args) {
          if (!v) {
            keys.push_back(-1);
            continue;
          }
          auto it = cluster_of.find(*v);
          if (it == cluster_of.end()) {
            keys.push_back(-1);  // argument lost to the candidate set
            ++parts.ss_unmatched;
          } else {
            keys.push_back(it->second);
          }
        }
        by_type[schema_.type_index(rec.event_type)].push_back(std::move(keys));
      }
      std::vector<recdec::GoldType> gold;
      for (auto& [t, seqs] : by_type) gold.push_back({t, std::move(seqs)});

      ad::Var ents = graph::pool_entities(g, nodes);
      ad::Var rl = recdec_.loss(p, ents, sents, gold, mode_, rate, rng);
      parts.record = rl.scalar();
      total = ad::add(total, ad::scale(rl, cfg_.lambda_record));
    }
  }

  parts.total = total.scalar();
  if (!std::isfinite(parts.total))
    throw NanError("non-finite loss on document " + doc.doc_id);
  *total_out = total;
  return parts;
}

LossParts Model::train_step(const corpus::Document& doc, bool use_pred_mentions,
                            Rng& rng) {
  ad::Tape tape;
  ad::ParamUse p(tape, store_);
  ad::Var total;
  LossParts parts = run_loss(doc, use_pred_mentions, true, rng, p, &total);
  tape.backward(total);
  p.flush_grads();
  return parts;
}

LossParts Model::eval_loss(const corpus::Document& doc) {
  ad::Tape tape;
  ad::ParamUse p(tape, store_);
  Rng rng(0);  // dropout disabled; never drawn from
  ad::Var total;
  return run_loss(doc, false, false, rng, p, &total);
}

evalkit::DocPrediction Model::predict(const corpus::Document& doc) {
  ad::Tape tape;
  ad::ParamUse p(tape, store_);
  Rng rng(0);  // dropout disabled; never drawn from

  std::vector<ad::Var> reps;
  reps.reserve(doc.sentences.size());
  for (const auto& sent : doc.sentences)
    reps.push_back(encoder_.encode_sentence(p, token_ids(sent), false, rng));

  evalkit::DocPrediction out;
  out.mentions = predict_mentions(reps, doc);

  graph::Graph g =
      graph::build_graph(static_cast<int>(doc.sentences.size()), out.mentions);
  ad::Var nodes = gcn_.forward(p, g, gcn_.init_node_states(p, g, reps),
                               cfg_.edge_types);
  ad::Var sents = graph::sentence_states(g, nodes);

  ad::Var probs = detector_.type_probs(p, sents);
  std::vector<int> det = detect::detected_types(probs.value(), cfg_.tau_type);
  for (int t : det) out.types.insert(schema_.types[static_cast<std::size_t>(t)]);

  if (!g.clusters.empty() && !det.empty()) {
    ad::Var ents = graph::pool_entities(g, nodes);
    recdec::DecodeResult res = recdec_.decode(p, ents, sents, det, mode_);
    for (const auto& pr : res.records) {
      corpus::EventRecord rec;
      rec.event_type = schema_.types[static_cast<std::size_t>(pr.type)];
      const auto& roles = schema_.roles.at(rec.event_type);
      for (std::size_t r = 0; r < roles.size(); ++r) {
        std::optional<std::string> v;
        if (pr.args[r] >= 0)
          v = g.clusters[static_cast<std::size_t>(pr.args[r])].surface;
        rec.args.emplace_back(roles[r], v);
      }
      if (rec.filled_count() > 0)
        out.records.push_back(std::move(rec));
      else
        log::debug("model: dropped all-null record of type " + rec.event_type);
    }
  }
  return out;
}

}  // namespace docee::train
