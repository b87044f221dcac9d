#pragma once

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "docee/corpus/types.hpp"

namespace docee::evalkit {

struct Prf {
  long tp = 0, fp = 0, fn = 0;
  double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
  }
  Prf& operator+=(const Prf& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
};

// One document's system output, aligned by index with the gold documents.
struct DocPrediction {
  std::vector<corpus::EntityMention> mentions;
  std::set<std::string> types;
  std::vector<corpus::EventRecord> records;
};

// Mention micro-P/R/F1 on exact (sentence, start, end, kind) matches.
Prf entity_prf(const std::vector<corpus::Document>& gold,
               const std::vector<DocPrediction>& pred);

// Event-type micro-P/R/F1 on the detected type sets.
Prf type_prf(const std::vector<corpus::Document>& gold,
             const std::vector<DocPrediction>& pred);

// Role-level record micro-P/R/F1. Within each (document, type), predictions
// and golds are greedily paired: highest count of agreeing non-null roles
// first, ties to the pair with fewer filled roles overall, then input order.
// Matched pairs score each role (TP agree, FP spurious, FN missed); leftover
// records contribute their filled roles wholesale.
Prf record_prf(const std::vector<corpus::Document>& gold,
               const std::vector<DocPrediction>& pred);

// Record scoring for a pair of single documents (used by the sliced reports).
Prf record_prf_doc(const corpus::Document& gold, const DocPrediction& pred);

// Documents sorted by the average involved-sentence count of their gold
// records and cut into `buckets` groups (remainder docs join the later
// buckets); documents without gold records are excluded (logged).
struct BucketRow {
  std::size_t docs = 0;
  double lo = 0.0, hi = 0.0;  // involved-sentence averages spanned
  Prf prf;
};
std::vector<BucketRow> bucket_report(const std::vector<corpus::Document>& gold,
                                     const std::vector<DocPrediction>& pred,
                                     int buckets = 4);

// Sentences involved in a gold record: every sentence holding a gold mention
// whose surface fills one of the record's non-null roles.
std::set<int> involved_sentences(const corpus::Document& doc,
                                 const corpus::EventRecord& rec);

struct SingleMultiReport {
  std::size_t n_single = 0, n_multi = 0;
  Prf single_doc;  // docs with exactly one gold record
  Prf multi_doc;   // docs with two or more
};
SingleMultiReport single_multi_report(const std::vector<corpus::Document>& gold,
                                      const std::vector<DocPrediction>& pred);

struct MetricReport {
  Prf entity, type, record;
  SingleMultiReport single_multi;
  std::vector<BucketRow> buckets;
};

MetricReport evaluate(const std::vector<corpus::Document>& gold,
                      const std::vector<DocPrediction>& pred);

nlohmann::ordered_json report_to_json(const MetricReport& r);
std::string report_to_text(const MetricReport& r);

// Prediction dump: array of {"doc_id", "mentions", "types", "records"},
// aligned with the documents it was produced from.
nlohmann::ordered_json predictions_to_json(const std::vector<corpus::Document>& docs,
                                           const std::vector<DocPrediction>& preds);
std::vector<DocPrediction> predictions_from_json(const nlohmann::json& j,
                                                 const corpus::EventSchema& schema,
                                                 const std::vector<corpus::Document>& docs);

}  // namespace docee::evalkit
