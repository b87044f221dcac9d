#include "docee/evalkit/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <tuple>

#include "docee/util/errors.hpp"
#include "docee/util/logging.hpp"

namespace docee::evalkit {

namespace {

void check_aligned(const std::vector<corpus::Document>& gold,
                   const std::vector<DocPrediction>& pred) {
  if (gold.size() != pred.size())
    throw std::runtime_error("metrics: gold/pred document counts differ");
}

using Span = std::tuple<int, int, int, int>;  // sentence, start, end, kind

std::map<Span, long> span_counts(const std::vector<corpus::EntityMention>& ms) {
  std::map<Span, long> out;
  for (const auto& m : ms)
    ++out[Span{m.sentence_index, m.start, m.end, m.kind}];
  return out;
}

long agreement(const corpus::EventRecord& a, const corpus::EventRecord& b) {
  long n = 0;
  for (std::size_t r = 0; r < a.args.size(); ++r)
    if (a.args[r].second && b.args[r].second &&
        *a.args[r].second == *b.args[r].second)
      ++n;
  return n;
}

long filled(const corpus::EventRecord& r) {
  long n = 0;
  for (const auto& [_, v] : r.args)
    if (v) ++n;
  return n;
}

// Greedy pairing of same-type records, then role-level accounting.
Prf score_type_group(const std::vector<const corpus::EventRecord*>& preds,
                     const std::vector<const corpus::EventRecord*>& golds) {
  Prf out;
  std::vector<bool> p_used(preds.size(), false), g_used(golds.size(), false);
  std::size_t open = std::min(preds.size(), golds.size());
  while (open > 0) {
    long best_score = -1, best_filled = 0;
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (p_used[i]) continue;
      for (std::size_t j = 0; j < golds.size(); ++j) {
        if (g_used[j]) continue;
        const long s = agreement(*preds[i], *golds[j]);
        const long f = filled(*preds[i]) + filled(*golds[j]);
        if (s > best_score || (s == best_score && f < best_filled)) {
          best_score = s;
          best_filled = f;
          bi = i;
          bj = j;
        }
      }
    }
    p_used[bi] = g_used[bj] = true;
    --open;
    const auto& p = *preds[bi];
    const auto& g = *golds[bj];
    for (std::size_t r = 0; r < g.args.size(); ++r) {
      const auto& pv = p.args[r].second;
      const auto& gv = g.args[r].second;
      if (pv && gv && *pv == *gv) ++out.tp;
      else {
        if (pv) ++out.fp;
        if (gv) ++out.fn;
      }
    }
  }
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (!p_used[i]) out.fp += filled(*preds[i]);
  for (std::size_t j = 0; j < golds.size(); ++j)
    if (!g_used[j]) out.fn += filled(*golds[j]);
  return out;
}

}  // namespace

Prf entity_prf(const std::vector<corpus::Document>& gold,
               const std::vector<DocPrediction>& pred) {
  check_aligned(gold, pred);
  Prf out;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    auto g = span_counts(gold[d].gold_mentions);
    auto p = span_counts(pred[d].mentions);
    for (const auto& [span, np] : p) {
      auto it = g.find(span);
      const long ng = it == g.end() ? 0 : it->second;
      out.tp += std::min(np, ng);
      out.fp += std::max(0L, np - ng);
    }
    for (const auto& [span, ng] : g) {
      auto it = p.find(span);
      const long np = it == p.end() ? 0 : it->second;
      out.fn += std::max(0L, ng - np);
    }
  }
  return out;
}

Prf type_prf(const std::vector<corpus::Document>& gold,
             const std::vector<DocPrediction>& pred) {
  check_aligned(gold, pred);
  Prf out;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    for (const auto& t : pred[d].types)
      gold[d].gold_types.count(t) ? ++out.tp : ++out.fp;
    for (const auto& t : gold[d].gold_types)
      if (!pred[d].types.count(t)) ++out.fn;
  }
  return out;
}

Prf record_prf_doc(const corpus::Document& gold, const DocPrediction& pred) {
  // Group records by type; grouping preserves input order within a type.
  std::map<std::string, std::vector<const corpus::EventRecord*>> by_type_p, by_type_g;
  for (const auto& r : pred.records) by_type_p[r.event_type].push_back(&r);
  for (const auto& r : gold.gold_records) by_type_g[r.event_type].push_back(&r);

  Prf out;
  std::set<std::string> types;
  for (const auto& [t, _] : by_type_p) types.insert(t);
  for (const auto& [t, _] : by_type_g) types.insert(t);
  static const std::vector<const corpus::EventRecord*> none;
  for (const auto& t : types) {
    const auto& ps = by_type_p.count(t) ? by_type_p.at(t) : none;
    const auto& gs = by_type_g.count(t) ? by_type_g.at(t) : none;
    out += score_type_group(ps, gs);
  }
  return out;
}

Prf record_prf(const std::vector<corpus::Document>& gold,
               const std::vector<DocPrediction>& pred) {
  check_aligned(gold, pred);
  Prf out;
  for (std::size_t d = 0; d < gold.size(); ++d)
    out += record_prf_doc(gold[d], pred[d]);
  return out;
}

std::set<int> involved_sentences(const corpus::Document& doc,
                                 const corpus::EventRecord& rec) {
  std::set<int> out;
  for (const auto& [_, v] : rec.args) {
    if (!v) continue;
    for (const auto& m : doc.gold_mentions)
      if (m.surface == *v) out.insert(m.sentence_index);
  }
  return out;
}

std::vector<BucketRow> bucket_report(const std::vector<corpus::Document>& gold,
                                     const std::vector<DocPrediction>& pred,
                                     int buckets) {
  check_aligned(gold, pred);
  if (buckets < 1) throw std::runtime_error("metrics: buckets must be >= 1");

  std::vector<std::pair<double, std::size_t>> scored;  // (avg involved, doc idx)
  for (std::size_t d = 0; d < gold.size(); ++d) {
    if (gold[d].gold_records.empty()) {
      log::info("metrics: doc " + gold[d].doc_id + " has no gold records; excluded from buckets");
      continue;
    }
    double sum = 0.0;
    for (const auto& r : gold[d].gold_records)
      sum += double(involved_sentences(gold[d], r).size());
    scored.emplace_back(sum / double(gold[d].gold_records.size()), d);
  }
  // Equal averages order by doc_id so bucket membership does not depend on
  // the order documents arrive in.
  std::stable_sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return gold[a.second].doc_id < gold[b.second].doc_id;
  });

  const std::size_t n = scored.size();
  const std::size_t nb = static_cast<std::size_t>(buckets);
  const std::size_t base = n / nb, rem = n % nb;
  std::vector<BucketRow> rows;
  std::size_t at = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    // Remainder documents join the later buckets.
    const std::size_t take = base + (b >= nb - rem ? 1 : 0);
    BucketRow row;
    row.docs = take;
    if (take > 0) {
      row.lo = scored[at].first;
      row.hi = scored[at + take - 1].first;
      for (std::size_t i = 0; i < take; ++i) {
        const std::size_t d = scored[at + i].second;
        row.prf += record_prf_doc(gold[d], pred[d]);
      }
    }
    at += take;
    rows.push_back(row);
  }
  return rows;
}

SingleMultiReport single_multi_report(const std::vector<corpus::Document>& gold,
                                      const std::vector<DocPrediction>& pred) {
  check_aligned(gold, pred);
  SingleMultiReport rep;
  for (std::size_t d = 0; d < gold.size(); ++d) {
    const std::size_t n = gold[d].gold_records.size();
    if (n == 0) continue;
    if (n == 1) {
      ++rep.n_single;
      rep.single_doc += record_prf_doc(gold[d], pred[d]);
    } else {
      ++rep.n_multi;
      rep.multi_doc += record_prf_doc(gold[d], pred[d]);
    }
  }
  return rep;
}

MetricReport evaluate(const std::vector<corpus::Document>& gold,
                      const std::vector<DocPrediction>& pred) {
  MetricReport r;
  r.entity = entity_prf(gold, pred);
  r.type = type_prf(gold, pred);
  r.record = record_prf(gold, pred);
  r.single_multi = single_multi_report(gold, pred);
  r.buckets = bucket_report(gold, pred);
  return r;
}

namespace {
nlohmann::ordered_json prf_json(const Prf& p) {
  return {{"tp", p.tp},        {"fp", p.fp},          {"fn", p.fn},
          {"precision", p.precision()}, {"recall", p.recall()}, {"f1", p.f1()}};
}
}  // namespace

nlohmann::ordered_json report_to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["entity"] = prf_json(r.entity);
  j["type"] = prf_json(r.type);
  j["record"] = prf_json(r.record);
  j["single_multi"] = {{"n_single", r.single_multi.n_single},
                       {"n_multi", r.single_multi.n_multi},
                       {"single", prf_json(r.single_multi.single_doc)},
                       {"multi", prf_json(r.single_multi.multi_doc)}};
  j["buckets"] = nlohmann::ordered_json::array();
  for (const auto& b : r.buckets)
    j["buckets"].push_back({{"docs", b.docs},
                            {"lo", b.lo},
                            {"hi", b.hi},
                            {"prf", prf_json(b.prf)}});
  return j;
}

nlohmann::ordered_json predictions_to_json(const std::vector<corpus::Document>& docs,
                                           const std::vector<DocPrediction>& preds) {
  check_aligned(docs, preds);
  auto out = nlohmann::ordered_json::array();
  for (std::size_t d = 0; d < docs.size(); ++d) {
    nlohmann::ordered_json j;
    j["doc_id"] = docs[d].doc_id;
    j["mentions"] = nlohmann::ordered_json::array();
    for (const auto& m : preds[d].mentions) {
      nlohmann::ordered_json mj{{"sent", m.sentence_index},
                                {"start", m.start},
                                {"end", m.end},
                                {"surface", m.surface}};
      if (m.kind != 0) mj["kind"] = m.kind;
      j["mentions"].push_back(std::move(mj));
    }
    j["types"] = preds[d].types;
    j["records"] = nlohmann::ordered_json::array();
    for (const auto& r : preds[d].records) {
      nlohmann::ordered_json rj;
      rj["type"] = r.event_type;
      rj["args"] = nlohmann::ordered_json::object();
      for (const auto& [role, v] : r.args)
        rj["args"][role] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
      j["records"].push_back(std::move(rj));
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<DocPrediction> predictions_from_json(const nlohmann::json& j,
                                                 const corpus::EventSchema& schema,
                                                 const std::vector<corpus::Document>& docs) {
  if (!j.is_array() || j.size() != docs.size())
    throw SchemaError("predictions: expected one entry per document");
  std::vector<DocPrediction> preds;
  preds.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& pj = j.at(d);
    if (pj.at("doc_id").get<std::string>() != docs[d].doc_id)
      throw SchemaError("predictions: doc_id order does not match the corpus");
    DocPrediction p;
    for (const auto& mj : pj.at("mentions")) {
      corpus::EntityMention m;
      m.sentence_index = mj.at("sent").get<int>();
      m.start = mj.at("start").get<int>();
      m.end = mj.at("end").get<int>();
      m.surface = mj.at("surface").get<std::string>();
      if (mj.contains("kind")) m.kind = mj.at("kind").get<int>();
      p.mentions.push_back(std::move(m));
    }
    for (const auto& t : pj.at("types")) p.types.insert(t.get<std::string>());
    for (const auto& rj : pj.at("records")) {
      corpus::EventRecord rec;
      rec.event_type = rj.at("type").get<std::string>();
      auto it = schema.roles.find(rec.event_type);
      if (it == schema.roles.end())
        throw SchemaError("predictions: unknown event type " + rec.event_type);
      for (const auto& role : it->second) {
        std::optional<std::string> v;
        if (rj.at("args").contains(role) && !rj.at("args").at(role).is_null())
          v = rj.at("args").at(role).get<std::string>();
        rec.args.emplace_back(role, v);
      }
      p.records.push_back(std::move(rec));
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

std::string report_to_text(const MetricReport& r) {
  char line[160];
  std::string out;
  auto row = [&](const std::string& name, const Prf& p) {
    std::snprintf(line, sizeof line, "%-16s P %7.4f  R %7.4f  F1 %7.4f  (tp %ld fp %ld fn %ld)\n",
                  name.c_str(), p.precision(), p.recall(), p.f1(), p.tp, p.fp, p.fn);
    out += line;
  };
  row("entity", r.entity);
  row("type", r.type);
  row("record", r.record);
  row("single(" + std::to_string(r.single_multi.n_single) + ")", r.single_multi.single_doc);
  row("multi(" + std::to_string(r.single_multi.n_multi) + ")", r.single_multi.multi_doc);
  for (std::size_t b = 0; b < r.buckets.size(); ++b) {
    std::snprintf(line, sizeof line, "bucket%zu [%4.1f,%4.1f] (%zu docs)", b + 1,
                  r.buckets[b].lo, r.buckets[b].hi, r.buckets[b].docs);
    row(line, r.buckets[b].prf);
  }
  return out;
}

}  // namespace docee::evalkit
