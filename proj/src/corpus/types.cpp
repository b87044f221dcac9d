#include "docee/corpus/types.hpp"

#include <algorithm>

#include "docee/util/errors.hpp"

namespace docee::corpus {

int EventSchema::type_index(const std::string& type) const {
  for (std::size_t i = 0; i < types.size(); ++i)
    if (types[i] == type) return static_cast<int>(i);
  return -1;
}

int EventSchema::total_roles() const {
  int n = 0;
  for (const auto& [t, rs] : roles) n += static_cast<int>(rs.size());
  return n;
}

namespace {

[[noreturn]] void fail(const std::string& doc_id, const std::string& what) {
  throw SchemaError("document " + doc_id + ": " + what);
}

}  // namespace

void validate_document(const Document& doc, const EventSchema& schema) {
  if (doc.sentences.empty()) fail(doc.doc_id, "sentences: must contain at least one sentence");
  for (std::size_t s = 0; s < doc.sentences.size(); ++s)
    if (doc.sentences[s].empty())
      fail(doc.doc_id, "sentences[" + std::to_string(s) + "]: empty sentence");

  for (const EntityMention& m : doc.gold_mentions) {
    if (m.sentence_index < 0 || m.sentence_index >= static_cast<int>(doc.sentences.size()))
      fail(doc.doc_id, "mention: sentence index " + std::to_string(m.sentence_index) +
                           " out of range");
    const auto& sent = doc.sentences[static_cast<std::size_t>(m.sentence_index)];
    if (m.start < 0 || m.start >= m.end || m.end > static_cast<int>(sent.size()))
      fail(doc.doc_id, "mention: span [" + std::to_string(m.start) + ", " +
                           std::to_string(m.end) + ") out of bounds in sentence " +
                           std::to_string(m.sentence_index));
    std::string concat;
    for (int t = m.start; t < m.end; ++t) concat += sent[static_cast<std::size_t>(t)];
    if (concat != m.surface)
      fail(doc.doc_id, "mention: surface '" + m.surface + "' does not match covered tokens");
  }

  for (const std::string& type : doc.gold_types)
    if (schema.type_index(type) < 0) fail(doc.doc_id, "gold_types: unknown event type " + type);

  for (const EventRecord& rec : doc.gold_records) {
    auto it = schema.roles.find(rec.event_type);
    if (it == schema.roles.end())
      fail(doc.doc_id, "record: unknown event type " + rec.event_type);
    const auto& role_order = it->second;
    if (rec.args.size() != role_order.size())
      fail(doc.doc_id, "record of type " + rec.event_type + ": expected " +
                           std::to_string(role_order.size()) + " roles, got " +
                           std::to_string(rec.args.size()));
    for (std::size_t i = 0; i < role_order.size(); ++i)
      if (rec.args[i].first != role_order[i])
        fail(doc.doc_id, "record of type " + rec.event_type + ": role '" + rec.args[i].first +
                             "' out of schema order (expected '" + role_order[i] + "')");
    if (rec.filled_count() == 0)
      fail(doc.doc_id, "record of type " + rec.event_type + ": all roles are null");
    for (const auto& [role, value] : rec.args) {
      if (!value.has_value()) continue;
      const bool found = std::any_of(doc.gold_mentions.begin(), doc.gold_mentions.end(),
                                     [&](const EntityMention& m) { return m.surface == *value; });
      if (!found)
        fail(doc.doc_id, "record of type " + rec.event_type + ", role " + role + ": argument '" +
                             *value + "' matches no gold mention");
    }
    if (doc.gold_types.find(rec.event_type) == doc.gold_types.end())
      fail(doc.doc_id, "record type " + rec.event_type + " missing from gold_types");
  }
}

EventSchema chfinann_schema() {
  EventSchema s;
  s.types = {"EquityFreeze", "EquityRepurchase", "EquityUnderweight", "EquityOverweight",
             "EquityPledge"};
  s.roles["EquityFreeze"] = {"EquityHolder",       "FrozeShares",       "LegalInstitution",
                             "TotalHoldingShares", "TotalHoldingRatio", "StartDate",
                             "EndDate",            "UnfrozeDate"};
  s.roles["EquityRepurchase"] = {"CompanyName",       "HighestTradingPrice", "LowestTradingPrice",
                                 "RepurchasedShares", "ClosingDate",         "RepurchaseAmount"};
  s.roles["EquityUnderweight"] = {"EquityHolder",       "TradedShares", "StartDate",
                                  "EndDate",            "LaterHoldingShares", "AveragePrice"};
  s.roles["EquityOverweight"] = {"EquityHolder",       "TradedShares", "StartDate",
                                 "EndDate",            "LaterHoldingShares", "AveragePrice"};
  s.roles["EquityPledge"] = {"Pledger",           "PledgedShares",     "Pledgee",
                             "TotalHoldingShares", "TotalHoldingRatio", "TotalPledgedShares",
                             "StartDate",          "EndDate",           "ReleasedDate"};
  return s;
}

}  // namespace docee::corpus
