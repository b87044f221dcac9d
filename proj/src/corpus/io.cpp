#include "docee/corpus/io.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "docee/util/errors.hpp"

#include "docee/util/logging.hpp"

namespace docee::corpus {

using json = nlohmann::ordered_json;

namespace {

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw IoError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << j.dump(2) << "\n";
}

// Splits a UTF-8 string into codepoint tokens (the character-level
// tokenization used by the released corpus).
std::vector<std::string> utf8_chars(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if ((c & 0x80u) == 0x00u)
      len = 1;
    else if ((c & 0xE0u) == 0xC0u)
      len = 2;
    else if ((c & 0xF0u) == 0xE0u)
      len = 3;
    else if ((c & 0xF8u) == 0xF0u)
      len = 4;
    if (i + len > text.size()) len = 1;
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

}  // namespace

std::vector<Document> load_corpus(const std::string& path, const EventSchema& schema) {
  const json j = read_json_file(path);
  if (!j.is_array()) throw SchemaError(path + ": top level must be an array of documents");
  std::vector<Document> docs;
  docs.reserve(j.size());
  for (const json& dj : j) {
    Document doc;
    doc.doc_id = dj.value("doc_id", std::string{});
    if (doc.doc_id.empty()) throw SchemaError(path + ": document without doc_id");
    if (!dj.contains("sentences"))
      throw SchemaError("document " + doc.doc_id + ": missing sentences");
    for (const json& sj : dj.at("sentences")) {
      std::vector<std::string> sent;
      for (const json& tj : sj) sent.push_back(tj.get<std::string>());
      doc.sentences.push_back(std::move(sent));
    }
    for (const json& mj : dj.value("mentions", json::array())) {
      EntityMention m;
      m.sentence_index = mj.at("sent").get<int>();
      m.start = mj.at("start").get<int>();
      m.end = mj.at("end").get<int>();
      if (m.sentence_index < 0 || m.sentence_index >= static_cast<int>(doc.sentences.size()))
        throw SchemaError("document " + doc.doc_id + ": mention sentence out of range");
      const auto& sent = doc.sentences[static_cast<std::size_t>(m.sentence_index)];
      if (m.start < 0 || m.start >= m.end || m.end > static_cast<int>(sent.size()))
        throw SchemaError("document " + doc.doc_id + ": mention span out of bounds");
      for (int t = m.start; t < m.end; ++t) m.surface += sent[static_cast<std::size_t>(t)];
      m.kind = mj.value("kind", 0);
      doc.gold_mentions.push_back(std::move(m));
    }
    for (const json& tj : dj.value("event_types", json::array()))
      doc.gold_types.insert(tj.get<std::string>());
    for (const json& rj : dj.value("records", json::array())) {
      EventRecord rec;
      rec.event_type = rj.at("type").get<std::string>();
      const int ti = schema.type_index(rec.event_type);
      if (ti < 0)
        throw SchemaError("document " + doc.doc_id + ": unknown event type " +
                                 rec.event_type);
      const auto& role_order = schema.roles.at(rec.event_type);
      const json& aj = rj.at("args");
      for (const auto& [role, value] : aj.items()) {
        if (std::find(role_order.begin(), role_order.end(), role) == role_order.end())
          throw SchemaError("document " + doc.doc_id + ": role '" + role +
                                   "' not in schema for type " + rec.event_type);
      }
      for (const std::string& role : role_order) {
        if (!aj.contains(role))
          throw SchemaError("document " + doc.doc_id + ": record of type " +
                                   rec.event_type + " missing role " + role);
        const json& v = aj.at(role);
        rec.args.emplace_back(role, v.is_null() ? std::nullopt
                                                : std::optional<std::string>(v.get<std::string>()));
      }
      doc.gold_records.push_back(std::move(rec));
    }
    validate_document(doc, schema);
    docs.push_back(std::move(doc));
  }
  return docs;
}

void save_corpus(const std::string& path, const std::vector<Document>& docs) {
  json j = json::array();
  for (const Document& doc : docs) {
    json dj;
    dj["doc_id"] = doc.doc_id;
    json sents = json::array();
    for (const auto& sent : doc.sentences) sents.push_back(sent);
    dj["sentences"] = std::move(sents);
    json mentions = json::array();
    for (const EntityMention& m : doc.gold_mentions) {
      json mj;
      mj["sent"] = m.sentence_index;
      mj["start"] = m.start;
      mj["end"] = m.end;
      if (m.kind != 0) mj["kind"] = m.kind;
      mentions.push_back(std::move(mj));
    }
    dj["mentions"] = std::move(mentions);
    dj["event_types"] = std::vector<std::string>(doc.gold_types.begin(), doc.gold_types.end());
    json records = json::array();
    for (const EventRecord& rec : doc.gold_records) {
      json rj;
      rj["type"] = rec.event_type;
      json args;
      for (const auto& [role, value] : rec.args) {
        if (value.has_value())
          args[role] = *value;
        else
          args[role] = nullptr;
      }
      rj["args"] = std::move(args);
      records.push_back(std::move(rj));
    }
    dj["records"] = std::move(records);
    j.push_back(std::move(dj));
  }
  write_json_file(path, j);
}

EventSchema load_schema(const std::string& path) {
  const json j = read_json_file(path);
  EventSchema schema;
  for (const json& tj : j.at("types")) schema.types.push_back(tj.get<std::string>());
  for (const std::string& type : schema.types) {
    if (!j.at("roles").contains(type))
      throw SchemaError("schema " + path + ": no roles for type " + type);
    std::vector<std::string> rs;
    for (const json& rj : j.at("roles").at(type)) rs.push_back(rj.get<std::string>());
    if (rs.empty()) throw SchemaError("schema " + path + ": empty role list for " + type);
    schema.roles[type] = std::move(rs);
  }
  return schema;
}

void save_schema(const std::string& path, const EventSchema& schema) {
  json j;
  j["types"] = schema.types;
  json roles;
  for (const std::string& type : schema.types) roles[type] = schema.roles.at(type);
  j["roles"] = std::move(roles);
  write_json_file(path, j);
}

std::vector<Document> import_chfinann(const std::string& path) {
  const json j = read_json_file(path);
  if (!j.is_array()) throw SchemaError(path + ": top level must be an array");
  const EventSchema schema = chfinann_schema();
  std::vector<Document> docs;
  for (const json& entry : j) {
    if (!entry.is_array() || entry.size() != 2)
      throw SchemaError(path + ": each entry must be [doc_id, content]");
    Document doc;
    doc.doc_id = entry.at(0).get<std::string>();
    const json& content = entry.at(1);
    for (const json& sj : content.at("sentences"))
      doc.sentences.push_back(utf8_chars(sj.get<std::string>()));

    for (const auto& [span, ranges] : content.at("ann_mspan2dranges").items()) {
      for (const json& r : ranges) {
        EntityMention m;
        m.sentence_index = r.at(0).get<int>();
        m.start = r.at(1).get<int>();
        m.end = r.at(2).get<int>();
        if (m.sentence_index < 0 || m.sentence_index >= static_cast<int>(doc.sentences.size()) ||
            m.start < 0 || m.start >= m.end ||
            m.end > static_cast<int>(doc.sentences[static_cast<std::size_t>(m.sentence_index)].size())) {
          log::warn("import " + doc.doc_id + ": dropping mention '" + span +
                    "' with out-of-bounds span");
          continue;
        }
        for (int t = m.start; t < m.end; ++t)
          m.surface += doc.sentences[static_cast<std::size_t>(m.sentence_index)]
                                    [static_cast<std::size_t>(t)];
        if (m.surface != span) {
          log::warn("import " + doc.doc_id + ": span text mismatch for '" + span +
                    "', using covered tokens");
        }
        doc.gold_mentions.push_back(std::move(m));
      }
    }

    for (const json& rj : content.at("recguid_eventname_eventdict_list")) {
      EventRecord rec;
      rec.event_type = rj.at(1).get<std::string>();
      if (schema.type_index(rec.event_type) < 0)
        throw SchemaError("document " + doc.doc_id + ": unknown event type " +
                                 rec.event_type);
      const json& fields = rj.at(2);
      int resolvable = 0;
      for (const std::string& role : schema.roles.at(rec.event_type)) {
        std::optional<std::string> value;
        if (fields.contains(role) && !fields.at(role).is_null()) {
          const std::string surface = fields.at(role).get<std::string>();
          const bool resolves =
              std::any_of(doc.gold_mentions.begin(), doc.gold_mentions.end(),
                          [&](const EntityMention& m) { return m.surface == surface; });
          if (resolves) {
            value = surface;
            ++resolvable;
          } else {
            log::warn("import " + doc.doc_id + ": argument '" + surface + "' for role " + role +
                      " resolves to no mention; set to null");
          }
        }
        rec.args.emplace_back(role, std::move(value));
      }
      if (resolvable == 0)
        throw SchemaError("document " + doc.doc_id + ": record of type " + rec.event_type +
                                 " has zero resolvable arguments");
      doc.gold_types.insert(rec.event_type);
      doc.gold_records.push_back(std::move(rec));
    }

    validate_document(doc, schema);
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace docee::corpus
