#pragma once

#include <string>
#include <vector>

#include "docee/corpus/types.hpp"

namespace docee::corpus {

// Canonical corpus file: UTF-8 JSON, top-level array of
// {"doc_id", "sentences", "mentions", "event_types", "records"}.
std::vector<Document> load_corpus(const std::string& path, const EventSchema& schema);
void save_corpus(const std::string& path, const std::vector<Document>& docs);

// Schema file: {"types": [...], "roles": {type: [role, ...]}}.
EventSchema load_schema(const std::string& path);
void save_schema(const std::string& path, const EventSchema& schema);

// Converter for the released Chinese financial corpus layout:
// an array of [doc_id, {"sentences": [str, ...],
//                       "ann_mspan2dranges": {span: [[sent, start, end], ...]},
//                       "recguid_eventname_eventdict_list":
//                           [[guid, type, {role: span-or-null}], ...]}]
// entries. Sentences arrive as strings with character-level tokenization;
// they are split into Unicode codepoints, which is the tokenization the
// span offsets index into. Mentions with spans outside their sentence are
// dropped with a warning; a record whose arguments all fail to resolve is
// an error.
std::vector<Document> import_chfinann(const std::string& path);

}  // namespace docee::corpus
