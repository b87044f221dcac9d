#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace docee::corpus {

// One contiguous token span inside a sentence. `surface` is the exact
// concatenation of the covered tokens. `kind` is 0 for the plain BIO
// scheme; typed-BIO runs (off by default) give mentions a kind index.
struct EntityMention {
  int sentence_index = 0;
  int start = 0;  // half-open [start, end)
  int end = 0;
  std::string surface;
  int kind = 0;

  friend bool operator==(const EntityMention&, const EntityMention&) = default;
  friend auto operator<=>(const EntityMention& a, const EntityMention& b) {
    return std::tie(a.sentence_index, a.start, a.end, a.surface, a.kind) <=>
           std::tie(b.sentence_index, b.start, b.end, b.surface, b.kind);
  }
};

// Mentions sharing one exact surface string.
struct Entity {
  std::string surface;
  std::vector<EntityMention> mentions;
};

// One event instance: every role of the type appears in `args`,
// unfilled roles as std::nullopt.
struct EventRecord {
  std::string event_type;
  std::vector<std::pair<std::string, std::optional<std::string>>> args;  // schema role order

  const std::optional<std::string>* find_arg(const std::string& role) const {
    for (const auto& [r, v] : args)
      if (r == role) return &v;
    return nullptr;
  }
  int filled_count() const {
    int n = 0;
    for (const auto& [r, v] : args)
      if (v.has_value()) ++n;
    return n;
  }
};

struct EventSchema {
  std::vector<std::string> types;                          // decode order
  std::map<std::string, std::vector<std::string>> roles;   // per type, fixed role order

  int type_index(const std::string& type) const;
  int total_roles() const;
};

struct Document {
  std::string doc_id;
  std::vector<std::vector<std::string>> sentences;
  std::vector<EntityMention> gold_mentions;
  std::set<std::string> gold_types;
  std::vector<EventRecord> gold_records;
};

// Throws std::runtime_error naming doc_id and the offending field when an
// invariant does not hold.
void validate_document(const Document& doc, const EventSchema& schema);

// The five event types of the public Chinese financial corpus with their
// fixed role orders (35 role slots in total).
EventSchema chfinann_schema();

}  // namespace docee::corpus
