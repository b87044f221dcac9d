#include "docee/corpus/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "docee/util/errors.hpp"
#include <string>
#include <tuple>

#include "docee/util/rng.hpp"

namespace docee::corpus {
namespace {

void check_config(const SynthConfig& c) {
  auto fail = [](const std::string& msg) {
    throw ConfigError("synth: infeasible config: " + msg);
  };
  if (c.num_docs < 1) fail("num_docs must be >= 1");
  if (c.vocab_size < 1) fail("vocab_size must be >= 1");
  if (c.num_types < 1) fail("num_types must be >= 1");
  if (c.roles_per_type < 1) fail("roles_per_type must be >= 1");
  if (c.max_records_per_doc < 1) fail("max_records_per_doc must be >= 1");
  if (c.multi_record_fraction < 0.0 || c.multi_record_fraction > 1.0)
    fail("multi_record_fraction must lie in [0,1]");
  if (c.multi_record_fraction > 0.0 && c.max_records_per_doc < 2)
    fail("multi_record_fraction > 0 needs max_records_per_doc >= 2");
  if (c.scatter_radius < 1) fail("scatter_radius must be >= 1");
  if (c.min_sentences < 1 || c.max_sentences < c.min_sentences)
    fail("sentence count range is empty");
  if (c.min_tokens < 1 || c.max_tokens < c.min_tokens)
    fail("token count range is empty");
  if (c.entity_pool < 2) fail("entity_pool must be >= 2");
  if (c.null_role_fraction < 0.0 || c.null_role_fraction >= 1.0)
    fail("null_role_fraction must lie in [0,1)");
  if (c.shared_arg_fraction < 0.0 || c.shared_arg_fraction > 1.0)
    fail("shared_arg_fraction must lie in [0,1]");
  if (c.extra_mention_prob < 0.0 || c.extra_mention_prob > 1.0)
    fail("extra_mention_prob must lie in [0,1]");
  if (c.distractors_per_doc < 0) fail("distractors_per_doc must be >= 0");
}

// Entity surfaces are atomic tokens disjoint from the filler vocabulary;
// every fourth pool entry spans two tokens so multi-token mentions occur.
std::vector<std::string> entity_tokens(int k) {
  if (k % 4 == 3) return {"e" + std::to_string(k), "q" + std::to_string(k)};
  return {"e" + std::to_string(k)};
}

std::string entity_surface(int k) {
  std::string s;
  for (const auto& t : entity_tokens(k)) s += t;
  return s;
}

// Splices an entity mention into a sentence at a random token boundary that
// does not split an existing mention, shifting later spans right.
EntityMention splice_mention(Document& doc, int sent, int entity, Rng& rng) {
  auto& toks = doc.sentences[sent];
  const int len = static_cast<int>(toks.size());
  std::vector<int> allowed;
  for (int off = 0; off <= len; ++off) {
    bool inside = false;
    for (const auto& m : doc.gold_mentions)
      if (m.sentence_index == sent && off > m.start && off < m.end) inside = true;
    if (!inside) allowed.push_back(off);
  }
  const int off = allowed[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<int>(allowed.size()) - 1))];
  const auto etoks = entity_tokens(entity);
  const int n = static_cast<int>(etoks.size());
  for (auto& m : doc.gold_mentions) {
    if (m.sentence_index == sent && m.start >= off) {
      m.start += n;
      m.end += n;
    }
  }
  toks.insert(toks.begin() + off, etoks.begin(), etoks.end());
  EntityMention m{sent, off, off + n, entity_surface(entity), 0};
  doc.gold_mentions.push_back(m);
  return m;
}

}  // namespace

EventSchema synth_schema(const SynthConfig& cfg) {
  check_config(cfg);
  EventSchema schema;
  std::vector<std::string> roles;
  for (int r = 0; r < cfg.roles_per_type; ++r)
    roles.push_back("r" + std::to_string(r));
  for (int t = 0; t < cfg.num_types; ++t) {
    std::string name = "ET" + std::to_string(t);
    schema.types.push_back(name);
    schema.roles[name] = roles;
  }
  return schema;
}

std::vector<Document> synth_corpus(const SynthConfig& cfg, std::uint64_t seed) {
  check_config(cfg);
  const EventSchema schema = synth_schema(cfg);
  Rng rng(seed);

  const int num_multi = static_cast<int>(
      std::lround(cfg.multi_record_fraction * cfg.num_docs));
  std::vector<char> multi(static_cast<std::size_t>(cfg.num_docs), 0);
  for (int i = 0; i < num_multi; ++i) multi[static_cast<std::size_t>(i)] = 1;
  rng.shuffle(multi);

  std::vector<Document> docs;
  docs.reserve(static_cast<std::size_t>(cfg.num_docs));
  for (int d = 0; d < cfg.num_docs; ++d) {
    Document doc;
    doc.doc_id = "synth" + std::to_string(d);
    const int n_sent = rng.uniform_int(cfg.min_sentences, cfg.max_sentences);
    for (int s = 0; s < n_sent; ++s) {
      std::vector<std::string> toks;
      const int n_tok = rng.uniform_int(cfg.min_tokens, cfg.max_tokens);
      for (int t = 0; t < n_tok; ++t)
        toks.push_back("w" + std::to_string(rng.uniform_int(0, cfg.vocab_size - 1)));
      doc.sentences.push_back(std::move(toks));
    }

    const int n_rec = multi[static_cast<std::size_t>(d)]
                          ? rng.uniform_int(2, cfg.max_records_per_doc)
                          : 1;
    std::vector<int> used_entities;  // first-use order, for shared args
    for (int r = 0; r < n_rec; ++r) {
      const std::string& type =
          schema.types[static_cast<std::size_t>(rng.uniform_int(0, cfg.num_types - 1))];
      const auto& roles = schema.roles.at(type);

      std::vector<int> arg_entity(roles.size(), -1);  // -1 = null role
      for (std::size_t ri = 0; ri < roles.size(); ++ri) {
        if (rng.uniform() < cfg.null_role_fraction) continue;
        if (!used_entities.empty() && rng.uniform() < cfg.shared_arg_fraction) {
          arg_entity[ri] = used_entities[static_cast<std::size_t>(rng.uniform_int(
              0, static_cast<int>(used_entities.size()) - 1))];
        } else {
          arg_entity[ri] = rng.uniform_int(0, cfg.entity_pool - 1);
        }
      }
      if (std::all_of(arg_entity.begin(), arg_entity.end(),
                      [](int e) { return e < 0; }))
        arg_entity[0] = rng.uniform_int(0, cfg.entity_pool - 1);

      auto build_record = [&](const std::vector<int>& ents) {
        EventRecord rec;
        rec.event_type = type;
        for (std::size_t ri = 0; ri < roles.size(); ++ri) {
          std::optional<std::string> v;
          if (ents[ri] >= 0) v = entity_surface(ents[ri]);
          rec.args.emplace_back(roles[ri], v);
        }
        return rec;
      };
      auto duplicates = [&](const EventRecord& rec) {
        return std::any_of(doc.gold_records.begin(), doc.gold_records.end(),
                           [&](const EventRecord& g) {
                             return g.event_type == rec.event_type && g.args == rec.args;
                           });
      };
      EventRecord rec = build_record(arg_entity);
      if (duplicates(rec)) {
        std::size_t first = 0;
        while (first < arg_entity.size() && arg_entity[first] < 0) ++first;
        bool fixed = false;
        for (int step = 1; step < cfg.entity_pool && !fixed; ++step) {
          arg_entity[first] = (arg_entity[first] + 1) % cfg.entity_pool;
          rec = build_record(arg_entity);
          fixed = !duplicates(rec);
        }
        if (!fixed)
          throw ConfigError(
              "synth: infeasible config: entity_pool too small to keep records in "
              "doc " + doc.doc_id + " distinct");
      }

      // Place one mention per filled role inside a scatter window.
      const int radius = std::min(cfg.scatter_radius, n_sent);
      const int ws = rng.uniform_int(0, n_sent - radius);
      for (std::size_t ri = 0; ri < arg_entity.size(); ++ri) {
        if (arg_entity[ri] < 0) continue;
        const int sent = ws + rng.uniform_int(0, radius - 1);
        splice_mention(doc, sent, arg_entity[ri], rng);
        if (std::find(used_entities.begin(), used_entities.end(), arg_entity[ri]) ==
            used_entities.end())
          used_entities.push_back(arg_entity[ri]);
      }

      doc.gold_types.insert(type);
      doc.gold_records.push_back(std::move(rec));
    }

    for (int e : used_entities)
      if (rng.uniform() < cfg.extra_mention_prob)
        splice_mention(doc, rng.uniform_int(0, n_sent - 1), e, rng);

    int placed_distractors = 0;
    for (int k = 0; k < cfg.entity_pool && placed_distractors < cfg.distractors_per_doc;
         ++k) {
      if (std::find(used_entities.begin(), used_entities.end(), k) !=
          used_entities.end())
        continue;
      splice_mention(doc, rng.uniform_int(0, n_sent - 1), k, rng);
      ++placed_distractors;
    }

    std::sort(doc.gold_mentions.begin(), doc.gold_mentions.end(),
              [](const EntityMention& a, const EntityMention& b) {
                return std::tie(a.sentence_index, a.start, a.end) <
                       std::tie(b.sentence_index, b.start, b.end);
              });
    validate_document(doc, schema);
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace docee::corpus
