#include "docee/corpus/bio.hpp"

#include <algorithm>

#include "docee/util/logging.hpp"

namespace docee::corpus {

BioResult to_bio(const Document& doc, const BioScheme& scheme) {
  BioResult res;
  res.labels.resize(doc.sentences.size());
  for (std::size_t s = 0; s < doc.sentences.size(); ++s)
    res.labels[s].assign(doc.sentences[s].size(), scheme.o());

  // Per sentence: longer spans first, then earlier start; a candidate that
  // overlaps an already-kept span loses.
  std::vector<EntityMention> order = doc.gold_mentions;
  std::stable_sort(order.begin(), order.end(), [](const EntityMention& a, const EntityMention& b) {
    if (a.sentence_index != b.sentence_index) return a.sentence_index < b.sentence_index;
    const int la = a.end - a.start, lb = b.end - b.start;
    if (la != lb) return la > lb;
    return a.start < b.start;
  });

  std::vector<std::vector<std::pair<int, int>>> taken(doc.sentences.size());
  for (const EntityMention& m : order) {
    auto& spans = taken[static_cast<std::size_t>(m.sentence_index)];
    const bool overlaps = std::any_of(spans.begin(), spans.end(), [&](const auto& sp) {
      return m.start < sp.second && sp.first < m.end;
    });
    if (overlaps) {
      ++res.dropped;
      log::warn("to_bio " + doc.doc_id + ": dropping mention [" + std::to_string(m.start) + ", " +
                std::to_string(m.end) + ") in sentence " + std::to_string(m.sentence_index) +
                " overlapping a kept mention");
      continue;
    }
    spans.emplace_back(m.start, m.end);
    auto& labels = res.labels[static_cast<std::size_t>(m.sentence_index)];
    labels[static_cast<std::size_t>(m.start)] = scheme.b(m.kind);
    for (int t = m.start + 1; t < m.end; ++t)
      labels[static_cast<std::size_t>(t)] = scheme.i(m.kind);
    res.kept.push_back(m);
  }

  std::sort(res.kept.begin(), res.kept.end());
  return res;
}

}  // namespace docee::corpus
