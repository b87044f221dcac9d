#pragma once

#include <vector>

#include "docee/corpus/types.hpp"

namespace docee::corpus {

// BIO label ids. With K mention kinds the label set is
// {B_k = 2k, I_k = 2k+1 : k < K} + {O = 2K}; K = 1 gives {B=0, I=1, O=2}.
struct BioScheme {
  int kinds = 1;
  int num_labels() const { return 2 * kinds + 1; }
  int b(int kind = 0) const { return 2 * kind; }
  int i(int kind = 0) const { return 2 * kind + 1; }
  int o() const { return 2 * kinds; }
  bool is_b(int label) const { return label < 2 * kinds && label % 2 == 0; }
  bool is_i(int label) const { return label < 2 * kinds && label % 2 == 1; }
  int kind_of(int label) const { return label / 2; }
};

// Per-sentence gold label sequences for a document. Overlapping mentions
// are resolved longest-first, then earliest start; losers are dropped and
// both sides logged. Returns the labels and the kept mentions.
struct BioResult {
  std::vector<std::vector<int>> labels;   // one sequence per sentence
  std::vector<EntityMention> kept;        // (sentence, start) order
  int dropped = 0;
};

BioResult to_bio(const Document& doc, const BioScheme& scheme = {});

}  // namespace docee::corpus
