#pragma once

#include <cstdint>
#include <vector>

#include "docee/corpus/types.hpp"

namespace docee::corpus {

// Generator for desk-scale corpora. Documents are filler-token sentences
// with entity mentions spliced in; each record's arguments land inside a
// window of `scatter_radius` consecutive sentences. A pure function of
// (config, seed).
struct SynthConfig {
  int num_docs = 50;
  int vocab_size = 60;             // filler token pool "w0".."w{V-1}"
  int num_types = 2;               // event types "ET0".."ET{n-1}"
  int roles_per_type = 3;          // roles "r0".."r{k-1}" for every type
  int max_records_per_doc = 2;
  double multi_record_fraction = 0.3;  // exact count of docs with >1 record
  int scatter_radius = 3;

  int min_sentences = 4;
  int max_sentences = 6;
  int min_tokens = 6;              // filler tokens per sentence before splicing
  int max_tokens = 10;
  int entity_pool = 16;            // shared surface pool "e0".."e{P-1}"
  double null_role_fraction = 0.15;
  double shared_arg_fraction = 0.5;   // later records reuse an earlier argument
  double extra_mention_prob = 0.35;   // extra coreferent mention elsewhere
  int distractors_per_doc = 2;        // mentioned entities that fill no role
};

EventSchema synth_schema(const SynthConfig& cfg);

std::vector<Document> synth_corpus(const SynthConfig& cfg, std::uint64_t seed);

}  // namespace docee::corpus
