#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "docee/ad/params.hpp"
#include "docee/ad/tape.hpp"
#include "docee/corpus/types.hpp"
#include "docee/util/rng.hpp"

namespace docee::graph {

// Edge types of the document graph. Sentence nodes come first (node id ==
// sentence index), then mention nodes in (sentence, start) order.
enum class EdgeType : int {
  SentSent = 0,   // complete graph over sentences
  SentMent = 1,   // mention <-> containing sentence
  MentIntra = 2,  // complete among mentions of one sentence
  MentInter = 3,  // complete within an exact-surface cluster
};
constexpr int kNumEdgeTypes = 4;
const char* edge_type_name(EdgeType t);

struct Cluster {
  std::string surface;
  std::vector<int> mention_ids;  // indices into Graph::mentions
};

struct Graph {
  int n_sentences = 0;
  std::vector<corpus::EntityMention> mentions;  // sorted by (sentence, start)
  std::vector<Cluster> clusters;                // surface-lexicographic order
  // Undirected edges as node-id pairs with u < v. A mention pair that is both
  // same-sentence and same-surface appears under both M-M types.
  std::array<std::vector<std::pair<int, int>>, kNumEdgeTypes> edges;

  int num_nodes() const { return n_sentences + static_cast<int>(mentions.size()); }
  int mention_node(int mention_idx) const { return n_sentences + mention_idx; }
  std::array<std::size_t, kNumEdgeTypes> edge_counts() const;
};

Graph build_graph(int n_sentences, std::vector<corpus::EntityMention> mentions);

nlohmann::ordered_json graph_to_json(const Graph& g);

using EdgeMask = std::array<bool, kNumEdgeTypes>;
constexpr EdgeMask kAllEdges{true, true, true, true};

struct GcnConfig {
  int d_m = 32;
  int layers = 2;
  int max_sentences = 64;  // sentence-position table size (clamped lookup)
};

// Relational GCN over the document graph:
//   H^{l+1} = ReLU(H^l W_self^T + sum_k D_k^{-1} A_k H^l W_k^T)
// with per-type mean aggregation. A type with no edges contributes nothing,
// so disabling it and deleting its edges run the identical computation.
// The output is concat(H^0..H^L) W_a^T, back to d_m columns.
class HetGcn {
 public:
  HetGcn(ad::ParamStore& store, std::string prefix, const GcnConfig& cfg,
         Rng& rng);

  const GcnConfig& config() const { return cfg_; }

  // Initial node states: sentence nodes mean-pool their token reps, mention
  // nodes max-pool their span, and both add a sentence-position embedding
  // (index clamped to the table).
  ad::Var init_node_states(ad::ParamUse& p, const Graph& g,
                           const std::vector<ad::Var>& token_reps) const;

  ad::Var forward(ad::ParamUse& p, const Graph& g, ad::Var h0,
                  const EdgeMask& enabled = kAllEdges) const;

 private:
  GcnConfig cfg_;
  std::string pos_table_, agg_;
  std::vector<std::string> w_self_;                 // per layer
  std::vector<std::array<std::string, kNumEdgeTypes>> w_type_;
};

// Mean of the final mention-node states per cluster: |clusters| x d_m.
// Requires at least one cluster.
ad::Var pool_entities(const Graph& g, ad::Var node_states);

// Sentence rows of the node-state matrix: n_sentences x d_m.
ad::Var sentence_states(const Graph& g, ad::Var node_states);

}  // namespace docee::graph
