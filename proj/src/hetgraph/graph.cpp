#include "docee/hetgraph/graph.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <tuple>

#include "docee/util/logging.hpp"

namespace docee::graph {

const char* edge_type_name(EdgeType t) {
  switch (t) {
    case EdgeType::SentSent: return "sent_sent";
    case EdgeType::SentMent: return "sent_ment";
    case EdgeType::MentIntra: return "ment_intra";
    case EdgeType::MentInter: return "ment_inter";
  }
  return "?";
}

std::array<std::size_t, kNumEdgeTypes> Graph::edge_counts() const {
  std::array<std::size_t, kNumEdgeTypes> out{};
  for (int k = 0; k < kNumEdgeTypes; ++k) out[static_cast<std::size_t>(k)] = edges[static_cast<std::size_t>(k)].size();
  return out;
}

Graph build_graph(int n_sentences, std::vector<corpus::EntityMention> mentions) {
  if (n_sentences < 1) throw std::runtime_error("graph: need at least one sentence");
  std::sort(mentions.begin(), mentions.end(),
            [](const corpus::EntityMention& a, const corpus::EntityMention& b) {
              return std::tie(a.sentence_index, a.start, a.end, a.surface) <
                     std::tie(b.sentence_index, b.start, b.end, b.surface);
            });
  Graph g;
  g.n_sentences = n_sentences;
  g.mentions = std::move(mentions);

  std::map<std::string, std::vector<int>> by_surface;
  for (int j = 0; j < static_cast<int>(g.mentions.size()); ++j) {
    const auto& m = g.mentions[static_cast<std::size_t>(j)];
    if (m.sentence_index < 0 || m.sentence_index >= n_sentences)
      throw std::runtime_error("graph: mention sentence out of range");
    by_surface[m.surface].push_back(j);
  }
  for (auto& [surface, ids] : by_surface)
    g.clusters.push_back(Cluster{surface, ids});

  auto& ss = g.edges[static_cast<std::size_t>(EdgeType::SentSent)];
  for (int i = 0; i < n_sentences; ++i)
    for (int j = i + 1; j < n_sentences; ++j) ss.emplace_back(i, j);

  auto& sm = g.edges[static_cast<std::size_t>(EdgeType::SentMent)];
  for (int j = 0; j < static_cast<int>(g.mentions.size()); ++j)
    sm.emplace_back(g.mentions[static_cast<std::size_t>(j)].sentence_index, g.mention_node(j));

  auto& mi = g.edges[static_cast<std::size_t>(EdgeType::MentIntra)];
  for (int a = 0; a < static_cast<int>(g.mentions.size()); ++a)
    for (int b = a + 1; b < static_cast<int>(g.mentions.size()); ++b)
      if (g.mentions[static_cast<std::size_t>(a)].sentence_index ==
          g.mentions[static_cast<std::size_t>(b)].sentence_index)
        mi.emplace_back(g.mention_node(a), g.mention_node(b));

  auto& mx = g.edges[static_cast<std::size_t>(EdgeType::MentInter)];
  for (const auto& cl : g.clusters)
    for (std::size_t a = 0; a < cl.mention_ids.size(); ++a)
      for (std::size_t b = a + 1; b < cl.mention_ids.size(); ++b)
        mx.emplace_back(g.mention_node(cl.mention_ids[a]),
                        g.mention_node(cl.mention_ids[b]));
  return g;
}

nlohmann::ordered_json graph_to_json(const Graph& g) {
  nlohmann::ordered_json j;
  j["n_sentences"] = g.n_sentences;
  j["mentions"] = nlohmann::ordered_json::array();
  for (const auto& m : g.mentions)
    j["mentions"].push_back({{"sent", m.sentence_index},
                             {"start", m.start},
                             {"end", m.end},
                             {"surface", m.surface}});
  j["clusters"] = nlohmann::ordered_json::array();
  for (const auto& c : g.clusters)
    j["clusters"].push_back({{"surface", c.surface}, {"mentions", c.mention_ids}});
  j["edges"] = nlohmann::ordered_json::object();
  j["edge_counts"] = nlohmann::ordered_json::object();
  for (int k = 0; k < kNumEdgeTypes; ++k) {
    const char* name = edge_type_name(static_cast<EdgeType>(k));
    auto arr = nlohmann::ordered_json::array();
    for (const auto& [u, v] : g.edges[static_cast<std::size_t>(k)]) arr.push_back({u, v});
    j["edges"][name] = std::move(arr);
    j["edge_counts"][name] = g.edges[static_cast<std::size_t>(k)].size();
  }
  return j;
}

HetGcn::HetGcn(ad::ParamStore& store, std::string prefix, const GcnConfig& cfg,
               Rng& rng)
    : cfg_(cfg), pos_table_(prefix + ".sent_pos"), agg_(prefix + ".agg_w") {
  if (cfg.layers < 0) throw std::runtime_error("gcn: layers must be >= 0");
  if (cfg.max_sentences < 1) throw std::runtime_error("gcn: max_sentences must be >= 1");
  ad::init_normal(store.slot(pos_table_, cfg.max_sentences, cfg.d_m).value, rng, 0.02);
  ad::init_xavier(store.slot(agg_, cfg.d_m, (cfg.layers + 1) * cfg.d_m).value, rng);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string base = prefix + ".l" + std::to_string(l);
    w_self_.push_back(base + ".w_self");
    ad::init_xavier(store.slot(w_self_.back(), cfg.d_m, cfg.d_m).value, rng);
    std::array<std::string, kNumEdgeTypes> names;
    for (int k = 0; k < kNumEdgeTypes; ++k) {
      names[static_cast<std::size_t>(k)] =
          base + ".w_" + edge_type_name(static_cast<EdgeType>(k));
      ad::init_xavier(store.slot(names[static_cast<std::size_t>(k)], cfg.d_m, cfg.d_m).value, rng);
    }
    w_type_.push_back(names);
  }
}

ad::Var HetGcn::init_node_states(ad::ParamUse& p, const Graph& g,
                                 const std::vector<ad::Var>& token_reps) const {
  if (static_cast<int>(token_reps.size()) != g.n_sentences)
    throw std::runtime_error("gcn: token_reps count != n_sentences");
  std::vector<ad::Var> rows;
  std::vector<int> pos_ids;
  for (int s = 0; s < g.n_sentences; ++s) {
    rows.push_back(ad::mean_over_rows(token_reps[static_cast<std::size_t>(s)]));
    pos_ids.push_back(std::min(s, cfg_.max_sentences - 1));
  }
  for (const auto& m : g.mentions) {
    const ad::Var& reps = token_reps[static_cast<std::size_t>(m.sentence_index)];
    const int avail = static_cast<int>(reps.rows());
    int lo = m.start, hi = std::min(m.end, avail);
    if (lo >= hi) {
      // Span truncated away by the encoder; fall back to the sentence pool.
      log::debug("gcn: mention span past truncated sentence, using sentence mean");
      rows.push_back(ad::mean_over_rows(reps));
    } else {
      rows.push_back(ad::max_over_rows(ad::slice_rows(reps, lo, hi - lo)));
    }
    pos_ids.push_back(std::min(m.sentence_index, cfg_.max_sentences - 1));
  }
  return ad::add(ad::concat_rows(rows), ad::gather_rows(p.leaf(pos_table_), pos_ids));
}

ad::Var HetGcn::forward(ad::ParamUse& p, const Graph& g, ad::Var h0,
                        const EdgeMask& enabled) const {
  const int n = g.num_nodes();
  if (h0.rows() != n) throw std::runtime_error("gcn: node state row mismatch");
  std::vector<ad::Var> history{h0};
  ad::Var h = h0;
  for (int l = 0; l < cfg_.layers; ++l) {
    ad::Var acc = ad::matmul(h, ad::transpose(p.leaf(w_self_[static_cast<std::size_t>(l)])));
    for (int k = 0; k < kNumEdgeTypes; ++k) {
      if (!enabled[static_cast<std::size_t>(k)]) continue;
      const auto& pairs = g.edges[static_cast<std::size_t>(k)];
      if (pairs.empty()) continue;  // zero contribution either way
      ad::Mat adj = ad::Mat::Zero(n, n);
      for (const auto& [u, v] : pairs) {
        adj(u, v) = 1.0;
        adj(v, u) = 1.0;
      }
      for (int u = 0; u < n; ++u) {
        const double deg = adj.row(u).sum();
        if (deg > 0) adj.row(u) /= deg;
      }
      ad::Var msg = ad::matmul(
          h, ad::transpose(p.leaf(w_type_[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)])));
      acc = ad::add(acc, ad::matmul(p.tape().constant(adj), msg));
    }
    h = ad::relu(acc);
    history.push_back(h);
  }
  return ad::matmul(ad::concat_cols(history), ad::transpose(p.leaf(agg_)));
}

ad::Var pool_entities(const Graph& g, ad::Var node_states) {
  if (g.clusters.empty()) throw std::runtime_error("graph: no entities to pool");
  std::vector<ad::Var> rows;
  for (const auto& cl : g.clusters) {
    std::vector<int> node_ids;
    for (int m : cl.mention_ids) node_ids.push_back(g.mention_node(m));
    rows.push_back(ad::mean_over_rows(ad::gather_rows(node_states, node_ids)));
  }
  return ad::concat_rows(rows);
}

ad::Var sentence_states(const Graph& g, ad::Var node_states) {
  return ad::slice_rows(node_states, 0, g.n_sentences);
}

}  // namespace docee::graph
