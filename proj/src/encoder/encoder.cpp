#include "docee/encoder/encoder.hpp"

#include <set>
#include <stdexcept>

#include "docee/util/logging.hpp"

namespace docee::enc {

Vocab Vocab::build(const std::vector<corpus::Document>& docs) {
  std::set<std::string> seen;
  for (const auto& d : docs)
    for (const auto& s : d.sentences)
      for (const auto& t : s) seen.insert(t);
  Vocab v;
  v.id_to_token.push_back("<unk>");
  v.token_to_id["<unk>"] = kUnk;
  for (const auto& t : seen) {
    if (t == "<unk>") continue;
    v.token_to_id[t] = static_cast<int>(v.id_to_token.size());
    v.id_to_token.push_back(t);
  }
  return v;
}

Encoder::Encoder(ad::ParamStore& store, std::string prefix,
                 const EncoderConfig& cfg, int vocab_size, Rng& rng)
    : cfg_(cfg),
      tok_table_(prefix + ".tok_emb"),
      pos_table_(prefix + ".pos_emb") {
  if (vocab_size < 1) throw std::runtime_error("encoder: empty vocabulary");
  if (cfg.max_len < 1) throw std::runtime_error("encoder: max_len must be >= 1");
  ad::init_normal(store.slot(tok_table_, vocab_size, cfg.d_m).value, rng, 0.02);
  ad::init_normal(store.slot(pos_table_, cfg.max_len, cfg.d_m).value, rng, 0.02);
  for (int l = 0; l < cfg.layers; ++l)
    blocks_.emplace_back(store, prefix + ".block" + std::to_string(l), cfg.d_m,
                         cfg.heads, cfg.d_ff, rng);
}

ad::Var Encoder::encode_sentence(ad::ParamUse& p, const std::vector<int>& token_ids,
                                 bool train, Rng& rng) const {
  if (token_ids.empty()) throw std::runtime_error("encoder: empty sentence");
  std::vector<int> ids = token_ids;
  if (static_cast<int>(ids.size()) > cfg_.max_len) {
    log::warn("encoder: truncating sentence of " + std::to_string(ids.size()) +
              " tokens to " + std::to_string(cfg_.max_len));
    ids.resize(static_cast<std::size_t>(cfg_.max_len));
  }
  const int len = static_cast<int>(ids.size());
  std::vector<int> pos(static_cast<std::size_t>(len));
  for (int i = 0; i < len; ++i) pos[static_cast<std::size_t>(i)] = i;

  ad::Var x = ad::add(ad::gather_rows(p.leaf(tok_table_), ids),
                      ad::gather_rows(p.leaf(pos_table_), pos));
  const double rate = train ? cfg_.dropout : 0.0;
  x = ad::dropout(x, rate, rng);
  for (const auto& block : blocks_) x = block(p, x, rate, rng);
  return x;
}

}  // namespace docee::enc
