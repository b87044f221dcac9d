#pragma once

#include <map>
#include <string>
#include <vector>

#include "docee/corpus/types.hpp"
#include "docee/encoder/transformer.hpp"

namespace docee::enc {

// Token inventory built from a training corpus. Id 0 is <unk>; the remaining
// ids follow lexicographic token order so rebuilds are reproducible.
struct Vocab {
  std::map<std::string, int> token_to_id;
  std::vector<std::string> id_to_token;

  static constexpr int kUnk = 0;

  static Vocab build(const std::vector<corpus::Document>& docs);

  int id(const std::string& tok) const {
    auto it = token_to_id.find(tok);
    return it == token_to_id.end() ? kUnk : it->second;
  }
  int size() const { return static_cast<int>(id_to_token.size()); }
};

struct EncoderConfig {
  int d_m = 32;
  int layers = 2;
  int heads = 2;
  int d_ff = 64;
  int max_len = 128;
  double dropout = 0.1;
};

// Sentence encoder: token + position embeddings through post-LN transformer
// blocks. Sentences longer than max_len are truncated (logged).
class Encoder {
 public:
  Encoder(ad::ParamStore& store, std::string prefix, const EncoderConfig& cfg,
          int vocab_size, Rng& rng);

  const EncoderConfig& config() const { return cfg_; }

  // Returns min(len, max_len) x d_m token representations. `train` enables
  // dropout, drawing masks from `rng`.
  ad::Var encode_sentence(ad::ParamUse& p, const std::vector<int>& token_ids,
                          bool train, Rng& rng) const;

 private:
  EncoderConfig cfg_;
  std::string tok_table_, pos_table_;
  std::vector<TransformerBlock> blocks_;
};

}  // namespace docee::enc
