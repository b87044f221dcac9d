#pragma once

#include <string>

#include "docee/ad/params.hpp"
#include "docee/ad/tape.hpp"
#include "docee/util/rng.hpp"

namespace docee::enc {

// Multi-head scaled dot-product attention with bias-free projections.
// Rows are items: queries come from `q_in`, keys/values from `kv_in`.
class MultiHeadAttention {
 public:
  MultiHeadAttention(ad::ParamStore& store, std::string prefix, int d_m,
                     int heads, Rng& rng);

  ad::Var operator()(ad::ParamUse& p, ad::Var q_in, ad::Var kv_in) const;

  int d_m() const { return d_m_; }
  int heads() const { return heads_; }

 private:
  int d_m_;
  int heads_;
  std::string wq_, wk_, wv_, wo_;
};

// Post-LN transformer block: x = LN(x + MHA(x)); x = LN(x + FFN(x)).
class TransformerBlock {
 public:
  TransformerBlock(ad::ParamStore& store, std::string prefix, int d_m,
                   int heads, int d_ff, Rng& rng);

  // dropout_rate <= 0 disables dropout (evaluation mode).
  ad::Var operator()(ad::ParamUse& p, ad::Var x, double dropout_rate,
                     Rng& rng) const;

 private:
  MultiHeadAttention mha_;
  std::string w1_, b1_, w2_, b2_, g1_, be1_, g2_, be2_;
};

}  // namespace docee::enc
