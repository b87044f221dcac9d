#include "docee/encoder/transformer.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace docee::enc {

MultiHeadAttention::MultiHeadAttention(ad::ParamStore& store, std::string prefix,
                                       int d_m, int heads, Rng& rng)
    : d_m_(d_m),
      heads_(heads),
      wq_(prefix + ".wq"),
      wk_(prefix + ".wk"),
      wv_(prefix + ".wv"),
      wo_(prefix + ".wo") {
  if (heads < 1 || d_m % heads != 0)
    throw std::runtime_error("attention: heads must divide d_m");
  for (const auto* n : {&wq_, &wk_, &wv_, &wo_})
    ad::init_xavier(store.slot(*n, d_m, d_m).value, rng);
}

ad::Var MultiHeadAttention::operator()(ad::ParamUse& p, ad::Var q_in,
                                       ad::Var kv_in) const {
  const int dh = d_m_ / heads_;
  ad::Var q = ad::matmul(q_in, ad::transpose(p.leaf(wq_)));
  ad::Var k = ad::matmul(kv_in, ad::transpose(p.leaf(wk_)));
  ad::Var v = ad::matmul(kv_in, ad::transpose(p.leaf(wv_)));
  std::vector<ad::Var> ctx;
  for (int h = 0; h < heads_; ++h) {
    ad::Var qh = ad::slice_cols(q, h * dh, dh);
    ad::Var kh = ad::slice_cols(k, h * dh, dh);
    ad::Var vh = ad::slice_cols(v, h * dh, dh);
    ad::Var scores =
        ad::scale(ad::matmul(qh, ad::transpose(kh)), 1.0 / std::sqrt(double(dh)));
    ctx.push_back(ad::matmul(ad::softmax_rows(scores), vh));
  }
  return ad::matmul(ad::concat_cols(ctx), ad::transpose(p.leaf(wo_)));
}

TransformerBlock::TransformerBlock(ad::ParamStore& store, std::string prefix,
                                   int d_m, int heads, int d_ff, Rng& rng)
    : mha_(store, prefix + ".mha", d_m, heads, rng),
      w1_(prefix + ".ffn_w1"),
      b1_(prefix + ".ffn_b1"),
      w2_(prefix + ".ffn_w2"),
      b2_(prefix + ".ffn_b2"),
      g1_(prefix + ".ln1_g"),
      be1_(prefix + ".ln1_b"),
      g2_(prefix + ".ln2_g"),
      be2_(prefix + ".ln2_b") {
  ad::init_xavier(store.slot(w1_, d_ff, d_m).value, rng);
  ad::init_const(store.slot(b1_, 1, d_ff).value, 0.0);
  ad::init_xavier(store.slot(w2_, d_m, d_ff).value, rng);
  ad::init_const(store.slot(b2_, 1, d_m).value, 0.0);
  ad::init_const(store.slot(g1_, 1, d_m).value, 1.0);
  ad::init_const(store.slot(be1_, 1, d_m).value, 0.0);
  ad::init_const(store.slot(g2_, 1, d_m).value, 1.0);
  ad::init_const(store.slot(be2_, 1, d_m).value, 0.0);
}

ad::Var TransformerBlock::operator()(ad::ParamUse& p, ad::Var x,
                                     double dropout_rate, Rng& rng) const {
  ad::Var att = ad::dropout(mha_(p, x, x), dropout_rate, rng);
  x = ad::layernorm_rows(ad::add(x, att), p.leaf(g1_), p.leaf(be1_));
  ad::Var h = ad::relu(ad::add_rowvec(
      ad::matmul(x, ad::transpose(p.leaf(w1_))), p.leaf(b1_)));
  ad::Var ff = ad::add_rowvec(ad::matmul(h, ad::transpose(p.leaf(w2_))), p.leaf(b2_));
  ff = ad::dropout(ff, dropout_rate, rng);
  return ad::layernorm_rows(ad::add(x, ff), p.leaf(g2_), p.leaf(be2_));
}

}  // namespace docee::enc
