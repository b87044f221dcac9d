#include "docee/detect/detector.hpp"

#include <stdexcept>

namespace docee::detect {

namespace {
constexpr double kProbEps = 1e-12;
}

TypeDetector::TypeDetector(ad::ParamStore& store, std::string prefix,
                           const DetectConfig& cfg, int num_types, Rng& rng)
    : cfg_(cfg),
      num_types_(num_types),
      query_(prefix + ".type_query"),
      w_(prefix + ".cls_w"),
      b_(prefix + ".cls_b"),
      mha_(store, prefix + ".att", cfg.d_m, cfg.heads, rng) {
  if (num_types < 1) throw std::runtime_error("detect: need at least one type");
  ad::init_normal(store.slot(query_, num_types, cfg.d_m).value, rng, 0.02);
  ad::init_xavier(store.slot(w_, 1, cfg.d_m).value, rng);
  ad::init_const(store.slot(b_, 1, 1).value, 0.0);
}

ad::Var TypeDetector::type_reps(ad::ParamUse& p, ad::Var sent_states) const {
  return mha_(p, p.leaf(query_), sent_states);
}

ad::Var TypeDetector::type_probs(ad::ParamUse& p, ad::Var sent_states) const {
  ad::Var r = type_reps(p, sent_states);
  ad::Var scores = ad::matmul(r, ad::transpose(p.leaf(w_)));  // T x 1
  scores = ad::add_rowvec(scores, p.leaf(b_));
  return ad::sigmoid(scores);
}

ad::Var TypeDetector::loss(ad::ParamUse& p, ad::Var sent_states,
                           const std::vector<int>& gold_multi_hot) const {
  if (static_cast<int>(gold_multi_hot.size()) != num_types_)
    throw std::runtime_error("detect: gold vector size != num_types");
  ad::Var probs = ad::clamp(type_probs(p, sent_states), kProbEps, 1.0 - kProbEps);
  ad::Mat y(num_types_, 1), ny(num_types_, 1);
  for (int t = 0; t < num_types_; ++t) {
    y(t, 0) = gold_multi_hot[static_cast<std::size_t>(t)] ? 1.0 : 0.0;
    ny(t, 0) = 1.0 - y(t, 0);
  }
  ad::Tape& tape = p.tape();
  ad::Mat ones = ad::Mat::Ones(num_types_, 1);
  ad::Var pos = ad::mul(tape.constant(y), ad::log_(probs));
  ad::Var neg = ad::mul(tape.constant(ny),
                        ad::log_(ad::sub(tape.constant(ones), probs)));
  return ad::scale(ad::sum_all(ad::add(pos, neg)), -1.0 / num_types_);
}

std::vector<int> detected_types(const Eigen::MatrixXd& probs, double tau) {
  std::vector<int> out;
  for (int t = 0; t < probs.rows(); ++t)
    if (probs(t, 0) > tau) out.push_back(t);
  return out;
}

}  // namespace docee::detect
