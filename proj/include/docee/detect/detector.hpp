#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "docee/encoder/transformer.hpp"

namespace docee::detect {

struct DetectConfig {
  int d_m = 32;
  int heads = 2;
  double tau = 0.5;  // detection threshold on the sigmoid probability
};

// Event-type detection head. Learned per-type queries attend over sentence
// states; each attended type representation scores a sigmoid probability
// that the document contains that type.
class TypeDetector {
 public:
  TypeDetector(ad::ParamStore& store, std::string prefix, const DetectConfig& cfg,
               int num_types, Rng& rng);

  int num_types() const { return num_types_; }
  const DetectConfig& config() const { return cfg_; }

  // num_types x d_m attended type representations.
  ad::Var type_reps(ad::ParamUse& p, ad::Var sent_states) const;

  // num_types x 1 probabilities.
  ad::Var type_probs(ad::ParamUse& p, ad::Var sent_states) const;

  // Mean binary cross-entropy against the multi-hot gold type vector,
  // probabilities clamped to [eps, 1-eps] with eps = 1e-12.
  ad::Var loss(ad::ParamUse& p, ad::Var sent_states,
               const std::vector<int>& gold_multi_hot) const;

 private:
  DetectConfig cfg_;
  int num_types_;
  std::string query_, w_, b_;
  enc::MultiHeadAttention mha_;
};

// Indices with prob > tau, ascending (schema order).
std::vector<int> detected_types(const Eigen::MatrixXd& probs, double tau);

}  // namespace docee::detect
