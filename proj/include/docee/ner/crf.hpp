#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "docee/ad/params.hpp"
#include "docee/ad/tape.hpp"
#include "docee/corpus/bio.hpp"
#include "docee/corpus/types.hpp"
#include "docee/util/rng.hpp"

namespace docee::ner {

// Linear-chain CRF over BIO labels, scored from per-token representations.
// Emissions are a learned affine map; transitions, start, and stop scores are
// free parameters.
class CrfHead {
 public:
  CrfHead(ad::ParamStore& store, std::string prefix, int d_m, int num_labels,
          Rng& rng);

  int num_labels() const { return num_labels_; }

  // token_reps: len x d_m. Returns len x num_labels emission scores.
  ad::Var emissions(ad::ParamUse& p, ad::Var token_reps) const;

  // Exact sequence negative log-likelihood via the forward (alpha) recurrence.
  ad::Var nll(ad::ParamUse& p, ad::Var token_reps,
              const std::vector<int>& labels) const;

  // Max-scoring label sequence; among ties returns the lexicographically
  // smallest label vector.
  std::vector<int> viterbi(const ad::ParamStore& store,
                           const Eigen::MatrixXd& token_reps) const;

 private:
  int d_m_;
  int num_labels_;
  std::string w_, b_, trans_, start_, stop_;
};

// Rebuilds mention spans from decoded BIO labels. An I with no open segment
// of its kind starts a new segment; `repaired` counts those.
struct ExtractResult {
  std::vector<corpus::EntityMention> mentions;
  int repaired = 0;
};

ExtractResult extract_mentions(const std::vector<std::vector<int>>& labels,
                               const std::vector<std::vector<std::string>>& sentences,
                               const corpus::BioScheme& scheme);

}  // namespace docee::ner
