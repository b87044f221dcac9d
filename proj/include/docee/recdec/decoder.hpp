#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "docee/encoder/transformer.hpp"

namespace docee::recdec {

// Memory regimes for the record tracker.
//   Full  - completed-record encodings accumulate across the whole document.
//   GitOt - memory cleared at the start of each event type.
//   GitOp - memory holds only the encoding of the current partial path
//           (empty at depth zero).
//   GitNt - memory always empty.
//   Greedy- Full memory, but decoding follows the single best child.
enum class TrackerMode { Full, GitOt, GitOp, GitNt, Greedy };

TrackerMode mode_from_string(const std::string& s);
const char* mode_name(TrackerMode m);

struct RecDecConfig {
  int d_m = 32;
  int layers = 2;
  int heads = 2;
  int d_ff = 64;
  double dropout = 0.1;
  double tau_role = 0.5;
  int b_max = 6;  // children kept per expansion (cap logged)
};

// One decoded record: event type index and one entity index per role
// (-1 marks an unfilled role).
struct PathRecord {
  int type = 0;
  std::vector<int> args;
  bool operator==(const PathRecord&) const = default;
};

struct DecodeStats {
  int nodes = 0;          // expansion steps run
  int capped = 0;         // nodes whose child set hit b_max
  int na_fallbacks = 0;   // nodes where no entity cleared tau_role
};

struct DecodeResult {
  std::vector<PathRecord> records;  // deduplicated, discovery order
  DecodeStats stats;
};

// Gold paths of one event type, args already mapped to candidate-entity
// indices (-1 = null role). Types must arrive in schema order.
struct GoldType {
  int type = 0;
  std::vector<std::vector<int>> records;
};

// Test hook: observes every expansion step.
using ProbeFn = std::function<void(int type, const std::vector<int>& prefix,
                                   const Eigen::VectorXd& probs)>;

// Tree-structured record decoder conditioned on a memory of previously
// completed records. Each expansion step runs a transformer over the rows
// [entities; sentences; current path; memory] (with per-block segment
// embeddings) and reads entity probabilities off the entity rows.
class RecordDecoder {
 public:
  RecordDecoder(ad::ParamStore& store, std::string prefix, const RecDecConfig& cfg,
                int num_types, std::vector<int> roles_per_type, Rng& rng);

  const RecDecConfig& config() const { return cfg_; }
  int roles_of(int type) const { return roles_per_type_[static_cast<std::size_t>(type)]; }

  // LSTM over the path's argument rows, last hidden state plus the type
  // embedding. An empty path encodes to the type embedding alone.
  ad::Var encode_record(ad::ParamUse& p, int type,
                        const std::vector<ad::Var>& arg_rows) const;

  // Entity probabilities (|entities| x 1) for one expansion step.
  ad::Var step_probs(ad::ParamUse& p, ad::Var ents, ad::Var sents, int type,
                     const std::vector<ad::Var>& path_rows,
                     const std::vector<ad::Var>& memory, double dropout_rate,
                     Rng& rng) const;

  // Teacher-forced loss over the gold trees (mean BCE per node, summed over
  // nodes). Memory follows `mode`; Greedy trains as Full.
  ad::Var loss(ad::ParamUse& p, ad::Var ents, ad::Var sents,
               const std::vector<GoldType>& gold, TrackerMode mode,
               double dropout_rate, Rng& rng) const;

  // Decoding for the detected types (schema order enforced internally).
  DecodeResult decode(ad::ParamUse& p, ad::Var ents, ad::Var sents,
                      std::vector<int> types, TrackerMode mode,
                      const ProbeFn& probe = nullptr) const;

 private:
  ad::Var arg_row(ad::ParamUse& p, ad::Var ents, int key) const;

  RecDecConfig cfg_;
  int num_types_;
  std::vector<int> roles_per_type_;
  std::string type_emb_, na_emb_, seg_emb_, cls_w_, cls_b_;
  std::string lstm_wx_, lstm_wh_, lstm_b_;
  std::vector<enc::TransformerBlock> blocks_;
};

}  // namespace docee::recdec
