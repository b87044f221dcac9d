#pragma once

#include <map>
#include <string>
#include <vector>

#include "docee/ad/tape.hpp"
#include "docee/util/rng.hpp"

namespace docee::ad {

struct ParamSlot {
  Mat value;
  Mat grad;  // accumulated across tapes until step()/zero_grad()
  Mat adam_m;
  Mat adam_v;
};

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named parameter collection shared by all model modules. Iteration order is
// the lexicographic name order (std::map), which keeps every sweep over the
// parameters deterministic.
class ParamStore {
 public:
  // Creates the slot on first use; later calls must match the shape.
  ParamSlot& slot(const std::string& name, long rows, long cols);

  bool contains(const std::string& name) const { return slots_.count(name) > 0; }
  ParamSlot& at(const std::string& name);
  const ParamSlot& at(const std::string& name) const;

  std::map<std::string, ParamSlot>& slots() { return slots_; }
  const std::map<std::string, ParamSlot>& slots() const { return slots_; }

  void zero_grad();
  std::size_t grad_nonzero_params() const;

  // One Adam update from the accumulated grads (scaled by grad_scale),
  // then clears them.
  void adam_step(const AdamConfig& cfg, double grad_scale = 1.0);

  long adam_t() const { return adam_t_; }
  void set_adam_t(long t) { adam_t_ = t; }

 private:
  std::map<std::string, ParamSlot> slots_;
  long adam_t_ = 0;
};

// Per-tape bridge: leaf nodes for parameters, with grad flush back to the
// store after Tape::backward().
class ParamUse {
 public:
  explicit ParamUse(Tape& tape, ParamStore& store) : tape_(&tape), store_(&store) {}

  Tape& tape() { return *tape_; }
  ParamStore& store() { return *store_; }

  Var leaf(const std::string& name);  // slot must exist

  // Adds every used leaf's tape-gradient into its store slot.
  void flush_grads();

 private:
  Tape* tape_;
  ParamStore* store_;
  std::vector<std::pair<Var, ParamSlot*>> used_;
  std::map<std::string, int> cache_;  // one leaf per name per tape
};

// ---- initializers ----
void init_xavier(Mat& w, Rng& rng);           // U(+-sqrt(6/(fan_in+fan_out)))
void init_normal(Mat& w, Rng& rng, double stddev);
void init_const(Mat& w, double v);

}  // namespace docee::ad
