#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "docee/ad/params.hpp"

namespace docee::ad {

// Central finite-difference check of d(loss)/d(params) against the
// analytic gradients left in the store by the loss builder.
//
// `loss_fn` must rebuild the forward pass from the store's current values
// and return the scalar loss WITHOUT touching stored grads.
// `grad_fn` must populate store grads for one evaluation (zero_grad inside).
struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  long worst_index = -1;
};

inline GradCheckResult grad_check(ParamStore& store,
                                  const std::function<double()>& loss_fn,
                                  const std::function<void()>& grad_fn,
                                  const std::vector<std::string>& param_names,
                                  double h = 1e-5) {
  grad_fn();
  std::map<std::string, Mat> analytic;
  for (const auto& name : param_names) analytic[name] = store.at(name).grad;

  GradCheckResult res;
  for (const auto& name : param_names) {
    ParamSlot& s = store.at(name);
    for (long i = 0; i < s.value.rows(); ++i) {
      for (long j = 0; j < s.value.cols(); ++j) {
        const double keep = s.value(i, j);
        s.value(i, j) = keep + h;
        const double up = loss_fn();
        s.value(i, j) = keep - h;
        const double dn = loss_fn();
        s.value(i, j) = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double an = analytic[name](i, j);
        const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-3});
        const double rel = std::fabs(fd - an) / denom;
        if (rel > res.max_rel_err) {
          res.max_rel_err = rel;
          res.worst_param = name;
          res.worst_index = i * s.value.cols() + j;
        }
      }
    }
  }
  store.zero_grad();
  return res;
}

}  // namespace docee::ad
