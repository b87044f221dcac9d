#include "docee/ad/params.hpp"

#include <cmath>
#include <stdexcept>

namespace docee::ad {

ParamSlot& ParamStore::slot(const std::string& name, long rows, long cols) {
  auto it = slots_.find(name);
  if (it == slots_.end()) {
    ParamSlot s;
    s.value = Mat::Zero(rows, cols);
    s.grad = Mat::Zero(rows, cols);
    s.adam_m = Mat::Zero(rows, cols);
    s.adam_v = Mat::Zero(rows, cols);
    it = slots_.emplace(name, std::move(s)).first;
  } else if (it->second.value.rows() != rows || it->second.value.cols() != cols) {
    throw std::invalid_argument("parameter shape mismatch for " + name);
  }
  return it->second;
}

ParamSlot& ParamStore::at(const std::string& name) {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw std::out_of_range("unknown parameter " + name);
  return it->second;
}

const ParamSlot& ParamStore::at(const std::string& name) const {
  auto it = slots_.find(name);
  if (it == slots_.end()) throw std::out_of_range("unknown parameter " + name);
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [name, s] : slots_) s.grad.setZero();
}

std::size_t ParamStore::grad_nonzero_params() const {
  std::size_t n = 0;
  for (const auto& [name, s] : slots_)
    if (s.grad.cwiseAbs().maxCoeff() > 0.0) ++n;
  return n;
}

void ParamStore::adam_step(const AdamConfig& cfg, double grad_scale) {
  ++adam_t_;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam_t_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam_t_));
  for (auto& [name, s] : slots_) {
    Mat g = s.grad * grad_scale;
    s.adam_m = cfg.beta1 * s.adam_m + (1.0 - cfg.beta1) * g;
    s.adam_v = cfg.beta2 * s.adam_v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    Mat mhat = s.adam_m / bc1;
    Mat vhat = s.adam_v / bc2;
    s.value.array() -= cfg.lr * mhat.array() / (vhat.array().sqrt() + cfg.eps);
    s.grad.setZero();
  }
}

Var ParamUse::leaf(const std::string& name) {
  auto hit = cache_.find(name);
  if (hit != cache_.end()) return Var{tape_, hit->second};
  ParamSlot& s = store_->at(name);
  Var v = tape_->input(s.value, true);
  used_.emplace_back(v, &s);
  cache_.emplace(name, v.id);
  return v;
}

void ParamUse::flush_grads() {
  for (auto& [var, slot] : used_) slot->grad += tape_->grad(var);
}

void init_xavier(Mat& w, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (long i = 0; i < w.rows(); ++i)
    for (long j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
}

void init_normal(Mat& w, Rng& rng, double stddev) {
  for (long i = 0; i < w.rows(); ++i)
    for (long j = 0; j < w.cols(); ++j) w(i, j) = rng.normal(0.0, stddev);
}

void init_const(Mat& w, double v) { w.setConstant(v); }

}  // namespace docee::ad
