#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "docee/util/rng.hpp"

namespace docee::ad {

using Mat = Eigen::MatrixXd;

class Tape;

// Lightweight handle to a node on a Tape. Valid only while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Mat& value() const;
  long rows() const { return value().rows(); }
  long cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
};

// Reverse-mode autodiff over double-precision matrices. One tape per
// forward pass; node creation order is the topological order.
class Tape {
 public:
  Var input(Mat value, bool requires_grad);
  Var constant(Mat value) { return input(std::move(value), false); }
  Var scalar_const(double v) {
    Mat m(1, 1);
    m(0, 0) = v;
    return constant(m);
  }

  const Mat& value(int id) const { return nodes_[id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  // Gradient of the given node after backward(); zero matrix if untouched.
  Mat grad(Var v);

  // Seeds d(root)/d(root) = 1 (root must be 1x1) and sweeps the tape.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;  // empty until first accumulation
    std::function<void()> backward;
    bool requires_grad = false;
  };

  Mat& grad_ref(int id);
  Var make(Mat value, bool requires_grad, std::function<void()> backward);

  std::vector<Node> nodes_;

  friend Var add(Var a, Var b);
  friend Var sub(Var a, Var b);
  friend Var mul(Var a, Var b);
  friend Var scale(Var a, double s);
  friend Var matmul(Var a, Var b);
  friend Var transpose(Var a);
  friend Var relu(Var a);
  friend Var sigmoid(Var a);
  friend Var tanh_(Var a);
  friend Var log_(Var a);
  friend Var clamp(Var a, double lo, double hi);
  friend Var add_rowvec(Var a, Var r);
  friend Var add_colvec(Var a, Var c);
  friend Var concat_rows(const std::vector<Var>& parts);
  friend Var concat_cols(const std::vector<Var>& parts);
  friend Var slice_rows(Var a, int lo, int n);
  friend Var slice_cols(Var a, int lo, int n);
  friend Var gather_rows(Var table, std::vector<int> ids);
  friend Var softmax_rows(Var a);
  friend Var logsumexp_rows(Var a);
  friend Var sum_all(Var a);
  friend Var mean_over_rows(Var a);
  friend Var max_over_rows(Var a);
  friend Var layernorm_rows(Var x, Var gamma, Var beta, double eps);
  friend Var dropout(Var a, double rate, Rng& rng);
};

// ---- elementwise / arithmetic ----
Var add(Var a, Var b);        // same shape
Var sub(Var a, Var b);        // same shape
Var mul(Var a, Var b);        // Hadamard, same shape
Var scale(Var a, double s);
Var matmul(Var a, Var b);     // (m x k) * (k x n)
Var transpose(Var a);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh_(Var a);
Var log_(Var a);
Var clamp(Var a, double lo, double hi);  // gradient passes only where unclamped

// ---- broadcasting adds ----
Var add_rowvec(Var a, Var r);  // (m x n) + (1 x n) to every row
Var add_colvec(Var a, Var c);  // (m x n) + (m x 1) to every column

// ---- structure ----
Var concat_rows(const std::vector<Var>& parts);  // stack vertically
Var concat_cols(const std::vector<Var>& parts);  // stack horizontally
Var slice_rows(Var a, int lo, int n);
Var slice_cols(Var a, int lo, int n);
Var gather_rows(Var table, std::vector<int> ids);  // scatter-add backward

// ---- reductions / normalizations ----
Var softmax_rows(Var a);      // each row sums to 1
Var logsumexp_rows(Var a);    // (m x n) -> (1 x n), collapsing rows
Var sum_all(Var a);           // (m x n) -> (1 x 1)
Var mean_over_rows(Var a);    // (m x n) -> (1 x n)
Var max_over_rows(Var a);     // (m x n) -> (1 x n); ties route to smallest row
Var layernorm_rows(Var x, Var gamma, Var beta, double eps = 1e-5);

// Inverted dropout; draws one mask from rng at construction time.
Var dropout(Var a, double rate, Rng& rng);

}  // namespace docee::ad
