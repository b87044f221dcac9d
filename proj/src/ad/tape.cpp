#include "docee/ad/tape.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace docee::ad {

const Mat& Var::value() const { return tape->value(id); }

Var Tape::input(Mat value, bool requires_grad) {
  return make(std::move(value), requires_grad, nullptr);
}

Var Tape::make(Mat value, bool requires_grad, std::function<void()> backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Mat& Tape::grad_ref(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Mat Tape::grad(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.value().rows() != 1 || root.value().cols() != 1)
    throw std::invalid_argument("backward: root must be a 1x1 scalar");
  grad_ref(root.id)(0, 0) += 1.0;
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward) continue;
    if (n.grad.size() == 0) continue;  // never reached from the root
    n.backward();
  }
}

namespace {

bool same_shape(const Var& a, const Var& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

[[noreturn]] void shape_error(const char* op) {
  throw std::invalid_argument(std::string("shape mismatch in op ") + op);
}

}  // namespace

Var add(Var a, Var b) {
  if (!same_shape(a, b)) shape_error("add");
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  Var out = t.make(a.value() + b.value(), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, b, out] {
      const Mat& g = t.grad_ref(out.id);
      if (t.requires_grad(a.id)) t.grad_ref(a.id) += g;
      if (t.requires_grad(b.id)) t.grad_ref(b.id) += g;
    };
  }
  return out;
}

Var sub(Var a, Var b) {
  if (!same_shape(a, b)) shape_error("sub");
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  Var out = t.make(a.value() - b.value(), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, b, out] {
      const Mat& g = t.grad_ref(out.id);
      if (t.requires_grad(a.id)) t.grad_ref(a.id) += g;
      if (t.requires_grad(b.id)) t.grad_ref(b.id) -= g;
    };
  }
  return out;
}

Var mul(Var a, Var b) {
  if (!same_shape(a, b)) shape_error("mul");
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  Var out = t.make(a.value().cwiseProduct(b.value()), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, b, out] {
      const Mat& g = t.grad_ref(out.id);
      if (t.requires_grad(a.id)) t.grad_ref(a.id) += g.cwiseProduct(t.value(b.id));
      if (t.requires_grad(b.id)) t.grad_ref(b.id) += g.cwiseProduct(t.value(a.id));
    };
  }
  return out;
}

Var scale(Var a, double s) {
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Var out = t.make(a.value() * s, rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out, s] { t.grad_ref(a.id) += t.grad_ref(out.id) * s; };
  }
  return out;
}

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) shape_error("matmul");
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  Var out = t.make(a.value() * b.value(), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, b, out] {
      const Mat& g = t.grad_ref(out.id);
      if (t.requires_grad(a.id)) t.grad_ref(a.id).noalias() += g * t.value(b.id).transpose();
      if (t.requires_grad(b.id)) t.grad_ref(b.id).noalias() += t.value(a.id).transpose() * g;
    };
  }
  return out;
}

Var transpose(Var a) {
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Var out = t.make(a.value().transpose(), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out] {
      t.grad_ref(a.id) += t.grad_ref(out.id).transpose();
    };
  }
  return out;
}

Var relu(Var a) {
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Var out = t.make(a.value().cwiseMax(0.0), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out] {
      const Mat& x = t.value(a.id);
      const Mat& g = t.grad_ref(out.id);
      t.grad_ref(a.id) += (x.array() > 0.0).cast<double>().matrix().cwiseProduct(g);
    };
  }
  return out;
}

Var sigmoid(Var a) {
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Mat y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  Var out = t.make(std::move(y), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out] {
      const Mat& y = t.value(out.id);
      const Mat& g = t.grad_ref(out.id);
      t.grad_ref(a.id) += g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix()));
    };
  }
  return out;
}

Var tanh_(Var a) {
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Var out = t.make(a.value().array().tanh().matrix(), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out] {
      const Mat& y = t.value(out.id);
      const Mat& g = t.grad_ref(out.id);
      t.grad_ref(a.id) += g.cwiseProduct((1.0 - y.array().square()).matrix());
    };
  }
  return out;
}

Var log_(Var a) {
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Var out = t.make(a.value().array().log().matrix(), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out] {
      const Mat& g = t.grad_ref(out.id);
      t.grad_ref(a.id) += g.cwiseQuotient(t.value(a.id));
    };
  }
  return out;
}

Var clamp(Var a, double lo, double hi) {
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Var out = t.make(a.value().cwiseMax(lo).cwiseMin(hi), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out, lo, hi] {
      const Mat& x = t.value(a.id);
      const Mat& g = t.grad_ref(out.id);
      Mat pass = ((x.array() > lo) && (x.array() < hi)).cast<double>().matrix();
      t.grad_ref(a.id) += g.cwiseProduct(pass);
    };
  }
  return out;
}

Var add_rowvec(Var a, Var r) {
  if (r.rows() != 1 || r.cols() != a.cols()) shape_error("add_rowvec");
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id) || t.requires_grad(r.id);
  Mat y = a.value();
  y.rowwise() += r.value().row(0);
  Var out = t.make(std::move(y), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, r, out] {
      const Mat& g = t.grad_ref(out.id);
      if (t.requires_grad(a.id)) t.grad_ref(a.id) += g;
      if (t.requires_grad(r.id)) t.grad_ref(r.id) += g.colwise().sum();
    };
  }
  return out;
}

Var add_colvec(Var a, Var c) {
  if (c.cols() != 1 || c.rows() != a.rows()) shape_error("add_colvec");
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id) || t.requires_grad(c.id);
  Mat y = a.value();
  y.colwise() += c.value().col(0);
  Var out = t.make(std::move(y), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, c, out] {
      const Mat& g = t.grad_ref(out.id);
      if (t.requires_grad(a.id)) t.grad_ref(a.id) += g;
      if (t.requires_grad(c.id)) t.grad_ref(c.id) += g.rowwise().sum();
    };
  }
  return out;
}

Var concat_rows(const std::vector<Var>& parts) {
  assert(!parts.empty());
  Tape& t = *parts.front().tape;
  long rows = 0;
  const long cols = parts.front().cols();
  bool rg = false;
  for (const Var& p : parts) {
    if (p.cols() != cols) shape_error("concat_rows");
    rows += p.rows();
    rg = rg || t.requires_grad(p.id);
  }
  Mat y(rows, cols);
  long at = 0;
  for (const Var& p : parts) {
    y.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  Var out = t.make(std::move(y), rg, nullptr);
  if (rg) {
    std::vector<Var> ps = parts;
    t.nodes_[out.id].backward = [&t, ps, out] {
      const Mat& g = t.grad_ref(out.id);
      long at = 0;
      for (const Var& p : ps) {
        if (t.requires_grad(p.id)) t.grad_ref(p.id) += g.middleRows(at, p.rows());
        at += p.rows();
      }
    };
  }
  return out;
}

Var concat_cols(const std::vector<Var>& parts) {
  assert(!parts.empty());
  Tape& t = *parts.front().tape;
  long cols = 0;
  const long rows = parts.front().rows();
  bool rg = false;
  for (const Var& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols");
    cols += p.cols();
    rg = rg || t.requires_grad(p.id);
  }
  Mat y(rows, cols);
  long at = 0;
  for (const Var& p : parts) {
    y.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  Var out = t.make(std::move(y), rg, nullptr);
  if (rg) {
    std::vector<Var> ps = parts;
    t.nodes_[out.id].backward = [&t, ps, out] {
      const Mat& g = t.grad_ref(out.id);
      long at = 0;
      for (const Var& p : ps) {
        if (t.requires_grad(p.id)) t.grad_ref(p.id) += g.middleCols(at, p.cols());
        at += p.cols();
      }
    };
  }
  return out;
}

Var slice_rows(Var a, int lo, int n) {
  if (lo < 0 || n < 0 || lo + n > a.rows()) shape_error("slice_rows");
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Var out = t.make(a.value().middleRows(lo, n), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out, lo, n] {
      t.grad_ref(a.id).middleRows(lo, n) += t.grad_ref(out.id);
    };
  }
  return out;
}

Var slice_cols(Var a, int lo, int n) {
  if (lo < 0 || n < 0 || lo + n > a.cols()) shape_error("slice_cols");
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Var out = t.make(a.value().middleCols(lo, n), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out, lo, n] {
      t.grad_ref(a.id).middleCols(lo, n) += t.grad_ref(out.id);
    };
  }
  return out;
}

Var gather_rows(Var table, std::vector<int> ids) {
  Tape& t = *table.tape;
  bool rg = t.requires_grad(table.id);
  Mat y(static_cast<long>(ids.size()), table.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || ids[r] >= table.rows()) shape_error("gather_rows");
    y.row(static_cast<long>(r)) = table.value().row(ids[r]);
  }
  Var out = t.make(std::move(y), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, table, out, ids = std::move(ids)] {
      const Mat& g = t.grad_ref(out.id);
      Mat& gt = t.grad_ref(table.id);
      for (std::size_t r = 0; r < ids.size(); ++r) gt.row(ids[r]) += g.row(static_cast<long>(r));
    };
  }
  return out;
}

Var softmax_rows(Var a) {
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Mat y = a.value();
  for (long i = 0; i < y.rows(); ++i) {
    const double m = y.row(i).maxCoeff();
    Eigen::ArrayXd e = (y.row(i).array() - m).exp();
    y.row(i) = (e / e.sum()).matrix();
  }
  Var out = t.make(std::move(y), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out] {
      const Mat& y = t.value(out.id);
      const Mat& g = t.grad_ref(out.id);
      Mat& ga = t.grad_ref(a.id);
      for (long i = 0; i < y.rows(); ++i) {
        const double dot = g.row(i).dot(y.row(i));
        ga.row(i) += (y.row(i).array() * (g.row(i).array() - dot)).matrix();
      }
    };
  }
  return out;
}

Var logsumexp_rows(Var a) {
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Mat y(1, a.cols());
  for (long j = 0; j < a.cols(); ++j) {
    const double m = a.value().col(j).maxCoeff();
    y(0, j) = m + std::log((a.value().col(j).array() - m).exp().sum());
  }
  Var out = t.make(std::move(y), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out] {
      const Mat& x = t.value(a.id);
      const Mat& y = t.value(out.id);
      const Mat& g = t.grad_ref(out.id);
      Mat& ga = t.grad_ref(a.id);
      for (long j = 0; j < x.cols(); ++j)
        ga.col(j) += ((x.col(j).array() - y(0, j)).exp() * g(0, j)).matrix();
    };
  }
  return out;
}

Var sum_all(Var a) {
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Mat y(1, 1);
  y(0, 0) = a.value().sum();
  Var out = t.make(std::move(y), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out] {
      t.grad_ref(a.id).array() += t.grad_ref(out.id)(0, 0);
    };
  }
  return out;
}

Var mean_over_rows(Var a) {
  if (a.rows() == 0) shape_error("mean_over_rows");
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Var out = t.make(a.value().colwise().mean(), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out] {
      const Mat& g = t.grad_ref(out.id);
      const double inv = 1.0 / static_cast<double>(a.rows());
      t.grad_ref(a.id).rowwise() += (g.row(0) * inv);
    };
  }
  return out;
}

Var max_over_rows(Var a) {
  if (a.rows() == 0) shape_error("max_over_rows");
  Tape& t = *a.tape;
  bool rg = t.requires_grad(a.id);
  Mat y(1, a.cols());
  std::vector<int> arg(static_cast<std::size_t>(a.cols()));
  for (long j = 0; j < a.cols(); ++j) {
    long best = 0;
    for (long i = 1; i < a.rows(); ++i)
      if (a.value()(i, j) > a.value()(best, j)) best = i;
    y(0, j) = a.value()(best, j);
    arg[static_cast<std::size_t>(j)] = static_cast<int>(best);
  }
  Var out = t.make(std::move(y), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out, arg = std::move(arg)] {
      const Mat& g = t.grad_ref(out.id);
      Mat& ga = t.grad_ref(a.id);
      for (long j = 0; j < ga.cols(); ++j) ga(arg[static_cast<std::size_t>(j)], j) += g(0, j);
    };
  }
  return out;
}

Var layernorm_rows(Var x, Var gamma, Var beta, double eps) {
  if (gamma.rows() != 1 || gamma.cols() != x.cols() || beta.rows() != 1 || beta.cols() != x.cols())
    shape_error("layernorm_rows");
  Tape& t = *x.tape;
  bool rg = t.requires_grad(x.id) || t.requires_grad(gamma.id) || t.requires_grad(beta.id);
  const long d = x.cols();
  Mat xhat(x.rows(), d);
  Eigen::VectorXd inv_std(x.rows());
  for (long i = 0; i < x.rows(); ++i) {
    const double mu = x.value().row(i).mean();
    const double var = (x.value().row(i).array() - mu).square().mean();
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std(i) = is;
    xhat.row(i) = ((x.value().row(i).array() - mu) * is).matrix();
  }
  Mat y = xhat;
  y.array().rowwise() *= gamma.value().row(0).array();
  y.rowwise() += beta.value().row(0);
  Var out = t.make(std::move(y), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, x, gamma, beta, out, xhat = std::move(xhat),
                                 inv_std = std::move(inv_std), d] {
      const Mat& g = t.grad_ref(out.id);
      if (t.requires_grad(beta.id)) t.grad_ref(beta.id) += g.colwise().sum();
      if (t.requires_grad(gamma.id)) t.grad_ref(gamma.id) += g.cwiseProduct(xhat).colwise().sum();
      if (t.requires_grad(x.id)) {
        Mat& gx = t.grad_ref(x.id);
        for (long i = 0; i < g.rows(); ++i) {
          Eigen::RowVectorXd gy = g.row(i).cwiseProduct(t.value(gamma.id).row(0));
          const double mean_gy = gy.mean();
          const double mean_gy_xhat = gy.cwiseProduct(xhat.row(i)).mean();
          gx.row(i) += (inv_std(i) *
                        (gy.array() - mean_gy - xhat.row(i).array() * mean_gy_xhat))
                           .matrix();
        }
        (void)d;
      }
    };
  }
  return out;
}

Var dropout(Var a, double rate, Rng& rng) {
  Tape& t = *a.tape;
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("dropout rate must be < 1");
  const double keep = 1.0 - rate;
  Mat mask(a.rows(), a.cols());
  for (long i = 0; i < mask.rows(); ++i)
    for (long j = 0; j < mask.cols(); ++j) mask(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
  bool rg = t.requires_grad(a.id);
  Var out = t.make(a.value().cwiseProduct(mask), rg, nullptr);
  if (rg) {
    t.nodes_[out.id].backward = [&t, a, out, mask = std::move(mask)] {
      t.grad_ref(a.id) += t.grad_ref(out.id).cwiseProduct(mask);
    };
  }
  return out;
}

}  // namespace docee::ad
