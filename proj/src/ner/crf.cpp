#include "docee/ner/crf.hpp"

#include <cassert>
#include <stdexcept>

namespace docee::ner {

CrfHead::CrfHead(ad::ParamStore& store, std::string prefix, int d_m,
                 int num_labels, Rng& rng)
    : d_m_(d_m),
      num_labels_(num_labels),
      w_(prefix + ".emit_w"),
      b_(prefix + ".emit_b"),
      trans_(prefix + ".trans"),
      start_(prefix + ".start"),
      stop_(prefix + ".stop") {
  ad::init_xavier(store.slot(w_, num_labels, d_m).value, rng);
  ad::init_const(store.slot(b_, 1, num_labels).value, 0.0);
  ad::init_normal(store.slot(trans_, num_labels, num_labels).value, rng, 0.01);
  ad::init_const(store.slot(start_, 1, num_labels).value, 0.0);
  ad::init_const(store.slot(stop_, 1, num_labels).value, 0.0);
}

ad::Var CrfHead::emissions(ad::ParamUse& p, ad::Var token_reps) const {
  return ad::add_rowvec(ad::matmul(token_reps, ad::transpose(p.leaf(w_))),
                        p.leaf(b_));
}

ad::Var CrfHead::nll(ad::ParamUse& p, ad::Var token_reps,
                     const std::vector<int>& labels) const {
  const int len = static_cast<int>(labels.size());
  const int L = num_labels_;
  assert(len >= 1 && token_reps.rows() == len);
  for (int y : labels)
    if (y < 0 || y >= L) throw std::runtime_error("crf: label out of range");

  ad::Tape& tape = p.tape();
  ad::Var em = emissions(p, token_reps);  // len x L
  ad::Var trans = p.leaf(trans_);
  ad::Var start = p.leaf(start_);
  ad::Var stop = p.leaf(stop_);

  // alpha recurrence: alpha_t(j) = em_t(j) + LSE_k(alpha_{t-1}(k) + T(k,j)).
  ad::Var alpha = ad::add(ad::slice_rows(em, 0, 1), start);  // 1 x L
  for (int t = 1; t < len; ++t) {
    ad::Var scores = ad::add_colvec(trans, ad::transpose(alpha));  // L x L
    alpha = ad::add(ad::slice_rows(em, t, 1), ad::logsumexp_rows(scores));
  }
  ad::Var log_z = ad::logsumexp_rows(ad::transpose(ad::add(alpha, stop)));  // 1x1

  // Gold path score via constant indicator masks.
  Eigen::MatrixXd em_ind = Eigen::MatrixXd::Zero(len, L);
  Eigen::MatrixXd tr_ind = Eigen::MatrixXd::Zero(L, L);
  Eigen::MatrixXd st_ind = Eigen::MatrixXd::Zero(1, L);
  Eigen::MatrixXd sp_ind = Eigen::MatrixXd::Zero(1, L);
  for (int t = 0; t < len; ++t) em_ind(t, labels[static_cast<std::size_t>(t)]) = 1.0;
  for (int t = 1; t < len; ++t)
    tr_ind(labels[static_cast<std::size_t>(t - 1)], labels[static_cast<std::size_t>(t)]) += 1.0;
  st_ind(0, labels[0]) = 1.0;
  sp_ind(0, labels[static_cast<std::size_t>(len - 1)]) = 1.0;

  ad::Var gold = ad::sum_all(ad::mul(em, tape.constant(em_ind)));
  gold = ad::add(gold, ad::sum_all(ad::mul(trans, tape.constant(tr_ind))));
  gold = ad::add(gold, ad::sum_all(ad::mul(start, tape.constant(st_ind))));
  gold = ad::add(gold, ad::sum_all(ad::mul(stop, tape.constant(sp_ind))));
  return ad::sub(log_z, gold);
}

std::vector<int> CrfHead::viterbi(const ad::ParamStore& store,
                                  const Eigen::MatrixXd& token_reps) const {
  const int len = static_cast<int>(token_reps.rows());
  const int L = num_labels_;
  assert(len >= 1);
  const Eigen::MatrixXd& w = store.at(w_).value;
  const Eigen::MatrixXd& b = store.at(b_).value;
  const Eigen::MatrixXd& trans = store.at(trans_).value;
  const Eigen::MatrixXd& start = store.at(start_).value;
  const Eigen::MatrixXd& stop = store.at(stop_).value;

  Eigen::MatrixXd em = token_reps * w.transpose();
  em.rowwise() += b.row(0);

  // Backward DP over suffix scores, then a forward greedy reconstruction:
  // picking the smallest arg max at each step yields the lexicographically
  // smallest optimal sequence.
  Eigen::MatrixXd beta(len, L);
  beta.row(len - 1) = em.row(len - 1) + stop.row(0);
  for (int t = len - 2; t >= 0; --t)
    for (int j = 0; j < L; ++j) {
      double best = trans(j, 0) + beta(t + 1, 0);
      for (int k = 1; k < L; ++k)
        best = std::max(best, trans(j, k) + beta(t + 1, k));
      beta(t, j) = em(t, j) + best;
    }

  std::vector<int> out(static_cast<std::size_t>(len));
  int y = 0;
  double best = start(0, 0) + beta(0, 0);
  for (int j = 1; j < L; ++j) {
    const double s = start(0, j) + beta(0, j);
    if (s > best) {
      best = s;
      y = j;
    }
  }
  out[0] = y;
  for (int t = 1; t < len; ++t) {
    int next = 0;
    double score = trans(y, 0) + beta(t, 0);
    for (int k = 1; k < L; ++k) {
      const double s = trans(y, k) + beta(t, k);
      if (s > score) {
        score = s;
        next = k;
      }
    }
    y = next;
    out[static_cast<std::size_t>(t)] = y;
  }
  return out;
}

ExtractResult extract_mentions(const std::vector<std::vector<int>>& labels,
                               const std::vector<std::vector<std::string>>& sentences,
                               const corpus::BioScheme& scheme) {
  assert(labels.size() == sentences.size());
  ExtractResult res;
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const auto& row = labels[s];
    const auto& toks = sentences[s];
    int open_start = -1;
    int open_kind = -1;
    auto close = [&](int end) {
      if (open_start < 0) return;
      corpus::EntityMention m;
      m.sentence_index = static_cast<int>(s);
      m.start = open_start;
      m.end = end;
      m.kind = open_kind;
      for (int t = open_start; t < end; ++t)
        m.surface += toks[static_cast<std::size_t>(t)];
      res.mentions.push_back(std::move(m));
      open_start = -1;
      open_kind = -1;
    };
    for (int t = 0; t < static_cast<int>(row.size()); ++t) {
      const int y = row[static_cast<std::size_t>(t)];
      if (scheme.is_b(y)) {
        close(t);
        open_start = t;
        open_kind = scheme.kind_of(y);
      } else if (scheme.is_i(y)) {
        const int k = scheme.kind_of(y);
        if (open_start < 0 || open_kind != k) {
          close(t);
          open_start = t;
          open_kind = k;
          ++res.repaired;
        }
      } else {
        close(t);
      }
    }
    close(static_cast<int>(row.size()));
  }
  return res;
}

}  // namespace docee::ner
