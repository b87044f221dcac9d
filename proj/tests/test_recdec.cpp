#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "docee/ad/gradcheck.hpp"
#include "docee/recdec/decoder.hpp"
#include "docee/util/rng.hpp"

using docee::Rng;
namespace ad = docee::ad;
namespace recdec = docee::recdec;
using ad::Mat;
using recdec::TrackerMode;

namespace {

Mat randn(long r, long c, Rng& rng) {
  Mat m(r, c);
  ad::init_normal(m, rng, 1.0);
  return m;
}

struct Fixture {
  Rng rng{7};
  ad::ParamStore store;
  recdec::RecDecConfig cfg;
  recdec::RecordDecoder dec;
  Mat ents, sents;
  Rng eval_rng{0};

  Fixture(int n_types, std::vector<int> roles, double tau = 0.5, int b_max = 6)
      : cfg{6, 1, 2, 8, 0.0, tau, b_max},
        dec(store, "rd", cfg, n_types, std::move(roles), rng),
        ents(randn(3, 6, rng)),
        sents(randn(2, 6, rng)) {}

  recdec::DecodeResult decode(std::vector<int> types, TrackerMode mode,
                              const recdec::ProbeFn& probe = nullptr) {
    ad::Tape t;
    ad::ParamUse p(t, store);
    return dec.decode(p, t.constant(ents), t.constant(sents), std::move(types),
                      mode, probe);
  }

  double loss_value(const std::vector<recdec::GoldType>& gold, TrackerMode mode) {
    ad::Tape t;
    ad::ParamUse p(t, store);
    return dec.loss(p, t.constant(ents), t.constant(sents), gold, mode, 0.0,
                    eval_rng)
        .scalar();
  }
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("mode names round trip") {
  for (const char* name : {"full", "git-ot", "git-op", "git-nt", "greedy"})
    CHECK(recdec::mode_name(recdec::mode_from_string(name)) == std::string(name));
  CHECK_THROWS(recdec::mode_from_string("nope"));
}

TEST_CASE("constructor validates the role table") {
  Rng rng(1);
  ad::ParamStore s;
  recdec::RecDecConfig cfg{4, 1, 2, 6, 0.0, 0.5, 6};
  CHECK_THROWS(recdec::RecordDecoder(s, "a", cfg, 2, {3}, rng));
  ad::ParamStore s2;
  CHECK_THROWS(recdec::RecordDecoder(s2, "b", cfg, 1, {0}, rng));
}

TEST_CASE("encode_record matches a hand-rolled lstm recurrence") {
  Fixture f(2, {2, 3});
  const int d = f.cfg.d_m;
  const Mat& wx = f.store.at("rd.lstm_wx").value;
  const Mat& wh = f.store.at("rd.lstm_wh").value;
  const Mat& b = f.store.at("rd.lstm_b").value;
  const Mat& type_emb = f.store.at("rd.type_emb").value;

  // Path rows: entity 1, then the NA embedding.
  Rng tmp(0);
  std::vector<Mat> xs = {f.ents.row(1), f.store.at("rd.na_emb").value};
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(d);
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(d);
  for (const Mat& x : xs) {
    Eigen::RowVectorXd gates = x * wx.transpose() + h * wh.transpose() + b;
    for (int j = 0; j < d; ++j) {
      const double i = sigmoid(gates(j));
      const double fg = sigmoid(gates(d + j));
      const double g = std::tanh(gates(2 * d + j));
      const double o = sigmoid(gates(3 * d + j));
      c(j) = fg * c(j) + i * g;
      h(j) = o * std::tanh(c(j));
    }
  }
  const Eigen::RowVectorXd want = h + type_emb.row(1);

  ad::Tape t;
  ad::ParamUse p(t, f.store);
  ad::Var ents = t.constant(f.ents);
  const Mat got = f.dec
                      .encode_record(p, 1, {ad::slice_rows(ents, 1, 1),
                                            p.leaf("rd.na_emb")})
                      .value();
  CHECK((got.row(0) - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("empty path encodes to the type embedding") {
  Fixture f(2, {2, 2});
  ad::Tape t;
  ad::ParamUse p(t, f.store);
  const Mat got = f.dec.encode_record(p, 0, {}).value();
  CHECK(got == f.store.at("rd.type_emb").value.topRows(1));
}

TEST_CASE("step probabilities are one sigmoid per entity") {
  Fixture f(1, {2});
  ad::Tape t;
  ad::ParamUse p(t, f.store);
  Rng r(0);
  const Mat probs =
      f.dec.step_probs(p, t.constant(f.ents), t.constant(f.sents), 0, {}, {}, 0.0, r)
          .value();
  REQUIRE(probs.rows() == 3);
  REQUIRE(probs.cols() == 1);
  for (long i = 0; i < 3; ++i) {
    CHECK(probs(i, 0) > 0.0);
    CHECK(probs(i, 0) < 1.0);
  }
}

TEST_CASE("loss rejects malformed gold") {
  Fixture f(2, {2, 2});
  // Types out of schema order.
  CHECK_THROWS(f.loss_value({{1, {{0, 1}}}, {0, {{0, 1}}}}, TrackerMode::Full));
  // Record length != role count.
  CHECK_THROWS(f.loss_value({{0, {{0}}}}, TrackerMode::Full));
  // Entity key out of range.
  CHECK_THROWS(f.loss_value({{0, {{0, 9}}}}, TrackerMode::Full));
  // A type with no records.
  CHECK_THROWS(f.loss_value({{0, {}}}, TrackerMode::Full));
  // Duplicate type.
  CHECK_THROWS(f.loss_value({{0, {{0, 1}}}, {0, {{1, 0}}}}, TrackerMode::Full));
}

TEST_CASE("teacher-forced loss matches a step-probs oracle in git-nt mode") {
  Fixture f(1, {2});
  // Gold records [0,1] and [0,-1]: trie root -> {0} -> {1, NA}.
  const std::vector<recdec::GoldType> gold = {{0, {{0, 1}, {0, -1}}}};

  auto mean_bce = [&](const Mat& probs, const std::set<int>& pos) {
    double s = 0.0;
    for (long e = 0; e < probs.rows(); ++e) {
      const double pe = std::min(std::max(probs(e, 0), 1e-12), 1.0 - 1e-12);
      s += pos.count(static_cast<int>(e)) ? -std::log(pe) : -std::log(1.0 - pe);
    }
    return s / static_cast<double>(probs.rows());
  };

  ad::Tape t;
  ad::ParamUse p(t, f.store);
  ad::Var ents = t.constant(f.ents);
  ad::Var sents = t.constant(f.sents);
  Rng r(0);
  const Mat root = f.dec.step_probs(p, ents, sents, 0, {}, {}, 0.0, r).value();
  const Mat after0 =
      f.dec.step_probs(p, ents, sents, 0, {ad::slice_rows(ents, 0, 1)}, {}, 0.0, r)
          .value();
  const double want = mean_bce(root, {0}) + mean_bce(after0, {1});
  CHECK(f.loss_value(gold, TrackerMode::GitNt) ==
        doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("memory regimes give different losses on multi-record gold") {
  Fixture f(2, {2, 2});
  const std::vector<recdec::GoldType> gold = {{0, {{0, 1}, {2, -1}}},
                                              {1, {{1, 2}}}};
  const double full = f.loss_value(gold, TrackerMode::Full);
  const double ot = f.loss_value(gold, TrackerMode::GitOt);
  const double op = f.loss_value(gold, TrackerMode::GitOp);
  const double nt = f.loss_value(gold, TrackerMode::GitNt);
  CHECK(full != nt);
  CHECK(full != op);
  CHECK(ot != nt);
  // Greedy trains exactly as Full.
  CHECK(f.loss_value(gold, TrackerMode::Greedy) == full);
}

TEST_CASE("full and git-ot agree within the first type") {
  Fixture f(2, {2, 2});
  // One type only: clearing at type start is a no-op.
  const std::vector<recdec::GoldType> gold = {{0, {{0, 1}, {2, -1}}}};
  CHECK(f.loss_value(gold, TrackerMode::Full) ==
        f.loss_value(gold, TrackerMode::GitOt));
}

TEST_CASE("root expansion sees empty memory in every mode") {
  Fixture f(1, {1}, 0.99);  // depth 1, nothing clears tau
  std::vector<Eigen::VectorXd> roots;
  for (TrackerMode m : {TrackerMode::Full, TrackerMode::GitOt, TrackerMode::GitOp,
                        TrackerMode::GitNt}) {
    f.decode({0}, m, [&](int type, const std::vector<int>& prefix,
                         const Eigen::VectorXd& probs) {
      if (prefix.empty()) roots.push_back(probs);
    });
  }
  REQUIRE(roots.size() == 4);
  for (std::size_t i = 1; i < roots.size(); ++i) CHECK(roots[0] == roots[i]);
}

TEST_CASE("decode with an impossible threshold yields one all-null record") {
  Fixture f(1, {3}, 0.999999);
  const auto res = f.decode({0}, TrackerMode::Full);
  REQUIRE(res.records.size() == 1);
  CHECK(res.records[0].type == 0);
  CHECK(res.records[0].args == std::vector<int>{-1, -1, -1});
  CHECK(res.stats.nodes == 3);
  CHECK(res.stats.na_fallbacks == 3);
  CHECK(res.stats.capped == 0);
}

TEST_CASE("decode with a permissive threshold branches and caps at b_max") {
  Fixture f(1, {2}, 1e-9, 2);  // every entity clears tau; keep 2 per node
  const auto res = f.decode({0}, TrackerMode::Full);
  // Root keeps 2 of 3 entities (capped), each child again 2 of 3.
  CHECK(res.stats.nodes == 3);
  CHECK(res.stats.capped == 3);
  CHECK(res.records.size() == 4);
  std::set<std::vector<int>> uniq;
  for (const auto& r : res.records) {
    CHECK(r.args.size() == 2);
    for (int a : r.args) CHECK(a >= 0);
    uniq.insert(r.args);
  }
  CHECK(uniq.size() == res.records.size());  // no duplicates survive
}

TEST_CASE("greedy decoding follows the single best child") {
  Fixture f(1, {2}, 1e-9);
  std::vector<Eigen::VectorXd> probes;
  const auto res = f.decode({0}, TrackerMode::Greedy,
                            [&](int, const std::vector<int>&,
                                const Eigen::VectorXd& probs) {
                              probes.push_back(probs);
                            });
  REQUIRE(res.records.size() == 1);
  REQUIRE(probes.size() == 2);
  for (std::size_t t = 0; t < 2; ++t) {
    int best = 0;
    for (int e = 1; e < probes[t].size(); ++e)
      if (probes[t](e) > probes[t](best)) best = e;
    CHECK(res.records[0].args[t] == best);
  }
  CHECK(res.stats.capped == 0);
}

TEST_CASE("decode sorts, dedupes, and validates requested types") {
  Fixture f(2, {1, 1}, 0.9999);
  std::vector<int> seen;
  f.decode({1, 0, 1}, TrackerMode::Full,
           [&](int type, const std::vector<int>&, const Eigen::VectorXd&) {
             seen.push_back(type);
           });
  CHECK(seen == std::vector<int>{0, 1});
  CHECK_THROWS(f.decode({5}, TrackerMode::Full));
}

TEST_CASE("single-type decode is identical under full and git-ot") {
  Fixture f(1, {2}, 0.3, 3);
  const auto a = f.decode({0}, TrackerMode::Full);
  const auto b = f.decode({0}, TrackerMode::GitOt);
  CHECK(a.records == b.records);
  CHECK(a.stats.nodes == b.stats.nodes);
  CHECK(a.stats.capped == b.stats.capped);
  CHECK(a.stats.na_fallbacks == b.stats.na_fallbacks);
}

TEST_CASE("loss gradcheck through the tracker, lstm, and blocks") {
  Fixture f(2, {2, 2});
  const std::vector<recdec::GoldType> gold = {{0, {{0, 1}, {0, -1}}},
                                              {1, {{2, -1}}}};
  std::vector<std::string> names;
  for (const auto& [name, slot] : f.store.slots()) names.push_back(name);

  auto loss = [&]() { return f.loss_value(gold, TrackerMode::Full); };
  auto grads = [&]() {
    f.store.zero_grad();
    ad::Tape t;
    ad::ParamUse p(t, f.store);
    Rng r(0);
    ad::Var l = f.dec.loss(p, t.constant(f.ents), t.constant(f.sents), gold,
                           TrackerMode::Full, 0.0, r);
    t.backward(l);
    p.flush_grads();
  };
  CHECK(ad::grad_check(f.store, loss, grads, names).max_rel_err < 1e-5);
}

TEST_CASE("decoder overfits one gold tree") {
  Fixture f(1, {2}, 0.5);
  const std::vector<recdec::GoldType> gold = {{0, {{0, 1}, {2, -1}}}};
  for (int step = 0; step < 400; ++step) {
    ad::Tape t;
    ad::ParamUse p(t, f.store);
    Rng r(0);
    ad::Var l = f.dec.loss(p, t.constant(f.ents), t.constant(f.sents), gold,
                           TrackerMode::Full, 0.0, r);
    t.backward(l);
    p.flush_grads();
    f.store.adam_step({0.01, 0.9, 0.999, 1e-8});
  }
  const auto res = f.decode({0}, TrackerMode::Full);
  std::set<std::vector<int>> got;
  for (const auto& r : res.records) got.insert(r.args);
  CHECK(got == std::set<std::vector<int>>{{0, 1}, {2, -1}});
}
