#include "docee/recdec/decoder.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

#include "docee/util/errors.hpp"
#include "docee/util/logging.hpp"

namespace docee::recdec {

namespace {
constexpr double kProbEps = 1e-12;

// Trie over gold key sequences; children keyed by entity index, -1 = NA.
struct TrieNode {
  std::map<int, int> children;  // key -> node index
};

// Child visit order: entity indices ascending, NA last.
std::vector<int> ordered_keys(const TrieNode& n) {
  std::vector<int> keys;
  for (const auto& [k, _] : n.children)
    if (k >= 0) keys.push_back(k);
  if (n.children.count(-1)) keys.push_back(-1);
  return keys;
}
}  // namespace

TrackerMode mode_from_string(const std::string& s) {
  if (s == "full") return TrackerMode::Full;
  if (s == "git-ot") return TrackerMode::GitOt;
  if (s == "git-op") return TrackerMode::GitOp;
  if (s == "git-nt") return TrackerMode::GitNt;
  if (s == "greedy") return TrackerMode::Greedy;
  throw ConfigError("unknown tracker mode: " + s);
}

const char* mode_name(TrackerMode m) {
  switch (m) {
    case TrackerMode::Full: return "full";
    case TrackerMode::GitOt: return "git-ot";
    case TrackerMode::GitOp: return "git-op";
    case TrackerMode::GitNt: return "git-nt";
    case TrackerMode::Greedy: return "greedy";
  }
  return "?";
}

RecordDecoder::RecordDecoder(ad::ParamStore& store, std::string prefix,
                             const RecDecConfig& cfg, int num_types,
                             std::vector<int> roles_per_type, Rng& rng)
    : cfg_(cfg),
      num_types_(num_types),
      roles_per_type_(std::move(roles_per_type)),
      type_emb_(prefix + ".type_emb"),
      na_emb_(prefix + ".na_emb"),
      seg_emb_(prefix + ".seg_emb"),
      cls_w_(prefix + ".cls_w"),
      cls_b_(prefix + ".cls_b"),
      lstm_wx_(prefix + ".lstm_wx"),
      lstm_wh_(prefix + ".lstm_wh"),
      lstm_b_(prefix + ".lstm_b") {
  if (num_types_ < 1 || static_cast<int>(roles_per_type_.size()) != num_types_)
    throw std::runtime_error("recdec: roles_per_type must list every type");
  for (int r : roles_per_type_)
    if (r < 1) throw std::runtime_error("recdec: every type needs >= 1 role");
  ad::init_normal(store.slot(type_emb_, num_types_, cfg.d_m).value, rng, 0.02);
  ad::init_normal(store.slot(na_emb_, 1, cfg.d_m).value, rng, 0.02);
  ad::init_normal(store.slot(seg_emb_, 4, cfg.d_m).value, rng, 0.02);
  ad::init_xavier(store.slot(cls_w_, 1, cfg.d_m).value, rng);
  ad::init_const(store.slot(cls_b_, 1, 1).value, 0.0);
  ad::init_xavier(store.slot(lstm_wx_, 4 * cfg.d_m, cfg.d_m).value, rng);
  ad::init_xavier(store.slot(lstm_wh_, 4 * cfg.d_m, cfg.d_m).value, rng);
  ad::init_const(store.slot(lstm_b_, 1, 4 * cfg.d_m).value, 0.0);
  for (int l = 0; l < cfg.layers; ++l)
    blocks_.emplace_back(store, prefix + ".block" + std::to_string(l), cfg.d_m,
                         cfg.heads, cfg.d_ff, rng);
}

ad::Var RecordDecoder::arg_row(ad::ParamUse& p, ad::Var ents, int key) const {
  if (key < 0) return p.leaf(na_emb_);
  if (key >= ents.rows()) throw std::runtime_error("recdec: entity index out of range");
  return ad::slice_rows(ents, key, 1);
}

ad::Var RecordDecoder::encode_record(ad::ParamUse& p, int type,
                                     const std::vector<ad::Var>& arg_rows) const {
  const int d = cfg_.d_m;
  ad::Tape& tape = p.tape();
  ad::Var wx = p.leaf(lstm_wx_);
  ad::Var wh = p.leaf(lstm_wh_);
  ad::Var b = p.leaf(lstm_b_);
  ad::Var h = tape.constant(ad::Mat::Zero(1, d));
  ad::Var c = tape.constant(ad::Mat::Zero(1, d));
  for (const ad::Var& x : arg_rows) {
    ad::Var gates = ad::add(ad::add(ad::matmul(x, ad::transpose(wx)),
                                    ad::matmul(h, ad::transpose(wh))),
                            b);  // 1 x 4d
    ad::Var i = ad::sigmoid(ad::slice_cols(gates, 0, d));
    ad::Var f = ad::sigmoid(ad::slice_cols(gates, d, d));
    ad::Var g = ad::tanh_(ad::slice_cols(gates, 2 * d, d));
    ad::Var o = ad::sigmoid(ad::slice_cols(gates, 3 * d, d));
    c = ad::add(ad::mul(f, c), ad::mul(i, g));
    h = ad::mul(o, ad::tanh_(c));
  }
  return ad::add(h, ad::gather_rows(p.leaf(type_emb_), {type}));
}

ad::Var RecordDecoder::step_probs(ad::ParamUse& p, ad::Var ents, ad::Var sents,
                                  int type, const std::vector<ad::Var>& path_rows,
                                  const std::vector<ad::Var>& memory,
                                  double dropout_rate, Rng& rng) const {
  const int n_e = static_cast<int>(ents.rows());
  const int n_s = static_cast<int>(sents.rows());
  if (type < 0 || type >= num_types_)
    throw std::runtime_error("recdec: type index out of range");

  std::vector<ad::Var> parts{ents, sents,
                             ad::gather_rows(p.leaf(type_emb_), {type})};
  for (const ad::Var& r : path_rows) parts.push_back(r);
  for (const ad::Var& g : memory) parts.push_back(g);

  std::vector<int> seg_ids;
  seg_ids.insert(seg_ids.end(), static_cast<std::size_t>(n_e), 0);
  seg_ids.insert(seg_ids.end(), static_cast<std::size_t>(n_s), 1);
  seg_ids.insert(seg_ids.end(), 1 + path_rows.size(), 2);
  seg_ids.insert(seg_ids.end(), memory.size(), 3);

  ad::Var x = ad::add(ad::concat_rows(parts),
                      ad::gather_rows(p.leaf(seg_emb_), seg_ids));
  for (const auto& block : blocks_) x = block(p, x, dropout_rate, rng);
  ad::Var ent_rows = ad::slice_rows(x, 0, n_e);
  ad::Var logits = ad::add_rowvec(
      ad::matmul(ent_rows, ad::transpose(p.leaf(cls_w_))), p.leaf(cls_b_));
  return ad::sigmoid(logits);  // n_e x 1
}

ad::Var RecordDecoder::loss(ad::ParamUse& p, ad::Var ents, ad::Var sents,
                            const std::vector<GoldType>& gold, TrackerMode mode,
                            double dropout_rate, Rng& rng) const {
  ad::Tape& tape = p.tape();
  const int n_e = static_cast<int>(ents.rows());
  ad::Var total = tape.scalar_const(0.0);
  std::vector<ad::Var> memory;

  int prev_type = -1;
  for (const auto& gt : gold) {
    if (gt.type <= prev_type)
      throw std::runtime_error("recdec: gold types must be in schema order");
    prev_type = gt.type;
    const int depth = roles_of(gt.type);
    if (gt.records.empty())
      throw std::runtime_error("recdec: gold type without records");

    // Trie over the type's gold key sequences.
    std::vector<TrieNode> trie(1);
    for (const auto& seq : gt.records) {
      if (static_cast<int>(seq.size()) != depth)
        throw std::runtime_error("recdec: gold record length != role count");
      int at = 0;
      for (int key : seq) {
        if (key >= n_e) throw std::runtime_error("recdec: gold key out of range");
        auto it = trie[static_cast<std::size_t>(at)].children.find(key);
        if (it == trie[static_cast<std::size_t>(at)].children.end()) {
          trie.emplace_back();
          at = trie[static_cast<std::size_t>(at)].children[key] =
              static_cast<int>(trie.size()) - 1;
        } else {
          at = it->second;
        }
      }
    }

    if (mode == TrackerMode::GitOt) memory.clear();

    // DFS with teacher forcing; leaves append their encoding to the memory.
    std::vector<ad::Var> path_rows;
    std::vector<int> prefix;
    auto visit = [&](auto&& self, int node) -> void {
      if (static_cast<int>(prefix.size()) == depth) {
        if (mode != TrackerMode::GitNt && mode != TrackerMode::GitOp)
          memory.push_back(encode_record(p, gt.type, path_rows));
        return;
      }
      std::vector<ad::Var> mem_step;
      if (mode == TrackerMode::GitOp) {
        if (!prefix.empty()) mem_step.push_back(encode_record(p, gt.type, path_rows));
      } else if (mode != TrackerMode::GitNt) {
        mem_step = memory;
      }
      ad::Var probs = ad::clamp(
          step_probs(p, ents, sents, gt.type, path_rows, mem_step, dropout_rate, rng),
          kProbEps, 1.0 - kProbEps);

      const TrieNode& tn = trie[static_cast<std::size_t>(node)];
      ad::Mat y = ad::Mat::Zero(n_e, 1), ny = ad::Mat::Ones(n_e, 1);
      for (const auto& [k, _] : tn.children)
        if (k >= 0) {
          y(k, 0) = 1.0;
          ny(k, 0) = 0.0;
        }
      ad::Var pos = ad::mul(tape.constant(y), ad::log_(probs));
      ad::Var neg = ad::mul(
          tape.constant(ny),
          ad::log_(ad::sub(tape.constant(ad::Mat::Ones(n_e, 1)), probs)));
      total = ad::add(total,
                      ad::scale(ad::sum_all(ad::add(pos, neg)), -1.0 / n_e));

      for (int key : ordered_keys(tn)) {
        path_rows.push_back(arg_row(p, ents, key));
        prefix.push_back(key);
        self(self, tn.children.at(key));
        prefix.pop_back();
        path_rows.pop_back();
      }
    };
    visit(visit, 0);
  }
  return total;
}

DecodeResult RecordDecoder::decode(ad::ParamUse& p, ad::Var ents, ad::Var sents,
                                   std::vector<int> types, TrackerMode mode,
                                   const ProbeFn& probe) const {
  std::sort(types.begin(), types.end());
  types.erase(std::unique(types.begin(), types.end()), types.end());

  DecodeResult res;
  Rng no_dropout_rng(0);  // dropout disabled; never drawn from
  std::vector<ad::Var> memory;

  for (int type : types) {
    if (type < 0 || type >= num_types_)
      throw std::runtime_error("recdec: type index out of range");
    if (mode == TrackerMode::GitOt) memory.clear();
    const int depth = roles_of(type);

    std::vector<ad::Var> path_rows;
    std::vector<int> prefix;
    auto visit = [&](auto&& self) -> void {
      if (static_cast<int>(prefix.size()) == depth) {
        PathRecord rec{type, prefix};
        if (std::find(res.records.begin(), res.records.end(), rec) ==
            res.records.end())
          res.records.push_back(rec);
        if (mode != TrackerMode::GitNt && mode != TrackerMode::GitOp)
          memory.push_back(encode_record(p, type, path_rows));
        return;
      }
      std::vector<ad::Var> mem_step;
      if (mode == TrackerMode::GitOp) {
        if (!prefix.empty()) mem_step.push_back(encode_record(p, type, path_rows));
      } else if (mode != TrackerMode::GitNt) {
        mem_step = memory;
      }
      ad::Var pv = step_probs(p, ents, sents, type, path_rows, mem_step, 0.0,
                              no_dropout_rng);
      Eigen::VectorXd probs = pv.value().col(0);
      ++res.stats.nodes;
      if (probe) probe(type, prefix, probs);

      std::vector<int> child;
      for (int e = 0; e < probs.size(); ++e)
        if (probs(e) > cfg_.tau_role) child.push_back(e);
      std::stable_sort(child.begin(), child.end(), [&](int a, int b) {
        if (probs(a) != probs(b)) return probs(a) > probs(b);
        return a < b;
      });
      if (mode == TrackerMode::Greedy && child.size() > 1) child.resize(1);
      if (static_cast<int>(child.size()) > cfg_.b_max) {
        child.resize(static_cast<std::size_t>(cfg_.b_max));
        ++res.stats.capped;
        log::info("recdec: child set capped at b_max=" + std::to_string(cfg_.b_max));
      }
      if (child.empty()) {
        child.push_back(-1);
        ++res.stats.na_fallbacks;
      }
      for (int key : child) {
        path_rows.push_back(arg_row(p, ents, key));
        prefix.push_back(key);
        self(self);
        prefix.pop_back();
        path_rows.pop_back();
      }
    };
    visit(visit);
  }
  return res;
}

}  // namespace docee::recdec
