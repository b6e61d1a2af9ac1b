/*
 * Copyright 2026 The hte Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "hte/forest.hpp"

#include <algorithm>
#include <cmath>

#include "hte/error.hpp"
#include "hte/parallel.hpp"
#include "hte/rng.hpp"
#include "hte/util.hpp"

namespace hte {

namespace {

constexpr uint64_t kGroupTag = 0x67726f7570;
constexpr uint64_t kTreeTag = 0x74726565;
constexpr uint64_t kNuisanceOutcomeTag = 0x6d686174;
constexpr uint64_t kNuisanceTreatTag = 0x65686174;

// A split must strictly beat the unsplit node's heterogeneity score.
constexpr double kMinGain = 1e-10;

double safe_midpoint(double lo, double hi) {
  // lo < hi; pick a threshold with lo <= t < hi so `x <= t` maps the observed
  // lower block left even when the midpoint rounds.
  double mid = lo + (hi - lo) / 2.0;
  if (!(mid >= lo)) mid = lo;
  if (mid >= hi) mid = lo;
  return mid;
}

// Shared read-only fitting inputs.
struct GrowContext {
  const ColumnMatrix* x = nullptr;
  std::span<const double> resp;         // (possibly centered) target
  std::span<const uint8_t> treat;       // empty => regression tree
  std::span<const double> treat_resid;  // w - e_hat; non-empty only when centering
  std::span<const double> unit_weight;  // 1 / (e_hat (1 - e_hat)), clipped
  // Orthogonalized per-unit effect signal nu * y~ * w~ (centered fits);
  // E[pseudo | x] = tau(x), so heterogeneity splits reduce to CART on it.
  std::span<const double> pseudo;
  std::span<const int32_t> clusters;
  const ForestConfig* config = nullptr;
  uint32_t mtry = 0;
  size_t n = 0;
  size_t p = 0;
  std::vector<uint32_t> global_order;  // p blocks of n, each sorted by value

  bool causal() const { return !treat.empty(); }
  bool centered() const { return !treat_resid.empty(); }
};

void build_global_order(GrowContext* ctx) {
  ctx->global_order.resize(ctx->p * ctx->n);
  for (size_t f = 0; f < ctx->p; ++f) {
    uint32_t* block = ctx->global_order.data() + f * ctx->n;
    for (size_t i = 0; i < ctx->n; ++i) block[i] = static_cast<uint32_t>(i);
    const std::vector<double>& col = (*ctx->x)[f];
    std::stable_sort(block, block + ctx->n,
                     [&col](uint32_t a, uint32_t b) { return col[a] < col[b]; });
  }
}

struct NodeEstStats {
  uint32_t c1 = 0, c0 = 0;
  double s1 = 0, comp1 = 0, s0 = 0, comp0 = 0;
  double min1 = 0, max1 = 0, min0 = 0, max0 = 0;
  // Partialling-out accumulators (centered fits): weighted sums of y~ * w~
  // and w~^2. The 1/(e(1-e)) weight undoes the propensity-variance tilt of
  // the plain ratio, so a node estimates the unweighted mean effect of its
  // estimation sample.
  double num = 0, den = 0;

  void add_residual_product(double y_resid, double w_resid, double weight) {
    num += weight * y_resid * w_resid;
    den += weight * w_resid * w_resid;
  }

  void add(double v, bool treated) {
    if (treated) {
      if (c1 == 0) {
        min1 = max1 = v;
      } else {
        min1 = std::min(min1, v);
        max1 = std::max(max1, v);
      }
      ++c1;
      double t = s1 + v;
      comp1 += (std::abs(s1) >= std::abs(v)) ? (s1 - t) + v : (v - t) + s1;
      s1 = t;
    } else {
      if (c0 == 0) {
        min0 = max0 = v;
      } else {
        min0 = std::min(min0, v);
        max0 = std::max(max0, v);
      }
      ++c0;
      double t = s0 + v;
      comp0 += (std::abs(s0) >= std::abs(v)) ? (s0 - t) + v : (v - t) + s0;
      s0 = t;
    }
  }

  double mean1() const {
    return min1 == max1 ? min1 : (s1 + comp1) / static_cast<double>(c1);
  }
  double mean0() const {
    return min0 == max0 ? min0 : (s0 + comp0) / static_cast<double>(c0);
  }
};

struct Workspace {
  std::vector<uint8_t> role;        // n: 0 out, 1 structure, 2 estimation
  std::vector<uint8_t> side;        // n: scratch split routing
  std::vector<uint32_t> order;      // p blocks over the structure sample
  std::vector<uint32_t> order_est;  // p blocks over the estimation sample
  std::vector<uint32_t> tmp;        // partition scratch
  std::vector<uint32_t> feat_perm;
};

struct StackItem {
  int32_t node;
  uint32_t begin;
  uint32_t end;
  uint32_t est_begin;
  uint32_t est_end;
};

void grow_tree(const GrowContext& ctx, uint32_t tree_index, Workspace* ws, Tree* out) {
  const ForestConfig& cfg = *ctx.config;
  const size_t n = ctx.n;
  const size_t p = ctx.p;
  const bool causal = ctx.causal();
  const bool centered = ctx.centered();
  const uint32_t min1 = cfg.min_leaf_treated;
  const uint32_t min0 = causal ? cfg.min_leaf_control : 0;

  TreePlan plan = tree_plan(cfg, n, ctx.clusters, tree_index);

  out->nodes.clear();
  out->degenerate = false;
  out->in_subsample.assign((n + 63) / 64, 0);
  for (uint32_t u : plan.structure) out->in_subsample[u >> 6] |= uint64_t(1) << (u & 63);
  for (uint32_t u : plan.estimation) out->in_subsample[u >> 6] |= uint64_t(1) << (u & 63);

  out->nodes.push_back(TreeNode{});
  if (plan.structure.empty() || plan.estimation.empty()) {
    out->degenerate = true;
    return;
  }

  const uint32_t m_s = static_cast<uint32_t>(plan.structure.size());
  const uint32_t m_e = static_cast<uint32_t>(plan.estimation.size());
  ws->role.assign(n, 0);
  for (uint32_t u : plan.structure) ws->role[u] = 1;
  for (uint32_t u : plan.estimation) ws->role[u] = 2;
  if (ws->side.size() < n) ws->side.resize(n);
  ws->order.resize(p * m_s);
  ws->order_est.resize(p * m_e);
  ws->tmp.resize(std::max(m_s, m_e));
  for (size_t f = 0; f < p; ++f) {
    const uint32_t* global = ctx.global_order.data() + f * n;
    uint32_t* block = ws->order.data() + f * m_s;
    uint32_t* block_est = ws->order_est.data() + f * m_e;
    uint32_t ks = 0, ke = 0;
    for (size_t i = 0; i < n; ++i) {
      const uint32_t u = global[i];
      if (ws->role[u] == 1) {
        block[ks++] = u;
      } else if (ws->role[u] == 2) {
        block_est[ke++] = u;
      }
    }
  }

  if (ws->feat_perm.size() != p) {
    ws->feat_perm.resize(p);
  }

  // The plan consumes the (seed, tree) stream; splits draw from their own.
  Rng split_rng(cfg.seed, {kTreeTag, tree_index, 0x73706c69});

  const std::span<const double> resp = ctx.resp;
  const std::span<const uint8_t> treat = ctx.treat;

  // Estimation stats of a node range; also the leaf value ingredients.
  auto est_stats = [&](uint32_t be, uint32_t ee) {
    NodeEstStats st;
    const uint32_t* block_est = ws->order_est.data();  // feature-0 block
    for (uint32_t k = be; k < ee; ++k) {
      const uint32_t u = block_est[k];
      const bool treated = causal ? treat[u] != 0 : true;
      st.add(resp[u], treated);
      if (centered) st.add_residual_product(resp[u], ctx.treat_resid[u], ctx.unit_weight[u]);
    }
    return st;
  };
  auto est_satisfies = [&](const NodeEstStats& st) {
    if (causal) return st.c1 >= min1 && st.c0 >= min0 && st.c1 > 0 && st.c0 > 0;
    return st.c1 >= 1;
  };
  auto leaf_value = [&](const NodeEstStats& st) {
    if (!causal) return st.mean1();
    if (centered && st.den > 0.0) return st.num / st.den;
    return st.mean1() - st.mean0();
  };

  {
    const NodeEstStats root_est = est_stats(0, m_e);
    if (!est_satisfies(root_est)) {
      out->degenerate = true;
      return;
    }
  }

  std::vector<StackItem> stack;
  stack.push_back({0, 0, m_s, 0, m_e});

  while (!stack.empty()) {
    const StackItem item = stack.back();
    stack.pop_back();
    const uint32_t b = item.begin, e = item.end;
    const uint32_t be = item.est_begin, ee = item.est_end;
    const uint32_t count = e - b;
    const uint32_t* base_block = ws->order.data();  // feature-0 block

    const NodeEstStats node_est = est_stats(be, ee);
    TreeNode& record = out->nodes[static_cast<size_t>(item.node)];
    record.est_treated = node_est.c1;
    record.est_control = node_est.c0;

    // Node stats on the structure sample.
    const bool centered_split = causal && !ctx.pseudo.empty();
    double s1 = 0, s0 = 0, sp = 0;
    uint32_t n1 = 0, n0 = 0;
    if (causal) {
      for (uint32_t k = b; k < e; ++k) {
        const uint32_t u = base_block[k];
        if (treat[u]) {
          s1 += resp[u];
          ++n1;
        } else {
          s0 += resp[u];
          ++n0;
        }
        if (centered_split) sp += ctx.pseudo[u];
      }
    } else {
      for (uint32_t k = b; k < e; ++k) s1 += resp[base_block[k]];
      n1 = count;
    }

    bool splittable;
    double base_score = 0.0;
    if (causal) {
      splittable = n1 >= 2 * min1 && n0 >= 2 * min0 && n1 > 0 && n0 > 0 &&
                   node_est.c1 >= 2 * min1 && node_est.c0 >= 2 * min0;
      if (centered_split) {
        const double mean = sp / count;
        base_score = static_cast<double>(count) * mean * mean;
      } else if (n1 > 0 && n0 > 0) {
        const double tau = s1 / n1 - s0 / n0;
        base_score = static_cast<double>(count) * tau * tau;
      }
    } else {
      splittable = count >= 2 * min1 && (ee - be) >= 2;
      const double mean = s1 / count;
      base_score = static_cast<double>(count) * mean * mean;
    }

    double best_score = base_score + kMinGain;
    int32_t best_feature = -1;
    double best_threshold = 0.0;
    uint32_t best_left_count = 0;

    if (splittable) {
      // mtry draw, then ascending feature order so score ties resolve
      // lexicographically by (feature, threshold).
      for (size_t f = 0; f < p; ++f) ws->feat_perm[f] = static_cast<uint32_t>(f);
      const uint32_t tries = std::min<uint32_t>(ctx.mtry, static_cast<uint32_t>(p));
      for (uint32_t k = 0; k < tries; ++k) {
        const uint32_t j = k + static_cast<uint32_t>(split_rng.bounded(p - k));
        std::swap(ws->feat_perm[k], ws->feat_perm[j]);
      }
      std::sort(ws->feat_perm.begin(), ws->feat_perm.begin() + tries);

      for (uint32_t fk = 0; fk < tries; ++fk) {
        const uint32_t f = ws->feat_perm[fk];
        const double* col = (*ctx.x)[f].data();
        const uint32_t* block = ws->order.data() + static_cast<size_t>(f) * m_s;
        const uint32_t* eblock = ws->order_est.data() + static_cast<size_t>(f) * m_e;
        double ls1 = 0, ls0 = 0, lsp = 0;
        uint32_t ln1 = 0, ln0 = 0;
        // Estimation-side left arm counts, advanced lazily per candidate.
        uint32_t ek = be, eln1 = 0, eln0 = 0;
        for (uint32_t k = b; k + 1 < e; ++k) {
          const uint32_t u = block[k];
          if (causal) {
            if (treat[u]) {
              ls1 += resp[u];
              ++ln1;
            } else {
              ls0 += resp[u];
              ++ln0;
            }
            if (centered_split) lsp += ctx.pseudo[u];
          } else {
            ls1 += resp[u];
            ++ln1;
          }
          const double v = col[u];
          const double v_next = col[block[k + 1]];
          if (!(v_next > v)) continue;

          const double mid = safe_midpoint(v, v_next);
          const uint32_t nl = k + 1 - b;
          const uint32_t nr = count - nl;
          double score;
          if (causal) {
            const uint32_t rn1 = n1 - ln1, rn0 = n0 - ln0;
            if (ln1 < min1 || ln0 < min0 || rn1 < min1 || rn0 < min0) continue;
            // The split must leave both halves of the estimation sample
            // feasible too; this depends only on est X and W, never on est
            // outcomes, so structure remains honest.
            while (ek < ee && col[eblock[ek]] <= mid) {
              if (!causal || treat[eblock[ek]]) {
                ++eln1;
              } else {
                ++eln0;
              }
              ++ek;
            }
            const uint32_t ern1 = record.est_treated - eln1;
            const uint32_t ern0 = record.est_control - eln0;
            if (eln1 < min1 || eln0 < min0 || ern1 < min1 || ern0 < min0) continue;
            if (centered_split) {
              const double mean_l = lsp / nl;
              const double mean_r = (sp - lsp) / nr;
              score = nl * mean_l * mean_l + nr * mean_r * mean_r;
            } else {
              const double tau_l = ls1 / ln1 - ls0 / ln0;
              const double tau_r = (s1 - ls1) / rn1 - (s0 - ls0) / rn0;
              score = nl * tau_l * tau_l + nr * tau_r * tau_r;
            }
          } else {
            if (nl < min1 || nr < min1) continue;
            while (ek < ee && col[eblock[ek]] <= mid) ++ek, ++eln1;
            if (eln1 < 1 || record.est_treated - eln1 < 1) continue;
            const double mean_l = ls1 / nl;
            const double mean_r = (s1 - ls1) / nr;
            score = nl * mean_l * mean_l + nr * mean_r * mean_r;
          }
          if (score > best_score) {
            best_score = score;
            best_feature = static_cast<int32_t>(f);
            best_threshold = mid;
            best_left_count = nl;
          }
        }
      }
    }

    if (best_feature < 0) {
      // Leaf; the estimation sample here satisfies the per-arm minimums by
      // construction (the root is checked, and every committed split keeps
      // both children feasible).
      record.value = leaf_value(node_est);
      record.source = item.node;
      continue;
    }

    const double* best_col = (*ctx.x)[static_cast<size_t>(best_feature)].data();
    for (uint32_t k = b; k < e; ++k) {
      const uint32_t u = base_block[k];
      ws->side[u] = best_col[u] <= best_threshold ? 1 : 0;
    }
    const uint32_t* base_est = ws->order_est.data();
    uint32_t est_left_count = 0;
    for (uint32_t k = be; k < ee; ++k) {
      const uint32_t u = base_est[k];
      const uint8_t left = best_col[u] <= best_threshold ? 1 : 0;
      ws->side[u] = left;
      est_left_count += left;
    }
    for (size_t f = 0; f < p; ++f) {
      uint32_t* block = ws->order.data() + f * m_s;
      uint32_t write = b, spill = 0;
      for (uint32_t k = b; k < e; ++k) {
        const uint32_t u = block[k];
        if (ws->side[u]) {
          block[write++] = u;
        } else {
          ws->tmp[spill++] = u;
        }
      }
      std::copy(ws->tmp.begin(), ws->tmp.begin() + spill, block + write);
      uint32_t* eb = ws->order_est.data() + f * m_e;
      write = be, spill = 0;
      for (uint32_t k = be; k < ee; ++k) {
        const uint32_t u = eb[k];
        if (ws->side[u]) {
          eb[write++] = u;
        } else {
          ws->tmp[spill++] = u;
        }
      }
      std::copy(ws->tmp.begin(), ws->tmp.begin() + spill, eb + write);
    }

    const int32_t node_id = item.node;
    const int32_t left_id = static_cast<int32_t>(out->nodes.size());
    const int32_t right_id = left_id + 1;
    out->nodes[static_cast<size_t>(node_id)].feature = best_feature;
    out->nodes[static_cast<size_t>(node_id)].threshold = best_threshold;
    out->nodes[static_cast<size_t>(node_id)].left = left_id;
    out->nodes[static_cast<size_t>(node_id)].right = right_id;
    TreeNode left_node, right_node;
    left_node.parent = node_id;
    right_node.parent = node_id;
    out->nodes.push_back(left_node);
    out->nodes.push_back(right_node);
    stack.push_back({right_id, b + best_left_count, e, be + est_left_count, ee});
    stack.push_back({left_id, b, b + best_left_count, be, be + est_left_count});
  }
}

std::vector<Tree> fit_trees(const GrowContext& ctx, int threads) {
  std::vector<Tree> trees(ctx.config->n_trees);
  parallel_for(trees.size(), threads, [&](int, size_t begin, size_t end) {
    Workspace ws;
    for (size_t t = begin; t < end; ++t) {
      grow_tree(ctx, static_cast<uint32_t>(t), &ws, &trees[t]);
    }
  });
  return trees;
}

const std::vector<double>& target_column(const Cohort& cohort, RegressionTarget target,
                                         std::vector<double>* storage) {
  storage->resize(cohort.size());
  for (size_t i = 0; i < cohort.size(); ++i) {
    (*storage)[i] = target == RegressionTarget::kOutcome ? double(cohort.y[i]) : double(cohort.w[i]);
  }
  return *storage;
}

void hash_tree(const Tree& tree, Fnv64* h) {
  h->add_u64(tree.nodes.size());
  for (const TreeNode& nd : tree.nodes) {
    h->add_i64(nd.feature);
    h->add_double(nd.threshold);
    h->add_i64(nd.left);
    h->add_i64(nd.right);
    h->add_double(std::isnan(nd.value) ? 0.0 : nd.value);
  }
  h->add_u64(tree.degenerate ? 1 : 0);
  for (uint64_t wrd : tree.in_subsample) h->add_u64(wrd);
}

void hash_config(const ForestConfig& cfg, Fnv64* h) {
  h->add_u64(cfg.n_trees);
  h->add_double(cfg.subsample_fraction);
  h->add_double(cfg.honesty_fraction);
  h->add_u64(cfg.mtry);
  h->add_u64(cfg.min_leaf_treated);
  h->add_u64(cfg.min_leaf_control);
  h->add_u64(cfg.group_size);
  h->add_u64(cfg.seed);
  h->add_u64(cfg.cluster_aware ? 1 : 0);
  h->add_u64(cfg.center ? 1 : 0);
}

double clamp_tau(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

void ForestConfig::validate() const {
  if (n_trees < 1) throw ConfigError("forest: n_trees must be >= 1");
  if (!(subsample_fraction > 0.0 && subsample_fraction < 1.0)) {
    throw ConfigError("forest: subsample_fraction must be in (0,1)");
  }
  if (!(honesty_fraction > 0.0 && honesty_fraction < 1.0)) {
    throw ConfigError("forest: honesty_fraction must be in (0,1)");
  }
  if (min_leaf_treated < 1 || min_leaf_control < 1) {
    throw ConfigError("forest: per-arm minimum leaf sizes must be >= 1");
  }
  if (group_size < 1) throw ConfigError("forest: group_size must be >= 1");
  if (n_trees < 2 * group_size) throw ConfigError("forest: n_trees must be >= 2 * group_size");
  if (group_size >= 2 && subsample_fraction > 0.5) {
    throw ConfigError("forest: subsample_fraction must be <= 0.5 with half-sample groups");
  }
}

uint32_t ForestConfig::resolve_mtry(size_t p) const {
  if (p == 0) return 0;
  if (mtry > 0) return std::min<uint32_t>(mtry, static_cast<uint32_t>(p));
  const uint32_t auto_mtry = static_cast<uint32_t>(std::ceil(std::sqrt(double(p)))) + 20;
  return std::min<uint32_t>(auto_mtry, static_cast<uint32_t>(p));
}

size_t Tree::find_leaf(const ColumnMatrix& x, size_t i) const {
  size_t node = 0;
  for (;;) {
    const TreeNode& nd = nodes[node];
    if (nd.is_leaf()) return node;
    node = static_cast<size_t>(x[static_cast<size_t>(nd.feature)][i] <= nd.threshold ? nd.left
                                                                                     : nd.right);
  }
}

size_t Tree::find_leaf_row(std::span<const double> row) const {
  size_t node = 0;
  for (;;) {
    const TreeNode& nd = nodes[node];
    if (nd.is_leaf()) return node;
    node = static_cast<size_t>(row[static_cast<size_t>(nd.feature)] <= nd.threshold ? nd.left
                                                                                    : nd.right);
  }
}

TreePlan tree_plan(const ForestConfig& config, size_t n, std::span<const int32_t> clusters,
                   uint32_t tree_index) {
  const uint32_t group = tree_index / config.group_size;
  Rng group_rng(config.seed, {kGroupTag, group});
  const double cluster_fraction =
      config.group_size >= 2 ? 0.5 : config.subsample_fraction;

  std::vector<uint32_t> half;
  if (config.cluster_aware && !clusters.empty()) {
    int32_t max_id = 0;
    for (int32_t c : clusters) max_id = std::max(max_id, c);
    std::vector<uint8_t> present(static_cast<size_t>(max_id) + 1, 0);
    for (int32_t c : clusters) present[static_cast<size_t>(c)] = 1;
    std::vector<int32_t> ids;
    for (int32_t c = 0; c <= max_id; ++c) {
      if (present[static_cast<size_t>(c)]) ids.push_back(c);
    }
    group_rng.shuffle(ids);
    const size_t take = std::max<size_t>(
        1, static_cast<size_t>(std::ceil(cluster_fraction * double(ids.size()))));
    std::vector<uint8_t> chosen(static_cast<size_t>(max_id) + 1, 0);
    for (size_t k = 0; k < take && k < ids.size(); ++k) {
      chosen[static_cast<size_t>(ids[k])] = 1;
    }
    for (size_t i = 0; i < n; ++i) {
      if (chosen[static_cast<size_t>(clusters[i])]) half.push_back(static_cast<uint32_t>(i));
    }
  } else {
    std::vector<uint32_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = static_cast<uint32_t>(i);
    group_rng.shuffle(perm);
    const size_t take = std::max<size_t>(
        1, static_cast<size_t>(std::llround(cluster_fraction * double(n))));
    half.assign(perm.begin(), perm.begin() + std::min(take, n));
    std::sort(half.begin(), half.end());
  }

  Rng tree_rng(config.seed, {kTreeTag, tree_index});
  std::vector<uint32_t> sub;
  const double keep = config.subsample_fraction / cluster_fraction;
  if (keep >= 1.0 - 1e-12) {
    sub = half;
  } else {
    std::vector<uint32_t> pool = half;
    tree_rng.shuffle(pool);
    const size_t take = std::max<size_t>(
        1, static_cast<size_t>(std::llround(keep * double(pool.size()))));
    sub.assign(pool.begin(), pool.begin() + std::min(take, pool.size()));
    std::sort(sub.begin(), sub.end());
  }

  std::vector<uint32_t> shuffled = sub;
  tree_rng.shuffle(shuffled);
  const size_t n_structure =
      static_cast<size_t>(std::floor(config.honesty_fraction * double(shuffled.size())));
  TreePlan plan;
  plan.structure.assign(shuffled.begin(), shuffled.begin() + n_structure);
  plan.estimation.assign(shuffled.begin() + n_structure, shuffled.end());
  std::sort(plan.structure.begin(), plan.structure.end());
  std::sort(plan.estimation.begin(), plan.estimation.end());
  return plan;
}

double leaf_estimate(std::span<const double> treated_outcomes,
                     std::span<const double> control_outcomes) {
  if (treated_outcomes.empty() || control_outcomes.empty()) {
    throw EstimationError("leaf_estimate: an arm is empty");
  }
  return mean_of(treated_outcomes) - mean_of(control_outcomes);
}

double split_score(std::span<const double> y, std::span<const uint8_t> w,
                   std::span<const uint8_t> goes_left, uint32_t min_leaf_treated,
                   uint32_t min_leaf_control) {
  const size_t n = y.size();
  if (w.size() != n || goes_left.size() != n) {
    throw ArgumentError("split_score: input lengths differ");
  }
  KahanSum l1, l0, r1, r0;
  uint32_t ln1 = 0, ln0 = 0, rn1 = 0, rn0 = 0;
  for (size_t i = 0; i < n; ++i) {
    if (goes_left[i]) {
      if (w[i]) {
        l1.add(y[i]);
        ++ln1;
      } else {
        l0.add(y[i]);
        ++ln0;
      }
    } else {
      if (w[i]) {
        r1.add(y[i]);
        ++rn1;
      } else {
        r0.add(y[i]);
        ++rn0;
      }
    }
  }
  if (ln1 < min_leaf_treated || ln0 < min_leaf_control || rn1 < min_leaf_treated ||
      rn0 < min_leaf_control || ln1 == 0 || ln0 == 0 || rn1 == 0 || rn0 == 0) {
    throw ArgumentError("split_score: infeasible split for the per-arm minimums");
  }
  const double tau_l = l1.value() / ln1 - l0.value() / ln0;
  const double tau_r = r1.value() / rn1 - r0.value() / rn0;
  const double nl = static_cast<double>(ln1 + ln0);
  const double nr = static_cast<double>(rn1 + rn0);
  return nl * tau_l * tau_l + nr * tau_r * tau_r;
}

RegressionForest fit_regression_forest_matrix(const ColumnMatrix& x, std::span<const double> target,
                                              std::span<const int32_t> clusters,
                                              const ForestConfig& config, int threads) {
  config.validate();
  if (x.empty()) throw FitError("regression forest: no features");
  const size_t n = x[0].size();
  if (target.size() != n) throw FitError("regression forest: target length mismatch");
  if (n < 2 * config.min_leaf_treated) {
    throw FitError("regression forest: too few units (" + std::to_string(n) + ")");
  }

  GrowContext ctx;
  ctx.x = &x;
  ctx.resp = target;
  ctx.clusters = clusters;
  ctx.config = &config;
  ctx.n = n;
  ctx.p = x.size();
  ctx.mtry = config.resolve_mtry(ctx.p);
  build_global_order(&ctx);

  RegressionForest forest;
  forest.config = config;
  forest.n_train = n;
  forest.p_train = x.size();
  forest.trees = fit_trees(ctx, threads);
  return forest;
}

RegressionForest fit_regression_forest(const Cohort& cohort, RegressionTarget target,
                                       const ForestConfig& config, int threads) {
  std::vector<double> storage;
  const std::vector<double>& t = target_column(cohort, target, &storage);
  RegressionForest forest =
      fit_regression_forest_matrix(cohort.model_matrix, t, cohort.cluster, config, threads);
  forest.schema_digest = cohort.schema.digest();
  return forest;
}

std::vector<double> predict(const RegressionForest& forest, const ColumnMatrix& x, int threads) {
  if (x.size() != forest.p_train) throw ArgumentError("predict: feature count mismatch");
  const size_t n = x.empty() ? 0 : x[0].size();
  std::vector<double> out(n);
  parallel_for(n, threads, [&](int, size_t begin, size_t end) {
    std::vector<double> buf;
    for (size_t i = begin; i < end; ++i) {
      buf.clear();
      for (const Tree& tree : forest.trees) {
        if (tree.degenerate) continue;
        buf.push_back(tree.nodes[tree.find_leaf(x, i)].value);
      }
      out[i] = buf.empty() ? 0.0 : mean_of(buf);
    }
  });
  return out;
}

std::vector<OobValue> predict_oob(const RegressionForest& forest, const ColumnMatrix& x,
                                  int threads) {
  if (x.size() != forest.p_train) throw ArgumentError("predict_oob: feature count mismatch");
  const size_t n = x.empty() ? 0 : x[0].size();
  if (n != forest.n_train) {
    throw ArgumentError("predict_oob: cohort size differs from the training cohort");
  }
  std::vector<OobValue> out(n);
  parallel_for(n, threads, [&](int, size_t begin, size_t end) {
    std::vector<double> buf;
    for (size_t i = begin; i < end; ++i) {
      buf.clear();
      for (const Tree& tree : forest.trees) {
        if (tree.degenerate || tree.contains(i)) continue;
        buf.push_back(tree.nodes[tree.find_leaf(x, i)].value);
      }
      out[i].tree_count = static_cast<uint32_t>(buf.size());
      out[i].value = buf.empty() ? 0.0 : mean_of(buf);
    }
  });
  return out;
}

uint64_t CausalForestModel::digest() const {
  Fnv64 h;
  hash_config(config, &h);
  h.add_u64(schema_digest);
  h.add_u64(n_train);
  h.add_u64(trees.size());
  for (const Tree& tree : trees) hash_tree(tree, &h);
  for (double v : profile) h.add_double(v);
  return h.digest();
}

namespace {

void check_causal_preconditions(const Cohort& cohort, const ForestConfig& config) {
  config.validate();
  const size_t n = cohort.size();
  size_t n_treated = 0;
  for (uint8_t wi : cohort.w) n_treated += wi;
  if (n_treated == 0 || n_treated == n) {
    throw FitError("causal forest: both treatment arms must be present");
  }
  if (n < 4 * (config.min_leaf_treated + config.min_leaf_control)) {
    throw FitError("causal forest: too few units (" + std::to_string(n) + ")");
  }
  if (cohort.model_matrix.empty()) throw FitError("causal forest: cohort has no features");
}

CausalForestModel fit_causal_prepared(const Cohort& cohort, const ForestConfig& config,
                                      CausalForestModel model, int threads) {
  const size_t n = cohort.size();
  model.config = config;
  model.schema_digest = cohort.schema.digest();
  model.n_train = n;
  model.feature_names = cohort.model_column_names;

  std::vector<double> resp(n);
  std::vector<double> treat_resid;
  std::vector<double> unit_weight;
  std::vector<double> pseudo;
  if (config.center) {
    for (size_t i = 0; i < n; ++i) resp[i] = double(cohort.y[i]) - model.oob_m[i];
    treat_resid.resize(n);
    unit_weight.resize(n);
    pseudo.resize(n);
    for (size_t i = 0; i < n; ++i) {
      const double e = std::clamp(model.oob_e[i], 0.02, 0.98);
      treat_resid[i] = double(cohort.w[i]) - model.oob_e[i];
      unit_weight[i] = 1.0 / (e * (1.0 - e));
      pseudo[i] = unit_weight[i] * resp[i] * treat_resid[i];
    }
  } else {
    for (size_t i = 0; i < n; ++i) resp[i] = double(cohort.y[i]);
  }

  GrowContext ctx;
  ctx.x = &cohort.model_matrix;
  ctx.resp = resp;
  ctx.treat = cohort.w;
  ctx.treat_resid = treat_resid;
  ctx.unit_weight = unit_weight;
  ctx.pseudo = pseudo;
  ctx.clusters = cohort.cluster;
  ctx.config = &config;
  ctx.n = n;
  ctx.p = cohort.model_matrix.size();
  ctx.mtry = config.resolve_mtry(ctx.p);
  build_global_order(&ctx);

  model.trees = fit_trees(ctx, threads);

  // Median / mode pseudo-unit for surface evaluation.
  model.profile.assign(cohort.feature_count(), 0.0);
  size_t col = 0;
  for (size_t f = 0; f < cohort.schema.features.size(); ++f) {
    const FeatureSpec& spec = cohort.schema.features[f];
    if (spec.kind == FeatureKind::kNumeric) {
      std::vector<double> sorted = cohort.numeric_raw[f];
      std::sort(sorted.begin(), sorted.end());
      model.profile[col++] = quantile_sorted(sorted, 0.5);
    } else {
      std::vector<size_t> counts(spec.levels.size(), 0);
      for (int32_t code : cohort.level_codes[f]) counts[static_cast<size_t>(code)]++;
      size_t mode = 0;
      for (size_t l = 1; l < counts.size(); ++l) {
        if (counts[l] > counts[mode]) mode = l;
      }
      for (size_t l = 0; l < spec.levels.size(); ++l) {
        model.profile[col++] = l == mode ? 1.0 : 0.0;
      }
    }
  }
  return model;
}

}  // namespace

CausalForestModel fit_causal_forest_with_nuisance(const Cohort& cohort, const ForestConfig& config,
                                                  std::span<const double> m_hat,
                                                  std::span<const double> e_hat, int threads) {
  check_causal_preconditions(cohort, config);
  if (!config.center) {
    throw ArgumentError("fit_causal_forest_with_nuisance: config.center must be true");
  }
  if (m_hat.size() != cohort.size() || e_hat.size() != cohort.size()) {
    throw ArgumentError("fit_causal_forest_with_nuisance: nuisance lengths differ from the cohort");
  }
  CausalForestModel model;
  model.oob_m.assign(m_hat.begin(), m_hat.end());
  model.oob_e.assign(e_hat.begin(), e_hat.end());
  return fit_causal_prepared(cohort, config, std::move(model), threads);
}

CausalForestModel fit_causal_forest(const Cohort& cohort, const ForestConfig& config, int threads) {
  check_causal_preconditions(cohort, config);
  const size_t n = cohort.size();
  CausalForestModel model;
  if (config.center) {
    ForestConfig nuisance = config;
    nuisance.n_trees = std::min<uint32_t>(config.n_trees, 500);
    nuisance.group_size = 1;
    nuisance.min_leaf_treated = std::max<uint32_t>(10, config.min_leaf_treated);
    nuisance.min_leaf_control = nuisance.min_leaf_treated;
    nuisance.center = false;

    ForestConfig m_cfg = nuisance;
    m_cfg.seed = derive_stream(config.seed, {kNuisanceOutcomeTag});
    ForestConfig e_cfg = nuisance;
    e_cfg.seed = derive_stream(config.seed, {kNuisanceTreatTag});

    model.m_forest = fit_regression_forest(cohort, RegressionTarget::kOutcome, m_cfg, threads);
    model.e_forest = fit_regression_forest(cohort, RegressionTarget::kTreatment, e_cfg, threads);

    const std::vector<OobValue> m_oob = predict_oob(model.m_forest, cohort.model_matrix, threads);
    const std::vector<OobValue> e_oob = predict_oob(model.e_forest, cohort.model_matrix, threads);

    KahanSum y_sum, w_sum;
    for (size_t i = 0; i < n; ++i) y_sum.add(cohort.y[i]);
    for (size_t i = 0; i < n; ++i) w_sum.add(cohort.w[i]);
    const double y_mean = y_sum.value() / double(n);
    const double w_mean = w_sum.value() / double(n);

    model.oob_m.resize(n);
    model.oob_e.resize(n);
    for (size_t i = 0; i < n; ++i) {
      model.oob_m[i] = m_oob[i].tree_count > 0 ? m_oob[i].value : y_mean;
      model.oob_e[i] = e_oob[i].tree_count > 0 ? e_oob[i].value : w_mean;
    }
  }
  return fit_causal_prepared(cohort, config, std::move(model), threads);
}

std::vector<TauEstimate> predict_oob(const CausalForestModel& model, const Cohort& cohort,
                                     int threads) {
  if (cohort.schema.digest() != model.schema_digest) {
    throw ArgumentError("predict_oob: schema digest mismatch");
  }
  if (cohort.size() != model.n_train) {
    throw ArgumentError("predict_oob: cohort size differs from the training cohort");
  }
  const size_t n = cohort.size();
  std::vector<TauEstimate> out(n);
  parallel_for(n, threads, [&](int, size_t begin, size_t end) {
    std::vector<double> buf;
    for (size_t i = begin; i < end; ++i) {
      buf.clear();
      for (const Tree& tree : model.trees) {
        if (tree.degenerate || tree.contains(i)) continue;
        buf.push_back(tree.nodes[tree.find_leaf(cohort.model_matrix, i)].value);
      }
      out[i].oob_tree_count = static_cast<uint32_t>(buf.size());
      out[i].tau_hat = buf.empty() ? 0.0 : clamp_tau(mean_of(buf));
    }
  });
  return out;
}

std::vector<TauEstimate> predict(const CausalForestModel& model, const Cohort& cohort,
                                 int threads) {
  if (cohort.schema.digest() != model.schema_digest) {
    throw ArgumentError("predict: schema digest mismatch");
  }
  const size_t n = cohort.size();
  std::vector<TauEstimate> out(n);
  parallel_for(n, threads, [&](int, size_t begin, size_t end) {
    std::vector<double> buf;
    for (size_t i = begin; i < end; ++i) {
      buf.clear();
      for (const Tree& tree : model.trees) {
        if (tree.degenerate) continue;
        buf.push_back(tree.nodes[tree.find_leaf(cohort.model_matrix, i)].value);
      }
      out[i].oob_tree_count = static_cast<uint32_t>(buf.size());
      out[i].tau_hat = buf.empty() ? 0.0 : clamp_tau(mean_of(buf));
    }
  });
  return out;
}

std::vector<double> predict_rows(const CausalForestModel& model,
                                 const std::vector<std::vector<double>>& rows) {
  std::vector<double> out(rows.size());
  std::vector<double> buf;
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != model.feature_names.size()) {
      throw ArgumentError("predict_rows: row width mismatch");
    }
    buf.clear();
    for (const Tree& tree : model.trees) {
      if (tree.degenerate) continue;
      buf.push_back(tree.nodes[tree.find_leaf_row(rows[r])].value);
    }
    out[r] = buf.empty() ? 0.0 : clamp_tau(mean_of(buf));
  }
  return out;
}

std::vector<double> variance_estimates(const CausalForestModel& model, const Cohort& cohort,
                                       int threads) {
  if (cohort.schema.digest() != model.schema_digest) {
    throw ArgumentError("variance_estimates: schema digest mismatch");
  }
  const uint32_t gs = model.config.group_size;
  const size_t n_groups = (model.trees.size() + gs - 1) / gs;
  if (n_groups < 2) throw EstimationError("variance_estimates: need at least two tree groups");

  const size_t n = cohort.size();
  std::vector<double> out(n);
  parallel_for(n, threads, [&](int, size_t begin, size_t end) {
    std::vector<double> group_means;
    std::vector<double> within;
    std::vector<double> members;
    for (size_t i = begin; i < end; ++i) {
      group_means.clear();
      within.clear();
      for (size_t g = 0; g < n_groups; ++g) {
        members.clear();
        const size_t t_begin = g * gs;
        const size_t t_end = std::min<size_t>(t_begin + gs, model.trees.size());
        for (size_t t = t_begin; t < t_end; ++t) {
          const Tree& tree = model.trees[t];
          if (tree.degenerate) continue;
          members.push_back(tree.nodes[tree.find_leaf(cohort.model_matrix, i)].value);
        }
        if (members.empty()) continue;
        group_means.push_back(mean_of(members));
        if (members.size() >= 2) within.push_back(sample_variance(members));
      }
      if (group_means.size() < 2) {
        out[i] = 0.0;
        continue;
      }
      const double between = sample_variance(group_means);
      const double within_mean = within.empty() ? 0.0 : mean_of(within);
      out[i] = std::max(0.0, between - within_mean / double(gs));
    }
  });
  return out;
}

std::vector<double> group_total_predictions(const CausalForestModel& model, const Cohort& cohort,
                                            std::span<const uint32_t> units, int threads) {
  if (cohort.schema.digest() != model.schema_digest) {
    throw ArgumentError("group_total_predictions: schema digest mismatch");
  }
  for (uint32_t u : units) {
    if (u >= cohort.size()) {
      throw ArgumentError("group_total_predictions: unit out of range");
    }
  }
  const uint32_t gs = model.config.group_size;
  const size_t n_groups = (model.trees.size() + gs - 1) / gs;
  std::vector<double> totals(n_groups, std::numeric_limits<double>::quiet_NaN());
  // Parallel over groups: each total is accumulated by one worker in unit
  // order, so results do not depend on the worker count.
  parallel_for(n_groups, threads, [&](int, size_t begin, size_t end) {
    std::vector<double> members;
    for (size_t g = begin; g < end; ++g) {
      const size_t t_begin = g * gs;
      const size_t t_end = std::min<size_t>(t_begin + gs, model.trees.size());
      bool any_tree = false;
      for (size_t t = t_begin; t < t_end; ++t) {
        if (!model.trees[t].degenerate) any_tree = true;
      }
      if (!any_tree) continue;
      KahanSum total;
      for (uint32_t u : units) {
        members.clear();
        for (size_t t = t_begin; t < t_end; ++t) {
          const Tree& tree = model.trees[t];
          if (tree.degenerate) continue;
          members.push_back(tree.nodes[tree.find_leaf(cohort.model_matrix, u)].value);
        }
        total.add(mean_of(members));
      }
      totals[g] = total.value();
    }
  });
  std::vector<double> out;
  out.reserve(n_groups);
  for (double t : totals) {
    if (!std::isnan(t)) out.push_back(t);
  }
  return out;
}

}  // namespace hte
