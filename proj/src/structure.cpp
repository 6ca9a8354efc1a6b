#include "confsel/structure.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace confsel {

namespace {

// Enumerates subsets of `pool` by increasing cardinality, invoking fn on each
// until fn returns true; subsets of equal size appear in lexicographic order
// of pool positions. Returns whether fn accepted a subset.
bool any_subset(const std::vector<int>& pool, int max_size,
                const std::function<bool(const std::vector<int>&)>& fn) {
  const int m = static_cast<int>(pool.size());
  const int cap = max_size < 0 ? m : std::min(max_size, m);
  std::vector<int> subset;
  std::vector<int> idx;
  for (int size = 0; size <= cap; ++size) {
    idx.resize(static_cast<std::size_t>(size));
    for (int k = 0; k < size; ++k) idx[static_cast<std::size_t>(k)] = k;
    while (true) {
      subset.clear();
      for (int k : idx) subset.push_back(pool[static_cast<std::size_t>(k)]);
      if (fn(subset)) return true;
      if (size == 0) break;
      int k = size - 1;
      while (k >= 0 && idx[static_cast<std::size_t>(k)] == m - size + k) --k;
      if (k < 0) break;
      ++idx[static_cast<std::size_t>(k)];
      for (int t = k + 1; t < size; ++t)
        idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
    }
  }
  return false;
}

}  // namespace

std::vector<int> mmpc_neighbors(const CiOracle& oracle, int target,
                                const std::vector<int>& candidates, const MmpcConfig& cfg) {
  std::vector<int> ordered(candidates);
  std::sort(ordered.begin(), ordered.end());

  std::vector<int> cmb;
  for (int c : ordered) {
    if (c == target) continue;
    if (!oracle.independent(target, c, cmb)) cmb.push_back(c);
  }

  std::vector<int> kept(cmb);
  for (int c : cmb) {
    std::vector<int> rest;
    for (int x : kept)
      if (x != c) rest.push_back(x);
    const bool separated = any_subset(rest, cfg.max_cond_size, [&](const std::vector<int>& a) {
      return oracle.independent(target, c, a);
    });
    if (separated) kept.erase(std::find(kept.begin(), kept.end(), c));
  }
  return kept;
}

std::vector<int> mmpc_blanket(const CiOracle& oracle, int focal,
                              const std::vector<int>& candidates, const MmpcConfig& cfg) {
  const std::vector<int> mb = mmpc_neighbors(oracle, focal, candidates, cfg);
  std::vector<int> out;
  for (int l : mb) {
    std::vector<int> back(candidates);
    back.erase(std::remove(back.begin(), back.end(), l), back.end());
    back.push_back(focal);
    const std::vector<int> mbl = mmpc_neighbors(oracle, l, back, cfg);
    if (std::find(mbl.begin(), mbl.end(), focal) != mbl.end()) out.push_back(l);
  }
  return out;
}

Skeleton mmpc_skeleton(const CiOracle& oracle, const std::vector<int>& vertices,
                       const MmpcConfig& cfg) {
  const int p = static_cast<int>(vertices.size());
  std::vector<std::vector<int>> mb(static_cast<std::size_t>(p));
  for (int v = 0; v < p; ++v) {
    std::vector<int> cands;
    for (int u = 0; u < p; ++u)
      if (u != v) cands.push_back(vertices[static_cast<std::size_t>(u)]);
    mb[static_cast<std::size_t>(v)] =
        mmpc_neighbors(oracle, vertices[static_cast<std::size_t>(v)], cands, cfg);
  }
  Skeleton s(p);
  for (int v = 0; v < p; ++v)
    for (int u = v + 1; u < p; ++u) {
      const int vid = vertices[static_cast<std::size_t>(v)];
      const int uid = vertices[static_cast<std::size_t>(u)];
      const auto& mv = mb[static_cast<std::size_t>(v)];
      const auto& mu = mb[static_cast<std::size_t>(u)];
      const bool v_has_u = std::find(mv.begin(), mv.end(), uid) != mv.end();
      const bool u_has_v = std::find(mu.begin(), mu.end(), vid) != mu.end();
      if (v_has_u && u_has_v) s.connect(v, u);
    }
  return s;
}

double local_score(const DiscreteDataset& data, int v, const std::vector<int>& parents,
                   ScoreKind kind) {
  const DiscreteColumn& col = data.columns.at(static_cast<std::size_t>(v));
  const int lv = col.n_levels;

  std::uint64_t space = 1;
  std::vector<std::uint64_t> stride(parents.size());
  std::vector<const std::uint8_t*> pcol(parents.size());
  double k_params = static_cast<double>(lv - 1);
  for (std::size_t m = 0; m < parents.size(); ++m) {
    const DiscreteColumn& c = data.columns.at(static_cast<std::size_t>(parents[m]));
    stride[m] = space;
    space *= static_cast<std::uint64_t>(c.n_levels);
    pcol[m] = c.codes.data();
    k_params *= c.n_levels;
  }
  if (space > (1u << 24)) throw std::invalid_argument("local_score: parent state space too large");

  std::vector<std::uint32_t> counts(static_cast<std::size_t>(space) * lv, 0u);
  const std::uint8_t* vcol = col.codes.data();
  for (std::int64_t r = 0; r < data.n; ++r) {
    std::uint64_t cfg = 0;
    for (std::size_t m = 0; m < parents.size(); ++m)
      cfg += stride[m] * pcol[m][static_cast<std::size_t>(r)];
    counts[static_cast<std::size_t>(cfg) * lv + vcol[r]]++;
  }

  double ll = 0.0;
  for (std::uint64_t cfg = 0; cfg < space; ++cfg) {
    std::uint64_t tot = 0;
    for (int a = 0; a < lv; ++a) tot += counts[static_cast<std::size_t>(cfg) * lv + a];
    if (tot == 0) continue;
    const double log_tot = std::log(static_cast<double>(tot));
    for (int a = 0; a < lv; ++a) {
      const std::uint32_t c = counts[static_cast<std::size_t>(cfg) * lv + a];
      if (c == 0) continue;
      ll += c * (std::log(static_cast<double>(c)) - log_tot);
    }
  }

  switch (kind) {
    case ScoreKind::loglik:
      return ll;
    case ScoreKind::aic:
      return ll - k_params;
    case ScoreKind::bic:
      return ll - 0.5 * k_params * std::log(static_cast<double>(data.n));
  }
  return ll;
}

double ScoreCache::get_or_compute(int v, const std::vector<int>& sorted_parents,
                                  const std::function<double()>& compute) {
  std::string key;
  key.reserve(4 + 4 * sorted_parents.size());
  const auto push = [&key](int x) {
    char buf[4];
    std::memcpy(buf, &x, 4);
    key.append(buf, 4);
  };
  push(v);
  for (int pa : sorted_parents) push(pa);
  const auto it = memo_.find(key);
  if (it != memo_.end()) return it->second;
  const double s = compute();
  memo_.emplace(std::move(key), s);
  return s;
}

namespace {

struct Move {
  enum Kind { kDelete = 0, kReverse = 1, kAdd = 2 };
  Kind kind = kAdd;
  int src = -1;
  int dst = -1;
  double delta = 0.0;

  bool beats(const Move& other) const {
    if (delta != other.delta) return delta > other.delta;
    if (kind != other.kind) return kind < other.kind;
    if (src != other.src) return src < other.src;
    return dst < other.dst;
  }
};

// Path from `from` to `to` along directed edges.
bool has_directed_path(const Dag& g, const std::vector<std::vector<int>>& children, int from,
                       int to) {
  std::vector<char> seen(static_cast<std::size_t>(g.p), 0);
  std::vector<int> stack{from};
  seen[static_cast<std::size_t>(from)] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    for (int c : children[static_cast<std::size_t>(v)])
      if (!seen[static_cast<std::size_t>(c)]) {
        seen[static_cast<std::size_t>(c)] = 1;
        stack.push_back(c);
      }
  }
  return false;
}

}  // namespace

Dag hill_climb(const DiscreteDataset& data, const Skeleton& skeleton,
               const HillClimbConfig& cfg) {
  const int p = skeleton.p;
  if (p != static_cast<int>(data.columns.size()))
    throw std::invalid_argument("hill_climb: skeleton size must match column count");

  std::vector<char> forbidden(static_cast<std::size_t>(p), 0);
  for (int v : cfg.forbidden_children) forbidden.at(static_cast<std::size_t>(v)) = 1;

  Dag g = Dag::with_vertices(p);
  for (int v = 0; v < p; ++v) g.names[static_cast<std::size_t>(v)] = data.columns[static_cast<std::size_t>(v)].name;

  ScoreCache cache;
  const auto score_of = [&](int v, std::vector<int> parents) {
    std::sort(parents.begin(), parents.end());
    return cache.get_or_compute(v, parents,
                                [&] { return local_score(data, v, parents, cfg.score); });
  };

  std::vector<double> current(static_cast<std::size_t>(p));
  for (int v = 0; v < p; ++v) current[static_cast<std::size_t>(v)] = score_of(v, {});

  for (int iter = 0; iter < cfg.max_iter; ++iter) {
    const auto children = g.children_lists();
    Move best;
    bool found = false;
    const auto consider = [&](Move m) {
      if (!found || m.beats(best)) {
        best = m;
        found = true;
      }
    };

    for (int a = 0; a < p; ++a) {
      for (int b = 0; b < p; ++b) {
        if (a == b || !skeleton.adjacent(a, b)) continue;
        const bool edge_ab = g.has_edge(a, b);
        if (edge_ab) {
          // deletion
          {
            std::vector<int> pa = g.parents(b);
            pa.erase(std::remove(pa.begin(), pa.end(), a), pa.end());
            const double d = score_of(b, pa) - current[static_cast<std::size_t>(b)];
            consider({Move::kDelete, a, b, d});
          }
          // reversal: b must be allowed to emit edges, and no other directed
          // path a ~> b may exist or b -> a closes a cycle
          if (!forbidden[static_cast<std::size_t>(b)]) {
            std::vector<int> pa_b = g.parents(b);
            pa_b.erase(std::remove(pa_b.begin(), pa_b.end(), a), pa_b.end());
            auto children_mod = children;
            auto& ca = children_mod[static_cast<std::size_t>(a)];
            ca.erase(std::remove(ca.begin(), ca.end(), b), ca.end());
            if (!has_directed_path(g, children_mod, a, b)) {
              std::vector<int> pa_a = g.parents(a);
              pa_a.push_back(b);
              const double d = (score_of(b, pa_b) - current[static_cast<std::size_t>(b)]) +
                               (score_of(a, pa_a) - current[static_cast<std::size_t>(a)]);
              consider({Move::kReverse, a, b, d});
            }
          }
        } else if (!g.has_edge(b, a)) {
          // addition a -> b
          if (forbidden[static_cast<std::size_t>(a)]) continue;
          if (has_directed_path(g, children, b, a)) continue;
          std::vector<int> pa = g.parents(b);
          pa.push_back(a);
          const double d = score_of(b, pa) - current[static_cast<std::size_t>(b)];
          consider({Move::kAdd, a, b, d});
        }
      }
    }

    if (!found || best.delta <= 0.0) break;
    switch (best.kind) {
      case Move::kDelete:
        g.remove_edge(best.src, best.dst);
        current[static_cast<std::size_t>(best.dst)] = score_of(best.dst, g.parents(best.dst));
        break;
      case Move::kReverse:
        g.remove_edge(best.src, best.dst);
        g.add_edge(best.dst, best.src);
        current[static_cast<std::size_t>(best.dst)] = score_of(best.dst, g.parents(best.dst));
        current[static_cast<std::size_t>(best.src)] = score_of(best.src, g.parents(best.src));
        break;
      case Move::kAdd:
        g.add_edge(best.src, best.dst);
        current[static_cast<std::size_t>(best.dst)] = score_of(best.dst, g.parents(best.dst));
        break;
    }
  }
  return g;
}

}  // namespace confsel
