#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ntree/ntree.hpp"
#include "ntree/rng.hpp"

namespace ntree {

/// Priority-queue key formulas for subtrees in the approximate-radius
/// computation. DE3 = max(d_x, d_ij) - r_j is the default.
enum class DistanceEstimate {
  DE0,
  DE1,
  DE2,
  DE3,
  DE4,
  DE5,
  DE6,
  DE7,
  DE8,
};

inline double distanceEstimate(double dx, double dij, double rj,
                               DistanceEstimate de) {
  switch (de) {
    case DistanceEstimate::DE0: return std::abs(dx - dij) - rj;
    case DistanceEstimate::DE1: return std::abs(dx - dij);
    case DistanceEstimate::DE2: return std::abs(dx - dij) + rj;
    case DistanceEstimate::DE3: return std::max(dx, dij) - rj;
    case DistanceEstimate::DE4: return std::max(dx, dij);
    case DistanceEstimate::DE5: return std::max(dx, dij) + rj;
    case DistanceEstimate::DE6: return dx + dij - rj;
    case DistanceEstimate::DE7: return dx + dij;
    case DistanceEstimate::DE8: return dx + dij + rj;
  }
  throw std::invalid_argument("distanceEstimate: unknown selector");
}

struct QueryStats {
  std::uint64_t distanceEvaluations = 0;
  std::uint64_t nodesVisited = 0;
  std::uint64_t resultSize = 0;
  std::uint64_t elapsedMicros = 0;
  // pruning effectiveness of closestCenter on inner nodes
  std::uint64_t closestCenterInnerCalls = 0;
  std::uint64_t closestCenterInnerEvals = 0;
};

struct Neighbor {
  ObjectId id = 0;
  double distance = 0.0;
};

/// Distances evaluated during a query, keyed by object id; reused by the
/// kNN refinement step instead of re-evaluating.
using EvalCache = std::unordered_map<ObjectId, double>;

namespace detail {

template <class Obj>
struct SearchContext {
  using Node = typename NTree<Obj>::Node;
  using Entry = typename NTree<Obj>::Entry;

  const CountingMetric<Obj>& metric;
  const Obj& q;
  QueryStats* stats;
  EvalCache* cache;

  double evaluate(const Entry& e) const {
    const double d = metric(q, e.object);
    if (cache) (*cache)[e.id] = d;
    return d;
  }

  void visitedNode() const {
    if (stats) ++stats->nodesVisited;
  }
};

template <class Obj>
void collectAll(const typename NTree<Obj>::Node& node,
                std::vector<const typename NTree<Obj>::Entry*>& out) {
  if (node.isLeaf()) {
    for (const auto& e : node.entries) out.push_back(&e);
    return;
  }
  for (const auto& c : node.children) collectAll<Obj>(*c, out);
}

/// One node of the "inside" case: finds the closest center, then reports
/// or schedules sibling partitions using the precomputed distances, the
/// subtree radii (MaxDist pruning) and the range distribution property
/// (nearest-neighbor pruning). Distances already evaluated by
/// closestCenter are reused through the DQ cache.
template <class Obj>
int rangeSearch1(const SearchContext<Obj>& ctx,
                 const typename NTree<Obj>::Node& p, double r,
                 std::vector<const typename NTree<Obj>::Entry*>& res,
                 std::vector<int>& search) {
  ctx.visitedNode();
  DQCache dq;
  int ccEvals = 0;
  const auto [ci, dmin] =
      closestCenter<Obj>(p, ctx.q, ctx.metric, dq, &ccEvals);
  if (ctx.stats && !p.isLeaf()) {
    ++ctx.stats->closestCenterInnerCalls;
    ctx.stats->closestCenterInnerEvals += ccEvals;
  }
  if (ctx.cache) {
    for (int i = 0; i < p.size(); ++i)
      if (dq.known(i)) (*ctx.cache)[p.entries[i].id] = dq.get(i);
  }

  const auto cachedDistance = [&](int j) {
    if (dq.known(j)) return dq.get(j);
    const double d = ctx.evaluate(p.entries[j]);
    dq.set(j, d);
    return d;
  };

  const int m = p.size();
  if (p.isLeaf()) {
    for (int j = 0; j < m; ++j) {
      const double dij = j == ci ? 0.0 : p.d(ci, j);
      if (dij + dmin <= r) {
        res.push_back(&p.entries[j]);
      } else if (dij - dmin <= r) {
        if (cachedDistance(j) <= r) res.push_back(&p.entries[j]);
      }
    }
  } else {
    for (int j = 0; j < m; ++j) {
      if (j == ci) continue;
      const double dij = p.d(ci, j);
      if (dij + dmin + p.radii[j] <= r) {
        collectAll<Obj>(*p.children[j], res);
      } else if (dij - dmin - p.radii[j] <= r && dij <= 2 * dmin + 2 * r) {
        if (dij <= 2 * r) {
          search.push_back(j);
        } else if (cachedDistance(j) <= dmin + 2 * r) {
          search.push_back(j);
        }
      }
    }
  }
  return ci;
}

/// MaxDist pruning against the remaining candidates after d(q, c_i) = u
/// was evaluated: siblings whose whole subtree must lie inside the range
/// are reported and removed, siblings that cannot reach it are removed.
/// Leaves use the same rules with zero radius.
template <class Obj>
void prune(const typename NTree<Obj>::Node& p, int i, double u, double r,
           std::vector<char>& removed,
           std::vector<const typename NTree<Obj>::Entry*>& res) {
  const bool leaf = p.isLeaf();
  for (int j = 0; j < p.size(); ++j) {
    if (removed[j] || j == i) continue;
    const double dij = p.d(i, j);
    const double rj = leaf ? 0.0 : p.radii[j];
    if (r >= u + dij + rj) {
      if (leaf)
        res.push_back(&p.entries[j]);
      else
        collectAll<Obj>(*p.children[j], res);
      removed[j] = 1;
    } else if (r < std::abs(u - dij) - rj) {
      removed[j] = 1;
    }
  }
}

/// The "outside" case: centers are processed in stored order; every
/// evaluated distance prunes or reports remaining siblings (MaxDist), and
/// the surviving subtrees are filtered with the final nearest-neighbor
/// distance before recursing.
template <class Obj>
void rangeSearch2(const SearchContext<Obj>& ctx,
                  const typename NTree<Obj>::Node& p, double r,
                  std::vector<const typename NTree<Obj>::Entry*>& res) {
  ctx.visitedNode();
  const int m = p.size();
  const bool leaf = p.isLeaf();
  std::vector<char> removed(m, 0);
  std::vector<std::pair<int, double>> deferred;
  double dmin = std::numeric_limits<double>::infinity();

  for (int i = 0; i < m; ++i) {
    if (removed[i]) continue;
    removed[i] = 1;
    const double u = ctx.evaluate(p.entries[i]);
    if (u < dmin) dmin = u;
    prune<Obj>(p, i, u, r, removed, res);

    if (leaf) {
      if (r >= u) res.push_back(&p.entries[i]);
    } else {
      if (r >= u + p.radii[i])
        collectAll<Obj>(*p.children[i], res);
      else if (r >= u - p.radii[i])
        deferred.emplace_back(i, u);
    }
  }

  for (const auto& [idx, u] : deferred)
    if (u <= dmin + 2 * r) rangeSearch2<Obj>(ctx, *p.children[idx], r, res);
}

template <class Obj>
void rangeSearchNode(const SearchContext<Obj>& ctx,
                     const typename NTree<Obj>::Node& p, double r,
                     std::vector<const typename NTree<Obj>::Entry*>& res) {
  std::vector<int> search;
  const int ci = rangeSearch1<Obj>(ctx, p, r, res, search);
  if (p.isLeaf()) return;
  rangeSearchNode<Obj>(ctx, *p.children[ci], r, res);
  for (int j : search) rangeSearch2<Obj>(ctx, *p.children[j], r, res);
}

template <class Obj>
std::vector<const typename NTree<Obj>::Entry*> rangeSearchEntries(
    const NTree<Obj>& tree, const Obj& q, double r, QueryStats* stats,
    EvalCache* cache) {
  std::vector<const typename NTree<Obj>::Entry*> res;
  if (!tree.root()) return res;
  SearchContext<Obj> ctx{tree.metric(), q, stats, cache};
  rangeSearchNode<Obj>(ctx, *tree.root(), r, res);
  return res;
}

/// chooseCenter: closest center when the query falls inside this node's
/// partitioning, otherwise a random center with a single evaluation.
template <class Obj>
std::pair<int, double> chooseCenter(const SearchContext<Obj>& ctx,
                                    const typename NTree<Obj>::Node& p,
                                    bool isInside, Rng& rng) {
  if (isInside) {
    DQCache dq;
    int ccEvals = 0;
    const auto [ci, dx] =
        closestCenter<Obj>(p, ctx.q, ctx.metric, dq, &ccEvals);
    if (ctx.stats && !p.isLeaf()) {
      ++ctx.stats->closestCenterInnerCalls;
      ctx.stats->closestCenterInnerEvals += ccEvals;
    }
    if (ctx.cache) {
      for (int i = 0; i < p.size(); ++i)
        if (dq.known(i)) (*ctx.cache)[p.entries[i].id] = dq.get(i);
    }
    return {ci, dx};
  }
  const int ci = static_cast<int>(rng.below(p.size()));
  return {ci, ctx.evaluate(p.entries[ci])};
}

}  // namespace detail

/// Exact range query: all stored objects within distance r of q.
template <class Obj>
std::vector<ObjectId> rangeSearch(const NTree<Obj>& tree, const Obj& q,
                                  double r, QueryStats* stats = nullptr,
                                  EvalCache* cache = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t evals0 = tree.metric().evaluations();
  auto entries = detail::rangeSearchEntries<Obj>(tree, q, r, stats, cache);
  std::vector<ObjectId> ids;
  ids.reserve(entries.size());
  for (const auto* e : entries) ids.push_back(e->id);
  if (stats) {
    stats->distanceEvaluations += tree.metric().evaluations() - evals0;
    stats->resultSize += ids.size();
    stats->elapsedMicros += std::chrono::duration_cast<std::chrono::microseconds>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
  }
  return ids;
}

/// Minimum-priority traversal returning a radius that is guaranteed to
/// contain the k nearest neighbors of q. Object keys are upper bounds of
/// the true distances; leaves contribute objects only. The same object
/// reached through several center copies is counted once, and center
/// copies of deleted objects are not counted at all; counting either
/// would let the radius undershoot the k-th neighbor.
template <class Obj>
double getApproxRadius(const NTree<Obj>& tree, const Obj& q, int k,
                       DistanceEstimate de, Rng& rng,
                       QueryStats* stats = nullptr,
                       EvalCache* cache = nullptr) {
  using Node = typename NTree<Obj>::Node;
  if (k < 1) throw std::invalid_argument("getApproxRadius: k must be >= 1");
  if (tree.size() < static_cast<std::size_t>(k))
    throw std::invalid_argument("getApproxRadius: fewer than k objects");

  detail::SearchContext<Obj> ctx{tree.metric(), q, stats, cache};

  struct PQEntry {
    double key;
    std::uint64_t seq;  // stable tie order
    const Node* node;   // nullptr for data objects
    ObjectId obj;
    bool isInside;
  };
  const auto later = [](const PQEntry& a, const PQEntry& b) {
    if (a.key != b.key) return a.key > b.key;
    return a.seq > b.seq;
  };
  std::priority_queue<PQEntry, std::vector<PQEntry>, decltype(later)> pq(later);
  std::uint64_t seq = 0;
  pq.push(PQEntry{0.0, seq++, tree.root(), 0, true});

  std::unordered_set<ObjectId> counted;
  double rApprox = -1.0;
  int found = 0;

  while (!pq.empty()) {
    const PQEntry e = pq.top();
    pq.pop();
    if (!e.node) {
      if (!tree.contains(e.obj)) continue;
      if (!counted.insert(e.obj).second) continue;
      rApprox = std::max(rApprox, e.key);
      if (++found == k) break;
      continue;
    }
    const Node& n = *e.node;
    ctx.visitedNode();
    const auto [ci, dx] = detail::chooseCenter<Obj>(ctx, n, e.isInside, rng);
    pq.push(PQEntry{dx, seq++, nullptr, n.entries[ci].id, e.isInside});
    if (!n.isLeaf())
      pq.push(PQEntry{dx - n.radii[ci], seq++, n.children[ci].get(), 0,
                      e.isInside});
    for (int j = 0; j < n.size(); ++j) {
      if (j == ci) continue;
      const double dij = n.d(ci, j);
      pq.push(PQEntry{dx + dij, seq++, nullptr, n.entries[j].id, false});
      if (!n.isLeaf())
        pq.push(PQEntry{distanceEstimate(dx, dij, n.radii[j], de), seq++,
                        n.children[j].get(), 0, false});
    }
  }
  return rApprox;
}

/// Exact k nearest neighbors: a guaranteed radius is computed first, one
/// range search collects the candidates, and distances recorded during
/// the search are reused for the final refinement. Ties at the k-th
/// distance keep the earlier candidate.
template <class Obj>
std::vector<Neighbor> knn(const NTree<Obj>& tree, const Obj& q, int k,
                          DistanceEstimate de = DistanceEstimate::DE3,
                          std::uint64_t querySeed = 0,
                          QueryStats* stats = nullptr) {
  if (k < 1) throw std::invalid_argument("knn: k must be >= 1");
  if (tree.size() < static_cast<std::size_t>(k))
    throw std::invalid_argument("knn: fewer than k objects in the tree");

  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t evals0 = tree.metric().evaluations();

  Rng rng(deriveSeed(querySeed, 0x6b6e6eULL));
  EvalCache cache;
  const double rApprox =
      getApproxRadius<Obj>(tree, q, k, de, rng, stats, &cache);
  auto entries =
      detail::rangeSearchEntries<Obj>(tree, q, rApprox, stats, &cache);

  std::vector<Neighbor> candidates;
  candidates.reserve(entries.size());
  for (const auto* e : entries) {
    const auto it = cache.find(e->id);
    const double d = it != cache.end() ? it->second : tree.metric()(q, e->object);
    candidates.push_back(Neighbor{e->id, d});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Neighbor& a, const Neighbor& b) {
                     return a.distance < b.distance;
                   });
  if (candidates.size() > static_cast<std::size_t>(k)) candidates.resize(k);

  if (stats) {
    stats->distanceEvaluations += tree.metric().evaluations() - evals0;
    stats->resultSize += candidates.size();
    stats->elapsedMicros += std::chrono::duration_cast<std::chrono::microseconds>(
                                std::chrono::steady_clock::now() - t0)
                                .count();
  }
  return candidates;
}

/// Range query by sequential scan (reference implementation and baseline).
template <class Obj, class Dist>
std::vector<ObjectId> bruteForceRange(const Dataset<Obj>& data,
                                      const Dist& dist, const Obj& q,
                                      double r) {
  std::vector<ObjectId> out;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (dist(q, data.objects[i]) <= r) out.push_back(data.ids[i]);
  return out;
}

/// kNN by sequential scan; ties keep the earlier object.
template <class Obj, class Dist>
std::vector<Neighbor> bruteForceKnn(const Dataset<Obj>& data, const Dist& dist,
                                    const Obj& q, int k) {
  std::vector<Neighbor> all;
  all.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    all.push_back(Neighbor{data.ids[i], dist(q, data.objects[i])});
  std::stable_sort(all.begin(), all.end(),
                   [](const Neighbor& a, const Neighbor& b) {
                     return a.distance < b.distance;
                   });
  if (all.size() > static_cast<std::size_t>(k)) all.resize(k);
  return all;
}

}  // namespace ntree
