#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ntree/dataset.hpp"
#include "ntree/metrics.hpp"
#include "ntree/rng.hpp"

namespace ntree {

enum class CenterStrategy { Random, Greedy };

struct NTreeParams {
  int k = 36;
  int l = 100;
  CenterStrategy centerStrategy = CenterStrategy::Greedy;
  std::uint64_t seed = 0;
  int nodeIdBase = 0;

  void validate() const {
    if (k < 2 || k > l)
      throw std::invalid_argument("NTreeParams: requires 2 <= k <= l");
  }
};

/// Per-search scratch of distances from the query to the entries of one
/// node. An entry, when present, equals the metric evaluation exactly.
class DQCache {
 public:
  void reset(std::size_t n) {
    value_.assign(n, 0.0);
    known_.assign(n, 0);
  }
  bool known(std::size_t i) const { return known_[i] != 0; }
  double get(std::size_t i) const { return value_[i]; }
  void set(std::size_t i, double d) {
    value_[i] = d;
    known_[i] = 1;
  }

 private:
  std::vector<double> value_;
  std::vector<char> known_;
};

template <class Obj>
class NTree {
 public:
  using Metric = CountingMetric<Obj>;

  struct Entry {
    ObjectId id = 0;
    Obj object;
  };

  /// Inner nodes keep one entry per center with a child subtree and its
  /// radius (max distance from the center to any object in the subtree);
  /// leaves keep the objects themselves. Every node stores the pairwise
  /// distance matrix of its entries, two pivot indices and the per-entry
  /// pivot distance vectors. Single-entry nodes have no pivots.
  struct Node {
    std::vector<Entry> entries;
    std::vector<std::unique_ptr<Node>> children;  // empty for leaves
    std::vector<double> radii;                    // inner only
    std::vector<double> dist;                     // row-major size() x size()
    std::vector<std::array<double, 2>> pivotDist;
    int pivot1 = -1;
    int pivot2 = -1;
    int nodeId = 0;

    bool isLeaf() const { return children.empty(); }
    int size() const { return static_cast<int>(entries.size()); }
    double d(int i, int j) const { return dist[i * size() + j]; }

    std::size_t subtreeObjectCount() const {
      if (isLeaf()) return entries.size();
      std::size_t n = 0;
      for (const auto& c : children) n += c->subtreeObjectCount();
      return n;
    }

    std::size_t subtreeNodeCount() const {
      std::size_t n = 1;
      for (const auto& c : children) n += c->subtreeNodeCount();
      return n;
    }
  };

  NTree(const Metric& metric, NTreeParams params)
      : metric_(&metric), params_(params) {
    params_.validate();
    nextNodeId_ = params_.nodeIdBase;
  }

  static NTree build(const Dataset<Obj>& data, const Metric& metric,
                     NTreeParams params);

  /// Descends along closest centers, raising radii on the way, and absorbs
  /// the object into a leaf; a leaf past capacity is rebuilt as a subtree.
  /// Ids must be unique within one tree (equal objects are fine).
  void insert(ObjectId id, Obj object);

  /// Removes one copy of x (located via the closest-center path). Returns
  /// false if no copy is found there. Radii along the path are not
  /// recomputed, so stored radii may overestimate afterwards.
  bool erase(const Obj& x);

  const Node* root() const { return root_.get(); }
  const NTreeParams& params() const { return params_; }
  const Metric& metric() const { return *metric_; }
  std::size_t size() const { return count_; }

  /// Whether an object with this id currently occupies a leaf slot.
  /// Deleted objects may live on as center copies in inner nodes; those
  /// copies must not be counted as data objects.
  bool contains(ObjectId id) const { return liveCount_.count(id) > 0; }

  /// Used by import/parallel construction to adopt a finished subtree.
  void adoptRoot(std::unique_ptr<Node> root, std::size_t objectCount,
                 int nextNodeId) {
    root_ = std::move(root);
    count_ = objectCount;
    nextNodeId_ = nextNodeId;
    liveCount_.clear();
    if (root_) registerLeafIds(*root_);
  }

 private:
  const Metric* metric_;
  NTreeParams params_;
  std::unique_ptr<Node> root_;
  std::size_t count_ = 0;
  int nextNodeId_ = 0;
  std::uint64_t updateCounter_ = 0;
  std::unordered_map<ObjectId, std::uint32_t> liveCount_;

  std::uint64_t nextUpdateSeed() {
    return deriveSeed(params_.seed ^ 0x5eedULL, ++updateCounter_);
  }

  void registerLeafIds(const Node& node) {
    if (node.isLeaf()) {
      for (const Entry& e : node.entries) ++liveCount_[e.id];
      return;
    }
    for (const auto& c : node.children) registerLeafIds(*c);
  }

  void unregisterId(ObjectId id) {
    const auto it = liveCount_.find(id);
    if (it != liveCount_.end() && --it->second == 0) liveCount_.erase(it);
  }

  void incrementalLeafInsert(Node& leaf);
  void removeLeafEntry(Node& leaf, int idx);
};

namespace detail {

constexpr std::uint64_t kNodeRngSalt = 0x6e6f6465ULL;

/// Finds the entry of `node` closest to q using at most one metric
/// evaluation per entry: the two pivot distances are evaluated first, the
/// remaining candidates are ordered by the Euclidean distance of their
/// pivot-distance vectors to the query's, and after each evaluation the
/// mindist rule retains only candidates c_j with
/// u - d_min < d_ij < u + d_min. All evaluated distances are recorded in dq.
template <class Obj>
std::pair<int, double> closestCenter(const typename NTree<Obj>::Node& node,
                                     const Obj& q,
                                     const CountingMetric<Obj>& metric,
                                     DQCache& dq, int* evalsUsed = nullptr) {
  const int m = node.size();
  dq.reset(m);
  int evals = 0;
  const auto eval = [&](int i) {
    const double d = metric(q, node.entries[i].object);
    dq.set(i, d);
    ++evals;
    return d;
  };

  int best;
  double dmin;
  if (m == 1 || node.pivot1 < 0) {
    best = 0;
    dmin = eval(0);
    if (evalsUsed) *evalsUsed = evals;
    return {best, dmin};
  }

  const int p1 = node.pivot1;
  const int p2 = node.pivot2;
  const double dq1 = eval(p1);
  const double dq2 = eval(p2);
  best = p1;
  dmin = dq1;
  if (dq2 < dmin) {
    best = p2;
    dmin = dq2;
  }

  // remaining candidates ordered by pivot-vector distance to (dq1, dq2)
  std::vector<std::pair<double, int>> order;
  order.reserve(m - 2);
  for (int i = 0; i < m; ++i) {
    if (i == p1 || i == p2) continue;
    const double ex = node.pivotDist[i][0] - dq1;
    const double ey = node.pivotDist[i][1] - dq2;
    order.emplace_back(ex * ex + ey * ey, i);
  }
  std::sort(order.begin(), order.end());

  std::vector<char> pruned(m, 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const int i = order[pos].second;
    if (pruned[i]) continue;
    const double u = eval(i);
    if (u < dmin) {
      best = i;
      dmin = u;
    }
    for (std::size_t rest = pos + 1; rest < order.size(); ++rest) {
      const int j = order[rest].second;
      if (pruned[j]) continue;
      const double dij = node.d(i, j);
      if (!(u - dmin < dij && dij < u + dmin)) pruned[j] = 1;
    }
  }
  if (evalsUsed) *evalsUsed = evals;
  return {best, dmin};
}

/// Pairwise distance matrix, random pivot pair and pivot distance vectors.
/// A single-entry node keeps no auxiliary data; a two-entry node uses both
/// entries as pivots. Pivot vectors are read from the distance matrix, so
/// they cost no extra evaluations.
template <class Obj>
void computeAux(typename NTree<Obj>::Node& node,
                const CountingMetric<Obj>& metric, Rng& rng) {
  const int m = node.size();
  node.dist.clear();
  node.pivotDist.clear();
  node.pivot1 = node.pivot2 = -1;
  if (m <= 1) return;

  node.dist.assign(static_cast<std::size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      const double d = metric(node.entries[i].object, node.entries[j].object);
      node.dist[i * m + j] = d;
      node.dist[j * m + i] = d;
    }

  if (m == 2) {
    node.pivot1 = 0;
    node.pivot2 = 1;
  } else {
    node.pivot1 = static_cast<int>(rng.below(m));
    node.pivot2 = static_cast<int>(rng.below(m - 1));
    if (node.pivot2 >= node.pivot1) ++node.pivot2;
  }
  node.pivotDist.resize(m);
  for (int i = 0; i < m; ++i)
    node.pivotDist[i] = {node.d(i, node.pivot1), node.d(i, node.pivot2)};
}

/// Rebuilds pivot indices and pivot vectors from the stored distance
/// matrix after an entry was removed (no metric evaluations).
template <class Obj>
void refreshPivots(typename NTree<Obj>::Node& node) {
  const int m = node.size();
  node.pivotDist.clear();
  if (m <= 1) {
    node.pivot1 = node.pivot2 = -1;
    return;
  }
  if (m == 2) {
    node.pivot1 = 0;
    node.pivot2 = 1;
  } else {
    if (node.pivot1 < 0) node.pivot1 = 0;
    if (node.pivot2 < 0 || node.pivot2 == node.pivot1)
      node.pivot2 = node.pivot1 == 0 ? 1 : 0;
  }
  node.pivotDist.resize(m);
  for (int i = 0; i < m; ++i)
    node.pivotDist[i] = {node.d(i, node.pivot1), node.d(i, node.pivot2)};
}

/// Random selection: k distinct positions. Greedy selection: samples
/// min(3k, n) candidates, picks a random first center and repeatedly adds
/// the candidate maximizing its minimal distance to the chosen set.
template <class Obj>
std::vector<std::size_t> selectCenters(
    const std::vector<typename NTree<Obj>::Entry>& items, int k,
    CenterStrategy strategy, const CountingMetric<Obj>& metric, Rng& rng) {
  const std::size_t n = items.size();
  if (n < static_cast<std::size_t>(k))
    throw std::invalid_argument("selectCenters: fewer items than centers");
  if (strategy == CenterStrategy::Random) return rng.sampleIndices(n, k);

  std::vector<std::size_t> cand =
      rng.sampleIndices(n, std::min<std::size_t>(3 * static_cast<std::size_t>(k), n));
  std::vector<double> minDist(cand.size(),
                              std::numeric_limits<double>::infinity());
  std::vector<char> chosen(cand.size(), 0);

  std::vector<std::size_t> centers;
  centers.reserve(k);
  std::size_t cur = rng.below(cand.size());
  chosen[cur] = 1;
  centers.push_back(cand[cur]);

  while (centers.size() < static_cast<std::size_t>(k)) {
    double bestDist = -1.0;
    std::size_t best = 0;
    for (std::size_t c = 0; c < cand.size(); ++c) {
      if (chosen[c]) continue;
      minDist[c] = std::min(
          minDist[c], metric(items[cand[cur]].object, items[cand[c]].object));
      if (minDist[c] > bestDist) {
        bestDist = minDist[c];
        best = c;
      }
    }
    cur = best;
    chosen[cur] = 1;
    centers.push_back(cand[cur]);
  }
  return centers;
}

template <class Obj>
struct Assignment {
  int center;
  double dist;
};

/// Closest-center assignment for one item (centers themselves are assigned
/// to their own partitions by the caller).
template <class Obj>
Assignment<Obj> assignToCenter(const typename NTree<Obj>::Node& centerNode,
                               const Obj& x,
                               const CountingMetric<Obj>& metric) {
  DQCache dq;
  auto [idx, dmin] = closestCenter<Obj>(centerNode, x, metric, dq);
  return {idx, dmin};
}

template <class Obj>
struct PartitionResult {
  std::vector<std::vector<typename NTree<Obj>::Entry>> parts;
  std::vector<double> radii;
};

/// Partitions `items` by the centers held in `centerNode` (whose aux data
/// must be computed). Each part starts with its center; the radii are the
/// maximal assignment distances, collected during the same pass.
template <class Obj>
PartitionResult<Obj> partitionItems(
    std::vector<typename NTree<Obj>::Entry> items,
    const std::vector<std::size_t>& centerIdx,
    const typename NTree<Obj>::Node& centerNode,
    const CountingMetric<Obj>& metric) {
  const int k = static_cast<int>(centerIdx.size());
  PartitionResult<Obj> out;
  out.parts.resize(k);
  out.radii.assign(k, 0.0);

  std::vector<char> isCenter(items.size(), 0);
  for (int i = 0; i < k; ++i) {
    isCenter[centerIdx[i]] = 1;
    out.parts[i].push_back(items[centerIdx[i]]);
  }
  for (std::size_t pos = 0; pos < items.size(); ++pos) {
    if (isCenter[pos]) continue;
    const auto a = assignToCenter<Obj>(centerNode, items[pos].object, metric);
    out.parts[a.center].push_back(std::move(items[pos]));
    out.radii[a.center] = std::max(out.radii[a.center], a.dist);
  }
  return out;
}

template <class Obj>
std::unique_ptr<typename NTree<Obj>::Node> buildNode(
    std::vector<typename NTree<Obj>::Entry> items,
    const CountingMetric<Obj>& metric, const NTreeParams& params,
    std::uint64_t seed) {
  using Node = typename NTree<Obj>::Node;
  auto node = std::make_unique<Node>();
  Rng rng(deriveSeed(seed, kNodeRngSalt));

  if (items.size() <= static_cast<std::size_t>(params.l)) {
    node->entries = std::move(items);
    computeAux<Obj>(*node, metric, rng);
    return node;
  }

  const auto centerIdx =
      selectCenters<Obj>(items, params.k, params.centerStrategy, metric, rng);
  node->entries.reserve(params.k);
  for (std::size_t idx : centerIdx) node->entries.push_back(items[idx]);
  computeAux<Obj>(*node, metric, rng);

  auto part = partitionItems<Obj>(std::move(items), centerIdx, *node, metric);
  node->radii = std::move(part.radii);
  node->children.resize(params.k);
  for (int i = 0; i < params.k; ++i)
    node->children[i] = buildNode<Obj>(std::move(part.parts[i]), metric,
                                       params, deriveSeed(seed, i + 1));
  return node;
}

/// Depth-first preorder node id assignment; returns the next free id.
template <class Obj>
int assignNodeIds(typename NTree<Obj>::Node& node, int next) {
  node.nodeId = next++;
  for (auto& c : node.children) next = assignNodeIds<Obj>(*c, next);
  return next;
}

}  // namespace detail

template <class Obj>
NTree<Obj> NTree<Obj>::build(const Dataset<Obj>& data, const Metric& metric,
                             NTreeParams params) {
  params.validate();
  if (data.size() == 0) throw std::invalid_argument("build: empty dataset");
  std::vector<Entry> items;
  items.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    items.push_back(Entry{data.ids[i], data.objects[i]});

  NTree tree(metric, params);
  tree.root_ =
      detail::buildNode<Obj>(std::move(items), metric, params, params.seed);
  tree.count_ = data.size();
  tree.nextNodeId_ =
      detail::assignNodeIds<Obj>(*tree.root_, params.nodeIdBase);
  for (ObjectId id : data.ids) ++tree.liveCount_[id];
  return tree;
}

template <class Obj>
void NTree<Obj>::incrementalLeafInsert(Node& leaf) {
  const int m = leaf.size();  // includes the new entry at position m-1
  const int old = m - 1;
  std::vector<double> grown(static_cast<std::size_t>(m) * m, 0.0);
  if (old >= 2) {
    for (int i = 0; i < old; ++i)
      for (int j = 0; j < old; ++j) grown[i * m + j] = leaf.dist[i * old + j];
  }
  for (int i = 0; i < old; ++i) {
    const double d =
        (*metric_)(leaf.entries[i].object, leaf.entries[m - 1].object);
    grown[i * m + (m - 1)] = d;
    grown[(m - 1) * m + i] = d;
  }
  leaf.dist = std::move(grown);

  if (m == 2) {
    leaf.pivot1 = 0;
    leaf.pivot2 = 1;
  }
  leaf.pivotDist.resize(m);
  for (int i = 0; i < m; ++i)
    leaf.pivotDist[i] = {leaf.d(i, leaf.pivot1), leaf.d(i, leaf.pivot2)};
}

template <class Obj>
void NTree<Obj>::insert(ObjectId id, Obj object) {
  ++liveCount_[id];
  if (!root_) {
    root_ = std::make_unique<Node>();
    root_->entries.push_back(Entry{id, std::move(object)});
    root_->nodeId = nextNodeId_++;
    count_ = 1;
    return;
  }

  Node* q = root_.get();
  DQCache dq;
  while (!q->isLeaf()) {
    auto [ci, dmin] = detail::closestCenter<Obj>(*q, object, *metric_, dq);
    if (dmin > q->radii[ci]) q->radii[ci] = dmin;
    q = q->children[ci].get();
  }

  q->entries.push_back(Entry{id, std::move(object)});
  ++count_;
  if (q->size() <= params_.l) {
    incrementalLeafInsert(*q);
    return;
  }
  auto rebuilt = detail::buildNode<Obj>(std::move(q->entries), *metric_,
                                        params_, nextUpdateSeed());
  *q = std::move(*rebuilt);
  nextNodeId_ = detail::assignNodeIds<Obj>(*q, nextNodeId_);
}

template <class Obj>
void NTree<Obj>::removeLeafEntry(Node& leaf, int idx) {
  const int m = leaf.size();
  leaf.entries.erase(leaf.entries.begin() + idx);
  if (m <= 2) {
    leaf.dist.clear();
    leaf.pivotDist.clear();
    leaf.pivot1 = leaf.pivot2 = -1;
    return;
  }
  std::vector<double> shrunk(static_cast<std::size_t>(m - 1) * (m - 1));
  for (int i = 0, si = 0; i < m; ++i) {
    if (i == idx) continue;
    for (int j = 0, sj = 0; j < m; ++j) {
      if (j == idx) continue;
      shrunk[si * (m - 1) + sj] = leaf.dist[i * m + j];
      ++sj;
    }
    ++si;
  }
  leaf.dist = std::move(shrunk);

  const auto shiftPivot = [&](int p) {
    if (p == idx) return -1;
    return p > idx ? p - 1 : p;
  };
  leaf.pivot1 = shiftPivot(leaf.pivot1);
  leaf.pivot2 = shiftPivot(leaf.pivot2);
  if (leaf.pivot1 < 0) std::swap(leaf.pivot1, leaf.pivot2);
  detail::refreshPivots<Obj>(leaf);
}

template <class Obj>
bool NTree<Obj>::erase(const Obj& x) {
  if (!root_) return false;

  std::vector<Node*> path;
  Node* q = root_.get();
  DQCache dq;
  while (!q->isLeaf()) {
    path.push_back(q);
    auto [ci, dmin] = detail::closestCenter<Obj>(*q, x, *metric_, dq);
    q = q->children[ci].get();
  }

  int idx = -1;
  for (int i = 0; i < q->size(); ++i) {
    if (q->entries[i].object == x) {
      idx = i;
      break;
    }
  }
  if (idx < 0) return false;

  unregisterId(q->entries[idx].id);
  removeLeafEntry(*q, idx);
  --count_;
  if (q->size() > 0) return true;

  // the leaf became empty: rebuild the parent's whole subtree
  if (path.empty()) {
    root_.reset();
    return true;
  }
  Node* parent = path.back();
  std::vector<Entry> collected;
  const auto collect = [&](const Node& n, auto&& self) -> void {
    if (n.isLeaf()) {
      for (const Entry& e : n.entries) collected.push_back(e);
      return;
    }
    for (const auto& c : n.children) self(*c, self);
  };
  collect(*parent, collect);

  auto rebuilt = detail::buildNode<Obj>(std::move(collected), *metric_,
                                        params_, nextUpdateSeed());
  *parent = std::move(*rebuilt);
  nextNodeId_ = detail::assignNodeIds<Obj>(*parent, nextNodeId_);
  return true;
}

}  // namespace ntree
