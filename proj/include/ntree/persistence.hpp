#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ntree/ntree.hpp"

namespace ntree {

template <class Obj>
struct NodesRow {
  Obj payload;
  ObjectId objectRef = 0;
  int nodeId = 0;
  int entry = 0;
  int subtree = 0;  // node id of the child subtree, 0 for leaf entries
  double maxDist = 0.0;

  friend bool operator==(const NodesRow&, const NodesRow&) = default;
};

struct DistancesRow {
  int nodeId = 0;
  int entry1 = 0;
  int entry2 = 0;  // entry1 < entry2, upper triangle stored once
  double distance = 0.0;

  friend bool operator==(const DistancesRow&, const DistancesRow&) = default;
};

struct PivotsRow {
  int nodeId = 0;
  int entry = 0;
  double posX = 0.0;  // pivot distance vector of this entry
  double posY = 0.0;
  bool isPivot = false;

  friend bool operator==(const PivotsRow&, const PivotsRow&) = default;
};

struct TreeInfoRow {
  int k = 0;
  int l = 0;
  std::string metricName;
  std::string payloadSchema;
  int rootNodeId = 0;

  friend bool operator==(const TreeInfoRow&, const TreeInfoRow&) = default;
};

/// Four relations encoding an N-tree bit-exactly; rows are ordered by
/// (nodeId, entry) and node ids follow a depth-first preorder traversal.
template <class Obj>
struct RelationalTreeImage {
  std::vector<NodesRow<Obj>> nodes;
  std::vector<DistancesRow> distances;
  std::vector<PivotsRow> pivots;
  TreeInfoRow info;

  friend bool operator==(const RelationalTreeImage&,
                         const RelationalTreeImage&) = default;
};

namespace detail {

template <class Obj>
int assignExportIds(
    const typename NTree<Obj>::Node& node, int next,
    std::unordered_map<const typename NTree<Obj>::Node*, int>& ids) {
  ids[&node] = next++;
  for (const auto& c : node.children)
    next = assignExportIds<Obj>(*c, next, ids);
  return next;
}

template <class Obj>
void emitRows(
    const typename NTree<Obj>::Node& node,
    const std::unordered_map<const typename NTree<Obj>::Node*, int>& ids,
    RelationalTreeImage<Obj>& img) {
  const int nid = ids.at(&node);
  const int m = node.size();
  const bool leaf = node.isLeaf();
  for (int i = 0; i < m; ++i) {
    img.nodes.push_back(NodesRow<Obj>{
        node.entries[i].object, node.entries[i].id, nid, i,
        leaf ? 0 : ids.at(node.children[i].get()),
        leaf ? 0.0 : node.radii[i]});
  }
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      img.distances.push_back(DistancesRow{nid, i, j, node.d(i, j)});
  for (int i = 0; i < m; ++i) {
    const bool hasPivots = node.pivot1 >= 0;
    img.pivots.push_back(PivotsRow{
        nid, i, hasPivots ? node.pivotDist[i][0] : 0.0,
        hasPivots ? node.pivotDist[i][1] : 0.0,
        hasPivots && (i == node.pivot1 || i == node.pivot2)});
  }
  for (const auto& c : node.children) emitRows<Obj>(*c, ids, img);
}

}  // namespace detail

/// Writes the tree into the four relations in a single depth-first
/// traversal; node ids are assigned in preorder starting at startNodeId.
/// No metric evaluations are performed.
template <class Obj>
RelationalTreeImage<Obj> exportTree(const NTree<Obj>& tree,
                                    int startNodeId = 0,
                                    std::string payloadSchema = {}) {
  RelationalTreeImage<Obj> img;
  img.info = TreeInfoRow{tree.params().k, tree.params().l,
                         tree.metric().name(), std::move(payloadSchema),
                         startNodeId};
  if (!tree.root()) {
    img.info.rootNodeId = -1;
    return img;
  }
  std::unordered_map<const typename NTree<Obj>::Node*, int> ids;
  detail::assignExportIds<Obj>(*tree.root(), startNodeId, ids);
  detail::emitRows<Obj>(*tree.root(), ids, img);
  return img;
}

namespace detail {

struct RowRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

template <class Row>
std::unordered_map<int, RowRange> groupByNode(const std::vector<Row>& rows) {
  std::unordered_map<int, RowRange> groups;
  std::size_t i = 0;
  while (i < rows.size()) {
    const int nid = rows[i].nodeId;
    std::size_t j = i;
    while (j < rows.size() && rows[j].nodeId == nid) ++j;
    if (!groups.emplace(nid, RowRange{i, j}).second)
      throw std::runtime_error("import: node rows are not contiguous");
    i = j;
  }
  return groups;
}

template <class Obj>
struct ImportContext {
  const RelationalTreeImage<Obj>& img;
  std::unordered_map<int, RowRange> nodeGroups;
  std::unordered_map<int, RowRange> distGroups;
  std::unordered_map<int, RowRange> pivotGroups;
  std::size_t objectCount = 0;
  std::size_t nodesBuilt = 0;
  int maxNodeId = 0;
};

template <class Obj>
std::unique_ptr<typename NTree<Obj>::Node> importNode(ImportContext<Obj>& ctx,
                                                      int nodeId,
                                                      int parentId) {
  using Node = typename NTree<Obj>::Node;
  if (parentId >= 0 && nodeId <= parentId)
    throw std::runtime_error(
        "import: subtree ids must exceed the parent id (depth-first order)");
  const auto git = ctx.nodeGroups.find(nodeId);
  if (git == ctx.nodeGroups.end())
    throw std::runtime_error("import: dangling subtree reference");

  const RowRange range = git->second;
  auto node = std::make_unique<Node>();
  node->nodeId = nodeId;
  ctx.maxNodeId = std::max(ctx.maxNodeId, nodeId);
  ++ctx.nodesBuilt;

  const int m = static_cast<int>(range.size());
  bool sawLeafEntry = false, sawInnerEntry = false;
  node->entries.reserve(m);
  for (int i = 0; i < m; ++i) {
    const NodesRow<Obj>& row = ctx.img.nodes[range.begin + i];
    if (row.entry != i)
      throw std::runtime_error("import: entry indices out of order");
    node->entries.push_back(
        typename NTree<Obj>::Entry{row.objectRef, row.payload});
    (row.subtree == 0 ? sawLeafEntry : sawInnerEntry) = true;
  }
  if (sawLeafEntry && sawInnerEntry)
    throw std::runtime_error("import: node mixes leaf and inner entries");

  // pairwise distances (upper triangle)
  if (m >= 2) {
    const auto dit = ctx.distGroups.find(nodeId);
    const std::size_t expected = static_cast<std::size_t>(m) * (m - 1) / 2;
    if (dit == ctx.distGroups.end() || dit->second.size() != expected)
      throw std::runtime_error("import: distance rows missing or extra");
    node->dist.assign(static_cast<std::size_t>(m) * m, 0.0);
    for (std::size_t r = dit->second.begin; r < dit->second.end; ++r) {
      const DistancesRow& row = ctx.img.distances[r];
      if (row.entry1 < 0 || row.entry2 >= m || row.entry1 >= row.entry2)
        throw std::runtime_error("import: invalid distance row");
      node->dist[row.entry1 * m + row.entry2] = row.distance;
      node->dist[row.entry2 * m + row.entry1] = row.distance;
    }
  } else if (ctx.distGroups.count(nodeId)) {
    throw std::runtime_error("import: distance rows for single-entry node");
  }

  // pivot vectors and pivot flags
  const auto pit = ctx.pivotGroups.find(nodeId);
  if (pit == ctx.pivotGroups.end() || pit->second.size() != range.size())
    throw std::runtime_error("import: pivot rows missing or extra");
  std::vector<int> flagged;
  std::vector<std::array<double, 2>> pd(m);
  for (std::size_t r = pit->second.begin; r < pit->second.end; ++r) {
    const PivotsRow& row = ctx.img.pivots[r];
    const int i = static_cast<int>(r - pit->second.begin);
    if (row.entry != i)
      throw std::runtime_error("import: pivot entry indices out of order");
    pd[i] = {row.posX, row.posY};
    if (row.isPivot) flagged.push_back(i);
  }
  if (m >= 2) {
    if (flagged.size() != 2)
      throw std::runtime_error("import: expected exactly two pivot entries");
    node->pivotDist = std::move(pd);
    // the first pivot's vector starts with its own zero distance
    if (node->pivotDist[flagged[0]][0] == 0.0) {
      node->pivot1 = flagged[0];
      node->pivot2 = flagged[1];
    } else {
      node->pivot1 = flagged[1];
      node->pivot2 = flagged[0];
    }
  } else if (!flagged.empty()) {
    throw std::runtime_error("import: pivot flags on single-entry node");
  }

  if (sawInnerEntry) {
    node->children.resize(m);
    node->radii.resize(m);
    for (int i = 0; i < m; ++i) {
      const NodesRow<Obj>& row = ctx.img.nodes[range.begin + i];
      node->radii[i] = row.maxDist;
      node->children[i] = importNode<Obj>(ctx, row.subtree, nodeId);
    }
  } else {
    ctx.objectCount += m;
  }
  return node;
}

}  // namespace detail

/// Reconstructs a query-equivalent tree from its relational image in
/// linear time and without any metric evaluations. Rows must be sorted by
/// node id in depth-first order, as produced by exportTree.
template <class Obj>
NTree<Obj> importTree(const RelationalTreeImage<Obj>& img,
                      const CountingMetric<Obj>& metric) {
  if (img.info.k < 2 || img.info.l < img.info.k)
    throw std::runtime_error("import: missing or invalid TreeInfo");
  NTreeParams params;
  params.k = img.info.k;
  params.l = img.info.l;
  params.nodeIdBase = img.info.rootNodeId;

  NTree<Obj> tree(metric, params);
  if (img.nodes.empty()) {
    if (img.info.rootNodeId >= 0)
      throw std::runtime_error("import: node rows missing for root");
    return tree;
  }
  if (img.info.rootNodeId < 0)
    throw std::runtime_error("import: missing or invalid TreeInfo");

  detail::ImportContext<Obj> ctx{img,
                                 detail::groupByNode(img.nodes),
                                 detail::groupByNode(img.distances),
                                 detail::groupByNode(img.pivots)};
  auto root = detail::importNode<Obj>(ctx, img.info.rootNodeId, -1);
  if (ctx.nodesBuilt != ctx.nodeGroups.size())
    throw std::runtime_error("import: orphan node rows");
  tree.adoptRoot(std::move(root), ctx.objectCount, ctx.maxNodeId + 1);
  return tree;
}

struct ParallelBuildStats {
  int workers = 1;
  double level1Utilization = 1.0;   // center selection + assignment tasks
  double subtreeUtilization = 1.0;  // level-2 subtree construction tasks
  double wallSeconds = 0.0;
  // phase wall times
  double rootSeconds = 0.0;      // root centers, aux and assignment
  double level1Seconds = 0.0;    // level-1 shells
  double subtreeSeconds = 0.0;   // level-2 subtree builds
  double assembleSeconds = 0.0;  // row emission, merge and import
};

namespace detail {

/// Runs the tasks on `workers` threads; each idle worker pulls the next
/// task in order, so tasks sorted by decreasing cost balance the load.
/// Returns the per-worker busy times.
inline std::vector<double> runTasks(std::vector<std::function<void()>>& tasks,
                                    int workers) {
  std::vector<double> busy(std::max(workers, 1), 0.0);
  if (tasks.empty()) return busy;
  if (workers <= 1) {
    const auto t0 = std::chrono::steady_clock::now();
    for (auto& t : tasks) t();
    busy[0] = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count();
    return busy;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const auto t0 = std::chrono::steady_clock::now();
      while (!failed.load(std::memory_order_relaxed)) {
        const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
        if (i >= tasks.size()) break;
        try {
          tasks[i]();
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
      busy[w] = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    });
  }
  for (auto& t : pool) t.join();
  if (failed.load()) std::rethrow_exception(error);
  return busy;
}

/// Util(W) = sum(w_i) / (n * max(w_i)).
inline double utilization(const std::vector<double>& busy) {
  double sum = 0.0, worst = 0.0;
  for (double w : busy) {
    sum += w;
    worst = std::max(worst, w);
  }
  if (worst <= 0.0) return 1.0;
  return sum / (static_cast<double>(busy.size()) * worst);
}

}  // namespace detail

/// Two-level parallel construction. Root centers are selected once, all
/// objects are assigned to them in parallel chunks (recording the
/// distances that become the root radii), level-1 nodes select their
/// centers and partition their objects as independent tasks, and the up
/// to k^2 level-2 subtrees are built as tasks scheduled in decreasing
/// partition size. The relational rows of all pieces are merged and the
/// tree is imported from them. Seeds are threaded per partition index, so
/// the result is identical for every worker count (and to a sequential
/// build with the same seed).
template <class Obj>
NTree<Obj> parallelBuild(const Dataset<Obj>& data,
                         const CountingMetric<Obj>& metric,
                         NTreeParams params, int workers,
                         ParallelBuildStats* stats = nullptr,
                         std::string payloadSchema = {}) {
  using Node = typename NTree<Obj>::Node;
  using Entry = typename NTree<Obj>::Entry;
  params.validate();
  workers = std::max(1, workers);
  const auto wall0 = std::chrono::steady_clock::now();

  if (data.size() <= static_cast<std::size_t>(params.l))
    return NTree<Obj>::build(data, metric, params);

  std::vector<Entry> items;
  items.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    items.push_back(Entry{data.ids[i], data.objects[i]});

  // root node shell (same RNG stream as a sequential build)
  const int k = params.k;
  Rng rootRng(deriveSeed(params.seed, detail::kNodeRngSalt));
  auto root = std::make_unique<Node>();
  const auto centerIdx = detail::selectCenters<Obj>(
      items, k, params.centerStrategy, metric, rootRng);
  root->entries.reserve(k);
  for (std::size_t idx : centerIdx) root->entries.push_back(items[idx]);
  detail::computeAux<Obj>(*root, metric, rootRng);

  // assign every object to its closest root center, in parallel chunks
  std::vector<detail::Assignment<Obj>> assigned(items.size(), {-1, 0.0});
  {
    std::vector<char> isCenter(items.size(), 0);
    for (std::size_t idx : centerIdx) isCenter[idx] = 1;
    const std::size_t chunkCount = std::max<std::size_t>(workers * 4, 1);
    const std::size_t chunkSize = (items.size() + chunkCount - 1) / chunkCount;
    std::vector<std::function<void()>> tasks;
    for (std::size_t lo = 0; lo < items.size(); lo += chunkSize) {
      const std::size_t hi = std::min(lo + chunkSize, items.size());
      tasks.push_back([&, lo, hi] {
        for (std::size_t p = lo; p < hi; ++p)
          if (!isCenter[p])
            assigned[p] =
                detail::assignToCenter<Obj>(*root, items[p].object, metric);
      });
    }
    detail::runTasks(tasks, workers);

    root->radii.assign(k, 0.0);
    root->children.resize(k);
  }

  std::vector<std::vector<Entry>> rootParts(k);
  {
    std::vector<char> isCenter(items.size(), 0);
    for (int i = 0; i < k; ++i) {
      isCenter[centerIdx[i]] = 1;
      rootParts[i].push_back(items[centerIdx[i]]);
    }
    for (std::size_t p = 0; p < items.size(); ++p) {
      if (isCenter[p]) continue;
      rootParts[assigned[p].center].push_back(std::move(items[p]));
      root->radii[assigned[p].center] =
          std::max(root->radii[assigned[p].center], assigned[p].dist);
    }
  }
  if (stats) stats->rootSeconds = std::chrono::duration<double>(
      std::chrono::steady_clock::now() - wall0).count();
  const auto level1Start = std::chrono::steady_clock::now();

  // level-1 shells: per-partition center selection and assignment
  struct L1Result {
    std::unique_ptr<Node> node;  // complete when the partition is a leaf
    std::vector<std::vector<Entry>> parts;
    std::uint64_t seed = 0;
  };
  std::vector<L1Result> level1(k);
  {
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return rootParts[a].size() > rootParts[b].size();
    });
    std::vector<std::function<void()>> tasks;
    for (int oi = 0; oi < k; ++oi) {
      const int i = order[oi];
      tasks.push_back([&, i] {
        const std::uint64_t seed = deriveSeed(params.seed, i + 1);
        level1[i].seed = seed;
        Rng rng(deriveSeed(seed, detail::kNodeRngSalt));
        auto node = std::make_unique<Node>();
        if (rootParts[i].size() <= static_cast<std::size_t>(params.l)) {
          node->entries = std::move(rootParts[i]);
          detail::computeAux<Obj>(*node, metric, rng);
          level1[i].node = std::move(node);
          return;
        }
        const auto centers = detail::selectCenters<Obj>(
            rootParts[i], k, params.centerStrategy, metric, rng);
        node->entries.reserve(k);
        for (std::size_t idx : centers) node->entries.push_back(rootParts[i][idx]);
        detail::computeAux<Obj>(*node, metric, rng);
        auto part = detail::partitionItems<Obj>(std::move(rootParts[i]),
                                                centers, *node, metric);
        node->radii = std::move(part.radii);
        node->children.resize(k);
        level1[i].node = std::move(node);
        level1[i].parts = std::move(part.parts);
      });
    }
    const auto busy = detail::runTasks(tasks, workers);
    if (stats) {
      stats->level1Utilization = detail::utilization(busy);
      stats->level1Seconds = std::chrono::duration<double>(
          std::chrono::steady_clock::now() - level1Start).count();
    }
  }
  const auto subtreeStart = std::chrono::steady_clock::now();

  // level-2 subtrees, scheduled in decreasing partition size
  {
    struct SubtreeTask {
      int i, j;
      std::size_t size;
    };
    std::vector<SubtreeTask> order;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < static_cast<int>(level1[i].parts.size()); ++j)
        order.push_back({i, j, level1[i].parts[j].size()});
    std::sort(order.begin(), order.end(),
              [](const SubtreeTask& a, const SubtreeTask& b) {
                return a.size > b.size;
              });
    std::vector<std::function<void()>> tasks;
    for (const SubtreeTask& t : order) {
      tasks.push_back([&, t] {
        level1[t.i].node->children[t.j] = detail::buildNode<Obj>(
            std::move(level1[t.i].parts[t.j]), metric, params,
            deriveSeed(level1[t.i].seed, t.j + 1));
      });
    }
    const auto busy = detail::runTasks(tasks, workers);
    if (stats) {
      stats->subtreeUtilization = detail::utilization(busy);
      stats->subtreeSeconds = std::chrono::duration<double>(
          std::chrono::steady_clock::now() - subtreeStart).count();
    }
  }
  const auto assembleStart = std::chrono::steady_clock::now();

  for (int i = 0; i < k; ++i) root->children[i] = std::move(level1[i].node);

  // merge the relational rows of all pieces and import the tree
  RelationalTreeImage<Obj> img;
  img.info = TreeInfoRow{params.k, params.l, metric.name(),
                         std::move(payloadSchema), params.nodeIdBase};
  std::unordered_map<const Node*, int> ids;
  detail::assignExportIds<Obj>(*root, params.nodeIdBase, ids);
  detail::emitRows<Obj>(*root, ids, img);
  root.reset();

  NTree<Obj> tree = importTree<Obj>(img, metric);

  if (stats) {
    stats->workers = workers;
    stats->assembleSeconds = std::chrono::duration<double>(
        std::chrono::steady_clock::now() - assembleStart).count();
    stats->wallSeconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0)
            .count();
  }
  return tree;
}

}  // namespace ntree
