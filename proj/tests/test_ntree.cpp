#include <map>
#include <set>

#include "doctest.h"
#include "ntree/generators.hpp"
#include "ntree/ntree.hpp"
#include "ntree/persistence.hpp"
#include "ntree/search.hpp"

using namespace ntree;

namespace {

CountingMetric<Point2D> pointMetric() {
  return CountingMetric<Point2D>(
      [](const Point2D& a, const Point2D& b) { return euclidean2d(a, b); },
      "euclidean2d");
}

using PointTree = NTree<Point2D>;
using Node = PointTree::Node;

// verifies Def. 1 at every level: each object under entry i of an inner
// node is at least as close to center i as to any sibling center
void checkPartitionCorrectness(const Node& node) {
  if (node.isLeaf()) return;
  for (int i = 0; i < node.size(); ++i) {
    std::vector<const PointTree::Entry*> members;
    detail::collectAll<Point2D>(*node.children[i], members);
    for (const auto* e : members) {
      const double own = euclidean2d(e->object, node.entries[i].object);
      for (int j = 0; j < node.size(); ++j)
        CHECK(own <= euclidean2d(e->object, node.entries[j].object) + 1e-12);
    }
    checkPartitionCorrectness(*node.children[i]);
  }
}

// stored radius must never undershoot the actual maximal distance;
// strict equality holds after pure builds
void checkRadiusSoundness(const Node& node, bool expectTight) {
  if (node.isLeaf()) return;
  for (int i = 0; i < node.size(); ++i) {
    std::vector<const PointTree::Entry*> members;
    detail::collectAll<Point2D>(*node.children[i], members);
    double actual = 0.0;
    for (const auto* e : members)
      actual = std::max(actual, euclidean2d(e->object, node.entries[i].object));
    CHECK(node.radii[i] >= actual);
    if (expectTight) CHECK(node.radii[i] == actual);
    checkRadiusSoundness(*node.children[i], expectTight);
  }
}

int depth(const Node& node) {
  if (node.isLeaf()) return 0;
  int d = 0;
  for (const auto& c : node.children) d = std::max(d, depth(*c));
  return d + 1;
}

void preorderIds(const Node& node, std::vector<int>& ids) {
  ids.push_back(node.nodeId);
  for (const auto& c : node.children) preorderIds(*c, ids);
}

}  // namespace

TEST_SUITE("ntree") {

TEST_CASE("params validation") {
  const NTreeParams tooSmallK{1, 10};
  const NTreeParams kAboveL{8, 4};
  const NTreeParams fine{4, 8};
  CHECK_THROWS_AS(tooSmallK.validate(), std::invalid_argument);
  CHECK_THROWS_AS(kAboveL.validate(), std::invalid_argument);
  CHECK_NOTHROW(fine.validate());
}

TEST_CASE("single object builds a leaf without aux data") {
  const auto metric = pointMetric();
  Dataset<Point2D> data;
  data.add(7, {1, 2});
  const auto tree = PointTree::build(data, metric, {4, 8, CenterStrategy::Random, 1});
  REQUIRE(tree.root() != nullptr);
  CHECK(tree.root()->isLeaf());
  CHECK(tree.root()->size() == 1);
  CHECK(tree.root()->dist.empty());
  CHECK(tree.root()->pivotDist.empty());
  CHECK(tree.root()->pivot1 == -1);
}

TEST_CASE("14 points with k=3, l=4 partition correctly") {
  const auto metric = pointMetric();
  Rng gen(3);
  Dataset<Point2D> data;
  for (int i = 0; i < 14; ++i)
    data.add(i, {gen.uniform(0, 100), gen.uniform(0, 100)});

  bool foundTwoLevel = false;
  for (std::uint64_t seed = 0; seed < 64 && !foundTwoLevel; ++seed) {
    const auto tree =
        PointTree::build(data, metric, {3, 4, CenterStrategy::Random, seed});
    const Node& root = *tree.root();
    REQUIRE(!root.isLeaf());
    std::size_t total = 0;
    for (const auto& c : root.children) total += c->subtreeObjectCount();
    CHECK(total == 14);
    checkPartitionCorrectness(root);
    if (depth(root) == 2) foundTwoLevel = true;
  }
  CHECK(foundTwoLevel);
}

TEST_CASE("build on 10k clustered points keeps every level argmin-consistent") {
  const auto metric = pointMetric();
  const auto data = genClusteredPoints(10000, 12, 5);
  const auto tree =
      PointTree::build(data, metric, {36, 100, CenterStrategy::Greedy, 17});
  CHECK(tree.size() == 10000);
  checkPartitionCorrectness(*tree.root());
  checkRadiusSoundness(*tree.root(), true);
}

TEST_CASE("node ids are assigned in depth-first preorder") {
  const auto metric = pointMetric();
  const auto data = genClusteredPoints(3000, 8, 6);
  const auto tree =
      PointTree::build(data, metric, {8, 16, CenterStrategy::Random, 2});
  std::vector<int> ids;
  preorderIds(*tree.root(), ids);
  for (std::size_t i = 0; i < ids.size(); ++i)
    CHECK(ids[i] == static_cast<int>(i));
}

TEST_CASE("greedy center selection") {
  const auto metric = pointMetric();
  std::vector<PointTree::Entry> items;

  SUBCASE("returns all items when |S| equals k") {
    items.clear();
    for (int i = 0; i < 5; ++i)
      items.push_back({i, Point2D{static_cast<double>(i), 0}});
    Rng rng(9);
    const auto centers =
        detail::selectCenters<Point2D>(items, 5, CenterStrategy::Greedy, metric, rng);
    CHECK(std::set<std::size_t>(centers.begin(), centers.end()).size() == 5);
  }

  SUBCASE("collinear candidates pick the far extreme second") {
    // 6 points and k=2 make the candidate sample the whole set, so the
    // second pick must be the point farthest from the first
    items.clear();
    for (int i = 0; i < 6; ++i)
      items.push_back({i, Point2D{static_cast<double>(i), 0}});
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed);
      const auto centers = detail::selectCenters<Point2D>(
          items, 2, CenterStrategy::Greedy, metric, rng);
      REQUIRE(centers.size() == 2);
      CHECK(centers[0] != centers[1]);
      const std::size_t expectSecond = centers[0] <= 2 ? 5 : 0;
      CHECK(centers[1] == expectSecond);
    }
  }

  SUBCASE("random strategy returns distinct indices") {
    items.clear();
    for (int i = 0; i < 50; ++i)
      items.push_back({i, Point2D{static_cast<double>(i % 7), static_cast<double>(i / 7)}});
    Rng rng(4);
    const auto centers = detail::selectCenters<Point2D>(
        items, 10, CenterStrategy::Random, metric, rng);
    CHECK(std::set<std::size_t>(centers.begin(), centers.end()).size() == 10);
  }
}

TEST_CASE("closestCenter returns the argmin with at most |C| evaluations") {
  const auto metric = pointMetric();
  Rng rng(41);

  SUBCASE("singleton") {
    Node node;
    node.entries.push_back({0, Point2D{5, 5}});
    Rng aux(1);
    detail::computeAux<Point2D>(node, metric, aux);
    DQCache dq;
    const auto before = metric.evaluations();
    const auto [idx, d] = detail::closestCenter<Point2D>(node, Point2D{6, 5}, metric, dq);
    CHECK(idx == 0);
    CHECK(d == 1.0);
    CHECK(metric.evaluations() - before == 1);
  }

  SUBCASE("obvious argmin") {
    Node node;
    node.entries = {{0, Point2D{0, 0}}, {1, Point2D{10, 0}}, {2, Point2D{0, 10}}};
    Rng aux(2);
    detail::computeAux<Point2D>(node, metric, aux);
    DQCache dq;
    const auto [idx, d] = detail::closestCenter<Point2D>(node, Point2D{1, 1}, metric, dq);
    CHECK(idx == 0);
    CHECK(d == doctest::Approx(std::sqrt(2.0)));
  }

  SUBCASE("random configurations match a linear scan exactly") {
    for (int rep = 0; rep < 10000; ++rep) {
      Node node;
      const int m = 2 + static_cast<int>(rng.below(24));
      for (int i = 0; i < m; ++i)
        node.entries.push_back({i, Point2D{rng.uniform(0, 50), rng.uniform(0, 50)}});
      Rng aux(rep);
      detail::computeAux<Point2D>(node, metric, aux);

      const Point2D q{rng.uniform(0, 50), rng.uniform(0, 50)};
      DQCache dq;
      const auto before = metric.evaluations();
      const auto [idx, d] = detail::closestCenter<Point2D>(node, q, metric, dq);
      const auto used = metric.evaluations() - before;
      CHECK(used <= static_cast<std::uint64_t>(m));

      double best = 1e300;
      for (int i = 0; i < m; ++i)
        best = std::min(best, euclidean2d(q, node.entries[i].object));
      CHECK(d == best);
      CHECK(euclidean2d(q, node.entries[idx].object) == best);

      // DQ entries must equal fresh evaluations bit-exactly
      for (int i = 0; i < m; ++i)
        if (dq.known(i)) CHECK(dq.get(i) == euclidean2d(q, node.entries[i].object));
    }
  }
}

TEST_CASE("insert splits a full leaf into an inner node") {
  const auto metric = pointMetric();
  Dataset<Point2D> data;
  Rng gen(8);
  for (int i = 0; i < 8; ++i)
    data.add(i, {gen.uniform(0, 10), gen.uniform(0, 10)});
  auto tree = PointTree::build(data, metric, {4, 8, CenterStrategy::Random, 3});
  REQUIRE(tree.root()->isLeaf());
  tree.insert(100, {5, 5});
  CHECK(!tree.root()->isLeaf());
  CHECK(tree.root()->size() == 4);
  CHECK(tree.size() == 9);
  checkPartitionCorrectness(*tree.root());
}

TEST_CASE("insert duplicate keeps both copies findable at radius 0") {
  const auto metric = pointMetric();
  const auto data = genClusteredPoints(500, 5, 9);
  auto tree = PointTree::build(data, metric, {6, 12, CenterStrategy::Greedy, 4});
  const Point2D dup = data.objects[123];
  tree.insert(9999, dup);
  const auto hits = rangeSearch(tree, dup, 0.0);
  CHECK(hits.size() == 2);
  CHECK(std::set<ObjectId>(hits.begin(), hits.end()) ==
        std::set<ObjectId>{data.ids[123], 9999});
}

TEST_CASE("random inserts keep queries equal to brute force") {
  const auto metric = pointMetric();
  auto data = genClusteredPoints(800, 6, 10);
  Dataset<Point2D> initial;
  for (int i = 0; i < 300; ++i) initial.add(data.ids[i], data.objects[i]);
  auto tree = PointTree::build(initial, metric, {6, 12, CenterStrategy::Greedy, 5});

  Dataset<Point2D> live = initial;
  for (std::size_t i = 300; i < data.size(); ++i) {
    tree.insert(data.ids[i], data.objects[i]);
    live.add(data.ids[i], data.objects[i]);
  }
  CHECK(tree.size() == live.size());
  checkRadiusSoundness(*tree.root(), true);

  Rng rng(42);
  const auto plain = [](const Point2D& a, const Point2D& b) { return euclidean2d(a, b); };
  for (int rep = 0; rep < 50; ++rep) {
    const Point2D q = live.objects[rng.below(live.size())];
    const double r = rng.uniform(0, 4000);
    auto got = rangeSearch(tree, q, r);
    auto expect = bruteForceRange(live, plain, q, r);
    std::sort(got.begin(), got.end());
    std::sort(expect.begin(), expect.end());
    CHECK(got == expect);
  }
}

TEST_CASE("delete of an absent object leaves the tree unchanged") {
  const auto metric = pointMetric();
  const auto data = genClusteredPoints(400, 4, 11);
  auto tree = PointTree::build(data, metric, {5, 10, CenterStrategy::Random, 6});
  const auto before = exportTree(tree, 0);
  CHECK(!tree.erase(Point2D{1e9, 1e9}));
  const auto after = exportTree(tree, 0);
  CHECK(before == after);
  CHECK(tree.size() == 400);
}

TEST_CASE("deleting the sole occupant of a leaf rebuilds the parent") {
  const auto metric = pointMetric();
  // a far-away outlier tends to sit alone in its leaf
  Dataset<Point2D> data;
  Rng gen(12);
  for (int i = 0; i < 60; ++i) data.add(i, {gen.uniform(0, 10), gen.uniform(0, 10)});
  data.add(60, {500, 500});
  auto tree = PointTree::build(data, metric, {4, 6, CenterStrategy::Random, 7});

  CHECK(tree.erase(Point2D{500, 500}));
  CHECK(tree.size() == 60);
  auto got = rangeSearch(tree, Point2D{5, 5}, 1e9);
  CHECK(got.size() == 60);
}

TEST_CASE("interleaved inserts and deletes stay brute-force exact") {
  const auto metric = pointMetric();
  auto data = genClusteredPoints(600, 5, 13);
  Dataset<Point2D> initial;
  for (int i = 0; i < 200; ++i) initial.add(data.ids[i], data.objects[i]);
  auto tree = PointTree::build(initial, metric, {5, 10, CenterStrategy::Greedy, 8});

  std::vector<std::pair<ObjectId, Point2D>> live;
  for (std::size_t i = 0; i < initial.size(); ++i)
    live.emplace_back(initial.ids[i], initial.objects[i]);

  Rng rng(43);
  std::size_t nextInsert = 200;
  for (int op = 0; op < 500; ++op) {
    const bool doInsert = nextInsert < data.size() && (live.empty() || rng.below(2) == 0);
    if (doInsert) {
      tree.insert(data.ids[nextInsert], data.objects[nextInsert]);
      live.emplace_back(data.ids[nextInsert], data.objects[nextInsert]);
      ++nextInsert;
    } else if (!live.empty()) {
      const std::size_t victim = rng.below(live.size());
      const Point2D obj = live[victim].second;
      CHECK(tree.erase(obj));
      // erase removes one copy by value; mirror multiset semantics
      for (std::size_t i = 0; i < live.size(); ++i)
        if (live[i].second == obj) {
          live.erase(live.begin() + i);
          break;
        }
    }
  }
  CHECK(tree.size() == live.size());
  checkRadiusSoundness(*tree.root(), false);

  Dataset<Point2D> liveData;
  for (const auto& [id, obj] : live) liveData.add(id, obj);
  const auto plain = [](const Point2D& a, const Point2D& b) { return euclidean2d(a, b); };
  for (int rep = 0; rep < 40; ++rep) {
    const Point2D q{rng.uniform(0, 100000), rng.uniform(0, 100000)};
    const double r = rng.uniform(0, 50000);
    auto got = rangeSearch(tree, q, r);
    auto expect = bruteForceRange(liveData, plain, q, r);
    std::sort(got.begin(), got.end());
    std::sort(expect.begin(), expect.end());
    CHECK(got == expect);
  }
}

TEST_CASE("knn stays admissible after deleting objects that are centers") {
  const auto metric = pointMetric();
  const auto data = genClusteredPoints(500, 5, 14);
  auto tree = PointTree::build(data, metric, {6, 12, CenterStrategy::Greedy, 12});
  REQUIRE(!tree.root()->isLeaf());

  // delete every root center's object; the copies stay in the inner node
  std::vector<Point2D> centers;
  for (const auto& e : tree.root()->entries) centers.push_back(e.object);
  for (const auto& c : centers) CHECK(tree.erase(c));

  Dataset<Point2D> live;
  for (std::size_t i = 0; i < data.size(); ++i) {
    bool deleted = false;
    for (const auto& c : centers)
      if (data.objects[i] == c) deleted = true;
    if (!deleted) live.add(data.ids[i], data.objects[i]);
  }
  CHECK(tree.size() == live.size());

  const auto plain = [](const Point2D& a, const Point2D& b) { return euclidean2d(a, b); };
  Rng rng(44);
  for (int rep = 0; rep < 30; ++rep) {
    const Point2D q = live.objects[rng.below(live.size())];
    const int k = 1 + static_cast<int>(rng.below(20));
    const auto got = knn(tree, q, k, DistanceEstimate::DE3, rep);
    const auto expect = bruteForceKnn(live, plain, q, k);
    REQUIRE(got.size() == static_cast<std::size_t>(k));
    std::multiset<double> a, b;
    for (const auto& n : got) a.insert(n.distance);
    for (const auto& n : expect) b.insert(n.distance);
    CHECK(a == b);
  }
}

TEST_CASE("all-identical objects still build and answer exactly") {
  const auto metric = pointMetric();
  Dataset<Point2D> data;
  for (int i = 0; i < 40; ++i) data.add(i, {1, 1});
  const auto tree = PointTree::build(data, metric, {3, 5, CenterStrategy::Random, 9});
  CHECK(tree.size() == 40);
  CHECK(rangeSearch(tree, Point2D{1, 1}, 0.0).size() == 40);
  CHECK(rangeSearch(tree, Point2D{2, 1}, 0.5).empty());
}

}  // TEST_SUITE
