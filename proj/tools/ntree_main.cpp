// Command-line front end: dataset generation, index lifecycle, queries,
// benchmark sweeps and filter-and-refine runs.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ntree/csv.hpp"
#include "ntree/filter_refine.hpp"
#include "ntree/generators.hpp"
#include "ntree/persistence.hpp"
#include "ntree/search.hpp"

using namespace ntree;

namespace {

std::uint64_t defaultSeed() {
  if (const char* env = std::getenv("NTREE_SEED")) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0') return v;
  }
  return 0;
}

DistanceEstimate parseDe(const std::string& name) {
  static const std::map<std::string, DistanceEstimate> table{
      {"DE0", DistanceEstimate::DE0}, {"DE1", DistanceEstimate::DE1},
      {"DE2", DistanceEstimate::DE2}, {"DE3", DistanceEstimate::DE3},
      {"DE4", DistanceEstimate::DE4}, {"DE5", DistanceEstimate::DE5},
      {"DE6", DistanceEstimate::DE6}, {"DE7", DistanceEstimate::DE7},
      {"DE8", DistanceEstimate::DE8}};
  const auto it = table.find(name);
  if (it == table.end())
    throw CLI::ValidationError("--de", "unknown distance estimate " + name);
  return it->second;
}

struct BuildOptions {
  std::string data;
  std::string metric;
  std::string out;
  int k = 36;
  int l = 100;
  std::string centers = "greedy";
  std::uint64_t seed = 0;
  int parallel = 0;
  bool spatialOnly = false;
  double refStart = 0.0;
  double refDur = 3600.0;
};

struct QueryOptions {
  std::string index;
  long long queryId = -1;
  std::string queryFile;
};

struct PointsTraits {
  using Obj = Point2D;
  static constexpr const char* schema = "points2d";
  static constexpr const char* metricName = "euclidean2d";
  static CountingMetric<Obj> makeMetric(const BuildOptions&) {
    return CountingMetric<Obj>(
        [](const Obj& a, const Obj& b) { return euclidean2d(a, b); },
        metricName);
  }
  static Dataset<Obj> load(const std::string& file, const BuildOptions&) {
    return loadPointsCsv(file);
  }
  static PayloadCodec<Obj> codec() { return pointCodec(); }
};

struct TrajectoryTraits {
  using Obj = Trajectory;
  static constexpr const char* schema = "trajectories";
  static constexpr const char* metricName = "distanceavg";
  static CountingMetric<Obj> makeMetric(const BuildOptions&) {
    // stored trajectories are adjusted to one reference interval up
    // front, so the metric works on aligned operands
    return CountingMetric<Obj>(
        [](const Obj& a, const Obj& b) { return distanceAvgAligned(a, b); },
        metricName);
  }
  static Dataset<Obj> load(const std::string& file, const BuildOptions& opt) {
    auto raw = loadTrajectoriesCsv(file, opt.spatialOnly);
    Dataset<Obj> out;
    for (std::size_t i = 0; i < raw.size(); ++i)
      out.add(raw.ids[i], adjust(raw.objects[i], opt.refStart, opt.refDur));
    return out;
  }
  static PayloadCodec<Obj> codec() { return trajectoryCodec(); }
};

struct WordSetTraits {
  using Obj = WordSet;
  static constexpr const char* schema = "wordsets";
  static constexpr const char* metricName = "jaccard";
  static CountingMetric<Obj> makeMetric(const BuildOptions&) {
    return CountingMetric<Obj>(
        [](const Obj& a, const Obj& b) { return jaccard(a, b); }, metricName);
  }
  static Dataset<Obj> load(const std::string& file, const BuildOptions&) {
    return loadWordSetsCsv(file);
  }
  static PayloadCodec<Obj> codec() { return wordSetCodec(); }
};

struct VectorTraits {
  using Obj = DenseVector;
  static constexpr const char* schema = "vectors";
  static constexpr const char* metricName = "l1";
  static CountingMetric<Obj> makeMetric(const BuildOptions&) {
    return CountingMetric<Obj>(
        [](const Obj& a, const Obj& b) { return l1norm(a, b); }, metricName);
  }
  static Dataset<Obj> load(const std::string& file, const BuildOptions&) {
    return loadVectorsCsv(file);
  }
  static PayloadCodec<Obj> codec() { return vectorCodec(); }
};

template <class Fn>
int dispatchMetric(const std::string& name, Fn&& fn) {
  if (name == PointsTraits::metricName) return fn(PointsTraits{});
  if (name == TrajectoryTraits::metricName) return fn(TrajectoryTraits{});
  if (name == WordSetTraits::metricName) return fn(WordSetTraits{});
  if (name == VectorTraits::metricName) return fn(VectorTraits{});
  throw CLI::ValidationError("--metric", "unknown metric " + name);
}

std::string schemaOfIndex(const std::string& dir) {
  const auto lines =
      detail::readLines(std::filesystem::path(dir) / "treeinfo.csv");
  if (lines.size() < 2)
    throw std::runtime_error(dir + ": treeinfo.csv is missing its row");
  const auto cells = splitCsv(lines[1]);
  if (cells.size() != 5)
    throw std::runtime_error(dir + ": treeinfo.csv malformed");
  return cells[3];
}

template <class Fn>
int dispatchIndex(const std::string& dir, Fn&& fn) {
  const std::string schema = schemaOfIndex(dir);
  if (schema == PointsTraits::schema) return fn(PointsTraits{});
  if (schema == TrajectoryTraits::schema) return fn(TrajectoryTraits{});
  if (schema == WordSetTraits::schema) return fn(WordSetTraits{});
  if (schema == VectorTraits::schema) return fn(VectorTraits{});
  throw std::runtime_error(dir + ": unknown payload schema " + schema);
}

NTreeParams paramsFrom(const BuildOptions& opt) {
  NTreeParams params;
  params.k = opt.k;
  params.l = opt.l;
  params.seed = opt.seed;
  if (opt.centers == "greedy")
    params.centerStrategy = CenterStrategy::Greedy;
  else if (opt.centers == "random")
    params.centerStrategy = CenterStrategy::Random;
  else
    throw CLI::ValidationError("--centers", "must be greedy or random");
  params.validate();
  return params;
}

template <class Traits>
int runBuild(Traits, const BuildOptions& opt) {
  using Obj = typename Traits::Obj;
  const auto metric = Traits::makeMetric(opt);
  const auto data = Traits::load(opt.data, opt);
  if (data.size() == 0) throw std::runtime_error(opt.data + ": empty dataset");

  const NTreeParams params = paramsFrom(opt);
  const auto t0 = std::chrono::steady_clock::now();
  NTree<Obj> tree = [&] {
    if (opt.parallel > 0) {
      ParallelBuildStats stats;
      auto built = parallelBuild(data, metric, params, opt.parallel, &stats,
                                 Traits::schema);
      std::fprintf(stderr,
                   "parallel build: workers=%d util(level1)=%.3f "
                   "util(subtrees)=%.3f\n",
                   stats.workers, stats.level1Utilization,
                   stats.subtreeUtilization);
      return built;
    }
    return NTree<Obj>::build(data, metric, params);
  }();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  writeTreeImageCsv(exportTree(tree, 0, Traits::schema), opt.out,
                    Traits::codec());
  std::fprintf(stderr,
               "built index over %zu objects in %.2f s (%llu distance "
               "evaluations) -> %s\n",
               data.size(), secs,
               static_cast<unsigned long long>(metric.evaluations()),
               opt.out.c_str());
  return 0;
}

template <class Obj>
std::vector<std::pair<ObjectId, const Obj*>> allEntries(
    const NTree<Obj>& tree) {
  std::vector<const typename NTree<Obj>::Entry*> entries;
  if (tree.root()) detail::collectAll<Obj>(*tree.root(), entries);
  std::vector<std::pair<ObjectId, const Obj*>> out;
  out.reserve(entries.size());
  for (const auto* e : entries) out.emplace_back(e->id, &e->object);
  return out;
}

/// Resolves the query object: an id into the indexed data or the first
/// object of a dataset file (trajectory queries are adjusted onto the
/// index's reference interval).
template <class Traits>
typename Traits::Obj resolveQuery(Traits, const NTree<typename Traits::Obj>& tree,
                                  const QueryOptions& q) {
  using Obj = typename Traits::Obj;
  const auto entries = allEntries(tree);
  if (q.queryId >= 0) {
    for (const auto& [id, obj] : entries)
      if (id == q.queryId) return *obj;
    throw std::runtime_error("query id " + std::to_string(q.queryId) +
                             " not found in the index");
  }
  if (q.queryFile.empty())
    throw CLI::ValidationError("--query-id/--query-file",
                               "one query source is required");
  BuildOptions loadOpt;
  if constexpr (std::is_same_v<Obj, Trajectory>) {
    if (entries.empty()) throw std::runtime_error("index is empty");
    loadOpt.refStart = entries.front().second->startTime();
    loadOpt.refDur = entries.front().second->span();
  }
  const auto data = Traits::load(q.queryFile, loadOpt);
  if (data.size() == 0) throw std::runtime_error(q.queryFile + ": no objects");
  return data.objects[0];
}

void printNeighbors(std::vector<Neighbor> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const Neighbor& a, const Neighbor& b) {
                     if (a.distance != b.distance) return a.distance < b.distance;
                     return a.id < b.id;
                   });
  for (const auto& n : rows)
    std::printf("%lld %s\n", static_cast<long long>(n.id),
                formatReal(n.distance).c_str());
}

void printQueryStats(const QueryStats& stats) {
  std::fprintf(stderr,
               "time_us=%llu distance_evals=%llu nodes_visited=%llu "
               "results=%llu\n",
               static_cast<unsigned long long>(stats.elapsedMicros),
               static_cast<unsigned long long>(stats.distanceEvaluations),
               static_cast<unsigned long long>(stats.nodesVisited),
               static_cast<unsigned long long>(stats.resultSize));
}

template <class Traits>
int runRange(Traits traits, const QueryOptions& q, double r) {
  using Obj = typename Traits::Obj;
  const auto metric = Traits::makeMetric({});
  const auto img = readTreeImageCsv<Obj>(q.index, Traits::codec());
  const auto tree = importTree(img, metric);
  const Obj query = resolveQuery(traits, tree, q);

  QueryStats stats;
  EvalCache cache;
  const auto ids = rangeSearch(tree, query, r, &stats, &cache);

  std::vector<Neighbor> rows;
  const auto entries = allEntries(tree);
  std::unordered_map<ObjectId, const Obj*> byId;
  for (const auto& [id, obj] : entries) byId.emplace(id, obj);
  for (ObjectId id : ids) {
    const auto it = cache.find(id);
    rows.push_back(Neighbor{
        id, it != cache.end() ? it->second : metric(query, *byId.at(id))});
  }
  printNeighbors(std::move(rows));
  printQueryStats(stats);
  return 0;
}

template <class Traits>
int runKnn(Traits traits, const QueryOptions& q, int k,
           const std::string& deName, std::uint64_t seed) {
  using Obj = typename Traits::Obj;
  const auto metric = Traits::makeMetric({});
  const auto img = readTreeImageCsv<Obj>(q.index, Traits::codec());
  const auto tree = importTree(img, metric);
  if (tree.size() < static_cast<std::size_t>(k))
    throw CLI::ValidationError("--k", "k exceeds the number of indexed objects");
  const Obj query = resolveQuery(traits, tree, q);

  QueryStats stats;
  const auto rows = knn(tree, query, k, parseDe(deName), seed, &stats);
  printNeighbors(rows);
  printQueryStats(stats);
  return 0;
}

template <class Traits>
int runExport(Traits, const std::string& indexDir, const std::string& outDir,
              int startNodeId) {
  using Obj = typename Traits::Obj;
  const auto metric = Traits::makeMetric({});
  const auto img = readTreeImageCsv<Obj>(indexDir, Traits::codec());
  const auto tree = importTree(img, metric);
  writeTreeImageCsv(exportTree(tree, startNodeId, Traits::schema), outDir,
                    Traits::codec());
  std::fprintf(stderr, "exported %zu objects with node ids from %d -> %s\n",
               tree.size(), startNodeId, outDir.c_str());
  return 0;
}

template <class Traits>
int runImport(Traits, const std::string& indexDir) {
  using Obj = typename Traits::Obj;
  const auto metric = Traits::makeMetric({});
  const auto img = readTreeImageCsv<Obj>(indexDir, Traits::codec());
  const auto before = metric.evaluations();
  const auto tree = importTree(img, metric);
  std::printf(
      "objects=%zu nodes_rows=%zu k=%d l=%d metric=%s schema=%s "
      "import_evaluations=%llu\n",
      tree.size(), img.nodes.size(), img.info.k, img.info.l,
      img.info.metricName.c_str(), img.info.payloadSchema.c_str(),
      static_cast<unsigned long long>(metric.evaluations() - before));
  return 0;
}

struct BenchOptions {
  std::string index;
  std::vector<double> radii;
  std::vector<int> kValues;
  int queryCount = 100;
  std::uint64_t seed = 0;
  std::string statsOut;
  int threads = 1;
  std::string de = "DE3";
};

template <class Traits>
int runBench(Traits, const BenchOptions& opt) {
  using Obj = typename Traits::Obj;
  const auto metric = Traits::makeMetric({});
  const auto img = readTreeImageCsv<Obj>(opt.index, Traits::codec());
  const auto tree = importTree(img, metric);
  const auto entries = allEntries(tree);
  if (entries.empty()) throw std::runtime_error("index is empty");

  Rng rng(opt.seed);
  std::vector<const Obj*> queries;
  for (int i = 0; i < opt.queryCount; ++i)
    queries.push_back(entries[rng.below(entries.size())].second);

  const bool newFile = !std::filesystem::exists(opt.statsOut);
  std::ofstream statsFile;
  if (!opt.statsOut.empty()) {
    statsFile.open(opt.statsOut, std::ios::app | std::ios::binary);
    if (!statsFile) throw std::runtime_error("cannot write " + opt.statsOut);
    if (newFile)
      statsFile << "param,mean_time_us,mean_dist_evals,mean_result_size\n";
  }

  const auto sweep = [&](const std::string& param, auto&& runQuery) {
    const std::uint64_t evals0 = metric.evaluations();
    std::atomic<std::uint64_t> totalMicros{0};
    std::atomic<std::uint64_t> totalResults{0};

    const auto worker = [&](int begin, int end) {
      for (int i = begin; i < end; ++i) {
        QueryStats stats;
        runQuery(*queries[i], static_cast<std::uint64_t>(i), stats);
        totalMicros += stats.elapsedMicros;
        totalResults += stats.resultSize;
      }
    };
    if (opt.threads <= 1) {
      worker(0, opt.queryCount);
    } else {
      std::vector<std::thread> pool;
      const int per = (opt.queryCount + opt.threads - 1) / opt.threads;
      for (int t = 0; t < opt.threads; ++t)
        pool.emplace_back(worker, std::min(t * per, opt.queryCount),
                          std::min((t + 1) * per, opt.queryCount));
      for (auto& t : pool) t.join();
    }

    const double n = opt.queryCount;
    const double meanTime = static_cast<double>(totalMicros.load()) / n;
    const double meanEvals =
        static_cast<double>(metric.evaluations() - evals0) / n;
    const double meanResults = static_cast<double>(totalResults.load()) / n;
    const std::string line = param + "," + formatReal(meanTime) + "," +
                             formatReal(meanEvals) + "," +
                             formatReal(meanResults);
    std::printf("%s\n", line.c_str());
    if (statsFile.is_open()) statsFile << line << '\n';
  };

  for (double r : opt.radii)
    sweep(formatReal(r), [&](const Obj& q, std::uint64_t, QueryStats& stats) {
      rangeSearch(tree, q, r, &stats);
    });
  for (int k : opt.kValues) {
    if (tree.size() < static_cast<std::size_t>(k))
      throw CLI::ValidationError("--k-values", "k exceeds the index size");
    sweep(std::to_string(k),
          [&](const Obj& q, std::uint64_t i, QueryStats& stats) {
            knn(tree, q, k, parseDe(opt.de), opt.seed ^ i, &stats);
          });
  }
  return 0;
}

struct FrOptions {
  std::string data;
  double q = 0.0;
  double approxRadius = 50.0;
  std::string mode = "index";
  long long queryId = -1;
  int k = 36;
  int l = 100;
  std::uint64_t seed = 0;
  double refStart = 0.0;
  double refDur = 3600.0;
};

int runFr(const FrOptions& opt) {
  const auto raw = loadTrajectoriesCsv(opt.data);
  const auto corpus =
      makeApproxCorpus(raw, opt.approxRadius, opt.refStart, opt.refDur);
  const ApproxRecord* query = nullptr;
  for (const auto& rec : corpus)
    if (rec.id == opt.queryId) query = &rec;
  if (!query)
    throw std::runtime_error("query id " + std::to_string(opt.queryId) +
                             " not found in " + opt.data);

  FilterRefineStats stats;
  std::vector<ObjectId> res;
  if (opt.mode == "scan") {
    res = rangeScanFR(corpus, *query, opt.q, opt.approxRadius, &stats);
  } else if (opt.mode == "index") {
    CountingMetric<Trajectory> axisMetric(
        [](const Trajectory& a, const Trajectory& b) {
          return distanceAvgAligned(a, b);
        },
        "distanceavg");
    Dataset<Trajectory> axes;
    for (const auto& rec : corpus) axes.add(rec.id, rec.c.axis);
    const auto index = NTree<Trajectory>::build(
        axes, axisMetric, {opt.k, opt.l, CenterStrategy::Greedy, opt.seed});
    res = rangeSearchFR(corpus, index, *query, opt.q, opt.approxRadius, &stats);
  } else {
    throw CLI::ValidationError("--mode", "must be scan or index");
  }

  std::sort(res.begin(), res.end());
  for (ObjectId id : res) std::printf("%lld\n", static_cast<long long>(id));
  std::fprintf(stderr,
               "candidates=%llu direct_accepts=%llu exact_evals=%llu "
               "axis_evals=%llu results=%zu\n",
               static_cast<unsigned long long>(stats.filterCandidates),
               static_cast<unsigned long long>(stats.directAccepts),
               static_cast<unsigned long long>(stats.exactEvaluations),
               static_cast<unsigned long long>(stats.axisEvaluations),
               res.size());
  return 0;
}

struct HistogramOptions {
  std::string data;
  std::string metric;
  std::size_t pairs = 500000;
  std::uint64_t seed = 0;
  std::string out;
  int buckets = 100;
};

template <class Traits>
int runHistogram(Traits, const HistogramOptions& opt) {
  using Obj = typename Traits::Obj;
  const auto metric = Traits::makeMetric({});
  const auto data = Traits::load(opt.data, {});
  const auto hist = distanceHistogram(
      data, [&](const Obj& a, const Obj& b) { return metric(a, b); },
      opt.pairs, opt.seed, opt.buckets);

  std::vector<std::string> lines{"bucket,count"};
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double center = hist.minValue + (i + 0.5) * hist.bucketWidth;
    lines.push_back(formatReal(center) + "," + std::to_string(hist.counts[i]));
  }
  if (opt.out.empty()) {
    for (const auto& l : lines) std::printf("%s\n", l.c_str());
  } else {
    detail::writeLines(opt.out, lines);
  }
  return 0;
}

struct GenOptions {
  std::string kind;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  std::string out;
  int clusters = 10;
  int len = 38;
  int dim = 64;
  int vocab = 1000;
  double meanWords = 13.0;
};

int runGen(const GenOptions& opt) {
  if (opt.kind == "points2d-clustered") {
    writePointsCsv(opt.out, genClusteredPoints(opt.n, opt.clusters, opt.seed));
  } else if (opt.kind == "trajectories-randomwalk") {
    writeTrajectoriesCsv(opt.out,
                         genRandomWalkTrajectories(opt.n, opt.len, opt.seed));
  } else if (opt.kind == "wordsets") {
    writeWordSetsCsv(opt.out,
                     genWordSets(opt.n, opt.vocab, opt.meanWords, opt.seed));
  } else if (opt.kind == "vectors") {
    writeVectorsCsv(opt.out,
                    genVectors(opt.n, opt.dim, opt.clusters, opt.seed));
  } else {
    throw CLI::ValidationError("--kind", "unknown dataset kind " + opt.kind);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"N-tree metric index: build, query and benchmark"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* genCmd = app.add_subcommand("gen", "generate a synthetic dataset");
  genCmd->add_option("--kind", gen.kind,
                     "points2d-clustered | trajectories-randomwalk | "
                     "wordsets | vectors")
      ->required();
  genCmd->add_option("--n", gen.n, "number of objects")->required();
  genCmd->add_option("--seed", gen.seed, "rng seed");
  genCmd->add_option("--out", gen.out, "output CSV")->required();
  genCmd->add_option("--clusters", gen.clusters, "clusters (points/vectors)");
  genCmd->add_option("--len", gen.len, "units per trajectory");
  genCmd->add_option("--dim", gen.dim, "vector dimension");
  genCmd->add_option("--vocab", gen.vocab, "vocabulary size");
  genCmd->add_option("--mean-words", gen.meanWords, "mean words per set");

  BuildOptions build;
  auto* buildCmd = app.add_subcommand("build", "build and export an index");
  buildCmd->add_option("--data", build.data, "dataset CSV")->required();
  buildCmd->add_option("--metric", build.metric,
                       "euclidean2d | distanceavg | jaccard | l1")
      ->required();
  buildCmd->add_option("--k", build.k, "inner node degree");
  buildCmd->add_option("--l", build.l, "leaf capacity");
  buildCmd->add_option("--seed", build.seed, "rng seed");
  buildCmd->add_option("--centers", build.centers, "greedy | random");
  buildCmd->add_option("--parallel", build.parallel,
                       "two-level parallel build with this many workers");
  buildCmd->add_flag("--spatial-only", build.spatialOnly,
                     "re-time trajectories to constant speed before indexing");
  buildCmd->add_option("--ref-start", build.refStart,
                       "reference interval start (trajectories)");
  buildCmd->add_option("--ref-dur", build.refDur,
                       "reference interval duration (trajectories)");
  buildCmd->add_option("--out", build.out, "index directory")->required();

  QueryOptions rangeQ;
  double rangeRadius = 0.0;
  auto* rangeCmd = app.add_subcommand("range", "range query on an index");
  rangeCmd->add_option("--index", rangeQ.index, "index directory")->required();
  rangeCmd->add_option("--r", rangeRadius, "query radius")->required();
  rangeCmd->add_option("--query-id", rangeQ.queryId, "query object id");
  rangeCmd->add_option("--query-file", rangeQ.queryFile, "query dataset file");

  QueryOptions knnQ;
  int knnK = 10;
  std::string knnDe = "DE3";
  std::uint64_t knnSeed = defaultSeed();
  auto* knnCmd = app.add_subcommand("knn", "k-nearest-neighbor query");
  knnCmd->add_option("--index", knnQ.index, "index directory")->required();
  knnCmd->add_option("--k", knnK, "number of neighbors")->required();
  knnCmd->add_option("--de", knnDe, "distance estimate DE0..DE8");
  knnCmd->add_option("--seed", knnSeed, "query rng seed");
  knnCmd->add_option("--query-id", knnQ.queryId, "query object id");
  knnCmd->add_option("--query-file", knnQ.queryFile, "query dataset file");

  std::string exportIndex, exportOut;
  int exportStart = 0;
  auto* exportCmd =
      app.add_subcommand("export", "re-export an index with fresh node ids");
  exportCmd->add_option("--index", exportIndex, "index directory")->required();
  exportCmd->add_option("--out", exportOut, "output directory")->required();
  exportCmd->add_option("--start-node-id", exportStart, "first node id");

  std::string importIndex;
  auto* importCmd =
      app.add_subcommand("import", "validate an index and print a summary");
  importCmd->add_option("--index", importIndex, "index directory")->required();

  BenchOptions bench;
  bench.seed = defaultSeed();
  auto* benchCmd =
      app.add_subcommand("bench", "benchmark sweeps over radii or k");
  benchCmd->add_option("--index", bench.index, "index directory")->required();
  benchCmd->add_option("--radii", bench.radii, "range query radii")
      ->delimiter(',');
  benchCmd->add_option("--k-values", bench.kValues, "kNN sweep values")
      ->delimiter(',');
  benchCmd->add_option("--query-count", bench.queryCount, "queries per sweep");
  benchCmd->add_option("--seed", bench.seed, "query sampling seed");
  benchCmd->add_option("--stats-out", bench.statsOut, "append stats CSV here");
  benchCmd->add_option("--threads", bench.threads, "concurrent queries");
  benchCmd->add_option("--de", bench.de, "distance estimate for kNN");

  FrOptions fr;
  fr.seed = defaultSeed();
  auto* frCmd = app.add_subcommand(
      "fr", "filter-and-refine range query over trajectory approximations");
  frCmd->add_option("--data", fr.data, "trajectory CSV")->required();
  frCmd->add_option("--q", fr.q, "query radius")->required();
  frCmd->add_option("--approx-radius", fr.approxRadius,
                    "cylinder approximation radius");
  frCmd->add_option("--mode", fr.mode, "scan | index");
  frCmd->add_option("--query-id", fr.queryId, "query trajectory id")
      ->required();
  frCmd->add_option("--k", fr.k, "index degree (mode=index)");
  frCmd->add_option("--l", fr.l, "leaf capacity (mode=index)");
  frCmd->add_option("--seed", fr.seed, "index build seed");
  frCmd->add_option("--ref-start", fr.refStart, "reference interval start");
  frCmd->add_option("--ref-dur", fr.refDur, "reference interval duration");

  HistogramOptions hist;
  auto* histCmd =
      app.add_subcommand("histogram", "distance histogram of sampled pairs");
  histCmd->add_option("--data", hist.data, "dataset CSV")->required();
  histCmd->add_option("--metric", hist.metric,
                      "euclidean2d | distanceavg | jaccard | l1")
      ->required();
  histCmd->add_option("--pairs", hist.pairs, "unique pairs to sample");
  histCmd->add_option("--seed", hist.seed, "rng seed");
  histCmd->add_option("--out", hist.out, "output CSV (stdout if omitted)");
  histCmd->add_option("--buckets", hist.buckets, "bucket count");

  const bool seedGiven =
      std::any_of(argv, argv + argc,
                  [](const char* a) { return std::string(a) == "--seed"; });
  if (!seedGiven) {
    gen.seed = defaultSeed();
    build.seed = defaultSeed();
    hist.seed = defaultSeed();
  }

  try {
    app.parse(argc, argv);

    if (*genCmd) return runGen(gen);
    if (*buildCmd)
      return dispatchMetric(build.metric,
                            [&](auto traits) { return runBuild(traits, build); });
    if (*rangeCmd)
      return dispatchIndex(rangeQ.index, [&](auto traits) {
        return runRange(traits, rangeQ, rangeRadius);
      });
    if (*knnCmd)
      return dispatchIndex(knnQ.index, [&](auto traits) {
        return runKnn(traits, knnQ, knnK, knnDe, knnSeed);
      });
    if (*exportCmd)
      return dispatchIndex(exportIndex, [&](auto traits) {
        return runExport(traits, exportIndex, exportOut, exportStart);
      });
    if (*importCmd)
      return dispatchIndex(importIndex, [&](auto traits) {
        return runImport(traits, importIndex);
      });
    if (*benchCmd)
      return dispatchIndex(bench.index,
                           [&](auto traits) { return runBench(traits, bench); });
    if (*frCmd) return runFr(fr);
    if (*histCmd)
      return dispatchMetric(hist.metric, [&](auto traits) {
        return runHistogram(traits, hist);
      });
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
