#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "ntree/dataset.hpp"
#include "ntree/metrics.hpp"
#include "ntree/point.hpp"
#include "ntree/rng.hpp"
#include "ntree/trajectory.hpp"

namespace ntree {

/// Gaussian clusters in a square of the given extent; reproduces the
/// multi-modal distance distribution of clustered real-world point data.
Dataset<Point2D> genClusteredPoints(std::size_t n, int clusters,
                                    std::uint64_t seed,
                                    double extent = 100000.0,
                                    double stddev = 800.0);

/// Random walks with correlated heading; one unit per 30 s step, walking
/// speeds, coordinates in meters.
Dataset<Trajectory> genRandomWalkTrajectories(std::size_t n, int units,
                                              std::uint64_t seed);

Dataset<WordSet> genWordSets(std::size_t n, int vocabulary, double meanWords,
                             std::uint64_t seed);

/// Gaussian clusters in [0,1]^dim.
Dataset<DenseVector> genVectors(std::size_t n, int dim, int clusters,
                                std::uint64_t seed);

/// Distance histogram over `pairs` unique unordered pairs, bucketed into
/// `buckets` equal-width bins over the observed range. Returns the bucket
/// counts together with the bucket width and minimum.
struct DistanceHistogram {
  std::vector<std::uint64_t> counts;
  double minValue = 0.0;
  double bucketWidth = 0.0;
};

template <class Obj, class Dist>
DistanceHistogram distanceHistogram(const Dataset<Obj>& data,
                                    const Dist& dist, std::size_t pairs,
                                    std::uint64_t seed, int buckets = 100) {
  const std::size_t n = data.size();
  const std::size_t maxPairs = n * (n - 1) / 2;
  if (n < 2 || pairs > maxPairs)
    throw std::invalid_argument("distanceHistogram: pairs exceeds n(n-1)/2");

  Rng rng(seed);
  std::vector<std::uint64_t> chosen;
  chosen.reserve(pairs);
  std::unordered_set<std::uint64_t> seen;
  while (chosen.size() < pairs) {
    std::uint64_t i = rng.below(n);
    std::uint64_t j = rng.below(n);
    if (i == j) continue;
    if (i > j) std::swap(i, j);
    const std::uint64_t key = i * n + j;
    if (seen.insert(key).second) chosen.push_back(key);
  }

  std::vector<double> values;
  values.reserve(pairs);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::uint64_t key : chosen) {
    const std::size_t i = key / n;
    const std::size_t j = key % n;
    const double d = dist(data.objects[i], data.objects[j]);
    values.push_back(d);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }

  DistanceHistogram out;
  out.counts.assign(buckets, 0);
  out.minValue = lo;
  out.bucketWidth = hi > lo ? (hi - lo) / buckets : 1.0;
  for (double d : values) {
    int b = static_cast<int>((d - lo) / out.bucketWidth);
    if (b >= buckets) b = buckets - 1;
    ++out.counts[b];
  }
  return out;
}

/// Number of local maxima of the histogram after moving-average smoothing.
int smoothedModeCount(const std::vector<std::uint64_t>& counts, int window);

}  // namespace ntree
