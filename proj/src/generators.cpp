#include "ntree/generators.hpp"

#include <algorithm>
#include <cmath>

namespace ntree {

Dataset<Point2D> genClusteredPoints(std::size_t n, int clusters,
                                    std::uint64_t seed, double extent,
                                    double stddev) {
  if (clusters < 1) throw std::invalid_argument("genClusteredPoints: clusters >= 1");
  Rng rng(seed);
  std::vector<Point2D> centers;
  centers.reserve(clusters);
  for (int c = 0; c < clusters; ++c)
    centers.push_back(Point2D{rng.uniform(0.0, extent), rng.uniform(0.0, extent)});

  Dataset<Point2D> data;
  for (std::size_t i = 0; i < n; ++i) {
    const Point2D& c = centers[rng.below(clusters)];
    data.add(static_cast<ObjectId>(i),
             Point2D{rng.normal(c.x, stddev), rng.normal(c.y, stddev)});
  }
  return data;
}

Dataset<Trajectory> genRandomWalkTrajectories(std::size_t n, int units,
                                              std::uint64_t seed) {
  if (units < 1) throw std::invalid_argument("genRandomWalkTrajectories: units >= 1");
  Rng rng(seed);
  Dataset<Trajectory> data;
  constexpr double kStepSeconds = 30.0;
  for (std::size_t i = 0; i < n; ++i) {
    Point2D pos{rng.uniform(0.0, 5000.0), rng.uniform(0.0, 5000.0)};
    double heading = rng.uniform(0.0, 6.283185307179586);
    std::vector<Unit> out;
    out.reserve(units);
    double t = 0.0;
    for (int u = 0; u < units; ++u) {
      heading += rng.normal(0.0, 0.35);
      const double speed = std::clamp(rng.normal(3.5, 1.2), 0.5, 8.0);
      const double step = speed * kStepSeconds;
      const Point2D next{pos.x + step * std::cos(heading),
                         pos.y + step * std::sin(heading)};
      out.push_back(Unit{t, t + kStepSeconds, pos, next});
      pos = next;
      t += kStepSeconds;
    }
    data.add(static_cast<ObjectId>(i), Trajectory(std::move(out)));
  }
  return data;
}

Dataset<WordSet> genWordSets(std::size_t n, int vocabulary, double meanWords,
                             std::uint64_t seed) {
  if (vocabulary < 1) throw std::invalid_argument("genWordSets: vocabulary >= 1");
  Rng rng(seed);
  Dataset<WordSet> data;
  for (std::size_t i = 0; i < n; ++i) {
    const int size = std::max(
        1, std::min(vocabulary,
                    static_cast<int>(std::lround(rng.normal(meanWords, 4.0)))));
    std::vector<std::string> words;
    words.reserve(size);
    for (std::size_t idx : rng.sampleIndices(vocabulary, size))
      words.push_back("w" + std::to_string(idx));
    data.add(static_cast<ObjectId>(i), WordSet(std::move(words)));
  }
  return data;
}

Dataset<DenseVector> genVectors(std::size_t n, int dim, int clusters,
                                std::uint64_t seed) {
  if (dim < 1 || clusters < 1)
    throw std::invalid_argument("genVectors: dim and clusters must be >= 1");
  Rng rng(seed);
  std::vector<DenseVector> centers(clusters);
  for (auto& c : centers) {
    c.values.reserve(dim);
    for (int d = 0; d < dim; ++d) c.values.push_back(rng.uniform01());
  }

  Dataset<DenseVector> data;
  for (std::size_t i = 0; i < n; ++i) {
    const DenseVector& c = centers[rng.below(clusters)];
    DenseVector v;
    v.values.reserve(dim);
    for (int d = 0; d < dim; ++d)
      v.values.push_back(c.values[d] + rng.normal(0.0, 0.08));
    data.add(static_cast<ObjectId>(i), std::move(v));
  }
  return data;
}

int smoothedModeCount(const std::vector<std::uint64_t>& counts, int window) {
  const int n = static_cast<int>(counts.size());
  std::vector<double> smooth(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    int cnt = 0;
    for (int j = std::max(0, i - window); j <= std::min(n - 1, i + window); ++j) {
      sum += static_cast<double>(counts[j]);
      ++cnt;
    }
    smooth[i] = sum / cnt;
  }
  int modes = 0;
  for (int i = 0; i < n; ++i) {
    const double left = i > 0 ? smooth[i - 1] : -1.0;
    const double right = i + 1 < n ? smooth[i + 1] : -1.0;
    if (smooth[i] > left && smooth[i] > right && smooth[i] > 0.0) ++modes;
  }
  return modes;
}

}  // namespace ntree
