#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ntree/point.hpp"

namespace ntree {

/// A finite set of words, kept sorted and duplicate-free.
struct WordSet {
  std::vector<std::string> words;

  WordSet() = default;
  explicit WordSet(std::vector<std::string> w) : words(std::move(w)) {
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
  }

  friend bool operator==(const WordSet&, const WordSet&) = default;
};

struct DenseVector {
  std::vector<double> values;

  friend bool operator==(const DenseVector&, const DenseVector&) = default;
};

/// Jaccard distance 1 - |a∩b| / |a∪b|; two empty sets have distance 0.
inline double jaccard(const WordSet& a, const WordSet& b) {
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.words.size() && j < b.words.size()) {
    const int cmp = a.words[i].compare(b.words[j]);
    if (cmp == 0) {
      ++common;
      ++i;
      ++j;
    } else if (cmp < 0) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t unionSize = a.words.size() + b.words.size() - common;
  if (unionSize == 0) return 0.0;
  return 1.0 - static_cast<double>(common) / static_cast<double>(unionSize);
}

inline double l1norm(const DenseVector& a, const DenseVector& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("l1norm: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    sum += std::abs(a.values[i] - b.values[i]);
  return sum;
}

/// Wraps a distance function and counts every evaluation. The counter is
/// atomic so concurrent queries may share one instance; it only ever
/// increases (except through reset()).
template <class Obj>
class CountingMetric {
 public:
  using Fn = std::function<double(const Obj&, const Obj&)>;

  explicit CountingMetric(Fn inner, std::string name = {})
      : inner_(std::move(inner)), name_(std::move(name)) {}

  CountingMetric(const CountingMetric&) = delete;
  CountingMetric& operator=(const CountingMetric&) = delete;

  double operator()(const Obj& a, const Obj& b) const {
    count_.fetch_add(1, std::memory_order_relaxed);
    return inner_(a, b);
  }

  std::uint64_t evaluations() const {
    return count_.load(std::memory_order_relaxed);
  }

  void reset() { count_.store(0, std::memory_order_relaxed); }

  const std::string& name() const { return name_; }

 private:
  Fn inner_;
  std::string name_;
  mutable std::atomic<std::uint64_t> count_{0};
};

}  // namespace ntree
