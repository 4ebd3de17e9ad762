#pragma once

#include <stdexcept>
#include <vector>

#include "ntree/dataset.hpp"
#include "ntree/search.hpp"
#include "ntree/trajectory.hpp"

namespace ntree {

/// A trajectory adjusted to the shared reference interval together with
/// its bounding cylinder and its cylinder sequence approximation. All
/// cylinder units of one corpus span the same interval, so their bound
/// distances are directly comparable.
struct ApproxRecord {
  ObjectId id = 0;
  Trajectory traj;    // adjusted to the reference interval
  CylinderApprox c;   // built on the adjusted trajectory
  CylinderUnit cbb;   // bounding cylinder of the adjusted trajectory
};

struct FilterRefineStats {
  std::uint64_t cbbChecks = 0;
  std::uint64_t axisEvaluations = 0;
  std::uint64_t exactEvaluations = 0;
  std::uint64_t filterCandidates = 0;
  std::uint64_t directAccepts = 0;
};

inline ApproxRecord makeApproxRecord(ObjectId id, const Trajectory& raw,
                                     double approxRadius,
                                     Instant refStart = 0.0,
                                     double refDur = 3600.0) {
  ApproxRecord rec;
  rec.id = id;
  rec.traj = adjust(raw, refStart, refDur);
  rec.c = cylinderApprox(rec.traj, approxRadius);
  rec.cbb = boundingCylinder(rec.traj);
  return rec;
}

inline std::vector<ApproxRecord> makeApproxCorpus(
    const Dataset<Trajectory>& data, double approxRadius,
    Instant refStart = 0.0, double refDur = 3600.0) {
  std::vector<ApproxRecord> out;
  out.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    out.push_back(makeApproxRecord(data.ids[i], data.objects[i], approxRadius,
                                   refStart, refDur));
  return out;
}

/// Sequential filter-and-refine range scan. Records are skipped on the
/// cylinder-unit lower bound, accepted or rejected on the axis distance
/// where the r/2 bounds decide, and settled by the exact distance
/// otherwise. Returns exactly the ids within distance q of s.
inline std::vector<ObjectId> rangeScanFR(const std::vector<ApproxRecord>& T,
                                         const ApproxRecord& s, double q,
                                         double r,
                                         FilterRefineStats* stats = nullptr) {
  std::vector<ObjectId> res;
  for (const ApproxRecord& t : T) {
    if (stats) ++stats->cbbChecks;
    if (cylinderDistances(s.cbb, t.cbb).lower > q) continue;
    if (stats) ++stats->axisEvaluations;
    const double dc = distanceAvgAligned(s.c.axis, t.c.axis);
    if (dc - r > q) continue;
    if (dc + r <= q) {
      if (stats) ++stats->directAccepts;
      res.push_back(t.id);
      continue;
    }
    if (stats) ++stats->exactEvaluations;
    if (distanceAvgAligned(s.traj, t.traj) <= q) res.push_back(t.id);
  }
  return res;
}

/// Index-backed filter-and-refine: a q+r range query on the axis index
/// yields a candidate superset; candidates whose axis distance is at most
/// q-r are accepted directly, the rest are settled exactly. Axis distances
/// already evaluated by the index search are reused.
inline std::vector<ObjectId> rangeSearchFR(const std::vector<ApproxRecord>& T,
                                           const NTree<Trajectory>& axisIndex,
                                           const ApproxRecord& s, double q,
                                           double r,
                                           FilterRefineStats* stats = nullptr) {
  EvalCache cache;
  const std::vector<ObjectId> candidates =
      rangeSearch<Trajectory>(axisIndex, s.c.axis, q + r, nullptr, &cache);

  std::unordered_map<ObjectId, const ApproxRecord*> byId;
  byId.reserve(T.size());
  for (const ApproxRecord& t : T) byId.emplace(t.id, &t);

  std::vector<ObjectId> res;
  for (ObjectId id : candidates) {
    const auto it = byId.find(id);
    if (it == byId.end())
      throw std::invalid_argument("rangeSearchFR: index returned unknown id");
    const ApproxRecord& t = *it->second;
    if (stats) ++stats->filterCandidates;

    const auto cached = cache.find(id);
    double axisDist;
    if (cached != cache.end()) {
      axisDist = cached->second;
    } else {
      if (stats) ++stats->axisEvaluations;
      axisDist = distanceAvgAligned(s.c.axis, t.c.axis);
    }
    if (axisDist <= q - r) {
      if (stats) ++stats->directAccepts;
      res.push_back(id);
      continue;
    }
    if (stats) ++stats->exactEvaluations;
    if (distanceAvgAligned(s.traj, t.traj) <= q) res.push_back(id);
  }
  return res;
}

}  // namespace ntree
