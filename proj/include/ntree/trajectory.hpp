#pragma once

#include <span>
#include <vector>

#include "ntree/point.hpp"

namespace ntree {

/// Time instant in seconds relative to a reference epoch at 0.
using Instant = double;

/// Linear motion over a time interval: the object moves from p0 at `start`
/// to p1 at `end` with constant velocity. Zero-length intervals are invalid.
struct Unit {
  Instant start = 0.0;
  Instant end = 0.0;
  Point2D p0;
  Point2D p1;

  Point2D positionAt(Instant t) const {
    const double f = (t - start) / (end - start);
    return {p0.x + (p1.x - p0.x) * f, p0.y + (p1.y - p0.y) * f};
  }

  friend bool operator==(const Unit&, const Unit&) = default;
};

/// A point moving linearly: position(t) = p0 + velocity * (t - t0).
/// Lighter-weight than Unit for integration because evaluation does not
/// divide by the interval length.
struct LinearMotion {
  Instant t0 = 0.0;
  Point2D p0;
  Point2D velocity;

  Point2D at(Instant t) const {
    const double dt = t - t0;
    return {p0.x + velocity.x * dt, p0.y + velocity.y * dt};
  }

  static LinearMotion ofUnit(const Unit& u) {
    const double inv = 1.0 / (u.end - u.start);
    return {u.start, u.p0,
            {(u.p1.x - u.p0.x) * inv, (u.p1.y - u.p0.y) * inv}};
  }
};

/// An ordered sequence of units with pairwise disjoint, time-ordered
/// intervals. Temporal gaps between consecutive units are allowed; spatial
/// continuity is not required.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<Unit> units);

  const std::vector<Unit>& units() const { return units_; }
  std::size_t unitCount() const { return units_.size(); }
  bool empty() const { return units_.empty(); }

  Instant startTime() const { return units_.front().start; }
  Instant endTime() const { return units_.back().end; }
  double span() const { return endTime() - startTime(); }

  /// Position at time t (clamped to the definition interval; within a
  /// temporal gap the next unit's start position is used).
  Point2D positionAt(Instant t) const;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::vector<Unit> units_;
};

/// One piece of a refinement partition: both motions are linear on
/// [start, end] and no unit of either input starts or ends strictly inside.
struct RefinementInterval {
  Instant start = 0.0;
  Instant end = 0.0;
  LinearMotion u;
  LinearMotion v;
};

struct CylinderUnit {
  Instant start = 0.0;
  Instant end = 0.0;
  Point2D p0;
  Point2D p1;
  double r = 0.0;

  LinearMotion motion() const {
    return LinearMotion::ofUnit(Unit{start, end, p0, p1});
  }
};

/// Douglas-Peucker axis plus the nominal approximation radius. The axis
/// vertices are a subsequence of the source trajectory's vertices with
/// their original time stamps, and the construction guarantees that the
/// average deviation from the source is below radius / 2.
struct CylinderApprox {
  Trajectory axis;
  double radius = 0.0;
};

struct CylinderDistances {
  double d = 0.0;      // average distance of the axes
  double lower = 0.0;  // d - v.r - w.r, may be negative
  double upper = 0.0;  // d + v.r + w.r
};

/// Maps a trajectory onto the definition interval [t, t+dur]: uniform time
/// scaling that preserves the relative position of unit boundaries, then
/// temporal gaps are closed with constant-speed connecting units. Spatial
/// coordinates of the original vertices are unchanged.
Trajectory adjust(const Trajectory& u, Instant t, double dur);

/// Coarsest common subdivision of two gap-free trajectories covering the
/// same definition interval. Single merge pass, O(m + n).
/// Throws if the spans differ or either input has gaps.
std::vector<RefinementInterval> refinementPartition(const Trajectory& u,
                                                    const Trajectory& v);

/// Closed-form ∫_0^len sqrt(a t² + b t + c) dt, where the radicand is
/// clamped at 0 to absorb rounding residue of squared distances.
/// Branches: constant (a = b = 0), linear radicand (a = 0), perfect square
/// (zero discriminant, integral of sqrt(a)|t - t0|), and the general
/// antiderivative in shifted form x/2·sqrt(q) + h/(2 sqrt(a))·asinh(...).
double integrateSqrtQuadratic(double a, double b, double c, double len);

/// Time-averaged Euclidean distance of two linear motions over [ivStart,
/// ivEnd]; the integrand is the square root of a degree-2 polynomial.
double unitAvgDistance(const LinearMotion& a, const LinearMotion& b,
                       Instant ivStart, Instant ivEnd);

/// Average distance of two trajectories that already cover the identical
/// definition interval (no re-adjustment). This is also the deviation
/// measure between a trajectory and its approximation.
double distanceAvgAligned(const Trajectory& u, const Trajectory& v);

/// DistanceAvg: both arguments are adjusted to [refStart, refStart+refDur]
/// and the average Euclidean distance is computed as a piecewise integral.
/// With a fixed reference interval this is a metric on trajectories.
double distanceAvg(const Trajectory& u, const Trajectory& v,
                   Instant refStart = 0.0, double refDur = 3600.0);

/// max(h(A,B), h(B,A)) with h(A,B) = max_{a in A} min_{b in B} d(a,b).
/// O(mn); serves as the comparison baseline for DistanceAvg.
double discreteHausdorff(std::span<const Point2D> a,
                         std::span<const Point2D> b);

/// Vertex positions of a trajectory (used by discreteHausdorff on
/// trajectory data). Requires spatio-temporal continuity.
std::vector<Point2D> vertexPath(const Trajectory& u);

/// Classic recursive simplification over the trajectory's vertices; the
/// time-synchronized deviation at every original vertex is <= r. First and
/// last vertices are always kept, time stamps are preserved.
/// Requires a gap-free, spatially continuous trajectory.
Trajectory douglasPeucker(const Trajectory& u, double r);

/// Douglas-Peucker with radius r; if the average deviation of the result
/// is not below r/2, the approximation is rebuilt with radius r/2. The
/// stored radius is always r.
CylinderApprox cylinderApprox(const Trajectory& u, double r);

/// Smallest oblique cylinder covering the trajectory: axis from the first
/// to the last vertex, radius = maximum time-synchronized distance to the
/// axis. Checking unit endpoints suffices because the squared distance
/// between two linear motions is convex on each interval.
CylinderUnit boundingCylinder(const Trajectory& u);

/// Axis distance together with the lower/upper bound distances for the
/// trajectories enclosed by the two cylinders. Requires identical time
/// intervals.
CylinderDistances cylinderDistances(const CylinderUnit& v,
                                    const CylinderUnit& w);

/// Builds a trajectory from a point sequence with time stamps chosen so
/// the object moves at constant speed (spatial-only use of DistanceAvg).
/// Consecutive duplicate points are merged.
Trajectory retimeConstantSpeed(std::span<const Point2D> points);

}  // namespace ntree
