#include "ntree/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ntree {

namespace {

bool isFinitePoint(const Point2D& p) {
  return std::isfinite(p.x) && std::isfinite(p.y);
}

void requireAligned(const Trajectory& u, const Trajectory& v) {
  if (u.empty() || v.empty())
    throw std::invalid_argument("trajectory: empty operand");
  if (u.startTime() != v.startTime() || u.endTime() != v.endTime())
    throw std::invalid_argument("trajectory: span mismatch");
}

void requireGapFree(const Trajectory& t) {
  const auto& us = t.units();
  for (std::size_t i = 0; i + 1 < us.size(); ++i)
    if (us[i].end != us[i + 1].start)
      throw std::invalid_argument("trajectory: temporal gap not allowed here");
}

// Raw integral of the distance between two linear motions over an interval.
double integrateMotionDistance(const LinearMotion& a, const LinearMotion& b,
                               Instant ivStart, Instant ivEnd) {
  const Point2D d0 = a.at(ivStart) - b.at(ivStart);
  const Point2D w = a.velocity - b.velocity;
  const double qa = dot(w, w);
  const double qb = 2.0 * dot(d0, w);
  const double qc = dot(d0, d0);
  return integrateSqrtQuadratic(qa, qb, qc, ivEnd - ivStart);
}

}  // namespace

Trajectory::Trajectory(std::vector<Unit> units) : units_(std::move(units)) {
  if (units_.empty())
    throw std::invalid_argument("trajectory: must contain at least one unit");
  for (std::size_t i = 0; i < units_.size(); ++i) {
    const Unit& u = units_[i];
    if (!(u.start < u.end))
      throw std::invalid_argument("trajectory: unit needs start < end");
    if (!std::isfinite(u.start) || !std::isfinite(u.end) ||
        !isFinitePoint(u.p0) || !isFinitePoint(u.p1))
      throw std::invalid_argument("trajectory: non-finite unit");
    if (i > 0 && units_[i - 1].end > u.start)
      throw std::invalid_argument("trajectory: units out of order");
  }
}

Point2D Trajectory::positionAt(Instant t) const {
  if (t <= startTime()) return units_.front().p0;
  if (t >= endTime()) return units_.back().p1;
  // linear walk is fine for the sizes used here; units are time ordered
  for (const Unit& u : units_) {
    if (t < u.start) return u.p0;  // inside a gap before u: snap forward
    if (t <= u.end) return u.positionAt(t);
  }
  return units_.back().p1;
}

Trajectory adjust(const Trajectory& u, Instant t, double dur) {
  if (u.empty()) throw std::invalid_argument("adjust: empty trajectory");
  if (!(dur > 0.0)) throw std::invalid_argument("adjust: duration must be positive");
  const double span = u.endTime() - u.startTime();
  if (!(span > 0.0)) throw std::invalid_argument("adjust: degenerate span");

  const double factor = dur / span;
  const Instant base = u.startTime();
  const std::size_t m = u.unitCount();

  std::vector<Unit> out;
  out.reserve(2 * m - 1);
  for (std::size_t i = 0; i < m; ++i) {
    const Unit& ui = u.units()[i];
    Unit v;
    v.start = t + (ui.start - base) * factor;
    v.end = t + (ui.end - base) * factor;
    v.p0 = ui.p0;
    v.p1 = ui.p1;
    if (i == 0) v.start = t;
    if (i + 1 == m) v.end = t + dur;
    if (!out.empty() && out.back().end < v.start)
      out.push_back(Unit{out.back().end, v.start, out.back().p1, v.p0});
    out.push_back(v);
  }
  return Trajectory(std::move(out));
}

std::vector<RefinementInterval> refinementPartition(const Trajectory& u,
                                                    const Trajectory& v) {
  requireAligned(u, v);
  requireGapFree(u);
  requireGapFree(v);

  const auto& uu = u.units();
  const auto& vu = v.units();
  std::vector<RefinementInterval> out;
  out.reserve(uu.size() + vu.size());

  std::size_t i = 0, j = 0;
  Instant cur = u.startTime();
  while (i < uu.size() && j < vu.size()) {
    const Instant stop = std::min(uu[i].end, vu[j].end);
    if (stop > cur) {
      out.push_back(RefinementInterval{cur, stop, LinearMotion::ofUnit(uu[i]),
                                       LinearMotion::ofUnit(vu[j])});
      cur = stop;
    }
    if (uu[i].end == stop) ++i;
    if (j < vu.size() && vu[j].end == stop) ++j;
  }
  return out;
}

double integrateSqrtQuadratic(double a, double b, double c, double len) {
  if (!(len > 0.0)) return 0.0;
  if (a <= 0.0) {
    if (b == 0.0) return len * std::sqrt(std::max(c, 0.0));
    // linear radicand: integrate (bt + c)^(1/2) where it is nonnegative
    const double root = -c / b;
    double lo = 0.0, hi = len;
    if (b > 0.0)
      lo = std::clamp(root, 0.0, len);
    else
      hi = std::clamp(root, 0.0, len);
    if (lo >= hi) return 0.0;
    const auto F = [&](double t) {
      const double q = std::max(b * t + c, 0.0);
      return (2.0 / (3.0 * b)) * q * std::sqrt(q);
    };
    return F(hi) - F(lo);
  }

  const double shift = b / (2.0 * a);       // q(t) = a (t + shift)^2 + h
  const double h = c - shift * (b / 2.0);   // (4ac - b^2) / (4a)
  const double sa = std::sqrt(a);
  const double x0 = shift;
  const double x1 = len + shift;

  if (h <= 0.0) {
    // perfect square (or rounding residue): sqrt(q) = sqrt(a) |t + shift|
    const auto F = [&](double x) { return 0.5 * sa * x * std::abs(x); };
    return F(x1) - F(x0);
  }

  const double sh = std::sqrt(h);
  const auto F = [&](double x, double q) {
    return 0.5 * (x * std::sqrt(std::max(q, 0.0)) +
                  (h / sa) * std::asinh(x * sa / sh));
  };
  return F(x1, (a * len + b) * len + c) - F(x0, c);
}

double unitAvgDistance(const LinearMotion& a, const LinearMotion& b,
                       Instant ivStart, Instant ivEnd) {
  const double len = ivEnd - ivStart;
  if (!(len > 0.0))
    throw std::invalid_argument("unitAvgDistance: empty interval");
  return integrateMotionDistance(a, b, ivStart, ivEnd) / len;
}

double distanceAvgAligned(const Trajectory& u, const Trajectory& v) {
  requireAligned(u, v);
  requireGapFree(u);
  requireGapFree(v);

  // streaming merge over the refinement partition; nothing is materialized
  const auto& uu = u.units();
  const auto& vu = v.units();
  std::size_t i = 0, j = 0;
  Instant cur = u.startTime();
  LinearMotion mu = LinearMotion::ofUnit(uu[0]);
  LinearMotion mv = LinearMotion::ofUnit(vu[0]);
  double sum = 0.0;
  while (i < uu.size() && j < vu.size()) {
    const Instant stop = std::min(uu[i].end, vu[j].end);
    if (stop > cur) {
      sum += integrateMotionDistance(mu, mv, cur, stop);
      cur = stop;
    }
    if (uu[i].end == stop) {
      if (++i < uu.size()) mu = LinearMotion::ofUnit(uu[i]);
    }
    if (vu[j].end == stop) {
      if (++j < vu.size()) mv = LinearMotion::ofUnit(vu[j]);
    }
  }
  return sum / (u.endTime() - u.startTime());
}

double distanceAvg(const Trajectory& u, const Trajectory& v, Instant refStart,
                   double refDur) {
  return distanceAvgAligned(adjust(u, refStart, refDur),
                            adjust(v, refStart, refDur));
}

double discreteHausdorff(std::span<const Point2D> a,
                         std::span<const Point2D> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("discreteHausdorff: empty sequence");
  const auto directed = [](std::span<const Point2D> s,
                           std::span<const Point2D> t) {
    double worst = 0.0;
    for (const Point2D& p : s) {
      double best = std::numeric_limits<double>::infinity();
      for (const Point2D& q : t) best = std::min(best, euclidean2d(p, q));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

namespace {

struct Vertex {
  Instant t;
  Point2D p;
};

// Vertex sequence of a gap-free, spatially continuous trajectory.
std::vector<Vertex> continuousVertices(const Trajectory& u) {
  const auto& us = u.units();
  std::vector<Vertex> verts;
  verts.reserve(us.size() + 1);
  verts.push_back({us.front().start, us.front().p0});
  for (std::size_t i = 0; i < us.size(); ++i) {
    if (i > 0 && (us[i - 1].end != us[i].start || !(us[i - 1].p1 == us[i].p0)))
      throw std::invalid_argument(
          "trajectory: continuity required for vertex-based operations");
    verts.push_back({us[i].end, us[i].p1});
  }
  return verts;
}

double vertexDeviation(const Vertex& a, const Vertex& b, const Vertex& mid) {
  const double f = (mid.t - a.t) / (b.t - a.t);
  const Point2D on{a.p.x + (b.p.x - a.p.x) * f, a.p.y + (b.p.y - a.p.y) * f};
  return euclidean2d(on, mid.p);
}

void simplify(const std::vector<Vertex>& verts, std::size_t lo, std::size_t hi,
              double r, std::vector<char>& keep) {
  if (hi <= lo + 1) return;
  double worst = -1.0;
  std::size_t arg = lo;
  for (std::size_t k = lo + 1; k < hi; ++k) {
    const double dev = vertexDeviation(verts[lo], verts[hi], verts[k]);
    if (dev > worst) {
      worst = dev;
      arg = k;
    }
  }
  if (worst > r) {
    keep[arg] = 1;
    simplify(verts, lo, arg, r, keep);
    simplify(verts, arg, hi, r, keep);
  }
}

}  // namespace

std::vector<Point2D> vertexPath(const Trajectory& u) {
  const auto verts = continuousVertices(u);
  std::vector<Point2D> out;
  out.reserve(verts.size());
  for (const Vertex& v : verts) out.push_back(v.p);
  return out;
}

Trajectory douglasPeucker(const Trajectory& u, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("douglasPeucker: radius must be positive");
  const auto verts = continuousVertices(u);
  std::vector<char> keep(verts.size(), 0);
  keep.front() = 1;
  keep.back() = 1;
  simplify(verts, 0, verts.size() - 1, r, keep);

  std::vector<Unit> units;
  std::size_t prev = 0;
  for (std::size_t i = 1; i < verts.size(); ++i) {
    if (!keep[i]) continue;
    units.push_back(Unit{verts[prev].t, verts[i].t, verts[prev].p, verts[i].p});
    prev = i;
  }
  return Trajectory(std::move(units));
}

CylinderApprox cylinderApprox(const Trajectory& u, double r) {
  Trajectory axis = douglasPeucker(u, r);
  if (distanceAvgAligned(u, axis) >= r / 2.0) axis = douglasPeucker(u, r / 2.0);
  return CylinderApprox{std::move(axis), r};
}

CylinderUnit boundingCylinder(const Trajectory& u) {
  if (u.empty()) throw std::invalid_argument("boundingCylinder: empty trajectory");
  CylinderUnit c;
  c.start = u.startTime();
  c.end = u.endTime();
  c.p0 = u.units().front().p0;
  c.p1 = u.units().back().p1;
  const LinearMotion axis = c.motion();
  double radius = 0.0;
  for (const Unit& un : u.units()) {
    radius = std::max(radius, euclidean2d(axis.at(un.start), un.p0));
    radius = std::max(radius, euclidean2d(axis.at(un.end), un.p1));
  }
  c.r = radius;
  return c;
}

CylinderDistances cylinderDistances(const CylinderUnit& v,
                                    const CylinderUnit& w) {
  if (v.start != w.start || v.end != w.end)
    throw std::invalid_argument("cylinderDistances: interval mismatch");
  const double d = unitAvgDistance(v.motion(), w.motion(), v.start, v.end);
  return CylinderDistances{d, d - v.r - w.r, d + v.r + w.r};
}

Trajectory retimeConstantSpeed(std::span<const Point2D> points) {
  if (points.empty())
    throw std::invalid_argument("retimeConstantSpeed: empty point sequence");
  std::vector<Point2D> pts;
  pts.push_back(points[0]);
  for (const Point2D& p : points.subspan(1))
    if (!(p == pts.back())) pts.push_back(p);
  if (pts.size() < 2)
    return Trajectory({Unit{0.0, 1.0, pts[0], pts[0]}});

  std::vector<Unit> units;
  double t = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double step = euclidean2d(pts[i], pts[i + 1]);
    units.push_back(Unit{t, t + step, pts[i], pts[i + 1]});
    t += step;
  }
  return Trajectory(std::move(units));
}

}  // namespace ntree
