#include <chrono>
#include <cmath>
#include <set>

#include "doctest.h"
#include "ntree/rng.hpp"
#include "ntree/trajectory.hpp"
#include "oracles.hpp"

using namespace ntree;

namespace {

Trajectory randomWalk(Rng& rng, int units, double scale = 100.0) {
  std::vector<Unit> out;
  Point2D pos{rng.uniform(0, scale), rng.uniform(0, scale)};
  double t = rng.uniform(0, 10);
  for (int i = 0; i < units; ++i) {
    const double dt = rng.uniform(0.5, 3.0);
    const Point2D next{pos.x + rng.uniform(-scale / 10, scale / 10),
                       pos.y + rng.uniform(-scale / 10, scale / 10)};
    out.push_back(Unit{t, t + dt, pos, next});
    pos = next;
    t += dt;
  }
  return Trajectory(std::move(out));
}

std::vector<double> breakpoints(const Trajectory& t) {
  std::vector<double> bps{t.startTime()};
  for (const Unit& u : t.units()) bps.push_back(u.end);
  return bps;
}

}  // namespace

TEST_SUITE("trajectory") {

TEST_CASE("trajectory construction validates units") {
  CHECK_THROWS_AS(Trajectory(std::vector<Unit>{}), std::invalid_argument);
  CHECK_THROWS_AS(Trajectory({Unit{1, 1, {0, 0}, {1, 1}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(Trajectory({Unit{0, 2, {0, 0}, {1, 1}},
                              Unit{1, 3, {1, 1}, {2, 2}}}),
                  std::invalid_argument);
  // gaps are allowed
  CHECK_NOTHROW(Trajectory({Unit{0, 1, {0, 0}, {1, 1}},
                            Unit{2, 3, {1, 1}, {2, 2}}}));
}

TEST_CASE("adjust maps a single unit onto the full interval") {
  const Trajectory u({Unit{10, 20, {0, 0}, {1, 0}}});
  const Trajectory v = adjust(u, 0, 3600);
  REQUIRE(v.unitCount() == 1);
  CHECK(v.units()[0].start == 0.0);
  CHECK(v.units()[0].end == 3600.0);
  CHECK(v.units()[0].p0 == Point2D{0, 0});
  CHECK(v.units()[0].p1 == Point2D{1, 0});
}

TEST_CASE("adjust closes gaps with connecting units") {
  const Trajectory u({Unit{0, 1, {0, 0}, {1, 0}}, Unit{2, 3, {2, 0}, {3, 0}}});
  const Trajectory v = adjust(u, 0, 3);
  REQUIRE(v.unitCount() == 3);
  CHECK(v.units()[0] == Unit{0, 1, {0, 0}, {1, 0}});
  CHECK(v.units()[1] == Unit{1, 2, {1, 0}, {2, 0}});  // gap filler
  CHECK(v.units()[2] == Unit{2, 3, {2, 0}, {3, 0}});
}

TEST_CASE("adjust follows the affine time map t' = t + (s-s0)*dur/span") {
  // span 4 stretched to dur 8 from t=100: boundaries {0,1,4} -> {100,102,108}
  const Trajectory u({Unit{0, 1, {0, 0}, {1, 1}}, Unit{1, 4, {1, 1}, {4, 4}}});
  const Trajectory v = adjust(u, 100, 8);
  REQUIRE(v.unitCount() == 2);
  CHECK(v.units()[0].start == 100.0);
  CHECK(v.units()[0].end == 102.0);
  CHECK(v.units()[1].start == 102.0);
  CHECK(v.units()[1].end == 108.0);

  Rng rng(21);
  for (int rep = 0; rep < 200; ++rep) {
    const Trajectory w = randomWalk(rng, 1 + static_cast<int>(rng.below(12)));
    const double t0 = rng.uniform(-100, 100);
    const double dur = rng.uniform(1, 5000);
    const Trajectory a = adjust(w, t0, dur);
    CHECK(a.startTime() == t0);
    CHECK(a.endTime() == t0 + dur);
    const double span = w.span();
    for (const Unit& un : w.units()) {
      const double expect = t0 + (un.start - w.startTime()) * dur / span;
      bool found = false;
      for (const Unit& an : a.units())
        if (std::abs(an.start - expect) <= 1e-9 * std::max(1.0, std::abs(expect)))
          found = true;
      CHECK(found);
    }
  }
}

TEST_CASE("adjust rejects non-positive durations") {
  const Trajectory u({Unit{0, 1, {0, 0}, {1, 0}}});
  CHECK_THROWS_AS(adjust(u, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(adjust(u, 0, -5), std::invalid_argument);
}

TEST_CASE("adjust is idempotent on adjusted input") {
  Rng rng(22);
  for (int rep = 0; rep < 100; ++rep) {
    const Trajectory w = randomWalk(rng, 1 + static_cast<int>(rng.below(10)));
    const Trajectory once = adjust(w, 0, 3600);
    const Trajectory twice = adjust(once, 0, 3600);
    REQUIRE(once.unitCount() == twice.unitCount());
    for (std::size_t i = 0; i < once.unitCount(); ++i) {
      CHECK(std::abs(once.units()[i].start - twice.units()[i].start) <= 1e-12 * 3600);
      CHECK(std::abs(once.units()[i].end - twice.units()[i].end) <= 1e-12 * 3600);
      CHECK(once.units()[i].p0 == twice.units()[i].p0);
      CHECK(once.units()[i].p1 == twice.units()[i].p1);
    }
  }
}

TEST_CASE("refinement partition merges breakpoint sets") {
  // two units at {0, 0.3, 1} against four at {0, 0.1, 0.5, 0.7, 1}
  const Trajectory u({Unit{0, 0.3, {0, 0}, {1, 0}}, Unit{0.3, 1, {1, 0}, {2, 0}}});
  const Trajectory v({Unit{0, 0.1, {0, 1}, {1, 1}}, Unit{0.1, 0.5, {1, 1}, {2, 1}},
                      Unit{0.5, 0.7, {2, 1}, {3, 1}}, Unit{0.7, 1, {3, 1}, {4, 1}}});
  const auto parts = refinementPartition(u, v);
  REQUIRE(parts.size() == 5);
  const std::vector<double> expect{0, 0.1, 0.3, 0.5, 0.7, 1};
  for (std::size_t i = 0; i < parts.size(); ++i) {
    CHECK(parts[i].start == expect[i]);
    CHECK(parts[i].end == expect[i + 1]);
  }
}

TEST_CASE("refinement partition of identical breakpoints") {
  Rng rng(23);
  const Trajectory u = adjust(randomWalk(rng, 7), 0, 100);
  const auto parts = refinementPartition(u, u);
  CHECK(parts.size() == u.unitCount());
}

TEST_CASE("refinement partition equals sorted union of breakpoints") {
  Rng rng(24);
  for (int rep = 0; rep < 200; ++rep) {
    const Trajectory u = adjust(randomWalk(rng, 1 + static_cast<int>(rng.below(9))), 0, 50);
    const Trajectory v = adjust(randomWalk(rng, 1 + static_cast<int>(rng.below(9))), 0, 50);
    const auto parts = refinementPartition(u, v);

    std::set<double> cuts;
    for (double b : breakpoints(u)) cuts.insert(b);
    for (double b : breakpoints(v)) cuts.insert(b);
    REQUIRE(parts.size() == cuts.size() - 1);
    auto it = cuts.begin();
    for (const auto& p : parts) {
      CHECK(p.start == *it);
      ++it;
      CHECK(p.end == *it);
    }
    const std::size_t m = u.unitCount(), n = v.unitCount();
    CHECK(parts.size() >= std::max(m, n));
    CHECK(parts.size() <= m + n);
  }
}

TEST_CASE("refinement partition rejects span mismatch") {
  const Trajectory u({Unit{0, 1, {0, 0}, {1, 0}}});
  const Trajectory v({Unit{0, 2, {0, 0}, {1, 0}}});
  CHECK_THROWS_AS(refinementPartition(u, v), std::invalid_argument);
}

TEST_CASE("unitAvgDistance closed-form values") {
  const LinearMotion stillA{0, {0, 0}, {0, 0}};
  const LinearMotion stillB{0, {3, 4}, {0, 0}};
  CHECK(unitAvgDistance(stillA, stillB, 0, 1) == doctest::Approx(5.0));

  const LinearMotion movingA{0, {0, 0}, {1, 0}};  // (t, 0)
  const LinearMotion movingB{0, {0, 0}, {1, 1}};  // (t, t)
  CHECK(unitAvgDistance(movingA, movingB, 0, 1) == doctest::Approx(0.5));

  const LinearMotion crossA{0, {0, 0}, {1, 0}};   // (t, 0)
  const LinearMotion crossB{0, {1, 1}, {-1, 0}};  // (1-t, 1)
  const double expect = (std::sqrt(2.0) + std::log(1.0 + std::sqrt(2.0))) / 2.0;
  CHECK(unitAvgDistance(crossA, crossB, 0, 1) ==
        doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("closed form matches adaptive quadrature incl degenerate branches") {
  Rng rng(25);
  int degenerateA = 0, degenerateDisc = 0;
  for (int rep = 0; rep < 10000; ++rep) {
    double a, b, c;
    const int kind = static_cast<int>(rng.below(5));
    if (kind == 0) {  // a = 0, b = 0: constant radicand
      a = 0.0; b = 0.0; c = rng.uniform(0, 25);
      ++degenerateA;
    } else if (kind == 1) {  // a = 0: linear radicand
      a = 0.0; b = rng.uniform(-4, 4); c = rng.uniform(0, 9);
      if (b == 0.0) b = 1.0;
      ++degenerateA;
    } else if (kind == 2) {  // zero discriminant: perfect square
      const double root = rng.uniform(-1, 3);
      const double s = rng.uniform(0.1, 3);
      a = s * s; b = -2.0 * s * s * root; c = s * s * root * root;
      ++degenerateDisc;
    } else {  // general: squared distance of two random motions
      const Point2D d0{rng.uniform(-10, 10), rng.uniform(-10, 10)};
      const Point2D w{rng.uniform(-3, 3), rng.uniform(-3, 3)};
      a = dot(w, w); b = 2 * dot(d0, w); c = dot(d0, d0);
    }
    const double len = rng.uniform(0.1, 4.0);
    const double closed = integrateSqrtQuadratic(a, b, c, len);
    const double quad = oracles::sqrtQuadraticQuadrature(a, b, c, len);
    CHECK(closed == doctest::Approx(quad).epsilon(1e-10));
  }
  CHECK(degenerateA > 0);
  CHECK(degenerateDisc > 0);
}

TEST_CASE("distanceAvg identity and constant-distance cases") {
  Rng rng(26);
  const Trajectory u = randomWalk(rng, 6);
  CHECK(distanceAvg(u, u) == doctest::Approx(0.0).epsilon(1e-12));

  const Trajectory stillA({Unit{0, 10, {0, 0}, {0, 0}}});
  const Trajectory stillB({Unit{5, 25, {3, 4}, {3, 4}}});
  CHECK(distanceAvg(stillA, stillB) == doctest::Approx(5.0));
}

TEST_CASE("distanceAvg matches quadrature oracle on random pairs") {
  Rng rng(27);
  for (int rep = 0; rep < 200; ++rep) {
    const Trajectory u = randomWalk(rng, 1 + static_cast<int>(rng.below(10)));
    const Trajectory v = randomWalk(rng, 1 + static_cast<int>(rng.below(10)));
    const double got = distanceAvg(u, v, 0, 100);
    const double expect = oracles::avgDistanceQuadrature(adjust(u, 0, 100),
                                                         adjust(v, 0, 100));
    CHECK(got == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("distanceAvg metric axioms") {
  Rng rng(28);
  std::vector<Trajectory> pool;
  for (int i = 0; i < 30; ++i)
    pool.push_back(randomWalk(rng, 1 + static_cast<int>(rng.below(8))));
  for (int rep = 0; rep < 2000; ++rep) {
    const Trajectory& a = pool[rng.below(pool.size())];
    const Trajectory& b = pool[rng.below(pool.size())];
    const Trajectory& c = pool[rng.below(pool.size())];
    const double dab = distanceAvg(a, b);
    const double dba = distanceAvg(b, a);
    CHECK(dab == dba);  // symmetry is exact
    const double dbc = distanceAvg(b, c);
    const double dac = distanceAvg(a, c);
    CHECK(dac <= (dab + dbc) * (1 + 1e-9) + 1e-12);
  }
}

TEST_CASE("discreteHausdorff examples") {
  const std::vector<Point2D> a{{0, 0}, {10, 0}};
  const std::vector<Point2D> b{{0, 1}};
  CHECK(discreteHausdorff(a, a) == 0.0);
  CHECK(discreteHausdorff({{{0.0, 0.0}}}, {{{3.0, 4.0}}}) == 5.0);
  CHECK(discreteHausdorff(a, b) == doctest::Approx(std::sqrt(101.0)));

  // brute-force max-min oracle on random sequences
  Rng rng(29);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<Point2D> s, t;
    for (int i = 0; i < 12; ++i)
      s.push_back({rng.uniform(0, 50), rng.uniform(0, 50)});
    for (int i = 0; i < 9; ++i)
      t.push_back({rng.uniform(0, 50), rng.uniform(0, 50)});
    double expect = 0.0;
    for (const auto& p : s) {
      double best = 1e300;
      for (const auto& q : t) best = std::min(best, euclidean2d(p, q));
      expect = std::max(expect, best);
    }
    for (const auto& q : t) {
      double best = 1e300;
      for (const auto& p : s) best = std::min(best, euclidean2d(p, q));
      expect = std::max(expect, best);
    }
    CHECK(discreteHausdorff(s, t) == expect);
  }
}

TEST_CASE("douglasPeucker collapses straight trajectories") {
  const Trajectory line({Unit{0, 1, {0, 0}, {1, 0}}, Unit{1, 2, {1, 0}, {2, 0}},
                         Unit{2, 3, {2, 0}, {3, 0}}});
  CHECK(douglasPeucker(line, 0.1).unitCount() == 1);
}

TEST_CASE("douglasPeucker keeps vertex deviations within r") {
  Rng rng(30);
  for (int rep = 0; rep < 200; ++rep) {
    const Trajectory w = adjust(randomWalk(rng, 3 + static_cast<int>(rng.below(25))), 0, 60);
    const double r = rng.uniform(0.5, 20.0);
    const Trajectory approx = douglasPeucker(w, r);
    CHECK(approx.unitCount() <= w.unitCount());
    // exhaustive per-vertex deviation check
    for (const Unit& u : w.units()) {
      CHECK(euclidean2d(approx.positionAt(u.start), u.p0) <= r * (1 + 1e-12));
      CHECK(euclidean2d(approx.positionAt(u.end), u.p1) <= r * (1 + 1e-12));
    }
    // vertices are a subsequence with original time stamps
    std::set<double> originalTimes;
    for (double b : breakpoints(w)) originalTimes.insert(b);
    for (double b : breakpoints(approx)) CHECK(originalTimes.count(b) == 1);
  }
}

TEST_CASE("sawtooth with amplitude 2r gets simplified within tolerance") {
  const double r = 1.0;
  std::vector<Unit> units;
  Point2D prev{0, 0};
  for (int i = 1; i <= 16; ++i) {
    const Point2D next{static_cast<double>(i), (i % 2 == 0) ? 0.0 : 2 * r};
    units.push_back(Unit{static_cast<double>(i - 1), static_cast<double>(i), prev, next});
    prev = next;
  }
  const Trajectory saw(std::move(units));
  const Trajectory approx = douglasPeucker(saw, r);
  for (const Unit& u : saw.units()) {
    CHECK(euclidean2d(approx.positionAt(u.start), u.p0) <= r * (1 + 1e-12));
    CHECK(euclidean2d(approx.positionAt(u.end), u.p1) <= r * (1 + 1e-12));
  }
}

TEST_CASE("cylinderApprox guarantees average deviation below r/2") {
  Rng rng(31);
  int rebuilt = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const Trajectory w = adjust(randomWalk(rng, 2 + static_cast<int>(rng.below(30))), 0, 60);
    const double r = rng.uniform(1.0, 15.0);
    const CylinderApprox c = cylinderApprox(w, r);
    CHECK(c.radius == r);
    CHECK(distanceAvgAligned(w, c.axis) < r / 2.0);
    if (!(c.axis == douglasPeucker(w, r))) {
      ++rebuilt;
      CHECK(c.axis == douglasPeucker(w, r / 2.0));
    }
  }
  INFO("rebuilt with r/2: ", rebuilt);
}

TEST_CASE("approximation sandwich via the r/2 rule") {
  Rng rng(32);
  for (int rep = 0; rep < 300; ++rep) {
    const Trajectory a = adjust(randomWalk(rng, 2 + static_cast<int>(rng.below(20))), 0, 60);
    const Trajectory b = adjust(randomWalk(rng, 2 + static_cast<int>(rng.below(20))), 0, 60);
    const double r = rng.uniform(1.0, 10.0);
    const CylinderApprox ca = cylinderApprox(a, r);
    const CylinderApprox cb = cylinderApprox(b, r);
    const double exact = distanceAvgAligned(a, b);
    const double approx = distanceAvgAligned(ca.axis, cb.axis);
    CHECK(std::abs(exact - approx) <= r);      // r/2 rule tightens 2r to r
    CHECK(std::abs(exact - approx) <= 2 * r);  // plain Douglas-Peucker bound
  }
}

TEST_CASE("aligned distance equals distanceAvg over the trajectory's own span") {
  Rng rng(36);
  for (int rep = 0; rep < 100; ++rep) {
    const Trajectory u = adjust(randomWalk(rng, 2 + static_cast<int>(rng.below(12))), 5, 80);
    const Trajectory a = douglasPeucker(u, rng.uniform(0.5, 10.0));
    const double aligned = distanceAvgAligned(u, a);
    const double viaAdjust = distanceAvg(u, a, u.startTime(), u.span());
    CHECK(aligned == doctest::Approx(viaAdjust).epsilon(1e-9));
  }
}

TEST_CASE("boundingCylinder radius covers the trajectory") {
  const Trajectory single({Unit{0, 1, {0, 0}, {5, 5}}});
  CHECK(boundingCylinder(single).r == 0.0);

  const Trajectory peak({Unit{0, 1, {0, 0}, {1, 1}}, Unit{1, 2, {1, 1}, {2, 0}}});
  const CylinderUnit c = boundingCylinder(peak);
  CHECK(c.p0 == Point2D{0, 0});
  CHECK(c.p1 == Point2D{2, 0});
  CHECK(c.r == doctest::Approx(1.0));

  Rng rng(33);
  for (int rep = 0; rep < 100; ++rep) {
    const Trajectory w = randomWalk(rng, 2 + static_cast<int>(rng.below(20)));
    const CylinderUnit bc = boundingCylinder(w);
    const LinearMotion axis = bc.motion();
    // dense samples inside every unit, endpoints included
    double maxDev = 0.0;
    for (const Unit& u : w.units()) {
      for (int s = 0; s <= 200; ++s) {
        const double t = u.start + (u.end - u.start) * s / 200.0;
        maxDev = std::max(maxDev, euclidean2d(axis.at(t), u.positionAt(t)));
      }
    }
    CHECK(bc.r == doctest::Approx(maxDev).epsilon(1e-9));
  }
}

TEST_CASE("cylinderDistances bounds") {
  const CylinderUnit v{0, 1, {0, 0}, {1, 0}, 1.0};
  const auto same = cylinderDistances(v, v);
  CHECK(same.d == 0.0);
  CHECK(same.lower == -2.0);
  CHECK(same.upper == 2.0);

  const CylinderUnit a{0, 1, {0, 0}, {1, 0}, 2.0};
  const CylinderUnit b{0, 1, {0, 10}, {1, 10}, 3.0};
  const auto parallel = cylinderDistances(a, b);
  CHECK(parallel.d == doctest::Approx(10.0));
  CHECK(parallel.lower == doctest::Approx(5.0));
  CHECK(parallel.upper == doctest::Approx(15.0));

  CHECK_THROWS_AS(cylinderDistances(a, CylinderUnit{0, 2, {0, 0}, {1, 0}, 1}),
                  std::invalid_argument);

  // enclosure: bounding cylinders of aligned trajectories sandwich the
  // exact distance
  Rng rng(34);
  for (int rep = 0; rep < 200; ++rep) {
    const Trajectory s = adjust(randomWalk(rng, 2 + static_cast<int>(rng.below(15))), 0, 60);
    const Trajectory t = adjust(randomWalk(rng, 2 + static_cast<int>(rng.below(15))), 0, 60);
    const auto bounds = cylinderDistances(boundingCylinder(s), boundingCylinder(t));
    const double exact = distanceAvgAligned(s, t);
    CHECK(bounds.lower <= exact + 1e-9);
    CHECK(exact <= bounds.upper + 1e-9);
  }
}

TEST_CASE("retimeConstantSpeed produces unit-speed trajectories") {
  const std::vector<Point2D> pts{{0, 0}, {3, 4}, {3, 4}, {6, 8}};
  const Trajectory t = retimeConstantSpeed(pts);
  REQUIRE(t.unitCount() == 2);  // duplicate collapsed
  CHECK(t.units()[0].end - t.units()[0].start == doctest::Approx(5.0));
  CHECK(t.units()[1].end - t.units()[1].start == doctest::Approx(5.0));
}

TEST_CASE("distanceAvg cost grows linearly, hausdorff quadratically") {
  Rng rng(35);
  const auto medianTime = [](const std::function<void()>& fn) {
    std::vector<double> runs;
    for (int rep = 0; rep < 5; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      fn();
      runs.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count());
    }
    std::sort(runs.begin(), runs.end());
    return runs[2];
  };

  std::vector<double> avgTimes, hausTimes;
  for (int m : {100, 200, 400}) {
    const Trajectory a = randomWalk(rng, m);
    const Trajectory b = randomWalk(rng, m);
    const auto va = vertexPath(a);
    const auto vb = vertexPath(b);
    volatile double sink = 0;
    distanceAvg(a, b);  // warmup
    avgTimes.push_back(medianTime([&] {
      for (int i = 0; i < 50; ++i) sink = sink + distanceAvg(a, b);
    }));
    hausTimes.push_back(medianTime([&] {
      for (int i = 0; i < 50; ++i) sink = sink + discreteHausdorff(va, vb);
    }));
  }
  // doubling the unit count should less than triple DistanceAvg wall time
  CHECK(avgTimes[1] < 3.0 * avgTimes[0]);
  CHECK(avgTimes[2] < 3.0 * avgTimes[1]);
  // the quadratic baseline grows much faster over the same 4x sweep
  CHECK(hausTimes[2] / hausTimes[0] > avgTimes[2] / avgTimes[0]);
}

}  // TEST_SUITE
