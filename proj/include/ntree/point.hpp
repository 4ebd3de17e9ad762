#pragma once

#include <cmath>

namespace ntree {

struct Point2D {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2D&, const Point2D&) = default;
};

inline Point2D operator+(Point2D a, Point2D b) { return {a.x + b.x, a.y + b.y}; }
inline Point2D operator-(Point2D a, Point2D b) { return {a.x - b.x, a.y - b.y}; }
inline Point2D operator*(Point2D a, double s) { return {a.x * s, a.y * s}; }

inline double dot(Point2D a, Point2D b) { return a.x * b.x + a.y * b.y; }
inline double norm(Point2D a) { return std::sqrt(a.x * a.x + a.y * a.y); }

inline double euclidean2d(const Point2D& a, const Point2D& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace ntree
