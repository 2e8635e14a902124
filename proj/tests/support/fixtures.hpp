#pragma once

// Shared test geometry.

#include "llloc/types.hpp"

#include <random>
#include <vector>

namespace fixture {

using llloc::Point3;
using llloc::PointCloud;

/// Axis-aligned room with its six faces sampled on a regular grid. Samples
/// closer than `margin` to an edge of their face are left out.
struct Room {
  Point3 lo{1.0, 1.0, 0.5};
  Point3 hi{11.0, 9.0, 4.5};

  PointCloud grid(double step, double margin = 0.0) const {
    PointCloud out;
    for (int axis = 0; axis < 3; ++axis) {
      const int a = (axis + 1) % 3, b = (axis + 2) % 3;
      for (double side : {lo[axis], hi[axis]}) {
        for (double u = lo[a] + step / 2; u < hi[a]; u += step) {
          for (double v = lo[b] + step / 2; v < hi[b]; v += step) {
            if (u - lo[a] < margin || hi[a] - u < margin || v - lo[b] < margin || hi[b] - v < margin)
              continue;
            Point3 p;
            p[axis] = side;
            p[a] = u;
            p[b] = v;
            out.push_back(p);
          }
        }
      }
    }
    return out;
  }

  /// Uniform random samples on the faces, at least `margin` from any edge.
  PointCloud random(std::mt19937_64& rng, std::size_t per_face, double margin) const {
    PointCloud out;
    for (int axis = 0; axis < 3; ++axis) {
      const int a = (axis + 1) % 3, b = (axis + 2) % 3;
      std::uniform_real_distribution<double> ua(lo[a] + margin, hi[a] - margin);
      std::uniform_real_distribution<double> ub(lo[b] + margin, hi[b] - margin);
      for (double side : {lo[axis], hi[axis]}) {
        for (std::size_t i = 0; i < per_face; ++i) {
          Point3 p;
          p[axis] = side;
          p[a] = ua(rng);
          p[b] = ub(rng);
          out.push_back(p);
        }
      }
    }
    return out;
  }

  Point3 center() const { return 0.5 * (lo + hi); }
};

}  // namespace fixture
