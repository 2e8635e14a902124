#pragma once

#include "llloc/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace llloc {

/// Conventional build-once octree (index permutation + per-octant ranges).
/// Used as the rebuild-per-update baseline in structure benchmarks; any change
/// to the point set requires a full rebuild().
class StaticOctree {
 public:
  explicit StaticOctree(std::size_t bucket_size = 32, double min_extent = 0.1)
      : bucket_size_(bucket_size), min_extent_(min_extent) {}

  void build(std::span<const Point3> points);

  template <typename Fn>
  void for_each_in_radius(const Point3& q, double r, Fn&& fn) const {
    if (points_.empty() || !(r > 0.0)) return;
    search(0, q, r * r, fn);
  }

  std::size_t size() const { return points_.size(); }

 private:
  struct Octant {
    Point3 lo;
    Point3 hi;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t first_child = -1;  // children stored contiguously
    std::uint8_t child_count = 0;
  };

  void build_node(std::int32_t node, std::uint32_t begin, std::uint32_t end,
                  const Point3& center, double half);

  template <typename Fn>
  void search(std::int32_t node, const Point3& q, double r2, Fn& fn) const {
    const Octant& o = nodes_[node];
    double near2 = 0.0;
    double far2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double dlo = q[i] - o.lo[i];
      const double dhi = o.hi[i] - q[i];
      double near = 0.0;
      if (dlo < 0.0) {
        near = -dlo;
      } else if (dhi < 0.0) {
        near = -dhi;
      }
      near2 += near * near;
      const double far = std::max(std::abs(dlo), std::abs(dhi));
      far2 += far * far;
    }
    if (near2 >= r2) return;
    if (far2 < r2) {
      for (std::uint32_t i = o.begin; i < o.end; ++i) fn(points_[i]);
      return;
    }
    if (o.child_count == 0) {
      for (std::uint32_t i = o.begin; i < o.end; ++i) {
        if (squared_distance(points_[i], q) < r2) fn(points_[i]);
      }
      return;
    }
    for (std::int32_t c = o.first_child; c < o.first_child + o.child_count; ++c) {
      search(c, q, r2, fn);
    }
  }

  std::size_t bucket_size_;
  double min_extent_;
  std::vector<Point3> points_;  // reordered so every octant owns a contiguous range
  std::vector<Octant> nodes_;
};

}  // namespace llloc
