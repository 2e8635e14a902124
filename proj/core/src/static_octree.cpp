#include "llloc/static_octree.hpp"

#include <algorithm>
#include <array>

namespace llloc {

void StaticOctree::build(std::span<const Point3> points) {
  points_.assign(points.begin(), points.end());
  nodes_.clear();
  if (points_.empty()) return;
  Point3 lo = points_.front();
  Point3 hi = points_.front();
  for (const auto& p : points_) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Point3 center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo).maxCoeff();
  nodes_.reserve(2 * points_.size() / std::max<std::size_t>(1, bucket_size_) + 8);
  nodes_.emplace_back();
  build_node(0, 0, static_cast<std::uint32_t>(points_.size()), center, half);
}

void StaticOctree::build_node(std::int32_t self, std::uint32_t begin, std::uint32_t end,
                              const Point3& center, double half) {
  Point3 lo = points_[begin];
  Point3 hi = points_[begin];
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[i]);
    hi = hi.cwiseMax(points_[i]);
  }
  nodes_[self].lo = lo;
  nodes_[self].hi = hi;
  nodes_[self].begin = begin;
  nodes_[self].end = end;

  if (end - begin <= bucket_size_ || half <= min_extent_) return;

  // Counting sort of the range into the eight octants.
  auto octant_of = [&](const Point3& p) {
    return (p.x() >= center.x() ? 1 : 0) | (p.y() >= center.y() ? 2 : 0) |
           (p.z() >= center.z() ? 4 : 0);
  };
  std::array<std::uint32_t, 9> offsets{};
  for (std::uint32_t i = begin; i < end; ++i) ++offsets[octant_of(points_[i]) + 1];
  for (int k = 0; k < 8; ++k) offsets[k + 1] += offsets[k];
  std::vector<Point3> scratch(end - begin);
  std::array<std::uint32_t, 8> cursor{};
  for (int k = 0; k < 8; ++k) cursor[k] = offsets[k];
  for (std::uint32_t i = begin; i < end; ++i) {
    scratch[cursor[octant_of(points_[i])]++] = points_[i];
  }
  std::copy(scratch.begin(), scratch.end(), points_.begin() + begin);

  const std::int32_t first = static_cast<std::int32_t>(nodes_.size());
  std::uint8_t count = 0;
  std::array<int, 8> occupied{};
  for (int k = 0; k < 8; ++k) {
    if (offsets[k + 1] > offsets[k]) occupied[count++] = k;
  }
  nodes_.resize(nodes_.size() + count);
  nodes_[self].first_child = first;
  nodes_[self].child_count = count;

  const double quarter = 0.5 * half;
  for (std::uint8_t j = 0; j < count; ++j) {
    const int k = occupied[j];
    const Point3 c(center.x() + ((k & 1) ? quarter : -quarter),
                   center.y() + ((k & 2) ? quarter : -quarter),
                   center.z() + ((k & 4) ? quarter : -quarter));
    build_node(first + j, begin + offsets[k], begin + offsets[k + 1], c, quarter);
  }
}

}  // namespace llloc
