#pragma once

#include "llloc/types.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace llloc {

/// Axis-aligned box, half-open: min <= p < max on every axis.
struct Box {
  Point3 min = Point3::Zero();
  Point3 max = Point3::Zero();

  bool contains(const Point3& p) const {
    return p.x() >= min.x() && p.x() < max.x() && p.y() >= min.y() && p.y() < max.y() &&
           p.z() >= min.z() && p.z() < max.z();
  }
  Vec3 extent() const { return max - min; }
};

struct OctreeConfig {
  double min_extent = 0.1;       // m, downsampling cell and smallest splittable octant / 2
  std::size_t bucket_size = 32;  // points per leaf before a split is attempted

  bool valid() const { return min_extent > 0.0 && bucket_size >= 1; }
};

/// Caller-defined provenance byte stored with every retained point.
using PointTag = std::uint8_t;

struct TaggedPoint {
  Point3 point;
  PointTag tag = 0;
};

/// Incremental octree over a fixed box.
///
/// Octants are aligned with the min_extent downsampling grid, so each grid cell
/// maps to exactly one leaf and the first point to land in a cell is the only
/// one kept. Each octant also tracks the tight bounding box of what it holds;
/// radius queries prune octants whose box misses the ball and report octants
/// whose box lies strictly inside it without per-point distance tests.
/// There is no delete and no root growth.
class IOctree {
 public:
  /// Throws Error{InvalidBounds} on a degenerate box or invalid config.
  explicit IOctree(const Box& bounds, OctreeConfig config = {});

  /// Inserts with first-wins downsampling and returns how many points were
  /// retained. Throws Error{OutOfBounds} before touching the tree if any point
  /// lies outside bounds().
  std::size_t insert(std::span<const Point3> points, PointTag tag = 0);
  bool insert_one(const Point3& p, PointTag tag = 0);

  /// Calls fn(const TaggedPoint&) for every retained point with |p - q| < r.
  template <typename Fn>
  void for_each_in_radius(const Point3& q, double r, Fn&& fn) const;

  std::vector<Point3> radius_search(const Point3& q, double r) const;

  /// Every retained point, in leaf order.
  std::vector<TaggedPoint> points() const;

  /// Grid cell of p along each axis (clamped into the box).
  std::array<std::int32_t, 3> cell_of(const Point3& p) const;

  const Box& bounds() const { return bounds_; }
  const OctreeConfig& config() const { return config_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  std::size_t octant_count() const { return nodes_.size(); }

 private:
  // Leaf points live in one pool; each leaf owns a chunk of 2^cls slots.
  struct Octant {
    Point3 lo;  // tight bounds of contained points
    Point3 hi;
    std::int32_t first_child = -1;  // the eight children are allocated together
    std::uint32_t begin = kNoChunk;  // leaf chunk
    std::uint32_t size = 0;          // leaf points
    std::uint8_t cls = 0;
    std::uint8_t occupied = 0;  // bit k set when child k holds points
    bool leaf = true;
  };
  static constexpr std::uint32_t kNoChunk = 0xFFFFFFFFu;
  // Only needed while inserting, kept apart from the octants that search walks.
  struct Cells {
    std::array<std::int32_t, 3> origin;  // first cell covered on each axis
    std::int32_t width;                  // cells per side (power of two)
  };

  static std::uint64_t pack(const std::array<std::int32_t, 3>& c);
  static std::array<std::int32_t, 3> unpack(std::uint64_t key);
  std::int32_t new_octant(const std::array<std::int32_t, 3>& origin, std::int32_t width,
                          std::size_t capacity);
  std::int32_t add_children(std::int32_t node);
  std::uint32_t alloc_chunk(int cls);
  void grow_leaf(Octant& o);
  int child_slot(std::int32_t node, const std::array<std::int32_t, 3>& c) const;
  void split(std::int32_t node);

  template <typename Fn>
  void report_all(std::int32_t node, Fn& fn) const;
  template <typename Fn>
  void search(std::int32_t node, const Point3& q, double r2, Fn& fn) const;

  Box bounds_;
  OctreeConfig config_;
  std::array<std::int32_t, 3> cells_{};
  std::vector<Octant> nodes_;
  std::vector<Cells> shapes_;
  std::vector<Point3> pool_points_;
  std::vector<std::uint64_t> pool_cells_;
  std::vector<PointTag> pool_tags_;
  std::array<std::vector<std::uint32_t>, 32> free_chunks_;
  std::size_t size_ = 0;
};

template <typename Fn>
void IOctree::for_each_in_radius(const Point3& q, double r, Fn&& fn) const {
  if (size_ == 0 || !(r > 0.0)) return;
  search(0, q, r * r, fn);
}

template <typename Fn>
void IOctree::report_all(std::int32_t node, Fn& fn) const {
  const Octant& o = nodes_[node];
  if (o.leaf) {
    for (std::uint32_t i = o.begin; i < o.begin + o.size; ++i) fn(TaggedPoint{pool_points_[i], pool_tags_[i]});
    return;
  }
  for (int k = 0; k < 8; ++k) {
    if (o.occupied & (1 << k)) report_all(o.first_child + k, fn);
  }
}

template <typename Fn>
void IOctree::search(std::int32_t node, const Point3& q, double r2, Fn& fn) const {
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
    report_all(node, fn);
    return;
  }
  if (o.leaf) {
    for (std::uint32_t i = o.begin; i < o.begin + o.size; ++i) {
      if (squared_distance(pool_points_[i], q) < r2) fn(TaggedPoint{pool_points_[i], pool_tags_[i]});
    }
    return;
  }
  for (int k = 0; k < 8; ++k) {
    if (o.occupied & (1 << k)) search(o.first_child + k, q, r2, fn);
  }
}

}  // namespace llloc
