#include "llloc/ioctree.hpp"

#include "llloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace llloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMinClass = 3;  // smallest leaf chunk holds 8 points

}  // namespace

IOctree::IOctree(const Box& bounds, OctreeConfig config) : bounds_(bounds), config_(config) {
  if (!config_.valid()) {
    throw Error(ErrorCode::InvalidBounds, "octree config needs min_extent > 0 and bucket_size >= 1");
  }
  const Vec3 ext = bounds_.extent();
  if (!bounds_.min.allFinite() || !bounds_.max.allFinite() || !(ext.minCoeff() > 0.0)) {
    throw Error(ErrorCode::InvalidBounds, "octree bounds must have positive extent on every axis");
  }
  std::int32_t widest = 1;
  for (int i = 0; i < 3; ++i) {
    const double n = std::ceil(ext[i] / config_.min_extent);
    if (n > double(1 << 20)) {
      throw Error(ErrorCode::InvalidBounds, "octree bounds too large for min_extent");
    }
    cells_[i] = std::max<std::int32_t>(1, static_cast<std::int32_t>(n));
    widest = std::max(widest, cells_[i]);
  }
  std::int32_t width = 1;
  while (width < widest) width <<= 1;
  new_octant({0, 0, 0}, width, 1);
}

std::uint64_t IOctree::pack(const std::array<std::int32_t, 3>& c) {
  return (std::uint64_t(std::uint32_t(c[0])) << 42) | (std::uint64_t(std::uint32_t(c[1])) << 21) |
         std::uint64_t(std::uint32_t(c[2]));
}

std::array<std::int32_t, 3> IOctree::unpack(std::uint64_t key) {
  return {std::int32_t(key >> 42), std::int32_t((key >> 21) & 0x1FFFFF), std::int32_t(key & 0x1FFFFF)};
}

std::array<std::int32_t, 3> IOctree::cell_of(const Point3& p) const {
  std::array<std::int32_t, 3> c{};
  for (int i = 0; i < 3; ++i) {
    const double f = std::floor((p[i] - bounds_.min[i]) / config_.min_extent);
    const double hi = double(cells_[i] - 1);
    c[i] = static_cast<std::int32_t>(std::clamp(f, 0.0, hi));
  }
  return c;
}

std::uint32_t IOctree::alloc_chunk(int cls) {
  auto& free = free_chunks_[cls];
  if (!free.empty()) {
    const std::uint32_t b = free.back();
    free.pop_back();
    return b;
  }
  const std::size_t b = pool_points_.size();
  const std::size_t n = b + (std::size_t(1) << cls);
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvalidBounds, "octree point pool exhausted");
  }
  pool_points_.resize(n);
  pool_cells_.resize(n);
  pool_tags_.resize(n);
  return static_cast<std::uint32_t>(b);
}

std::int32_t IOctree::new_octant(const std::array<std::int32_t, 3>& origin, std::int32_t width,
                                 std::size_t capacity) {
  Octant o;
  o.lo = Point3::Constant(kInf);
  o.hi = Point3::Constant(-kInf);
  if (capacity > 0) {
    o.cls = kMinClass;
    while ((std::size_t(1) << o.cls) < capacity) ++o.cls;
    o.begin = alloc_chunk(o.cls);
  }
  nodes_.push_back(o);
  shapes_.push_back(Cells{origin, width});
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

std::int32_t IOctree::add_children(std::int32_t node) {
  const std::int32_t half = shapes_[node].width / 2;
  const std::int32_t first = static_cast<std::int32_t>(nodes_.size());
  for (int slot = 0; slot < 8; ++slot) {
    std::array<std::int32_t, 3> origin = shapes_[node].origin;
    for (int i = 0; i < 3; ++i) {
      if (slot & (1 << i)) origin[i] += half;
    }
    new_octant(origin, half, 0);
  }
  nodes_[node].first_child = first;
  return first;
}

void IOctree::grow_leaf(Octant& o) {
  if (o.begin == kNoChunk) {
    o.cls = kMinClass;
    o.begin = alloc_chunk(o.cls);
    return;
  }
  const std::uint32_t from = o.begin;
  const int old_cls = o.cls;
  o.begin = alloc_chunk(old_cls + 1);
  o.cls = static_cast<std::uint8_t>(old_cls + 1);
  std::copy_n(pool_points_.begin() + from, o.size, pool_points_.begin() + o.begin);
  std::copy_n(pool_cells_.begin() + from, o.size, pool_cells_.begin() + o.begin);
  std::copy_n(pool_tags_.begin() + from, o.size, pool_tags_.begin() + o.begin);
  free_chunks_[old_cls].push_back(from);
}

int IOctree::child_slot(std::int32_t node, const std::array<std::int32_t, 3>& c) const {
  const Cells& sh = shapes_[node];
  const std::int32_t half = sh.width / 2;
  int slot = 0;
  for (int i = 0; i < 3; ++i) {
    if (c[i] - sh.origin[i] >= half) slot |= (1 << i);
  }
  return slot;
}

void IOctree::split(std::int32_t node) {
  // nodes_ and the pool may reallocate below; index, never hold references.
  const std::uint32_t begin = nodes_[node].begin;
  const std::uint32_t n = nodes_[node].size;
  std::array<std::uint32_t, 8> per_slot{};
  std::vector<int> slots(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    slots[i] = child_slot(node, unpack(pool_cells_[begin + i]));
    ++per_slot[slots[i]];
  }
  const std::int32_t first = add_children(node);
  for (int slot = 0; slot < 8; ++slot) {
    if (per_slot[slot] == 0) continue;
    Octant& ch = nodes_[first + slot];
    ch.cls = kMinClass;
    while ((std::uint32_t(1) << ch.cls) < per_slot[slot]) ++ch.cls;
    ch.begin = alloc_chunk(ch.cls);
    nodes_[node].occupied |= std::uint8_t(1 << slot);
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    Octant& ch = nodes_[first + slots[i]];
    const Point3& p = pool_points_[begin + i];
    ch.lo = ch.lo.cwiseMin(p);
    ch.hi = ch.hi.cwiseMax(p);
    const std::uint32_t at = ch.begin + ch.size++;
    pool_points_[at] = p;
    pool_cells_[at] = pool_cells_[begin + i];
    pool_tags_[at] = pool_tags_[begin + i];
  }
  Octant& o = nodes_[node];
  free_chunks_[o.cls].push_back(o.begin);
  o.begin = kNoChunk;
  o.size = 0;
  o.leaf = false;

  for (int slot = 0; slot < 8; ++slot) {
    const std::int32_t child = first + slot;
    if (nodes_[child].size > config_.bucket_size && shapes_[child].width > 2) split(child);
  }
}

bool IOctree::insert_one(const Point3& p, PointTag tag) {
  if (!bounds_.contains(p)) {
    throw Error(ErrorCode::OutOfBounds, "point outside octree bounds");
  }
  const auto c = cell_of(p);
  const std::uint64_t key = pack(c);

  // Locate the leaf owning this cell; grid alignment makes it unique.
  std::int32_t node = 0;
  while (!nodes_[node].leaf) {
    const int slot = child_slot(node, c);
    if (!(nodes_[node].occupied & (1 << slot))) break;
    node = nodes_[node].first_child + slot;
  }
  if (nodes_[node].leaf) {
    const Octant& o = nodes_[node];
    for (std::uint32_t i = o.begin; i < o.begin + o.size; ++i) {
      if (pool_cells_[i] == key) return false;
    }
  }

  // Second pass: widen bounds along the path down to the leaf.
  node = 0;
  for (;;) {
    Octant& o = nodes_[node];
    o.lo = o.lo.cwiseMin(p);
    o.hi = o.hi.cwiseMax(p);
    if (o.leaf) break;
    const int slot = child_slot(node, c);
    o.occupied |= std::uint8_t(1 << slot);
    node = o.first_child + slot;
  }

  Octant& leaf = nodes_[node];
  if (leaf.begin == kNoChunk || leaf.size == (std::uint32_t(1) << leaf.cls)) grow_leaf(leaf);
  const std::uint32_t at = leaf.begin + leaf.size++;
  pool_points_[at] = p;
  pool_cells_[at] = key;
  pool_tags_[at] = tag;
  ++size_;
  if (leaf.size > config_.bucket_size && shapes_[node].width > 2) split(node);
  return true;
}

std::size_t IOctree::insert(std::span<const Point3> points, PointTag tag) {
  for (const auto& p : points) {
    if (!bounds_.contains(p)) {
      throw Error(ErrorCode::OutOfBounds, "point outside octree bounds");
    }
  }
  std::size_t added = 0;
  for (const auto& p : points) {
    if (insert_one(p, tag)) ++added;
  }
  return added;
}

std::vector<Point3> IOctree::radius_search(const Point3& q, double r) const {
  std::vector<Point3> out;
  for_each_in_radius(q, r, [&](const TaggedPoint& tp) { out.push_back(tp.point); });
  return out;
}

std::vector<TaggedPoint> IOctree::points() const {
  std::vector<TaggedPoint> out;
  out.reserve(size_);
  if (size_ > 0) {
    auto collect = [&](const TaggedPoint& tp) { out.push_back(tp); };
    report_all(0, collect);
  }
  return out;
}

}  // namespace llloc
