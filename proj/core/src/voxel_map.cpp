#include "llloc/voxel_map.hpp"

#include "llloc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace llloc {

VoxelIndex voxel_index(const Point3& p, double s) {
  return VoxelIndex{static_cast<std::int32_t>(std::floor(p.x() / s)),
                    static_cast<std::int32_t>(std::floor(p.y() / s)),
                    static_cast<std::int32_t>(std::floor(p.z() / s))};
}

std::uint64_t voxel_hash(const VoxelIndex& idx, const HashPrimes& primes) {
  const auto wrap = [](std::int32_t v) {
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(v));
  };
  return (wrap(idx.x) * primes.x) ^ (wrap(idx.y) * primes.y) ^ (wrap(idx.z) * primes.z);
}

TierFilter TierFilter::prior_only() {
  TierFilter f;
  f.prior_blocks.prior = true;
  return f;
}

TierFilter TierFilter::static_only() {
  TierFilter f;
  f.prior_blocks.static_ = true;
  f.other_blocks.static_ = true;
  return f;
}

TierFilter TierFilter::static_and_temporary() {
  TierFilter f = static_only();
  f.prior_blocks.temporary = true;
  f.other_blocks.temporary = true;
  return f;
}

// ---------------------------------------------------------------------------

VoxelBlock::VoxelBlock(const VoxelIndex& index, const Box& bounds, const OctreeConfig& octree)
    : index_(index), tree_(bounds, octree) {}

void VoxelBlock::add_prior(std::span<const Point3> points) {
  if (points.empty()) return;
  const bool has_promoted = static_.size() > prior_.size();
  prior_.insert(prior_.end(), points.begin(), points.end());
  // keep M^s laid out as [M^p | promoted]
  static_.insert(static_.begin() + static_cast<std::ptrdiff_t>(prior_.size() - points.size()),
                 points.begin(), points.end());
  is_prior_ = true;
  if (has_promoted) {
    rebuild_tree();
  } else {
    tree_.insert(points, kPriorTag);
  }
}

PointCloud VoxelBlock::take_temporary() {
  PointCloud out;
  out.swap(temp_);
  return out;
}

void VoxelBlock::append_static(std::span<const Point3> points) {
  static_.insert(static_.end(), points.begin(), points.end());
  tree_.insert(points, kPromotedTag);
}

void VoxelBlock::demote(PointCloud points) {
  prior_.clear();
  prior_.shrink_to_fit();
  is_prior_ = false;
  static_ = std::move(points);
  rebuild_tree();
}

void VoxelBlock::rebuild_tree() {
  tree_ = IOctree(tree_.bounds(), tree_.config());
  const std::span<const Point3> all(static_);
  tree_.insert(all.first(prior_.size()), kPriorTag);
  tree_.insert(all.subspan(prior_.size()), kPromotedTag);
}

void VoxelBlock::search(const Point3& q, double r, const TierAdmission& admit,
                        std::vector<Neighbor>& out) const {
  if (admit.static_) {
    tree_.for_each_in_radius(q, r, [&](const TaggedPoint& tp) {
      out.push_back(Neighbor{tp.point, admit.static_weight, Tier::Static});
    });
  } else if (admit.prior) {
    tree_.for_each_in_radius(q, r, [&](const TaggedPoint& tp) {
      if (tp.tag == kPriorTag) out.push_back(Neighbor{tp.point, admit.prior_weight, Tier::Prior});
    });
  }
  if (admit.temporary) {
    const double r2 = r * r;
    for (const auto& p : temp_) {
      if (squared_distance(p, q) < r2) {
        out.push_back(Neighbor{p, admit.temporary_weight, Tier::Temporary});
      }
    }
  }
}

// ---------------------------------------------------------------------------

VoxelMap::VoxelMap(MapConfig config)
    : config_(config), blocks_(64, VoxelIndexHasher{config.primes}) {
  if (!(config_.resolution > 0.0)) {
    throw Error(ErrorCode::InvalidConfig, "map resolution must be positive");
  }
  if (config_.promote_threshold < 1) {
    throw Error(ErrorCode::InvalidConfig, "promote_threshold must be >= 1");
  }
}

Box VoxelMap::block_bounds(const VoxelIndex& idx) const {
  const double s = config_.resolution;
  const double pad = 1e-6 * s;
  Box b;
  b.min = Point3(idx.x * s, idx.y * s, idx.z * s) - Point3::Constant(pad);
  b.max = Point3((idx.x + 1.0) * s, (idx.y + 1.0) * s, (idx.z + 1.0) * s) + Point3::Constant(pad);
  return b;
}

const VoxelBlock* VoxelMap::find(const VoxelIndex& idx) const {
  const auto it = blocks_.find(idx);
  return it == blocks_.end() ? nullptr : &it->second;
}

VoxelBlock* VoxelMap::find(const VoxelIndex& idx) {
  const auto it = blocks_.find(idx);
  return it == blocks_.end() ? nullptr : &it->second;
}

VoxelBlock& VoxelMap::get_or_create(const VoxelIndex& idx) {
  auto it = blocks_.find(idx);
  if (it == blocks_.end()) {
    it = blocks_.emplace(idx, VoxelBlock(idx, block_bounds(idx), config_.octree)).first;
  }
  return it->second;
}

bool VoxelMap::is_prior_block(const VoxelIndex& idx) const {
  const VoxelBlock* b = find(idx);
  return b != nullptr && b->is_prior_block();
}

std::size_t VoxelMap::prior_block_count() const {
  std::size_t n = 0;
  for (const auto& [idx, block] : blocks_) n += block.is_prior_block() ? 1 : 0;
  return n;
}

std::vector<VoxelIndex> VoxelMap::sorted_indices() const {
  std::vector<VoxelIndex> out;
  out.reserve(blocks_.size());
  for (const auto& [idx, block] : blocks_) out.push_back(idx);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t VoxelMap::load_prior_map(const Scan& cloud) {
  if (cloud.points.empty()) throw Error(ErrorCode::EmptyCloud, "prior map has no points");
  if (cloud.frame != Frame::Map) {
    throw Error(ErrorCode::InvalidConfig, "prior map must be expressed in the map frame");
  }
  // Group by block first so every tree sees one batched insert, in input order.
  std::unordered_map<VoxelIndex, PointCloud, VoxelIndexHasher> groups(64, VoxelIndexHasher{config_.primes});
  std::vector<VoxelIndex> order;
  for (const auto& p : cloud.points) {
    if (!p.allFinite()) throw Error(ErrorCode::OutOfRange, "prior map contains a non-finite point");
    const VoxelIndex idx = index_of(p);
    auto [it, inserted] = groups.try_emplace(idx);
    if (inserted) order.push_back(idx);
    it->second.push_back(p);
  }
  std::size_t created = 0;
  for (const auto& idx : order) {
    if (find(idx) == nullptr) ++created;
    get_or_create(idx).add_prior(groups[idx]);
  }
  return created;
}

std::vector<VoxelIndex> VoxelMap::insert_temporary(std::span<const Point3> points) {
  std::vector<VoxelIndex> touched;
  std::unordered_map<VoxelIndex, bool, VoxelIndexHasher> seen(16, VoxelIndexHasher{config_.primes});
  for (const auto& p : points) {
    const VoxelIndex idx = index_of(p);
    if (seen.try_emplace(idx, true).second) touched.push_back(idx);
    get_or_create(idx).add_temporary(p);
  }
  return touched;
}

void VoxelMap::radius_search(const Point3& q, double r, const TierFilter& filter,
                             std::vector<Neighbor>& out) const {
  if (!(r > 0.0) || blocks_.empty()) return;
  const VoxelIndex lo = index_of(q - Point3::Constant(r));
  const VoxelIndex hi = index_of(q + Point3::Constant(r));
  for (std::int32_t x = lo.x; x <= hi.x; ++x) {
    for (std::int32_t y = lo.y; y <= hi.y; ++y) {
      for (std::int32_t z = lo.z; z <= hi.z; ++z) {
        const VoxelBlock* b = find(VoxelIndex{x, y, z});
        if (b == nullptr) continue;
        const TierAdmission& admit = filter.for_block(b->is_prior_block());
        if (admit.any()) b->search(q, r, admit, out);
      }
    }
  }
}

std::vector<std::vector<Neighbor>> VoxelMap::radius_search_scan(std::span<const Point3> queries,
                                                                double r,
                                                                const TierFilter& filter) const {
  std::vector<std::vector<Neighbor>> out(queries.size());
  const auto n = static_cast<std::ptrdiff_t>(queries.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    radius_search(queries[i], r, filter, out[i]);
  }
  return out;
}

}  // namespace llloc
