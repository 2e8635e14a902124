#pragma once

#include "llloc/ioctree.hpp"
#include "llloc/types.hpp"

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace llloc {

struct VoxelIndex {
  std::int32_t x = 0;
  std::int32_t y = 0;
  std::int32_t z = 0;

  friend auto operator<=>(const VoxelIndex&, const VoxelIndex&) = default;
};

struct HashPrimes {
  std::uint64_t x = 73856093;
  std::uint64_t y = 19349669;
  std::uint64_t z = 83492791;
};

/// floor(p / s) per axis (toward -inf).
VoxelIndex voxel_index(const Point3& p, double s);

/// (bx*px) ^ (by*py) ^ (bz*pz) in wrapping 64-bit unsigned arithmetic; each
/// index is sign-extended before the multiply.
std::uint64_t voxel_hash(const VoxelIndex& idx, const HashPrimes& primes = {});

struct VoxelIndexHasher {
  HashPrimes primes;
  std::size_t operator()(const VoxelIndex& idx) const {
    return static_cast<std::size_t>(voxel_hash(idx, primes));
  }
};

struct MapConfig {
  double resolution = 5.0;  // block side s, m
  HashPrimes primes;
  OctreeConfig octree;
  std::size_t promote_threshold = 100;  // |M^t| per block that triggers promotion
  double match_radius = 1.0;            // m
  std::size_t match_min_neighbors = 5;
  std::size_t match_max_neighbors = 8;  // nearest neighbors used for the local fit
  double match_max_distance = 0.3;  // m
};

enum class Tier : std::uint8_t { Prior, Static, Temporary };

/// Which tiers of one block class are visible to a search, and their weights.
struct TierAdmission {
  bool prior = false;      // retained tree points that came from M^p
  bool static_ = false;    // every retained tree point (superset of prior)
  bool temporary = false;  // raw M^t list, scanned linearly
  double prior_weight = 1.0;
  double static_weight = 1.0;
  double temporary_weight = 1.0;

  bool any() const { return prior || static_ || temporary; }
};

/// Tier admission split by prior-block membership.
struct TierFilter {
  TierAdmission prior_blocks;
  TierAdmission other_blocks;

  const TierAdmission& for_block(bool is_prior_block) const {
    return is_prior_block ? prior_blocks : other_blocks;
  }

  static TierFilter prior_only();
  static TierFilter static_only();
  static TierFilter static_and_temporary();
};

struct Neighbor {
  Point3 point;
  double weight = 1.0;
  Tier tier = Tier::Static;
};

/// Tree tags: points from M^p are tagged kPriorTag, promoted points kPromotedTag.
inline constexpr PointTag kPriorTag = 0;
inline constexpr PointTag kPromotedTag = 1;

class VoxelBlock {
 public:
  VoxelBlock(const VoxelIndex& index, const Box& bounds, const OctreeConfig& octree);

  const VoxelIndex& index() const { return index_; }
  const PointCloud& prior_points() const { return prior_; }
  const PointCloud& temp_points() const { return temp_; }
  /// M^s, stored as the M^p prefix followed by promoted points.
  const PointCloud& static_points() const { return static_; }
  const IOctree& tree() const { return tree_; }
  bool is_prior_block() const { return is_prior_; }

  void add_prior(std::span<const Point3> points);
  void add_temporary(const Point3& p) { temp_.push_back(p); }
  PointCloud take_temporary();
  /// M^s += points with incremental tree insertion.
  void append_static(std::span<const Point3> points);
  /// Drops M^p and prior status, sets M^s = points and rebuilds the tree.
  void demote(PointCloud points);
  /// Rebuilds the tree from M^s from scratch.
  void rebuild_tree();

  void search(const Point3& q, double r, const TierAdmission& admit,
              std::vector<Neighbor>& out) const;

 private:
  VoxelIndex index_;
  PointCloud prior_;
  PointCloud temp_;
  PointCloud static_;
  IOctree tree_;
  bool is_prior_ = false;
};

/// Spatially hashed map of voxel blocks.
///
/// Mutations need exclusive access; const searches may run concurrently.
class VoxelMap {
 public:
  explicit VoxelMap(MapConfig config = {});

  const MapConfig& config() const { return config_; }
  double resolution() const { return config_.resolution; }

  VoxelIndex index_of(const Point3& p) const { return voxel_index(p, config_.resolution); }
  /// Block extent padded by a small margin so rounding in floor(p/s) never
  /// routes a point outside its own tree.
  Box block_bounds(const VoxelIndex& idx) const;

  /// Routes every point into M^p and M^s of its block, marking those blocks as
  /// prior. Returns the number of blocks created. Throws EmptyCloud.
  std::size_t load_prior_map(const Scan& cloud);

  /// Appends points to M^t of their blocks, creating non-prior blocks as needed.
  /// Returns the indices of touched blocks in first-touch order.
  std::vector<VoxelIndex> insert_temporary(std::span<const Point3> points);

  const VoxelBlock* find(const VoxelIndex& idx) const;
  VoxelBlock* find(const VoxelIndex& idx);
  VoxelBlock& get_or_create(const VoxelIndex& idx);

  bool is_prior_block(const VoxelIndex& idx) const;
  std::size_t block_count() const { return blocks_.size(); }
  std::size_t prior_block_count() const;
  bool empty() const { return blocks_.empty(); }

  /// Block indices in lexicographic (x, y, z) order.
  std::vector<VoxelIndex> sorted_indices() const;

  template <typename Fn>
  void for_each_block(Fn&& fn) const {
    for (const auto& [idx, block] : blocks_) fn(block);
  }

  /// All admitted points with |p - q| < r across every block the ball overlaps.
  void radius_search(const Point3& q, double r, const TierFilter& filter,
                     std::vector<Neighbor>& out) const;

  /// radius_search for each query; queries are processed in parallel.
  std::vector<std::vector<Neighbor>> radius_search_scan(std::span<const Point3> queries, double r,
                                                        const TierFilter& filter) const;

 private:
  MapConfig config_;
  std::unordered_map<VoxelIndex, VoxelBlock, VoxelIndexHasher> blocks_;
};

}  // namespace llloc
