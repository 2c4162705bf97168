#pragma once

#include "marsupial/geometry.hpp"
#include "marsupial/voxel_grid.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

namespace marsupial {

/// Integer block coordinates: floor(p / L) per axis.
struct BlockIndex {
  int i{0}, j{0}, k{0};
  constexpr bool operator==(const BlockIndex&) const = default;
  constexpr auto operator<=>(const BlockIndex&) const = default;
};

/// Supported block index range is [-kBlockIndexLimit, kBlockIndexLimit) per axis.
inline constexpr int kBlockIndexLimit = 1 << 20;

/// Packs the three 21-bit offset coordinates into one 64-bit key. Injective on the
/// supported range; throws std::out_of_range outside it.
std::uint64_t block_hash(const BlockIndex& idx);
BlockIndex block_from_hash(std::uint64_t hash);

BlockIndex block_index_of(const Vec3& p, double block_edge);
Vec3 block_center(const BlockIndex& idx, double block_edge);

enum class FeatureLabel : std::uint8_t { Edge, Planar };

struct LabeledPoint {
  Vec3 position;
  FeatureLabel label{FeatureLabel::Planar};
};

/// Coordinate frame shared by every agent's unified map. Points are stored as
/// cells of a dedup lattice (edge `quantum`, anchored at `lattice_origin`).
struct MapFrame {
  double block_edge{10.0};
  double quantum{0.25};
  Vec3 lattice_origin{Vec3::Zero()};

  bool operator==(const MapFrame& o) const {
    return block_edge == o.block_edge && quantum == o.quantum && lattice_origin == o.lattice_origin;
  }

  Index3 cell_of(const Vec3& p) const;
  Vec3 cell_center(const Index3& c) const {
    return lattice_origin + quantum * Vec3(c.x + 0.5, c.y + 0.5, c.z + 0.5);
  }
};

struct FrameMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct MapBlock {
  BlockIndex index;
  std::set<Index3> edge_cells;
  std::set<Index3> planar_cells;
  std::uint32_t version{0};

  std::size_t point_count() const { return edge_cells.size() + planar_cells.size(); }
  bool same_content(const MapBlock& o) const {
    return index == o.index && edge_cells == o.edge_cells && planar_cells == o.planar_cells;
  }
};

/// Block-hashed feature map. Blocks are kept in hash order so every traversal is
/// deterministic.
class UnifiedMap {
 public:
  UnifiedMap() = default;
  explicit UnifiedMap(const MapFrame& frame, std::uint8_t writer = 0) : frame_(frame), writer_(writer) {}

  const MapFrame& frame() const { return frame_; }
  /// Tag stamped into the low bits of every version this map produces.
  std::uint8_t writer() const { return writer_; }
  const std::map<std::uint64_t, MapBlock>& blocks() const { return blocks_; }
  std::map<std::uint64_t, MapBlock>& blocks() { return blocks_; }
  bool empty() const { return blocks_.empty(); }
  std::size_t point_count() const;

  const MapBlock* find(std::uint64_t hash) const;

  std::vector<Vec3> points(FeatureLabel label) const;

  /// All points as (label, cell) pairs; equal iff both maps hold the same content.
  std::set<std::pair<FeatureLabel, Index3>> point_set() const;

 private:
  MapFrame frame_;
  std::uint8_t writer_{0};
  std::map<std::uint64_t, MapBlock> blocks_;
};

/// Versions are Lamport counters with the writer tag in the low kWriterBits, so
/// two maps holding a block at the same version hold the same content.
inline constexpr int kWriterBits = 4;
inline constexpr std::uint32_t kWriterMask = (1u << kWriterBits) - 1;
/// Advances the counter part of `above` by one and stamps `writer`'s tag.
std::uint32_t next_version(std::uint32_t above, std::uint8_t writer);

/// Hash -> version view of a map, what one agent advertises to another.
struct MapSummary {
  MapFrame frame;
  std::map<std::uint64_t, std::uint32_t> versions;
};

struct BlockBatch {
  MapFrame frame;
  std::vector<MapBlock> blocks;
};

MapSummary summarize(const UnifiedMap& map);

/// Routes each point to its block (created on demand); a block's version advances
/// once per call when its content changed.
void insert_points(UnifiedMap& map, std::span<const LabeledPoint> points);

/// Hashes of local blocks the remote lacks or holds at a lower version.
std::set<std::uint64_t> diff_blocks(const UnifiedMap& local, const MapSummary& remote);

BlockBatch collect_blocks(const UnifiedMap& map, const std::set<std::uint64_t>& hashes);
BlockBatch collect_all_blocks(const UnifiedMap& map);

/// Per-block union of the cell sets. A block whose result equals the incoming block
/// adopts max(local, incoming); otherwise it advances past that max.
void merge_blocks(UnifiedMap& map, const BlockBatch& incoming);

struct ExchangeStats {
  int rounds{0};
  std::size_t blocks_to_a{0};
  std::size_t blocks_to_b{0};
  bool converged{false};
};
/// Alternating diff+merge (a to b, then b to a) until neither side has anything
/// to send.
ExchangeStats exchange_maps(UnifiedMap& a, UnifiedMap& b, int max_rounds = 16);

/// Little-endian record stream: u32 payload length, u64 hash, u32 version,
/// u32 edge count, u32 planar count, then int32 millimetre xyz per point
/// (edge points first). Decoding needs the frame to re-quantize points.
std::vector<std::uint8_t> encode_blocks(const BlockBatch& batch);
BlockBatch decode_blocks(std::span<const std::uint8_t> bytes, const MapFrame& frame);

/// Every cell center lies inside its block's extent.
bool block_extent_invariant_holds(const UnifiedMap& map);

}  // namespace marsupial
