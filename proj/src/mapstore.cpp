#include "marsupial/mapstore.hpp"

#include "marsupial/wire.hpp"

#include <cmath>

namespace marsupial {
namespace {

constexpr std::uint64_t kAxisBits = 21;
constexpr std::uint64_t kAxisMask = (std::uint64_t{1} << kAxisBits) - 1;

std::uint64_t pack_axis(int v) {
  if (v < -kBlockIndexLimit || v >= kBlockIndexLimit)
    throw std::out_of_range("block index outside supported range");
  return static_cast<std::uint64_t>(static_cast<std::int64_t>(v) + kBlockIndexLimit);
}

int unpack_axis(std::uint64_t bits) {
  return static_cast<int>(static_cast<std::int64_t>(bits & kAxisMask) - kBlockIndexLimit);
}

BlockIndex block_of_cell(const MapFrame& frame, const Index3& cell) {
  return block_index_of(frame.cell_center(cell), frame.block_edge);
}

void require_same_frame(const MapFrame& a, const MapFrame& b) {
  if (!(a == b)) throw FrameMismatch("unified map frame / block edge mismatch");
}

std::int32_t to_mm(double m) { return static_cast<std::int32_t>(std::llround(m * 1000.0)); }

}  // namespace

std::uint64_t block_hash(const BlockIndex& idx) {
  return (pack_axis(idx.i) << (2 * kAxisBits)) | (pack_axis(idx.j) << kAxisBits) | pack_axis(idx.k);
}

BlockIndex block_from_hash(std::uint64_t hash) {
  return {unpack_axis(hash >> (2 * kAxisBits)), unpack_axis(hash >> kAxisBits), unpack_axis(hash)};
}

BlockIndex block_index_of(const Vec3& p, double block_edge) {
  return {static_cast<int>(std::floor(p.x() / block_edge)),
          static_cast<int>(std::floor(p.y() / block_edge)),
          static_cast<int>(std::floor(p.z() / block_edge))};
}

Vec3 block_center(const BlockIndex& idx, double block_edge) {
  return Vec3(idx.i + 0.5, idx.j + 0.5, idx.k + 0.5) * block_edge;
}

Index3 MapFrame::cell_of(const Vec3& p) const {
  const Vec3 q = (p - lattice_origin) / quantum;
  return {static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
          static_cast<int>(std::floor(q.z()))};
}

std::size_t UnifiedMap::point_count() const {
  std::size_t n = 0;
  for (const auto& [h, b] : blocks_) n += b.point_count();
  return n;
}

const MapBlock* UnifiedMap::find(std::uint64_t hash) const {
  const auto it = blocks_.find(hash);
  return it == blocks_.end() ? nullptr : &it->second;
}

std::vector<Vec3> UnifiedMap::points(FeatureLabel label) const {
  std::vector<Vec3> out;
  for (const auto& [h, b] : blocks_) {
    const auto& cells = label == FeatureLabel::Edge ? b.edge_cells : b.planar_cells;
    for (const auto& c : cells) out.push_back(frame_.cell_center(c));
  }
  return out;
}

std::set<std::pair<FeatureLabel, Index3>> UnifiedMap::point_set() const {
  std::set<std::pair<FeatureLabel, Index3>> out;
  for (const auto& [h, b] : blocks_) {
    for (const auto& c : b.edge_cells) out.emplace(FeatureLabel::Edge, c);
    for (const auto& c : b.planar_cells) out.emplace(FeatureLabel::Planar, c);
  }
  return out;
}

std::uint32_t next_version(std::uint32_t above, std::uint8_t writer) {
  return (((above >> kWriterBits) + 1) << kWriterBits) | (writer & kWriterMask);
}

MapSummary summarize(const UnifiedMap& map) {
  MapSummary s;
  s.frame = map.frame();
  for (const auto& [h, b] : map.blocks()) s.versions.emplace(h, b.version);
  return s;
}

void insert_points(UnifiedMap& map, std::span<const LabeledPoint> points) {
  std::set<std::uint64_t> touched;
  const MapFrame& frame = map.frame();
  for (const auto& lp : points) {
    const Index3 cell = frame.cell_of(lp.position);
    const BlockIndex bi = block_of_cell(frame, cell);
    const std::uint64_t h = block_hash(bi);
    auto [it, created] = map.blocks().try_emplace(h);
    if (created) it->second.index = bi;
    auto& cells = lp.label == FeatureLabel::Edge ? it->second.edge_cells : it->second.planar_cells;
    if (cells.insert(cell).second) touched.insert(h);
  }
  for (const auto h : touched) {
    auto& b = map.blocks()[h];
    b.version = next_version(b.version, map.writer());
  }
}

std::set<std::uint64_t> diff_blocks(const UnifiedMap& local, const MapSummary& remote) {
  require_same_frame(local.frame(), remote.frame);
  std::set<std::uint64_t> out;
  for (const auto& [h, b] : local.blocks()) {
    const auto it = remote.versions.find(h);
    if (it == remote.versions.end() || b.version > it->second) out.insert(h);
  }
  return out;
}

BlockBatch collect_blocks(const UnifiedMap& map, const std::set<std::uint64_t>& hashes) {
  BlockBatch batch;
  batch.frame = map.frame();
  for (const auto h : hashes)
    if (const auto* b = map.find(h)) batch.blocks.push_back(*b);
  return batch;
}

BlockBatch collect_all_blocks(const UnifiedMap& map) {
  BlockBatch batch;
  batch.frame = map.frame();
  for (const auto& [h, b] : map.blocks()) batch.blocks.push_back(b);
  return batch;
}

void merge_blocks(UnifiedMap& map, const BlockBatch& incoming) {
  require_same_frame(map.frame(), incoming.frame);
  for (const auto& in : incoming.blocks) {
    const std::uint64_t h = block_hash(in.index);
    auto [it, created] = map.blocks().try_emplace(h);
    MapBlock& local = it->second;
    if (created) local.index = in.index;
    local.edge_cells.insert(in.edge_cells.begin(), in.edge_cells.end());
    local.planar_cells.insert(in.planar_cells.begin(), in.planar_cells.end());
    const std::uint32_t top = std::max(local.version, in.version);
    local.version = local.same_content(in) ? top : next_version(top, map.writer());
  }
}

ExchangeStats exchange_maps(UnifiedMap& a, UnifiedMap& b, int max_rounds) {
  ExchangeStats stats;
  while (stats.rounds < max_rounds) {
    const auto to_b = diff_blocks(a, summarize(b));
    if (!to_b.empty()) merge_blocks(b, collect_blocks(a, to_b));
    const auto to_a = diff_blocks(b, summarize(a));
    if (!to_a.empty()) merge_blocks(a, collect_blocks(b, to_a));
    if (to_b.empty() && to_a.empty()) break;
    ++stats.rounds;
    stats.blocks_to_a += to_a.size();
    stats.blocks_to_b += to_b.size();
  }
  stats.converged = a.point_set() == b.point_set();
  return stats;
}

std::vector<std::uint8_t> encode_blocks(const BlockBatch& batch) {
  wire::Writer w;
  for (const auto& b : batch.blocks) {
    const std::size_t len_at = w.size();
    w.u32(0);
    const std::size_t start = w.size();
    w.u64(block_hash(b.index));
    w.u32(b.version);
    w.u32(static_cast<std::uint32_t>(b.edge_cells.size()));
    w.u32(static_cast<std::uint32_t>(b.planar_cells.size()));
    for (const auto* cells : {&b.edge_cells, &b.planar_cells})
      for (const auto& c : *cells) {
        const Vec3 p = batch.frame.cell_center(c);
        w.i32(to_mm(p.x()));
        w.i32(to_mm(p.y()));
        w.i32(to_mm(p.z()));
      }
    w.patch_u32(len_at, static_cast<std::uint32_t>(w.size() - start));
  }
  return w.take();
}

BlockBatch decode_blocks(std::span<const std::uint8_t> bytes, const MapFrame& frame) {
  BlockBatch batch;
  batch.frame = frame;
  wire::Reader r(bytes);
  while (!r.done()) {
    const std::uint32_t len = r.u32();
    wire::Reader rec(r.bytes(len));
    MapBlock b;
    b.index = block_from_hash(rec.u64());
    b.version = rec.u32();
    const std::uint32_t n_edge = rec.u32();
    const std::uint32_t n_planar = rec.u32();
    if (static_cast<std::uint64_t>(n_edge + n_planar) * 12 + 20 != len)
      throw wire::DecodeError("block record length does not match point counts");
    for (std::uint32_t n = 0; n < n_edge + n_planar; ++n) {
      const double x = rec.i32() / 1000.0;
      const double y = rec.i32() / 1000.0;
      const double z = rec.i32() / 1000.0;
      const Index3 c = frame.cell_of(Vec3(x, y, z));
      (n < n_edge ? b.edge_cells : b.planar_cells).insert(c);
    }
    batch.blocks.push_back(std::move(b));
  }
  return batch;
}

bool block_extent_invariant_holds(const UnifiedMap& map) {
  const MapFrame& f = map.frame();
  for (const auto& [h, b] : map.blocks()) {
    const Vec3 lo = Vec3(b.index.i, b.index.j, b.index.k) * f.block_edge;
    const Aabb box{lo, lo + Vec3::Constant(f.block_edge)};
    for (const auto* cells : {&b.edge_cells, &b.planar_cells})
      for (const auto& c : *cells) {
        const Vec3 p = f.cell_center(c);
        if (!box.contains(p) || p.x() >= box.max.x() || p.y() >= box.max.y() || p.z() >= box.max.z())
          return false;
      }
  }
  return true;
}

}  // namespace marsupial
