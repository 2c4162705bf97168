#include "marsupial/mapstore.hpp"
#include "marsupial/wire.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace marsupial;

namespace {

const MapFrame kFrame{4.0, 0.25, Vec3(0.1, -0.2, 0.0)};

UnifiedMap random_map(Rng& rng, std::uint8_t writer, int batches) {
  UnifiedMap m(kFrame, writer);
  for (int b = 0; b < batches; ++b) {
    const auto pts = oracle::random_points(rng, 1 + static_cast<int>(rng.below(40)), 9.0);
    insert_points(m, pts);
  }
  return m;
}

using PointSet = std::set<std::pair<FeatureLabel, Index3>>;

PointSet set_union(const PointSet& a, const PointSet& b) {
  PointSet u = a;
  u.insert(b.begin(), b.end());
  return u;
}

}  // namespace

TEST(Mapstore, BlockHashIsInjectiveAndInvertible) {
  Rng rng(2);
  std::map<std::uint64_t, BlockIndex> seen;
  for (int t = 0; t < 20000; ++t) {
    const BlockIndex idx{static_cast<int>(rng.below(2 * kBlockIndexLimit)) - kBlockIndexLimit,
                         static_cast<int>(rng.below(64)) - 32, static_cast<int>(rng.below(8)) - 4};
    const auto h = block_hash(idx);
    EXPECT_EQ(block_from_hash(h), idx);
    const auto [it, fresh] = seen.emplace(h, idx);
    if (!fresh) EXPECT_EQ(it->second, idx);
  }
  EXPECT_THROW(block_hash(BlockIndex{kBlockIndexLimit, 0, 0}), std::out_of_range);
  EXPECT_THROW(block_hash(BlockIndex{0, -kBlockIndexLimit - 1, 0}), std::out_of_range);
  EXPECT_NO_THROW(block_hash(BlockIndex{-kBlockIndexLimit, kBlockIndexLimit - 1, 0}));
}

TEST(Mapstore, BlockIndexUsesFloor) {
  EXPECT_EQ(block_index_of(Vec3(-0.1, 9.99, 10.0), 10.0), (BlockIndex{-1, 0, 1}));
  EXPECT_EQ(block_center(BlockIndex{-1, 0, 1}, 10.0), Vec3(-5.0, 5.0, 15.0));
}

TEST(Mapstore, InsertDedupsAndKeepsExtent) {
  UnifiedMap m(kFrame, 1);
  std::vector<LabeledPoint> pts{{Vec3(1.0, 1.0, 1.0), FeatureLabel::Edge},
                                {Vec3(1.01, 1.02, 1.0), FeatureLabel::Edge},
                                {Vec3(1.01, 1.02, 1.0), FeatureLabel::Planar}};
  insert_points(m, pts);
  EXPECT_EQ(m.point_count(), 2u);
  ASSERT_EQ(m.blocks().size(), 1u);
  const auto v = m.blocks().begin()->second.version;
  EXPECT_EQ(v & kWriterMask, 1u);
  insert_points(m, pts);  // nothing new, no version bump
  EXPECT_EQ(m.blocks().begin()->second.version, v);
  Rng rng(5);
  const auto big = random_map(rng, 2, 10);
  EXPECT_TRUE(block_extent_invariant_holds(big));
}

TEST(Mapstore, NextVersionCarriesWriterTag) {
  for (std::uint32_t above : {0u, 1u, 15u, 16u, 17u, 1000u})
    for (std::uint8_t w = 0; w < 16; ++w) {
      const auto v = next_version(above, w);
      EXPECT_GT(v, above);
      EXPECT_EQ(v & kWriterMask, w);
      EXPECT_EQ(v >> kWriterBits, (above >> kWriterBits) + 1);
    }
}

// Merge properties over random map pairs: idempotent, order-insensitive,
// lossless, and exchange converges to the union with nothing left to send.
TEST(Mapstore, MergePropertiesHoldOnRandomMaps) {
  Rng rng(31);
  for (int trial = 0; trial < 1000; ++trial) {
    const UnifiedMap a0 = random_map(rng, 1, 1 + static_cast<int>(rng.below(3)));
    const UnifiedMap b0 = random_map(rng, 2, 1 + static_cast<int>(rng.below(3)));
    const UnifiedMap c0 = random_map(rng, 3, 1);
    const PointSet want = set_union(a0.point_set(), b0.point_set());

    UnifiedMap once = a0;
    merge_blocks(once, collect_all_blocks(b0));
    UnifiedMap twice = once;
    merge_blocks(twice, collect_all_blocks(b0));
    EXPECT_EQ(once.point_set(), want);
    EXPECT_EQ(twice.point_set(), want);

    UnifiedMap abc = a0, acb = a0;
    merge_blocks(abc, collect_all_blocks(b0));
    merge_blocks(abc, collect_all_blocks(c0));
    merge_blocks(acb, collect_all_blocks(c0));
    merge_blocks(acb, collect_all_blocks(b0));
    EXPECT_EQ(abc.point_set(), acb.point_set());

    UnifiedMap a = a0, b = b0;
    const auto stats = exchange_maps(a, b);
    EXPECT_TRUE(stats.converged);
    EXPECT_EQ(a.point_set(), want);
    EXPECT_EQ(b.point_set(), want);
    EXPECT_TRUE(diff_blocks(a, summarize(b)).empty());
    EXPECT_TRUE(diff_blocks(b, summarize(a)).empty());
    for (const auto& [h, blk] : a.blocks()) {
      const MapBlock* other = b.find(h);
      ASSERT_NE(other, nullptr);
      EXPECT_EQ(blk.version, other->version);
      EXPECT_TRUE(blk.same_content(*other));
    }
    EXPECT_TRUE(block_extent_invariant_holds(a));

    // Further local growth ships on the next exchange.
    insert_points(a, oracle::random_points(rng, 5, 9.0));
    exchange_maps(a, b);
    EXPECT_EQ(a.point_set(), b.point_set());
    if (::testing::Test::HasFailure()) {
      ADD_FAILURE() << "trial " << trial;
      break;
    }
  }
}

TEST(Mapstore, DiffShipsOnlyNewerBlocks) {
  Rng rng(8);
  UnifiedMap a = random_map(rng, 1, 2);
  UnifiedMap b(kFrame, 2);
  EXPECT_EQ(diff_blocks(a, summarize(b)).size(), a.blocks().size());
  merge_blocks(b, collect_all_blocks(a));
  EXPECT_TRUE(diff_blocks(a, summarize(b)).empty());
}

TEST(Mapstore, FrameMismatchThrows) {
  UnifiedMap a(kFrame, 1);
  MapFrame other = kFrame;
  other.quantum = 0.5;
  UnifiedMap b(other, 2);
  EXPECT_THROW(merge_blocks(a, collect_all_blocks(b)), FrameMismatch);
  EXPECT_THROW(exchange_maps(a, b), FrameMismatch);
}

TEST(Mapstore, WireRoundTrip) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const UnifiedMap m = random_map(rng, 4, 3);
    const auto batch = collect_all_blocks(m);
    const auto back = decode_blocks(encode_blocks(batch), kFrame);
    ASSERT_EQ(back.blocks.size(), batch.blocks.size());
    for (std::size_t i = 0; i < batch.blocks.size(); ++i) {
      EXPECT_TRUE(back.blocks[i].same_content(batch.blocks[i]));
      EXPECT_EQ(back.blocks[i].version, batch.blocks[i].version);
    }
  }
}

TEST(Mapstore, TruncatedWireFails) {
  Rng rng(13);
  const auto bytes = encode_blocks(collect_all_blocks(random_map(rng, 1, 1)));
  ASSERT_GT(bytes.size(), 8u);
  for (std::size_t cut = 1; cut < bytes.size(); cut += 3) {
    const std::span<const std::uint8_t> part(bytes.data(), cut);
    EXPECT_THROW(decode_blocks(part, kFrame), wire::DecodeError) << "cut " << cut;
  }
  EXPECT_TRUE(decode_blocks({}, kFrame).blocks.empty());
}
