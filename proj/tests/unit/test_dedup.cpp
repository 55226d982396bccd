#include <gtest/gtest.h>

#include <bit>

#include "loopcompat/dedup/average_hash.hpp"
#include "loopcompat/dedup/loop_pair.hpp"
#include "loopcompat/dedup/refine.hpp"
#include "loopcompat/error.hpp"
#include "loopcompat/random.hpp"

using namespace loopcompat;
using namespace loopcompat::dedup;

namespace {

Matrix halves(std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols / 2; ++c) m(r, c) = 1.0;
  return m;
}

SpectrogramHash flip(SpectrogramHash h, int bits) {
  for (int i = 0; i < bits; ++i) h.bits ^= (1ULL << (7 * i + 3));
  return h;
}

}  // namespace

TEST(AverageHash, ConstructedImages) {
  EXPECT_EQ(average_hash(halves(8, 8)).bits, 0x0F0F0F0F0F0F0F0FULL);
  EXPECT_EQ(average_hash(halves(16, 16)).bits, 0x0F0F0F0F0F0F0F0FULL);
  EXPECT_EQ(average_hash(halves(173, 128)).bits, 0x0F0F0F0F0F0F0F0FULL);
  // Constant image: nothing is strictly above the mean.
  EXPECT_EQ(average_hash(Matrix(20, 20, 3.0)).bits, 0u);
  Matrix one(8, 8);
  one(2, 5) = 1.0;
  EXPECT_EQ(average_hash(one).bits, 1ULL << 21);
}

TEST(AverageHash, ResizeMatchesReferenceBilinear) {
  // Reference: triangle-filter reduction of the same image computed in single
  // precision by an imaging library.
  Matrix img(20, 30);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t j = 0; j < 30; ++j) img(i, j) = static_cast<double>((i * 7 + j * 13) % 17) / 16.0;
  const Matrix small = resize_bilinear(img, 8, 8);
  EXPECT_NEAR(small(0, 0), 0.5149582624435425, 1e-6);
  EXPECT_NEAR(small(3, 5), 0.4913274347782135, 1e-6);
  EXPECT_NEAR(small(7, 7), 0.46869203448295593, 1e-6);
  EXPECT_NEAR(small(4, 1), 0.5119911432266235, 1e-6);
  EXPECT_EQ(average_hash(img).bits, 0x256d4bda92b6a42dULL);
}

TEST(AverageHash, IdentityResize) {
  Rng rng(3);
  Matrix img(8, 8);
  for (double& v : img.data) v = rng.uniform();
  const Matrix same = resize_bilinear(img, 8, 8);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_NEAR(same.data[i], img.data[i], 1e-12);
}

TEST(AverageHash, HexRoundTripAndDistance) {
  const SpectrogramHash h{0x00FF00FF12345678ULL};
  EXPECT_EQ(h.hex(), "00ff00ff12345678");
  EXPECT_EQ(SpectrogramHash::from_hex(h.hex()), h);
  EXPECT_THROW(SpectrogramHash::from_hex("xyz"), Error);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const SpectrogramHash a{rng.next()}, b{rng.next()};
    EXPECT_EQ(hamming_distance(a, b), std::popcount(a.bits ^ b.bits));
    EXPECT_EQ(hamming_distance(a, b), hamming_distance(b, a));
  }
  EXPECT_EQ(hamming_distance(h, h), 0);
}

TEST(Dedup, ExactDuplicateRemovedDistanceFiveKept) {
  const SpectrogramHash base{0xDEADBEEFCAFEF00DULL};
  const std::vector<LoopCandidate> loops{{base, 2.0}, {base, 5.0}, {flip(base, 5), 1.0}};
  const DedupResult r = dedup_loops(loops);
  EXPECT_EQ(r.kept, (std::vector<std::size_t>{1, 2}));
  ASSERT_EQ(r.merged_into.size(), 1u);
  EXPECT_EQ(r.merged_into.at(0), 1u);
}

TEST(Dedup, DistanceFourMerged) {
  const SpectrogramHash base{0x0123456789ABCDEFULL};
  const DedupResult r = dedup_loops({{base, 1.0}, {flip(base, 4), 1.0}});
  EXPECT_EQ(r.kept, (std::vector<std::size_t>{0}));  // tie: lowest index
}

TEST(Dedup, ChainsAreTransitive) {
  const SpectrogramHash a{0};
  const SpectrogramHash b{0b111};        // 3 from a
  const SpectrogramHash c{0b111111};     // 3 from b, 6 from a
  const SpectrogramHash far{~0ULL};
  const DedupResult r = dedup_loops({{a, 1.0}, {far, 0.5}, {b, 2.0}, {c, 3.0}});
  EXPECT_EQ(r.kept, (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(r.merged_into.at(0), 3u);
  EXPECT_EQ(r.merged_into.at(2), 3u);
}

TEST(Dedup, KeptAndMergedPartitionInput) {
  Rng rng(8);
  std::vector<LoopCandidate> loops;
  for (int i = 0; i < 40; ++i) {
    SpectrogramHash h{rng.index(4) * 0x1111111111111111ULL};
    h.bits ^= 1ULL << rng.index(64);
    loops.push_back({h, rng.uniform()});
  }
  const DedupResult r = dedup_loops(loops);
  EXPECT_EQ(r.kept.size() + r.merged_into.size(), loops.size());
  for (std::size_t i = 0; i < r.kept.size(); ++i)
    for (std::size_t j = i + 1; j < r.kept.size(); ++j)
      EXPECT_GE(hamming_distance(loops[r.kept[i]].hash, loops[r.kept[j]].hash), kDuplicateDistance);
  for (auto [loser, winner] : r.merged_into) {
    EXPECT_TRUE(std::binary_search(r.kept.begin(), r.kept.end(), winner));
    EXPECT_LE(loops[loser].activation_total, loops[winner].activation_total);
  }
}

TEST(Refine, SumsMergedRowsAndNormalizesBars) {
  extract::LoopLayout layout(3, 3);
  layout.data = {1.0, 0.0, 2.0,   // row 0
                 4.0, 0.0, 1.0,   // row 1
                 1.0, 0.0, 2.0};  // row 2, merged into 0
  DedupResult r;
  r.kept = {0, 1};
  r.merged_into[2] = 0;
  const Matrix out = refine_layout(layout, r);
  ASSERT_EQ(out.rows, 2u);
  // Column 0: (2, 4) / 4. Column 1: zeros stay zero. Column 2: (4, 1) / 4.
  EXPECT_EQ(out.data, (std::vector<double>{0.5, 0.0, 1.0, 1.0, 0.0, 0.25}));
}

TEST(Refine, CoActivityThresholdIsInclusive) {
  Matrix layout(3, 4);
  layout.data = {1.0, 0.2, 0.0, 1.0,
                 1.0, 0.2, 1.0, 0.19,
                 0.0, 0.0, 0.1, 1.0};
  const auto pairs = co_active_pairs(layout, 0.2);
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].a, 0u);
  EXPECT_EQ(pairs[0].b, 1u);
  EXPECT_EQ(pairs[0].bars, 2);
  EXPECT_EQ(pairs[1].a, 0u);
  EXPECT_EQ(pairs[1].b, 2u);
  EXPECT_EQ(pairs[1].bars, 1);
}

TEST(Refine, DerivePairsOrdersIds) {
  Matrix layout(3, 2);
  layout.data = {1.0, 1.0, 1.0, 0.0, 0.0, 1.0};
  const auto pairs = derive_pairs(layout, {"s_loop02", "s_loop01", "s_loop00"}, "s");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[0].loop_a, "s_loop00");
  EXPECT_EQ(pairs[0].loop_b, "s_loop02");
  EXPECT_EQ(pairs[1].loop_a, "s_loop01");
  EXPECT_EQ(pairs[1].loop_b, "s_loop02");
  EXPECT_EQ(pairs[1].bar_count, 1);
  for (const auto& p : pairs) {
    EXPECT_EQ(p.label, PairLabel::Positive);
    EXPECT_EQ(p.strategy, Strategy::Original);
    EXPECT_EQ(p.song_id, "s");
    EXPECT_EQ(p.pair_id, p.loop_a + "+" + p.loop_b);
  }
  EXPECT_THROW(derive_pairs(layout, {"a"}, "s"), Error);
}

TEST(LoopPairJson, RoundTrip) {
  LoopPair p{"x+y", "x", "y", PairLabel::Negative, Strategy::Rearrange, "s", std::nullopt};
  nlohmann::json j = p;
  EXPECT_FALSE(j.contains("bar_count"));
  EXPECT_EQ(j.get<LoopPair>(), p);
  p.bar_count = 3;
  j = p;
  EXPECT_EQ(j.get<LoopPair>(), p);
  for (auto s : {Strategy::Original, Strategy::Random, Strategy::Selected, Strategy::Reverse, Strategy::Shift,
                 Strategy::Rearrange})
    EXPECT_EQ(parse_strategy(to_string(s)), s);
  EXPECT_THROW(parse_strategy("sideways"), Error);
  EXPECT_TRUE(is_within_song(Strategy::Shift));
  EXPECT_FALSE(is_within_song(Strategy::Selected));
}
