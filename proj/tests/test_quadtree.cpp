#include <doctest.h>

#include <random>

#include "custego/bitio.hpp"
#include "custego/errors.hpp"
#include "helpers.hpp"

using namespace custego;
using namespace testing;

namespace {

CuNode four(CuKind k, int depth) { return split(depth, leaf(k), leaf(k), leaf(k), leaf(k)); }

}  // namespace

TEST_CASE("zig-zag scan order") {
  const auto quad = zigzag_scan(one_ctu(four(CuKind::S32, 0)), false);
  REQUIRE(quad.size() == 4);
  CHECK(quad[0].rect == Rect{0, 0, 32});
  CHECK(quad[1].rect == Rect{32, 0, 32});
  CHECK(quad[2].rect == Rect{0, 32, 32});
  CHECK(quad[3].rect == Rect{32, 32, 32});

  // TL split into four S16: S16 TL, TR, BL, BR, then S32 TR, BL, BR.
  const auto m = one_ctu(split(0, four(CuKind::S16, 1), leaf(CuKind::S32), leaf(CuKind::S32), leaf(CuKind::S32)));
  const auto scan = zigzag_scan(m, false);
  const std::vector<Rect> expect{{0, 0, 16},   {16, 0, 16},  {0, 16, 16}, {16, 16, 16},
                                 {32, 0, 32}, {0, 32, 32}, {32, 32, 32}};
  REQUIRE(scan.size() == expect.size());
  for (std::size_t k = 0; k < expect.size(); ++k) {
    CHECK(scan[k].rect == expect[k]);
    CHECK(scan[k].scan_pos == static_cast<int>(k));
  }
  CHECK(scan[0].kind == CuKind::S16);
  CHECK(scan[4].kind == CuKind::S32);

  CHECK(zigzag_scan(StructureMap(64, 64), false).empty());
  CHECK(zigzag_scan(StructureMap(64, 64), true).size() == 1);
}

TEST_CASE("CTUs are scanned in raster order") {
  StructureMap m(128, 128);
  m.ctus[1] = four(CuKind::S32, 0);
  const auto scan = zigzag_scan(m, true);
  REQUIRE(scan.size() == 7);
  CHECK(scan[0].rect == Rect{0, 0, 64});
  CHECK(scan[1].rect == Rect{64, 0, 32});
  CHECK(scan[5].rect == Rect{0, 64, 64});
  CHECK(scan[6].rect == Rect{64, 64, 64});
}

TEST_CASE("leaves tile the frame") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 30; ++t) {
    const StructureMap m = random_map(rng, 192, 128);
    std::vector<int> cover(192 * 128, 0);
    for (const auto& cu : zigzag_scan(m, true))
      for (int y = cu.rect.y; y < cu.rect.y + cu.rect.size; ++y)
        for (int x = cu.rect.x; x < cu.rect.x + cu.rect.size; ++x) ++cover[static_cast<std::size_t>(y * 192 + x)];
    for (int c : cover) REQUIRE(c == 1);
  }
}

TEST_CASE("max depth") {
  CHECK(max_depth(CuKind::S32) == 1);
  CHECK(max_depth(CuKind::S16) == 2);
  CHECK(max_depth(CuKind::S8_2Nx2N) == 3);
  CHECK(max_depth(CuKind::S8_NxN) == 4);
  CHECK_THROWS(max_depth(CuKind::S64));
}

TEST_CASE("region max depth") {
  const auto m32 = one_ctu(four(CuKind::S32, 0));
  CHECK(region_max_depth(m32, {16, 16, 16}) == 1);

  const auto nxn = one_ctu(split(0, split(1, split(2, leaf(CuKind::S8_NxN), leaf(CuKind::S8_2Nx2N),
                                                   leaf(CuKind::S8_2Nx2N), leaf(CuKind::S8_2Nx2N)),
                                          leaf(CuKind::S16), leaf(CuKind::S16), leaf(CuKind::S16)),
                                 leaf(CuKind::S32), leaf(CuKind::S32), leaf(CuKind::S32)));
  CHECK(region_max_depth(nxn, {0, 0, 8}) == 4);

  // One S16 and twelve S8_2Nx2N inside the top-left 32x32.
  const auto mixed = one_ctu(split(0,
                                   split(1, leaf(CuKind::S16), four(CuKind::S8_2Nx2N, 2), four(CuKind::S8_2Nx2N, 2),
                                         four(CuKind::S8_2Nx2N, 2)),
                                   leaf(CuKind::S32), leaf(CuKind::S32), leaf(CuKind::S32)));
  CHECK(region_max_depth(mixed, {0, 0, 32}) == 3);
  CHECK(region_max_depth(StructureMap(64, 64), {0, 0, 64}) == 0);
  CHECK_THROWS(region_max_depth(m32, {4, 0, 8}));
}

TEST_CASE("mdd") {
  const auto orig = one_ctu(split(0, split(1, split(2, leaf(CuKind::S8_NxN), leaf(CuKind::S8_2Nx2N),
                                                    leaf(CuKind::S8_2Nx2N), leaf(CuKind::S8_2Nx2N)),
                                           leaf(CuKind::S16), leaf(CuKind::S16), leaf(CuKind::S16)),
                                  leaf(CuKind::S32), leaf(CuKind::S32), leaf(CuKind::S32)));
  const auto rec = one_ctu(split(0, four(CuKind::S16, 1), leaf(CuKind::S32), leaf(CuKind::S32), leaf(CuKind::S32)));
  CHECK(mdd({0, {0, 0, 8}, CuKind::S8_NxN, 0}, rec) == 2);
  CHECK(mdd({0, {32, 0, 32}, CuKind::S32, 0}, orig) == 0);

  const auto split32 = one_ctu(split(0, leaf(CuKind::S32), four(CuKind::S16, 1), leaf(CuKind::S32), leaf(CuKind::S32)));
  CHECK(mdd({0, {32, 0, 32}, CuKind::S32, 0}, split32) == 1);

  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto m = random_map(rng, 128, 64);
    for (const auto& cu : zigzag_scan(m, false)) CHECK(mdd(cu, m) == 0);
  }
}

TEST_CASE("structure equality by region") {
  const auto a = one_ctu(four(CuKind::S32, 0));
  CHECK(structure_equal_region(a, a, {0, 0, 32}, CuKind::S32) == 1);

  const auto b = one_ctu(split(0, four(CuKind::S16, 1), leaf(CuKind::S32), leaf(CuKind::S32), leaf(CuKind::S32)));
  CHECK(structure_equal_region(a, b, {0, 0, 32}, CuKind::S32) == 0);
  CHECK(structure_equal_region(a, b, {32, 0, 32}, CuKind::S32) == 1);

  const auto c = one_ctu(split(0, split(1, four(CuKind::S8_2Nx2N, 2), leaf(CuKind::S16), leaf(CuKind::S16),
                                        leaf(CuKind::S16)),
                               leaf(CuKind::S32), leaf(CuKind::S32), leaf(CuKind::S32)));
  CHECK(structure_equal_region(b, c, {0, 0, 16}, CuKind::S16) == 0);

  const auto d = one_ctu(split(0, split(1, split(2, leaf(CuKind::S8_NxN), leaf(CuKind::S8_2Nx2N),
                                                 leaf(CuKind::S8_2Nx2N), leaf(CuKind::S8_2Nx2N)),
                                        leaf(CuKind::S16), leaf(CuKind::S16), leaf(CuKind::S16)),
                               leaf(CuKind::S32), leaf(CuKind::S32), leaf(CuKind::S32)));
  CHECK(structure_equal_region(c, d, {0, 0, 8}, CuKind::S8_2Nx2N) == 0);
  CHECK(structure_equal_region(c, d, {8, 0, 8}, CuKind::S8_2Nx2N) == 1);
  // Region absorbed into a larger leaf.
  CHECK(structure_equal_region(b, a, {0, 0, 16}, CuKind::S16) == 0);
}

TEST_CASE("replace_node and validate") {
  auto m = one_ctu(four(CuKind::S32, 0));
  replace_node(m, {32, 32, 32}, four(CuKind::S16, 1));
  CHECK_NOTHROW(validate(m));
  CHECK(zigzag_scan(m, false).size() == 7);
  CHECK(find_node(m, {48, 48, 16}) != nullptr);
  CHECK(find_node(m, {0, 0, 16}) == nullptr);
  CHECK_THROWS(replace_node(m, {0, 0, 16}, leaf(CuKind::S16)));

  StructureMap bad(64, 64);
  bad.ctus[0] = four(CuKind::S16, 0);
  CHECK_THROWS(validate(bad));
}

TEST_CASE("side info byte layout") {
  const auto unsplit = serialize_structure(StructureMap(64, 64));
  const std::vector<std::uint8_t> expect_unsplit{'C', 'U', 'S', 'I', 1, 0, 64, 0, 64, 0x00};
  CHECK(unsplit == expect_unsplit);

  // Split then four non-splits: 1 0 0 0 0 -> 0b10000000.
  const auto quad = serialize_structure(one_ctu(four(CuKind::S32, 0)));
  const std::vector<std::uint8_t> expect_quad{'C', 'U', 'S', 'I', 1, 0, 64, 0, 64, 0x80};
  CHECK(quad == expect_quad);

  // Depth-3 leaves carry the PU bit: 1 | 1 | 1 0 1 0 0 | 0 0 0, then 0 0 0 for the other S32.
  const auto pu = serialize_structure(one_ctu(split(
      0, split(1, split(2, leaf(CuKind::S8_2Nx2N), leaf(CuKind::S8_NxN), leaf(CuKind::S8_2Nx2N), leaf(CuKind::S8_2Nx2N)),
               leaf(CuKind::S16), leaf(CuKind::S16), leaf(CuKind::S16)),
      leaf(CuKind::S32), leaf(CuKind::S32), leaf(CuKind::S32))));
  REQUIRE(pu.size() == 11);
  CHECK(pu[9] == 0b11101000);
  CHECK(pu[10] == 0b00000000);
}

TEST_CASE("side info round-trips and rejects damage") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    const StructureMap m = random_map(rng, 64 * (1 + static_cast<int>(rng() % 3)), 64 * (1 + static_cast<int>(rng() % 2)));
    CHECK(parse_structure(serialize_structure(m)) == m);
  }
  std::vector<StructureMap> maps{random_map(rng, 128, 64), random_map(rng, 128, 64)};
  CHECK(parse_structures(serialize_structures(maps)) == maps);

  auto bytes = serialize_structure(random_map(rng, 128, 128));
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_WITH_AS(parse_structure(bad), "bad magic", FormatError);
  bytes.resize(bytes.size() - 1);
  CHECK_THROWS_AS(parse_structure(bytes), FormatError);
}
