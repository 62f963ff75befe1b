#include <functional>

#include <catch2/catch_amalgamated.hpp>

#include "tas/core.hpp"

using namespace tas;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::BadArgument;
}

}  // namespace

TEST_CASE("validate accepts divisible configurations in strict mode") {
  const auto p = validate({4, 4, 4}, {2, 2, 2, 4, 4}, true);
  CHECK(p.strict_divisible());
  CHECK(p.tm() == 2);
  CHECK(p.tn() == 2);
  CHECK(p.tk() == 2);
  CHECK(p.wk() == 1);
  CHECK(p.wm() == 1);
}

TEST_CASE("validate resolves window defaults to the full extents") {
  const auto p = validate({6, 8, 10}, {2, 2, 2}, false);
  CHECK(p.tiles().k_prime == 10);
  CHECK(p.tiles().m_prime == 6);
  CHECK(p.k_group_tiles() == p.tk());
  CHECK(p.m_group_tiles() == p.tm());
}

TEST_CASE("validate rejects bad inputs without clamping") {
  CHECK(code_of([] { validate({0, 4, 4}, {1, 1, 1}, false); }) == Errc::ZeroDimension);
  CHECK(code_of([] { validate({4, 4, 4}, {0, 1, 1}, false); }) == Errc::ZeroDimension);
  CHECK(code_of([] { validate({4, 4, 4}, {8, 2, 2}, false); }) == Errc::TileExceedsMatrix);
  CHECK(code_of([] { validate({4, 4, 4}, {2, 2, 2, 3, 0}, false); }) ==
        Errc::PsumWindowInvalid);  // k' not a multiple of k
  CHECK(code_of([] { validate({4, 4, 4}, {2, 2, 2, 6, 0}, false); }) ==
        Errc::PsumWindowInvalid);  // k' exceeds K and is not the full extent
  CHECK(code_of([] { validate({8, 4, 4}, {3, 2, 2, 0, 7}, false); }) ==
        Errc::PsumWindowInvalid);  // m' neither a multiple of m nor the full extent
}

TEST_CASE("strict mode requires divisibility, relaxed mode uses ceilings") {
  CHECK(code_of([] { validate({115, 1024, 1024}, {16, 16, 16}, true); }) ==
        Errc::NotDivisible);
  const auto p = validate({115, 1024, 1024}, {16, 16, 16}, false);
  CHECK(p.tm() == 8);
  CHECK(p.tn() == 64);
  CHECK(p.tk() == 64);
}

TEST_CASE("relaxed tile counts equal ceiling division exactly") {
  for (Count extent = 1; extent <= 40; ++extent)
    for (Count tile = 1; tile <= extent; ++tile) {
      const auto p = validate({extent, extent, extent}, {tile, tile, tile}, false);
      CHECK(p.tm() == (extent + tile - 1) / tile);
    }
}

TEST_CASE("edge tiles expose their clipped extents") {
  const auto p = validate({115, 10, 7}, {16, 4, 2}, false);
  CHECK(p.rows_of(0) == 16);
  CHECK(p.rows_of(7) == 3);  // 115 = 7*16 + 3
  CHECK(p.shared_of(2) == 2);
  CHECK(p.cols_of(3) == 1);
}

TEST_CASE("validate is deterministic") {
  const auto a = validate({115, 1024, 1024}, {16, 16, 16, 64, 32}, false);
  const auto b = validate({115, 1024, 1024}, {16, 16, 16, 64, 32}, false);
  CHECK(a.shape() == b.shape());
  CHECK(a.tiles() == b.tiles());
  CHECK(a.strict_divisible() == b.strict_divisible());
}

TEST_CASE("scheme names round-trip") {
  for (Scheme s : {Scheme::Naive, Scheme::InputStationary, Scheme::WeightStationary,
                   Scheme::OutputStationaryRow, Scheme::OutputStationaryCol,
                   Scheme::InputStationaryOs, Scheme::WeightStationaryOs, Scheme::Tas})
    CHECK(parse_scheme(scheme_name(s)) == s);
  CHECK(parse_scheme("os") == Scheme::OutputStationaryRow);
  CHECK_THROWS_AS(parse_scheme("bogus"), Error);
}

TEST_CASE("breakdown totals add the three operands") {
  const EmaBreakdown b{3, 5, 7};
  CHECK(b.total() == 15);
}
