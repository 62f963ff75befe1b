#include <random>

#include <catch2/catch_amalgamated.hpp>

#include "tas/analytic.hpp"

using namespace tas;

namespace {

ValidatedProblem strict_problem(GemmShape s, TileConfig t) { return validate(s, t, true); }

EmaBreakdown closed(GemmShape s, TileConfig t, Scheme scheme = Scheme::Naive,
                    bool strict = true) {
  return ema_closed_form(validate(s, t, strict), scheme).breakdown;
}

constexpr Scheme kAllSchemes[] = {
    Scheme::Naive,          Scheme::InputStationary,    Scheme::WeightStationary,
    Scheme::OutputStationaryRow, Scheme::OutputStationaryCol, Scheme::InputStationaryOs,
    Scheme::WeightStationaryOs};

}  // namespace

TEST_CASE("naive counts every operand once per reuse opportunity") {
  const auto b = closed({2, 2, 2}, {1, 1, 1});
  CHECK(b.input_elems == 8);   // K * MN
  CHECK(b.weight_elems == 8);  // M * NK
  CHECK(b.output_elems == 8);  // N * MK
  CHECK(b.total() == 3 * 2 * 2 * 2);
}

TEST_CASE("input stationary loads the input once and re-reads the rest") {
  const auto b = closed({4, 4, 4}, {2, 2, 2}, Scheme::InputStationary);
  CHECK(b.input_elems == 16);
  CHECK(b.weight_elems == 32);  // Tm * NK
  CHECK(b.output_elems == 32);  // Tn * MK
  CHECK(b.total() == 80);
}

TEST_CASE("weight stationary mirrors input stationary") {
  const auto b = closed({4, 4, 4}, {2, 2, 2}, Scheme::WeightStationary);
  CHECK(b.input_elems == 32);
  CHECK(b.weight_elems == 16);
  CHECK(b.output_elems == 32);
}

TEST_CASE("output stationary writes each output element exactly once") {
  for (Scheme s : {Scheme::OutputStationaryRow, Scheme::OutputStationaryCol}) {
    const auto b = closed({4, 6, 8}, {2, 2, 2}, s);
    CHECK(b.input_elems == 4 * 24);  // Tk * MN
    CHECK(b.weight_elems == 2 * 48);
    CHECK(b.output_elems == 32);
  }
}

TEST_CASE("hybrid input-stationary matches the sequence-length table row") {
  const auto b = closed({115, 1024, 1024}, {16, 16, 16}, Scheme::InputStationaryOs, false);
  CHECK(b.input_elems == 117760);  // one pass over the input matrix
  CHECK(b.output_elems == 115 * 1024);
}

TEST_CASE("hybrid window below the full extent multiplies input passes") {
  // trace-checked configuration: two k'-groups, so two input passes
  const auto b = closed({4, 4, 8}, {2, 2, 2, 4, 0}, Scheme::InputStationaryOs);
  CHECK(b.input_elems == 2 * 16);
  CHECK(b.weight_elems == 2 * 32);
  CHECK(b.output_elems == 32);
}

TEST_CASE("formula mode distinguishes the exact table from generalizations") {
  CHECK(ema_closed_form(strict_problem({4, 4, 4}, {2, 2, 2}), Scheme::InputStationary)
            .formula_mode == FormulaMode::TableExact);
  CHECK(ema_closed_form(strict_problem({4, 4, 8}, {2, 2, 2, 4, 0}),
                        Scheme::InputStationaryOs)
            .formula_mode == FormulaMode::Generalized);
  CHECK(ema_closed_form(validate({5, 4, 4}, {2, 2, 2}, false), Scheme::InputStationary)
            .formula_mode == FormulaMode::Generalized);
}

TEST_CASE("tas must be resolved before closed-form evaluation") {
  CHECK_THROWS_AS(ema_closed_form(strict_problem({4, 4, 4}, {2, 2, 2}), Scheme::Tas),
                  Error);
}

TEST_CASE("reused matrix is the stationary operand") {
  CHECK(reused_matrix_ema({384, 1024, 1024}, Scheme::InputStationary) == 393216);
  CHECK(reused_matrix_ema({15000, 1024, 1024}, Scheme::InputStationary) == 15360000);
  CHECK(reused_matrix_ema({384, 1024, 1024}, Scheme::WeightStationaryOs) == 1048576);
  CHECK_THROWS_AS(reused_matrix_ema({4, 4, 4}, Scheme::Naive), Error);
}

TEST_CASE("switching the stationary matrix saves 75% at 4:1 row/column skew") {
  const GemmShape s{3072, 768, 768};
  const Count is_reuse = reused_matrix_ema(s, Scheme::InputStationary);
  const Count ws_reuse = reused_matrix_ema(s, Scheme::WeightStationary);
  CHECK(is_reuse == 2359296);
  CHECK(ws_reuse == 589824);
  CHECK(reduction_ratio(is_reuse, ws_reuse) == 0.75);
}

TEST_CASE("reduction ratio basics") {
  CHECK(reduction_ratio(EmaBreakdown{100, 0, 0}, EmaBreakdown{3, 0, 0}) == 0.97);
  CHECK(reduction_ratio(EmaBreakdown{5, 5, 5}, EmaBreakdown{5, 5, 5}) == 0.0);
  CHECK(reduction_ratio(Count{10}, Count{20}) == -1.0);
  CHECK_THROWS_AS(reduction_ratio(EmaBreakdown{}, EmaBreakdown{1, 0, 0}), Error);
}

TEST_CASE("a 512-row encoder projection reduces traffic by about 98%") {
  const GemmShape s{512, 768, 768};
  const auto naive = closed(s, {16, 16, 16}, Scheme::Naive);
  const auto hybrid = closed(s, {16, 16, 16}, Scheme::InputStationaryOs);
  CHECK(naive.total() == 905969664);
  CHECK(hybrid.total() == 393216 + 18874368 + 393216);
  CHECK_THAT(reduction_ratio(naive, hybrid),
             Catch::Matchers::WithinAbs(0.9783, 0.0001));
}

TEST_CASE("input stationary minimizes input traffic at fixed tiles") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<Count> dim(1, 12);
  for (int trial = 0; trial < 200; ++trial) {
    const Count m = dim(rng), n = dim(rng), k = dim(rng);
    const GemmShape s{m * dim(rng), n * dim(rng), k * dim(rng)};
    const TileConfig t{m, n, k};
    const auto is = closed(s, t, Scheme::InputStationary);
    for (Scheme other : kAllSchemes) {
      const auto b = closed(s, t, other);
      CHECK(is.input_elems <= b.input_elems);
      CHECK(closed(s, t, Scheme::WeightStationary).weight_elems <= b.weight_elems);
      // one-pass floors hold for every scheme
      CHECK(b.input_elems >= s.input_elems());
      CHECK(b.weight_elems >= s.weight_elems());
      CHECK(b.output_elems >= s.output_elems());
    }
  }
}

TEST_CASE("breakdown fields are monotone in the matrix dimensions") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<Count> dim(1, 10);
  for (int trial = 0; trial < 100; ++trial) {
    const Count m = dim(rng), n = dim(rng), k = dim(rng);
    const GemmShape s{m * dim(rng), n * dim(rng), k * dim(rng)};
    const GemmShape bigger{s.M + m, s.N + n, s.K + k};
    const TileConfig t{m, n, k};
    for (Scheme scheme : kAllSchemes) {
      const auto lo = closed(s, t, scheme);
      const auto hi = closed(bigger, t, scheme);
      CHECK(hi.input_elems >= lo.input_elems);
      CHECK(hi.weight_elems >= lo.weight_elems);
      CHECK(hi.output_elems >= lo.output_elems);
    }
  }
}

TEST_CASE("full psum windows recover the base hybrid rows") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<Count> dim(1, 12);
  for (int trial = 0; trial < 100; ++trial) {
    const Count m = dim(rng), n = dim(rng), k = dim(rng);
    const GemmShape s{m * dim(rng), n * dim(rng), k * dim(rng)};
    const auto defaulted = closed(s, {m, n, k}, Scheme::InputStationaryOs);
    const auto explicit_full = closed(s, {m, n, k, s.K, s.M}, Scheme::InputStationaryOs);
    CHECK(defaulted == explicit_full);
    CHECK(defaulted.input_elems == s.input_elems());  // Wk == 1
    const auto ws = closed(s, {m, n, k, s.K, s.M}, Scheme::WeightStationaryOs);
    CHECK(ws.weight_elems == s.weight_elems());  // Wm == 1
  }
}

TEST_CASE("row- and column-oriented output stationary count identically") {
  std::mt19937_64 rng(14);
  std::uniform_int_distribution<Count> dim(1, 12);
  for (int trial = 0; trial < 100; ++trial) {
    const Count m = dim(rng), n = dim(rng), k = dim(rng);
    const GemmShape s{m * dim(rng), n * dim(rng), k * dim(rng)};
    CHECK(closed(s, {m, n, k}, Scheme::OutputStationaryRow) ==
          closed(s, {m, n, k}, Scheme::OutputStationaryCol));
  }
}
