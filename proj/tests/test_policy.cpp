#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "tas/analytic.hpp"
#include "tas/policy.hpp"
#include "tas/workload.hpp"

using namespace tas;

TEST_CASE("short sequences pick the input-stationary hybrid") {
  const auto d = choose_scheme({115, 1024, 1024});
  CHECK(d.chosen == Scheme::InputStationaryOs);
  CHECK(d.decision_value == -930816);
  CHECK(d.reused_matrix_elems == 117760);
}

TEST_CASE("long sequences pick the weight-stationary hybrid") {
  const auto d = choose_scheme({1565, 1024, 1024});
  CHECK(d.chosen == Scheme::WeightStationaryOs);
  CHECK(d.decision_value == 553984);
  CHECK(d.reused_matrix_elems == 1024 * 1024);
}

TEST_CASE("ties go to the weight-stationary hybrid") {
  const auto d = choose_scheme({768, 333, 768});
  CHECK(d.decision_value == 0);
  CHECK(d.chosen == Scheme::WeightStationaryOs);
}

TEST_CASE("decision value factors as N*(M-K)") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<Count> dim(1, 5000);
  for (int t = 0; t < 500; ++t) {
    const GemmShape s{dim(rng), dim(rng), dim(rng)};
    const auto d = choose_scheme(s);
    CHECK(d.decision_value == s.N * (s.M - s.K));
    CHECK(d.reused_matrix_elems == std::min(s.input_elems(), s.weight_elems()));
  }
}

TEST_CASE("scaling the shared dimension never flips the decision") {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<Count> dim(1, 2000);
  std::uniform_int_distribution<Count> mul(2, 9);
  for (int t = 0; t < 200; ++t) {
    const GemmShape s{dim(rng), dim(rng), dim(rng)};
    const GemmShape scaled{s.M, s.N * mul(rng), s.K};
    CHECK(choose_scheme(s).chosen == choose_scheme(scaled).chosen);
  }
}

TEST_CASE("planning maps each GEMM independently in order") {
  CHECK_THROWS_AS(plan_workload({}), Error);

  const auto layers = expand(preset("bert-base"), 512);
  std::vector<GemmShape> gemms;
  for (const LabeledGemm& g : layers[0].gemms) gemms.push_back(g.shape);
  const auto decisions = plan_workload(gemms);
  REQUIRE(decisions.size() == 6);
  for (const auto& d : decisions) CHECK(d.chosen == Scheme::InputStationaryOs);

  // at sequence 3072 the square projections flip to weight stationary
  const auto long_layers = expand(preset("bert-base"), 3072);
  const auto qkv = choose_scheme(long_layers[0].gemms[0].shape);
  CHECK(qkv.chosen == Scheme::WeightStationaryOs);
  CHECK(qkv.reused_matrix_elems == 589824);

  CHECK(choose_scheme({1, 1, 2}).chosen == Scheme::InputStationaryOs);
}

TEST_CASE("the sign rule equals the hybrid cost argmin for square tiles") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<Count> tile(1, 8);
  std::uniform_int_distribution<Count> reps(1, 24);
  std::uniform_int_distribution<Count> shared(1, 512);
  for (int t = 0; t < 200; ++t) {
    const Count mk_tile = tile(rng);
    const GemmShape s{mk_tile * reps(rng), shared(rng), mk_tile * reps(rng)};
    const TileConfig cfg{mk_tile, 1, mk_tile};
    const auto p = validate(s, cfg, true);
    const Count is_total = ema_closed_form(p, Scheme::InputStationaryOs).breakdown.total();
    const Count ws_total = ema_closed_form(p, Scheme::WeightStationaryOs).breakdown.total();
    const auto d = choose_scheme(s);
    if (is_total == ws_total) {
      CHECK(s.M == s.K);
    } else {
      const Scheme argmin =
          is_total < ws_total ? Scheme::InputStationaryOs : Scheme::WeightStationaryOs;
      CHECK(d.chosen == argmin);
    }
  }
}

TEST_CASE("psum windows size to the configured budget") {
  const GemmShape s{64, 64, 64};
  TileConfig t{4, 4, 4};

  // unlimited budget keeps the full-extent defaults
  CHECK(fit_psum_windows(s, t, Scheme::InputStationaryOs, 0).k_prime == 0);

  // 4x40 elements hold k' = 40, the largest multiple of k under the budget
  const auto fitted = fit_psum_windows(s, t, Scheme::InputStationaryOs, 160);
  CHECK(fitted.k_prime == 40);

  // enough for the whole extent caps at K
  CHECK(fit_psum_windows(s, t, Scheme::InputStationaryOs, 100000).k_prime == 64);

  const auto ws = fit_psum_windows(s, t, Scheme::WeightStationaryOs, 160);
  CHECK(ws.m_prime == 40);

  // explicit windows are left alone
  TileConfig pinned{4, 4, 4, 8, 0};
  CHECK(fit_psum_windows(s, pinned, Scheme::InputStationaryOs, 160).k_prime == 8);
}
