#pragma once

#include <span>
#include <vector>

#include "tas/core.hpp"

namespace tas {

/// Per-GEMM stationary-scheme selection. The decision compares the two
/// candidate reused-matrix sizes: decision_value = M*N - N*K = N*(M-K).
/// Negative picks is-os (input matrix smaller), zero or positive picks
/// ws-os.
struct PolicyDecision {
  GemmShape shape;
  Count decision_value = 0;
  Scheme chosen = Scheme::WeightStationaryOs;
  Count reused_matrix_elems = 0;
};

inline PolicyDecision choose_scheme(const GemmShape& shape) {
  check_shape(shape);
  PolicyDecision d;
  d.shape = shape;
  d.decision_value = shape.input_elems() - shape.weight_elems();
  if (shape.M < shape.K) {
    d.chosen = Scheme::InputStationaryOs;
    d.reused_matrix_elems = shape.input_elems();
  } else {
    d.chosen = Scheme::WeightStationaryOs;
    d.reused_matrix_elems = shape.weight_elems();
  }
  return d;
}

/// One decision per GEMM, order preserving; decisions are independent.
inline std::vector<PolicyDecision> plan_workload(std::span<const GemmShape> gemms) {
  if (gemms.empty()) throw Error(Errc::EmptyWorkload, "no GEMMs to plan");
  std::vector<PolicyDecision> out;
  out.reserve(gemms.size());
  for (const GemmShape& g : gemms) out.push_back(choose_scheme(g));
  return out;
}

/// Resolves the psum windows for a chosen hybrid against a psum budget:
/// the largest window that fits the capacity, the full extent when the
/// budget is unlimited (0). The selected window is what reports record.
inline TileConfig fit_psum_windows(const GemmShape& shape, TileConfig tiles,
                                   Scheme chosen, Count psum_capacity_elems) {
  if (psum_capacity_elems <= 0) return tiles;
  if (chosen == Scheme::InputStationaryOs && tiles.k_prime == 0) {
    Count fit = (psum_capacity_elems / tiles.m) / tiles.k * tiles.k;
    fit = std::min(fit, shape.K);
    tiles.k_prime = std::max(fit, tiles.k);  // below one tile: let the capacity check flag it
  }
  if (chosen == Scheme::WeightStationaryOs && tiles.m_prime == 0) {
    Count fit = (psum_capacity_elems / tiles.k) / tiles.m * tiles.m;
    fit = std::min(fit, shape.M);
    tiles.m_prime = std::max(fit, tiles.m);
  }
  return tiles;
}

}  // namespace tas
