#pragma once

#include <string_view>

#include "tas/core.hpp"

namespace tas {

// Closed-form external-memory-access model. All arithmetic is exact integer
// element counting; ratios go to floating point only at the reporting edge.
//
// With Tm = ceil(M/m), Tn = ceil(N/n), Tk = ceil(K/k), Wk = ceil(K/k'),
// Wm = ceil(M/m'), the per-operand counts are:
//
//   naive   input K*M*N     weight M*N*K    output N*M*K
//   is      input M*N       weight Tm*N*K   output Tn*M*K
//   ws      input Tk*M*N    weight N*K      output Tn*M*K
//   os-*    input Tk*M*N    weight Tm*N*K   output M*K
//   is-os   input Wk*M*N    weight Tm*N*K   output M*K
//   ws-os   input Tk*M*N    weight Wm*N*K   output M*K
//
// The output column counts transfer rounds times the output size: a psum
// spill round is charged once (the write); the matching reload is attributed
// to the same round. The trace simulator reports the spill/reload split
// separately for callers that want it.
//
// Because every multiplier scales a full matrix size and clipped edge tiles
// partition their matrix exactly, the same expressions are exact in relaxed
// (non-divisible) mode as well.

enum class FormulaMode { TableExact, Generalized };

inline std::string_view formula_mode_name(FormulaMode m) {
  return m == FormulaMode::TableExact ? "table-exact" : "generalized";
}

struct SchemeEma {
  Scheme scheme = Scheme::Naive;
  EmaBreakdown breakdown;
  FormulaMode formula_mode = FormulaMode::Generalized;
};

/// Per-operand EMA for a resolved scheme. TAS must be resolved to a hybrid
/// before calling (see tas/policy.hpp).
inline SchemeEma ema_closed_form(const ValidatedProblem& p, Scheme scheme) {
  if (scheme == Scheme::Tas)
    throw Error(Errc::SchemeUnresolved,
                "tas is a policy; resolve it to is-os or ws-os first");

  const GemmShape& s = p.shape();
  const Count mn = s.input_elems();
  const Count nk = s.weight_elems();
  const Count mk = s.output_elems();

  EmaBreakdown b;
  switch (scheme) {
    case Scheme::Naive:
      b = {s.K * mn, s.M * nk, s.N * mk};
      break;
    case Scheme::InputStationary:
      b = {mn, p.tm() * nk, p.tn() * mk};
      break;
    case Scheme::WeightStationary:
      b = {p.tk() * mn, nk, p.tn() * mk};
      break;
    case Scheme::OutputStationaryRow:
    case Scheme::OutputStationaryCol:
      b = {p.tk() * mn, p.tm() * nk, mk};
      break;
    case Scheme::InputStationaryOs:
      b = {p.wk() * mn, p.tm() * nk, mk};
      break;
    case Scheme::WeightStationaryOs:
      b = {p.tk() * mn, p.wm() * nk, mk};
      break;
    case Scheme::Tas:
      break;  // unreachable
  }

  bool table_exact = p.strict_divisible();
  if (scheme == Scheme::InputStationaryOs && p.tiles().k_prime != s.K)
    table_exact = false;
  if (scheme == Scheme::WeightStationaryOs && p.tiles().m_prime != s.M)
    table_exact = false;

  return {scheme, b, table_exact ? FormulaMode::TableExact : FormulaMode::Generalized};
}

/// EMA of the matrix the scheme holds stationary (it is streamed in exactly
/// once): M*N under is/is-os, N*K under ws/ws-os.
inline Count reused_matrix_ema(const GemmShape& shape, Scheme scheme) {
  check_shape(shape);
  switch (scheme) {
    case Scheme::InputStationary:
    case Scheme::InputStationaryOs:
      return shape.input_elems();
    case Scheme::WeightStationary:
    case Scheme::WeightStationaryOs:
      return shape.weight_elems();
    default:
      throw Error(Errc::SchemeUnresolved,
                  "no reused matrix for scheme '" + std::string(scheme_name(scheme)) + "'");
  }
}

/// (baseline - candidate) / baseline on totals; negative when the candidate
/// is worse.
inline double reduction_ratio(Count baseline_total, Count candidate_total) {
  if (baseline_total == 0)
    throw Error(Errc::DivisionByZero, "baseline total is zero");
  return static_cast<double>(baseline_total - candidate_total) /
         static_cast<double>(baseline_total);
}

inline double reduction_ratio(const EmaBreakdown& baseline, const EmaBreakdown& candidate) {
  return reduction_ratio(baseline.total(), candidate.total());
}

inline double reduction_ratio(double baseline, double candidate) {
  if (baseline == 0.0)
    throw Error(Errc::DivisionByZero, "baseline is zero");
  return (baseline - candidate) / baseline;
}

}  // namespace tas
