#pragma once

#include <json.hpp>

#include "tas/analytic.hpp"
#include "tas/policy.hpp"
#include "tas/sim.hpp"
#include "tas/workload.hpp"

namespace tas {

// JSON serialization with stable field names. Every top-level document the
// CLI emits carries schema_version.
inline constexpr int kSchemaVersion = 1;

inline void to_json(nlohmann::json& j, const GemmShape& s) {
  j = {{"M", s.M}, {"N", s.N}, {"K", s.K}};
}

inline void to_json(nlohmann::json& j, const TileConfig& t) {
  j = {{"m", t.m}, {"n", t.n}, {"k", t.k}, {"k_prime", t.k_prime}, {"m_prime", t.m_prime}};
}

inline void to_json(nlohmann::json& j, const EmaBreakdown& b) {
  j = {{"input_elems", b.input_elems},
       {"weight_elems", b.weight_elems},
       {"output_elems", b.output_elems},
       {"total", b.total()}};
}

inline void to_json(nlohmann::json& j, const SchemeEma& e) {
  j = {{"scheme", scheme_name(e.scheme)},
       {"breakdown", e.breakdown},
       {"formula_mode", formula_mode_name(e.formula_mode)}};
}

inline void to_json(nlohmann::json& j, const SimReport& r) {
  j = {{"ema", r.ema},
       {"spill_writes", r.spill_writes},
       {"spill_reloads", r.spill_reloads},
       {"concurrent_rw_steps", r.concurrent_rw_steps},
       {"peak_psum_elems", r.peak_psum_elems},
       {"steps_executed", r.steps_executed}};
}

inline void to_json(nlohmann::json& j, const PolicyDecision& d) {
  j = {{"shape", d.shape},
       {"decision_value", d.decision_value},
       {"chosen", scheme_name(d.chosen)},
       {"reused_matrix_elems", d.reused_matrix_elems}};
}

inline void to_json(nlohmann::json& j, const GemmReportRow& r) {
  j = {{"layer_id", r.layer_id},
       {"gemm", gemm_role_name(r.role)},
       {"shape", r.shape},
       {"scheme", scheme_name(r.scheme)},
       {"decision_value", r.decision_value},
       {"ema", r.ema}};
}

}  // namespace tas
