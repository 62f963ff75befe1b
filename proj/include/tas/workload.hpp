#pragma once

#include <array>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "tas/analytic.hpp"
#include "tas/policy.hpp"

namespace tas {

/// The six dense linear projections of one transformer encoder layer.
/// Attention-score GEMMs (QK^T, probs x V) are out of scope here; the
/// adaptive policy targets the projections.
enum class GemmRole { Query, Key, Value, AttnOut, FfnUp, FfnDown };

inline constexpr std::array<GemmRole, 6> kGemmRoles = {
    GemmRole::Query,  GemmRole::Key,   GemmRole::Value,
    GemmRole::AttnOut, GemmRole::FfnUp, GemmRole::FfnDown};

inline std::string_view gemm_role_name(GemmRole r) {
  switch (r) {
    case GemmRole::Query: return "query";
    case GemmRole::Key: return "key";
    case GemmRole::Value: return "value";
    case GemmRole::AttnOut: return "attn_out";
    case GemmRole::FfnUp: return "ffn_up";
    case GemmRole::FfnDown: return "ffn_down";
  }
  return "?";
}

struct ModelConfig {
  std::string name;
  Count hidden_dim = 0;
  Count ffn_dim = 0;
  Count num_layers = 0;
  Count default_seq_len = 0;
};

/// Provenance of each preset field, printed by the presets report so
/// built-in table data is never conflated with conventional fill-ins.
struct PresetInfo {
  ModelConfig config;
  std::string_view hidden_dim_src;
  std::string_view ffn_dim_src;
  std::string_view num_layers_src;
  std::string_view seq_len_src;
};

inline const std::vector<PresetInfo>& presets() {
  static const char* kTable = "built-in table";
  static const char* kPublic = "public model definition";
  static const char* kConvention = "4x hidden convention";
  static const std::vector<PresetInfo> kPresets = {
      {{"vit-g14", 4096, 16384, 48, 518}, kTable, kConvention, kPublic, kTable},
      {{"wav2vec2-xls-r", 2560, 10240, 48, 1536}, kTable, kConvention, kPublic, kTable},
      {{"gpt3", 12288, 49152, 96, 2048}, kTable, kConvention, kPublic, kTable},
      {{"bert-base", 768, 3072, 12, 512}, kPublic, kPublic, kPublic, kPublic},
      {{"wav2vec2-large", 1024, 4096, 24, 384}, kPublic, kPublic, kPublic, kPublic},
  };
  return kPresets;
}

inline ModelConfig preset(std::string_view name) {
  for (const PresetInfo& p : presets())
    if (p.config.name == name) return p.config;
  throw Error(Errc::UnknownModel, "unknown model '" + std::string(name) + "'");
}

/// Builds a model from key=value pairs (see config file docs): either a
/// standalone definition or a preset override via base=<preset>.
inline ModelConfig model_from_kv(const std::map<std::string, std::string>& kv) {
  ModelConfig cfg;
  if (auto it = kv.find("base"); it != kv.end()) cfg = preset(it->second);
  auto get_count = [&](const char* key, Count& field) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    try {
      field = std::stoll(it->second);
    } catch (const std::exception&) {
      throw Error(Errc::BadArgument,
                  std::string(key) + " must be an integer, got '" + it->second + "'");
    }
  };
  if (auto it = kv.find("name"); it != kv.end()) cfg.name = it->second;
  get_count("hidden_dim", cfg.hidden_dim);
  get_count("ffn_dim", cfg.ffn_dim);
  get_count("num_layers", cfg.num_layers);
  get_count("default_seq_len", cfg.default_seq_len);
  if (cfg.name.empty()) throw Error(Errc::BadArgument, "model config needs a name");
  if (cfg.hidden_dim < 1 || cfg.ffn_dim < 1 || cfg.num_layers < 1 ||
      cfg.default_seq_len < 1)
    throw Error(Errc::BadArgument,
                "model config needs positive hidden_dim, ffn_dim, num_layers, "
                "default_seq_len");
  if (cfg.ffn_dim < cfg.hidden_dim)
    throw Error(Errc::BadArgument, "ffn_dim must be >= hidden_dim");
  return cfg;
}

struct LabeledGemm {
  GemmRole role;
  GemmShape shape;
};

struct LayerGemms {
  Count layer_id = 0;
  std::array<LabeledGemm, 6> gemms;
};

inline GemmShape projection_shape(const ModelConfig& cfg, Count seq_len, GemmRole role) {
  switch (role) {
    case GemmRole::FfnUp:
      return {seq_len, cfg.hidden_dim, cfg.ffn_dim};
    case GemmRole::FfnDown:
      return {seq_len, cfg.ffn_dim, cfg.hidden_dim};
    default:
      return {seq_len, cfg.hidden_dim, cfg.hidden_dim};
  }
}

/// num_layers entries with the six labeled projection GEMMs each. Sequence
/// length feeds every M; the encoder layers are dimensionally identical.
inline std::vector<LayerGemms> expand(const ModelConfig& cfg, Count seq_len) {
  if (seq_len < 1) throw Error(Errc::ZeroDimension, "seq_len must be >= 1");
  std::vector<LayerGemms> layers(static_cast<size_t>(cfg.num_layers));
  for (Count layer = 0; layer < cfg.num_layers; ++layer) {
    layers[static_cast<size_t>(layer)].layer_id = layer;
    for (size_t g = 0; g < kGemmRoles.size(); ++g)
      layers[static_cast<size_t>(layer)].gemms[g] = {
          kGemmRoles[g], projection_shape(cfg, seq_len, kGemmRoles[g])};
  }
  return layers;
}

/// Either one fixed scheme for every GEMM or the adaptive per-GEMM policy.
struct WorkloadPolicy {
  bool adaptive = false;
  Scheme fixed = Scheme::Naive;

  static WorkloadPolicy tas() { return {true, Scheme::Tas}; }
  static WorkloadPolicy fixed_scheme(Scheme s) {
    if (s == Scheme::Tas) return tas();
    return {false, s};
  }

  std::string_view name() const { return adaptive ? "tas" : scheme_name(fixed); }
};

struct GemmReportRow {
  Count layer_id = 0;
  GemmRole role = GemmRole::Query;
  GemmShape shape;
  Scheme scheme = Scheme::Naive;
  Count decision_value = 0;
  EmaBreakdown ema;
};

struct WorkloadReport {
  std::vector<GemmReportRow> rows;        // 6 per layer, in role order
  std::vector<EmaBreakdown> per_layer;
  std::vector<Count> per_layer_macs;
  EmaBreakdown total;
  Count total_macs = 0;
};

/// Sums closed-form EMA over every projection GEMM of every layer. The same
/// TileConfig is applied to each GEMM; unset psum windows default to the
/// GEMM's own full extents. Validation errors propagate.
inline WorkloadReport workload_ema(const ModelConfig& cfg, Count seq_len,
                                   const TileConfig& tiles, const WorkloadPolicy& policy,
                                   bool strict = false) {
  WorkloadReport rep;
  for (const LayerGemms& layer : expand(cfg, seq_len)) {
    EmaBreakdown layer_sum;
    Count layer_macs = 0;
    for (const LabeledGemm& lg : layer.gemms) {
      const PolicyDecision d = choose_scheme(lg.shape);
      const Scheme scheme = policy.adaptive ? d.chosen : policy.fixed;
      const ValidatedProblem vp = validate(lg.shape, tiles, strict);
      const EmaBreakdown ema = ema_closed_form(vp, scheme).breakdown;
      rep.rows.push_back({layer.layer_id, lg.role, lg.shape, scheme, d.decision_value, ema});
      layer_sum.input_elems += ema.input_elems;
      layer_sum.weight_elems += ema.weight_elems;
      layer_sum.output_elems += ema.output_elems;
      layer_macs += lg.shape.macs();
    }
    rep.per_layer.push_back(layer_sum);
    rep.per_layer_macs.push_back(layer_macs);
    rep.total.input_elems += layer_sum.input_elems;
    rep.total.weight_elems += layer_sum.weight_elems;
    rep.total.output_elems += layer_sum.output_elems;
    rep.total_macs += layer_macs;
  }
  return rep;
}

/// Fixed per-GEMM CSV layout used by reports.
inline void write_workload_csv(std::ostream& os, const WorkloadReport& rep) {
  os << "layer_id,gemm,scheme,decision_value,input_ema,weight_ema,output_ema,total\n";
  for (const GemmReportRow& r : rep.rows)
    os << r.layer_id << ',' << gemm_role_name(r.role) << ',' << scheme_name(r.scheme)
       << ',' << r.decision_value << ',' << r.ema.input_elems << ','
       << r.ema.weight_elems << ',' << r.ema.output_elems << ',' << r.ema.total()
       << '\n';
}

}  // namespace tas
