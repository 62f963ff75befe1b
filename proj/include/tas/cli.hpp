#pragma once

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tas/config.hpp"
#include "tas/energy.hpp"
#include "tas/report.hpp"

namespace tas::cli {

// Exit codes: 0 success, 2 user error, 3 internal invariant failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 2;
inline constexpr int kExitInternalError = 3;

inline constexpr Count kTraceStepLimit = 100'000'000;

namespace detail {

struct CommonArgs {
  Count M = 0, N = 0, K = 0;
  Count tile = 16;
  Count tile_m = 0, tile_n = 0, tile_k = 0;
  Count k_prime = 0, m_prime = 0;
  std::string scheme = "tas";
  std::string mode = "auto";  // strict | relaxed | auto
  std::string format = "table";
  std::string output;
  std::string model;
  std::string model_config;
  Count seq_len = 0;
  std::string config_path;
  double ext_cost = -1.0;
  double int_cost = -1.0;
  bool timestamps = false;
};

inline void add_shape_flags(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--M", a.M, "input-matrix rows");
  cmd->add_option("--N", a.N, "shared dimension (input cols = weight rows)");
  cmd->add_option("--K", a.K, "weight-matrix columns");
  cmd->add_option("--model", a.model, "model preset name (see `presets`)");
  cmd->add_option("--model-config", a.model_config, "model definition file (key = value)");
  cmd->add_option("--seq-len", a.seq_len, "sequence length for --model");
}

inline void add_tile_flags(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--tile", a.tile, "square tile size, sets m=n=k (default 16)");
  cmd->add_option("--tile-m", a.tile_m, "override tile rows m");
  cmd->add_option("--tile-n", a.tile_n, "override shared tile n");
  cmd->add_option("--tile-k", a.tile_k, "override tile columns k");
  cmd->add_option("--kprime", a.k_prime, "is-os psum window width (multiple of k, default K)");
  cmd->add_option("--mprime", a.m_prime, "ws-os psum window height (multiple of m, default M)");
  cmd->add_option("--mode", a.mode, "strict | relaxed | auto (default auto)")
      ->check(CLI::IsMember({"strict", "relaxed", "auto"}));
}

inline void add_output_flags(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--format", a.format, "table | json | csv")
      ->check(CLI::IsMember({"table", "json", "csv"}));
  cmd->add_option("--output", a.output, "write report to file instead of stdout");
  cmd->add_flag("--timestamps", a.timestamps, "include a timestamp (off by default for reproducible output)");
  cmd->add_option("--config", a.config_path,
                  "defaults file (key = value); also read from $TAS_CONFIG");
}

inline void add_energy_flags(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--ext-cost", a.ext_cost, "energy per externally transferred element");
  cmd->add_option("--int-cost", a.int_cost, "energy per MAC");
}

inline std::map<std::string, std::string> load_defaults(const CommonArgs& a) {
  std::string path = a.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("TAS_CONFIG")) path = env;
  }
  if (path.empty()) return {};
  return load_key_value(path);
}

inline EnergyParams resolve_energy(const CommonArgs& a,
                                   const std::map<std::string, std::string>& defaults) {
  EnergyParams p;
  auto from_cfg = [&](const char* key, double& field) {
    auto it = defaults.find(key);
    if (it == defaults.end()) return;
    try {
      field = std::stod(it->second);
    } catch (const std::exception&) {
      throw Error(Errc::BadArgument, std::string(key) + " must be numeric");
    }
  };
  from_cfg("ext_cost_per_elem", p.ext_cost_per_elem);
  from_cfg("int_cost_per_mac", p.int_cost_per_mac);
  if (a.ext_cost > 0) p.ext_cost_per_elem = a.ext_cost;
  if (a.int_cost > 0) p.int_cost_per_mac = a.int_cost;
  p.check();
  return p;
}

inline std::optional<ModelConfig> resolve_model(const CommonArgs& a) {
  if (!a.model_config.empty()) return model_from_kv(load_key_value(a.model_config));
  if (!a.model.empty()) return preset(a.model);
  return std::nullopt;
}

inline GemmShape resolve_shape(const CommonArgs& a) {
  if (a.M != 0 || a.N != 0 || a.K != 0) {
    return GemmShape{a.M, a.N, a.K};
  }
  if (auto model = resolve_model(a)) {
    const Count seq = a.seq_len > 0 ? a.seq_len : model->default_seq_len;
    return projection_shape(*model, seq, GemmRole::Query);
  }
  throw Error(Errc::BadArgument, "specify --M/--N/--K or --model");
}

inline TileConfig resolve_tiles(const CommonArgs& a) {
  TileConfig t;
  t.m = a.tile_m > 0 ? a.tile_m : a.tile;
  t.n = a.tile_n > 0 ? a.tile_n : a.tile;
  t.k = a.tile_k > 0 ? a.tile_k : a.tile;
  t.k_prime = a.k_prime;
  t.m_prime = a.m_prime;
  return t;
}

// auto mode: strict when every divisibility holds, relaxed otherwise.
inline ValidatedProblem resolve_problem(const GemmShape& shape, const TileConfig& tiles,
                                        const std::string& mode) {
  if (mode == "strict") return validate(shape, tiles, true);
  if (mode == "relaxed") return validate(shape, tiles, false);
  try {
    return validate(shape, tiles, true);
  } catch (const Error& e) {
    if (e.code() != Errc::NotDivisible) throw;
    return validate(shape, tiles, false);
  }
}

struct OutputSink {
  explicit OutputSink(const CommonArgs& a, std::ostream& fallback) {
    if (!a.output.empty()) {
      file.open(a.output);
      if (!file) throw Error(Errc::BadArgument, "cannot open output file '" + a.output + "'");
      os = &file;
    } else {
      os = &fallback;
    }
  }
  std::ofstream file;
  std::ostream* os = nullptr;
};

inline std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

inline std::string fmt_pct(double fraction, int digits = 4) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(digits) << fraction * 100.0 << '%';
  return ss.str();
}

inline std::string fmt_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(12) << v;
  return ss.str();
}

inline std::vector<Count> parse_count_list(const std::string& text, const char* what) {
  std::vector<Count> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoll(item));
    } catch (const std::exception&) {
      throw Error(Errc::BadArgument, std::string(what) + " has a non-integer entry '" + item + "'");
    }
  }
  return out;
}

struct ResolvedScheme {
  Scheme scheme;
  std::optional<PolicyDecision> decision;  // present when the policy chose
};

inline ResolvedScheme resolve_scheme(const std::string& name, const GemmShape& shape) {
  const Scheme s = parse_scheme(name);
  if (s != Scheme::Tas) return {s, std::nullopt};
  const PolicyDecision d = choose_scheme(shape);
  return {d.chosen, d};
}

// ---- analyze ----

struct AnalyzeArgs : CommonArgs {
  bool oracle_argmin = false;
};

// Brute-forced cross-check of the O(1) sign rule: both hybrid totals at the
// actual tiles, and whether the rule's pick is the argmin. Ceiling rounding
// can make them disagree on near-ties at non-divisible tilings.
struct ArgminOracle {
  Count is_os_total = 0;
  Count ws_os_total = 0;
  Scheme argmin = Scheme::WeightStationaryOs;
  bool agrees = true;
};

inline ArgminOracle oracle_argmin(const ValidatedProblem& problem, Scheme chosen) {
  ArgminOracle o;
  o.is_os_total = ema_closed_form(problem, Scheme::InputStationaryOs).breakdown.total();
  o.ws_os_total = ema_closed_form(problem, Scheme::WeightStationaryOs).breakdown.total();
  o.argmin = o.is_os_total < o.ws_os_total ? Scheme::InputStationaryOs
                                           : Scheme::WeightStationaryOs;
  o.agrees = chosen == o.argmin || o.is_os_total == o.ws_os_total;
  return o;
}

inline int run_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const GemmShape shape = resolve_shape(a);
  const ValidatedProblem problem = resolve_problem(shape, resolve_tiles(a), a.mode);
  const ResolvedScheme rs = resolve_scheme(a.scheme, shape);
  const SchemeEma ema = ema_closed_form(problem, rs.scheme);
  const char* mode = problem.strict_divisible() ? "strict" : "relaxed";

  std::optional<ArgminOracle> oracle;
  if (a.oracle_argmin) {
    if (!rs.decision)
      throw Error(Errc::BadArgument, "--oracle-argmin needs --scheme tas");
    oracle = oracle_argmin(problem, rs.scheme);
  }

  OutputSink sink(a, out);
  std::ostream& os = *sink.os;
  if (a.format == "json") {
    nlohmann::json j = {{"schema_version", kSchemaVersion},
                        {"command", "analyze"},
                        {"shape", shape},
                        {"tiles", problem.tiles()},
                        {"mode", mode},
                        {"ema", ema}};
    if (rs.decision) j["decision"] = *rs.decision;
    if (oracle)
      j["oracle_argmin"] = {{"is_os_total", oracle->is_os_total},
                            {"ws_os_total", oracle->ws_os_total},
                            {"argmin", scheme_name(oracle->argmin)},
                            {"agrees", oracle->agrees}};
    if (a.timestamps) j["timestamp"] = utc_timestamp();
    os << j.dump(2) << '\n';
    return kExitOk;
  }
  if (a.format == "csv") {
    const TileConfig& t = problem.tiles();
    os << "M,N,K,m,n,k,k_prime,m_prime,mode,scheme,formula_mode,input_ema,weight_ema,"
          "output_ema,total\n"
       << shape.M << ',' << shape.N << ',' << shape.K << ',' << t.m << ',' << t.n << ','
       << t.k << ',' << t.k_prime << ',' << t.m_prime << ',' << mode << ','
       << scheme_name(ema.scheme) << ',' << formula_mode_name(ema.formula_mode) << ','
       << ema.breakdown.input_elems << ',' << ema.breakdown.weight_elems << ','
       << ema.breakdown.output_elems << ',' << ema.breakdown.total() << '\n';
    return kExitOk;
  }
  if (a.timestamps) os << "timestamp: " << utc_timestamp() << '\n';
  const TileConfig& t = problem.tiles();
  os << "command: analyze\n"
     << "shape: M=" << shape.M << " N=" << shape.N << " K=" << shape.K << '\n'
     << "tiles: m=" << t.m << " n=" << t.n << " k=" << t.k << " k_prime=" << t.k_prime
     << " m_prime=" << t.m_prime << '\n'
     << "mode: " << mode << '\n';
  if (rs.decision) {
    os << "policy: tas\n"
       << "decision_value: " << rs.decision->decision_value << '\n'
       << "chosen: " << scheme_name(rs.decision->chosen) << '\n'
       << "reused_matrix_elems: " << rs.decision->reused_matrix_elems << '\n';
  }
  os << "scheme: " << scheme_name(ema.scheme) << '\n'
     << "formula_mode: " << formula_mode_name(ema.formula_mode) << '\n'
     << "input_ema: " << ema.breakdown.input_elems << '\n'
     << "weight_ema: " << ema.breakdown.weight_elems << '\n'
     << "output_ema: " << ema.breakdown.output_elems << '\n'
     << "total_ema: " << ema.breakdown.total() << '\n';
  if (oracle) {
    os << "is_os_total: " << oracle->is_os_total << '\n'
       << "ws_os_total: " << oracle->ws_os_total << '\n'
       << "argmin: " << scheme_name(oracle->argmin) << '\n'
       << "argmin_agrees: " << (oracle->agrees ? "yes" : "no") << '\n';
  }
  return kExitOk;
}

// ---- simulate / verify ----

struct SimulateArgs : CommonArgs {
  Count psum_capacity = 0;
  Count input_slots = 1;
  Count weight_slots = 1;
  std::string order = "serpentine";
  std::string dump_schedule;
  bool verify = false;
  Count seed = 0;
};

inline int run_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const GemmShape shape = resolve_shape(a);
  const ResolvedScheme rs = resolve_scheme(a.scheme, shape);
  TileConfig tiles = resolve_tiles(a);
  if (rs.decision)
    tiles = fit_psum_windows(shape, tiles, rs.scheme, a.psum_capacity);
  const ValidatedProblem problem = resolve_problem(shape, tiles, a.mode);
  const Traversal order =
      a.order == "row-major" ? Traversal::RowMajorReset : Traversal::Serpentine;

  const TileSchedule schedule = generate(problem, rs.scheme, order);
  if (schedule.total_steps() > kTraceStepLimit)
    throw Error(Errc::ProblemTooLarge,
                "schedule has " + std::to_string(schedule.total_steps()) +
                    " steps (limit " + std::to_string(kTraceStepLimit) +
                    "); use `analyze` for closed-form results");

  if (!a.dump_schedule.empty()) {
    std::ofstream dump(a.dump_schedule);
    if (!dump)
      throw Error(Errc::BadArgument, "cannot open dump file '" + a.dump_schedule + "'");
    schedule.dump_csv(dump);
  }

  BufferModel buffers;
  buffers.input_tile_slots = a.input_slots;
  buffers.weight_tile_slots = a.weight_slots;
  buffers.psum_capacity_elems = a.psum_capacity;
  const SimReport report = simulate(schedule, buffers);
  const SchemeEma analytic = ema_closed_form(problem, rs.scheme);
  const bool matches = report.ema == analytic.breakdown;

  std::optional<bool> functional;
  if (a.verify) functional = verify_functional(schedule, static_cast<std::uint64_t>(a.seed));

  OutputSink sink(a, out);
  std::ostream& os = *sink.os;
  const char* mode = problem.strict_divisible() ? "strict" : "relaxed";
  if (a.format == "json") {
    nlohmann::json j = {{"schema_version", kSchemaVersion},
                        {"command", "simulate"},
                        {"shape", shape},
                        {"tiles", problem.tiles()},
                        {"mode", mode},
                        {"scheme", scheme_name(rs.scheme)},
                        {"order", a.order},
                        {"analytic", analytic},
                        {"simulated", report},
                        {"analytic_matches_simulated", matches}};
    if (rs.decision) j["decision"] = *rs.decision;
    if (functional) j["functional"] = *functional ? "pass" : "fail";
    if (a.timestamps) j["timestamp"] = utc_timestamp();
    os << j.dump(2) << '\n';
  } else {
    if (a.timestamps) os << "timestamp: " << utc_timestamp() << '\n';
    const TileConfig& t = problem.tiles();
    os << "command: simulate\n"
       << "shape: M=" << shape.M << " N=" << shape.N << " K=" << shape.K << '\n'
       << "tiles: m=" << t.m << " n=" << t.n << " k=" << t.k << " k_prime=" << t.k_prime
       << " m_prime=" << t.m_prime << '\n'
       << "mode: " << mode << '\n'
       << "scheme: " << scheme_name(rs.scheme) << '\n';
    if (rs.decision) {
      os << "decision_value: " << rs.decision->decision_value << '\n'
         << "reused_matrix_elems: " << rs.decision->reused_matrix_elems << '\n';
    }
    os << "steps_executed: " << report.steps_executed << '\n'
       << "input_ema: " << report.ema.input_elems << '\n'
       << "weight_ema: " << report.ema.weight_elems << '\n'
       << "output_ema: " << report.ema.output_elems << '\n'
       << "total_ema: " << report.ema.total() << '\n'
       << "spill_writes: " << report.spill_writes << '\n'
       << "spill_reloads: " << report.spill_reloads << '\n'
       << "concurrent_rw_steps: " << report.concurrent_rw_steps << '\n'
       << "peak_psum_elems: " << report.peak_psum_elems << '\n'
       << "analytic==simulated: " << (matches ? "yes" : "no") << '\n';
    if (functional) os << "functional: " << (*functional ? "PASS" : "FAIL") << '\n';
  }

  if (!matches && problem.strict_divisible()) {
    err << "error: simulated EMA diverges from the closed form in strict mode\n";
    return kExitInternalError;
  }
  if (functional && !*functional) {
    err << "error: functional verification failed\n";
    return kExitInternalError;
  }
  return kExitOk;
}

inline int run_verify(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const GemmShape shape = resolve_shape(a);
  const ResolvedScheme rs = resolve_scheme(a.scheme, shape);
  const ValidatedProblem problem = resolve_problem(shape, resolve_tiles(a), a.mode);
  const TileSchedule schedule = generate(problem, rs.scheme);
  const bool ok = verify_functional(schedule, static_cast<std::uint64_t>(a.seed));
  OutputSink sink(a, out);
  *sink.os << "functional: " << (ok ? "PASS" : "FAIL") << '\n';
  if (!ok) {
    err << "error: functional verification failed\n";
    return kExitInternalError;
  }
  return kExitOk;
}

// ---- sweep ----

struct SweepArgs : CommonArgs {
  std::string seq_lens;
  std::string tiles_list;
};

struct SweepRow {
  Count seq_len = 0;  // 0 when sweeping tiles over an explicit shape
  GemmShape shape;
  TileConfig tiles;
  PolicyDecision decision;
  Scheme scheme;
  EmaBreakdown ema;
};

inline void write_sweep_rows(std::ostream& os, const std::vector<SweepRow>& rows,
                             const std::string& format) {
  if (format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const SweepRow& r : rows) {
      nlohmann::json j = {{"shape", r.shape},
                          {"tiles", r.tiles},
                          {"optimal", r.decision.chosen == Scheme::InputStationaryOs ? "IS" : "WS"},
                          {"chosen_scheme", scheme_name(r.scheme)},
                          {"decision_value", r.decision.decision_value},
                          {"is_reuse", r.shape.input_elems()},
                          {"ws_reuse", r.shape.weight_elems()},
                          {"ema", r.ema}};
      if (r.seq_len > 0) j["seq_len"] = r.seq_len;
      arr.push_back(j);
    }
    os << nlohmann::json{{"schema_version", kSchemaVersion}, {"command", "sweep"}, {"rows", arr}}
              .dump(2)
       << '\n';
    return;
  }
  os << "seq_len,M,N,K,m,n,k,optimal,chosen_scheme,decision_value,is_reuse,ws_reuse,"
        "input_ema,weight_ema,output_ema,total\n";
  for (const SweepRow& r : rows) {
    if (r.seq_len > 0) os << r.seq_len;
    os << ',' << r.shape.M << ',' << r.shape.N << ',' << r.shape.K << ',' << r.tiles.m
       << ',' << r.tiles.n << ',' << r.tiles.k << ','
       << (r.decision.chosen == Scheme::InputStationaryOs ? "IS" : "WS") << ','
       << scheme_name(r.scheme) << ',' << r.decision.decision_value << ','
       << r.shape.input_elems() << ',' << r.shape.weight_elems() << ','
       << r.ema.input_elems << ',' << r.ema.weight_elems << ',' << r.ema.output_elems
       << ',' << r.ema.total() << '\n';
  }
}

inline int run_sweep(const SweepArgs& a, std::ostream& out) {
  const std::vector<Count> seqs = parse_count_list(a.seq_lens, "--seq-lens");
  std::vector<Count> tile_axis = parse_count_list(a.tiles_list, "--tiles");
  if (seqs.empty() && tile_axis.empty())
    throw Error(Errc::BadArgument, "empty sweep axis: give --seq-lens and/or --tiles");
  if (tile_axis.empty()) tile_axis.push_back(a.tile);

  const std::optional<ModelConfig> model = resolve_model(a);
  if (!seqs.empty() && !model)
    throw Error(Errc::BadArgument, "--seq-lens needs --model or --model-config");

  std::vector<SweepRow> rows;
  auto add_point = [&](Count seq, const GemmShape& shape, Count tile) {
    CommonArgs point = a;
    point.tile = tile;
    const TileConfig tiles = resolve_tiles(point);
    SweepRow row;
    row.seq_len = seq;
    row.shape = shape;
    row.decision = choose_scheme(shape);
    row.scheme = a.scheme == "tas" ? row.decision.chosen : parse_scheme(a.scheme);
    const ValidatedProblem problem = resolve_problem(shape, tiles, a.mode);
    row.tiles = problem.tiles();
    row.ema = ema_closed_form(problem, row.scheme).breakdown;
    rows.push_back(row);
  };

  if (!seqs.empty()) {
    for (Count seq : seqs)
      for (Count tile : tile_axis)
        add_point(seq, projection_shape(*model, seq, GemmRole::Query), tile);
  } else {
    const GemmShape shape = resolve_shape(a);
    for (Count tile : tile_axis) add_point(0, shape, tile);
  }

  OutputSink sink(a, out);
  write_sweep_rows(*sink.os, rows, a.format);
  return kExitOk;
}

// ---- model-report ----

struct ModelReportArgs : CommonArgs {
  bool per_gemm = false;
  std::string policy = "tas";
};

inline int run_model_report(const ModelReportArgs& a, std::ostream& out) {
  const std::optional<ModelConfig> model = resolve_model(a);
  if (!model) throw Error(Errc::BadArgument, "model-report needs --model or --model-config");
  const Count seq = a.seq_len > 0 ? a.seq_len : model->default_seq_len;
  const TileConfig tiles = resolve_tiles(a);
  const EnergyParams params = resolve_energy(a, load_defaults(a));

  OutputSink sink(a, out);
  std::ostream& os = *sink.os;

  if (a.per_gemm) {
    const WorkloadReport rep =
        workload_ema(*model, seq, tiles, WorkloadPolicy::fixed_scheme(parse_scheme(a.policy)));
    if (a.format == "json") {
      nlohmann::json j = {{"schema_version", kSchemaVersion},
                          {"command", "model-report"},
                          {"model", model->name},
                          {"seq_len", seq},
                          {"policy", a.policy},
                          {"rows", rep.rows},
                          {"total", rep.total}};
      if (a.timestamps) j["timestamp"] = utc_timestamp();
      os << j.dump(2) << '\n';
    } else {
      write_workload_csv(os, rep);
    }
    return kExitOk;
  }

  const WorkloadReport naive =
      workload_ema(*model, seq, tiles, WorkloadPolicy::fixed_scheme(Scheme::Naive));
  const WorkloadReport fixed_is =
      workload_ema(*model, seq, tiles, WorkloadPolicy::fixed_scheme(Scheme::InputStationaryOs));
  const WorkloadReport fixed_ws =
      workload_ema(*model, seq, tiles, WorkloadPolicy::fixed_scheme(Scheme::WeightStationaryOs));
  const WorkloadReport adaptive = workload_ema(*model, seq, tiles, WorkloadPolicy::tas());

  struct LayerLine {
    Count layer_id;
    Count naive_ema, is_os_ema, ws_os_ema, tas_ema;
    double naive_energy, is_os_energy, ws_os_energy, tas_energy;
    double ema_red_tas, energy_red_tas, energy_red_is_os, energy_red_ws_os;
  };
  std::vector<LayerLine> lines;
  for (size_t i = 0; i < naive.per_layer.size(); ++i) {
    LayerLine ln;
    ln.layer_id = static_cast<Count>(i);
    ln.naive_ema = naive.per_layer[i].total();
    ln.is_os_ema = fixed_is.per_layer[i].total();
    ln.ws_os_ema = fixed_ws.per_layer[i].total();
    ln.tas_ema = adaptive.per_layer[i].total();
    const Count macs = naive.per_layer_macs[i];
    ln.naive_energy = energy(naive.per_layer[i], macs, params);
    ln.is_os_energy = energy(fixed_is.per_layer[i], macs, params);
    ln.ws_os_energy = energy(fixed_ws.per_layer[i], macs, params);
    ln.tas_energy = energy(adaptive.per_layer[i], macs, params);
    ln.ema_red_tas = reduction_ratio(ln.naive_ema, ln.tas_ema);
    ln.energy_red_tas = reduction_ratio(ln.naive_energy, ln.tas_energy);
    ln.energy_red_is_os = reduction_ratio(ln.naive_energy, ln.is_os_energy);
    ln.energy_red_ws_os = reduction_ratio(ln.naive_energy, ln.ws_os_energy);
    lines.push_back(ln);
  }

  if (a.format == "json") {
    nlohmann::json layers = nlohmann::json::array();
    for (const LayerLine& ln : lines)
      layers.push_back({{"layer_id", ln.layer_id},
                        {"naive_ema", ln.naive_ema},
                        {"is_os_ema", ln.is_os_ema},
                        {"ws_os_ema", ln.ws_os_ema},
                        {"tas_ema", ln.tas_ema},
                        {"naive_energy", ln.naive_energy},
                        {"is_os_energy", ln.is_os_energy},
                        {"ws_os_energy", ln.ws_os_energy},
                        {"tas_energy", ln.tas_energy},
                        {"ema_reduction_tas_vs_naive", ln.ema_red_tas},
                        {"energy_reduction_tas_vs_naive", ln.energy_red_tas},
                        {"energy_reduction_is_os_vs_naive", ln.energy_red_is_os},
                        {"energy_reduction_ws_os_vs_naive", ln.energy_red_ws_os}});
    nlohmann::json j = {{"schema_version", kSchemaVersion},
                        {"command", "model-report"},
                        {"model", model->name},
                        {"seq_len", seq},
                        {"tiles", tiles},
                        {"energy_ratio", params.ratio()},
                        {"layers", layers},
                        {"total",
                         {{"naive_ema", naive.total.total()},
                          {"is_os_ema", fixed_is.total.total()},
                          {"ws_os_ema", fixed_ws.total.total()},
                          {"tas_ema", adaptive.total.total()},
                          {"macs", naive.total_macs},
                          {"ema_reduction_tas_vs_naive",
                           reduction_ratio(naive.total, adaptive.total)}}}};
    if (a.timestamps) j["timestamp"] = utc_timestamp();
    os << j.dump(2) << '\n';
    return kExitOk;
  }
  if (a.format == "csv") {
    os << "layer_id,naive_ema,is_os_ema,ws_os_ema,tas_ema,naive_energy,is_os_energy,"
          "ws_os_energy,tas_energy,ema_reduction_tas_vs_naive,energy_reduction_tas_vs_"
          "naive,energy_reduction_is_os_vs_naive,energy_reduction_ws_os_vs_naive\n";
    for (const LayerLine& ln : lines)
      os << ln.layer_id << ',' << ln.naive_ema << ',' << ln.is_os_ema << ','
         << ln.ws_os_ema << ',' << ln.tas_ema << ',' << fmt_double(ln.naive_energy) << ','
         << fmt_double(ln.is_os_energy) << ',' << fmt_double(ln.ws_os_energy) << ','
         << fmt_double(ln.tas_energy) << ',' << fmt_double(ln.ema_red_tas) << ','
         << fmt_double(ln.energy_red_tas) << ',' << fmt_double(ln.energy_red_is_os) << ','
         << fmt_double(ln.energy_red_ws_os) << '\n';
    return kExitOk;
  }
  if (a.timestamps) os << "timestamp: " << utc_timestamp() << '\n';
  os << "command: model-report\n"
     << "model: " << model->name << " (hidden=" << model->hidden_dim
     << " ffn=" << model->ffn_dim << " layers=" << model->num_layers << ")\n"
     << "seq_len: " << seq << '\n'
     << "tiles: m=" << tiles.m << " n=" << tiles.n << " k=" << tiles.k << '\n'
     << "energy_ratio: " << params.ratio() << '\n'
     << "energies are relative units\n";
  os << std::left << std::setw(6) << "layer" << std::right << std::setw(16) << "naive_ema"
     << std::setw(16) << "is_os_ema" << std::setw(16) << "ws_os_ema" << std::setw(16)
     << "tas_ema" << std::setw(14) << "tas_ema_red" << std::setw(14) << "tas_energy_red"
     << '\n';
  for (const LayerLine& ln : lines)
    os << std::left << std::setw(6) << ln.layer_id << std::right << std::setw(16)
       << ln.naive_ema << std::setw(16) << ln.is_os_ema << std::setw(16) << ln.ws_os_ema
       << std::setw(16) << ln.tas_ema << std::setw(14) << fmt_pct(ln.ema_red_tas, 2)
       << std::setw(14) << fmt_pct(ln.energy_red_tas, 2) << '\n';
  os << "total_ema: naive=" << naive.total.total() << " is-os=" << fixed_is.total.total()
     << " ws-os=" << fixed_ws.total.total() << " tas=" << adaptive.total.total() << '\n'
     << "total_ema_reduction_tas_vs_naive: "
     << fmt_pct(reduction_ratio(naive.total, adaptive.total)) << '\n';
  return kExitOk;
}

// ---- presets ----

inline int run_presets(const CommonArgs& a, std::ostream& out) {
  OutputSink sink(a, out);
  std::ostream& os = *sink.os;
  if (a.format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const PresetInfo& p : presets())
      arr.push_back({{"name", p.config.name},
                     {"hidden_dim", p.config.hidden_dim},
                     {"ffn_dim", p.config.ffn_dim},
                     {"num_layers", p.config.num_layers},
                     {"default_seq_len", p.config.default_seq_len},
                     {"provenance",
                      {{"hidden_dim", p.hidden_dim_src},
                       {"ffn_dim", p.ffn_dim_src},
                       {"num_layers", p.num_layers_src},
                       {"default_seq_len", p.seq_len_src}}}});
    os << nlohmann::json{{"schema_version", kSchemaVersion},
                         {"command", "presets"},
                         {"presets", arr}}
              .dump(2)
       << '\n';
    return kExitOk;
  }
  if (a.format == "csv") {
    os << "name,hidden_dim,ffn_dim,num_layers,default_seq_len\n";
    for (const PresetInfo& p : presets())
      os << p.config.name << ',' << p.config.hidden_dim << ',' << p.config.ffn_dim << ','
         << p.config.num_layers << ',' << p.config.default_seq_len << '\n';
    return kExitOk;
  }
  for (const PresetInfo& p : presets()) {
    os << p.config.name << ": hidden=" << p.config.hidden_dim << " (" << p.hidden_dim_src
       << "), ffn=" << p.config.ffn_dim << " (" << p.ffn_dim_src
       << "), layers=" << p.config.num_layers << " (" << p.num_layers_src
       << "), seq_len=" << p.config.default_seq_len << " (" << p.seq_len_src << ")\n";
  }
  return kExitOk;
}

}  // namespace detail

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name. Returns the process exit code and writes reports to `out`,
/// diagnostics to `err`.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"external-memory-access cost model for tiled GEMM dataflows"};
  app.require_subcommand(1);

  detail::AnalyzeArgs analyze_args;
  CLI::App* analyze = app.add_subcommand("analyze", "closed-form EMA for one GEMM");
  detail::add_shape_flags(analyze, analyze_args);
  detail::add_tile_flags(analyze, analyze_args);
  detail::add_output_flags(analyze, analyze_args);
  analyze->add_option("--scheme", analyze_args.scheme,
                      "naive|is|ws|os-row|os-col|is-os|ws-os|tas (default tas)");
  analyze->add_flag("--oracle-argmin", analyze_args.oracle_argmin,
                    "cross-check the tas sign rule against both hybrid totals");

  detail::SimulateArgs sim_args;
  CLI::App* simulate = app.add_subcommand("simulate", "trace a tile schedule and count traffic");
  detail::add_shape_flags(simulate, sim_args);
  detail::add_tile_flags(simulate, sim_args);
  detail::add_output_flags(simulate, sim_args);
  simulate->add_option("--scheme", sim_args.scheme, "scheme or tas (default tas)");
  simulate->add_option("--psum-capacity", sim_args.psum_capacity,
                       "on-chip psum elements (default: the scheme's window)");
  simulate->add_option("--input-slots", sim_args.input_slots, "input tile slots (default 1)");
  simulate->add_option("--weight-slots", sim_args.weight_slots, "weight tile slots (default 1)");
  simulate->add_option("--order", sim_args.order, "serpentine | row-major traversal order")
      ->check(CLI::IsMember({"serpentine", "row-major"}));
  simulate->add_option("--dump-schedule", sim_args.dump_schedule,
                       "write the step-by-step schedule CSV to a file");
  simulate->add_flag("--verify", sim_args.verify, "also run the functional oracle");
  simulate->add_option("--seed", sim_args.seed, "seed for --verify (default 0)");

  detail::SimulateArgs verify_args;
  CLI::App* verify = app.add_subcommand("verify", "functional oracle for one schedule");
  detail::add_shape_flags(verify, verify_args);
  detail::add_tile_flags(verify, verify_args);
  detail::add_output_flags(verify, verify_args);
  verify->add_option("--scheme", verify_args.scheme, "scheme or tas (default tas)");
  verify->add_option("--seed", verify_args.seed, "seed for the random operands (default 0)");

  detail::SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand("sweep", "CSV sweep over sequence lengths or tiles");
  detail::add_shape_flags(sweep, sweep_args);
  detail::add_tile_flags(sweep, sweep_args);
  detail::add_output_flags(sweep, sweep_args);
  sweep->add_option("--scheme", sweep_args.scheme, "fixed scheme or tas (default tas)");
  sweep->add_option("--seq-lens", sweep_args.seq_lens, "comma-separated sequence lengths");
  sweep->add_option("--tiles", sweep_args.tiles_list, "comma-separated square tile sizes");
  sweep_args.format = "csv";

  detail::ModelReportArgs report_args;
  CLI::App* model_report =
      app.add_subcommand("model-report", "per-layer EMA/energy for a model preset");
  detail::add_shape_flags(model_report, report_args);
  detail::add_tile_flags(model_report, report_args);
  detail::add_output_flags(model_report, report_args);
  detail::add_energy_flags(model_report, report_args);
  model_report->add_flag("--per-gemm", report_args.per_gemm,
                         "emit the per-GEMM rows instead of the policy comparison");
  model_report->add_option("--policy", report_args.policy,
                           "policy for --per-gemm rows (default tas)");

  detail::CommonArgs preset_args;
  CLI::App* presets_cmd = app.add_subcommand("presets", "list built-in model presets");
  detail::add_output_flags(presets_cmd, preset_args);

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  }

  try {
    if (*analyze) return detail::run_analyze(analyze_args, out);
    if (*simulate) return detail::run_simulate(sim_args, out, err);
    if (*verify) return detail::run_verify(verify_args, out, err);
    if (*sweep) return detail::run_sweep(sweep_args, out);
    if (*model_report) return detail::run_model_report(report_args, out);
    if (*presets_cmd) return detail::run_presets(preset_args, out);
  } catch (const InternalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternalError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUserError;
  }
  err << "error: no command\n";
  return kExitUserError;
}

}  // namespace tas::cli
