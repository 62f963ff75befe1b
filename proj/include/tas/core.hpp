#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tas {

// All extents and access counts are element counts, held in signed 64-bit.
// Byte widths and energy weights are applied at the reporting layer only.
using Count = std::int64_t;

enum class Errc {
  ZeroDimension,
  TileExceedsMatrix,
  PsumWindowInvalid,
  NotDivisible,
  SchemeUnresolved,
  NaiveHasNoSchedule,
  InsufficientPsumCapacity,
  ScheduleInvariantViolated,
  ProblemTooLarge,
  UnknownModel,
  EmptyWorkload,
  TooFewPolicies,
  DivisionByZero,
  BadArgument,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::ZeroDimension: return "ZeroDimension";
    case Errc::TileExceedsMatrix: return "TileExceedsMatrix";
    case Errc::PsumWindowInvalid: return "PsumWindowInvalid";
    case Errc::NotDivisible: return "NotDivisible";
    case Errc::SchemeUnresolved: return "SchemeUnresolved";
    case Errc::NaiveHasNoSchedule: return "NaiveHasNoSchedule";
    case Errc::InsufficientPsumCapacity: return "InsufficientPsumCapacity";
    case Errc::ScheduleInvariantViolated: return "ScheduleInvariantViolated";
    case Errc::ProblemTooLarge: return "ProblemTooLarge";
    case Errc::UnknownModel: return "UnknownModel";
    case Errc::EmptyWorkload: return "EmptyWorkload";
    case Errc::TooFewPolicies: return "TooFewPolicies";
    case Errc::DivisionByZero: return "DivisionByZero";
    case Errc::BadArgument: return "BadArgument";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// Raised when an internal consistency check trips. Indicates a bug in the
// schedule generator or simulator, never bad user input; the CLI maps it to
// a distinct exit code.
class InternalError : public Error {
 public:
  using Error::Error;
};

inline Count ceil_div(Count a, Count b) { return (a + b - 1) / b; }

/// GEMM problem dimensions: input is M x N, weight is N x K, output is M x K.
/// N is the shared dimension (input columns == weight rows).
struct GemmShape {
  Count M = 0;
  Count N = 0;
  Count K = 0;

  Count input_elems() const { return M * N; }
  Count weight_elems() const { return N * K; }
  Count output_elems() const { return M * K; }
  Count macs() const { return M * N * K; }

  bool operator==(const GemmShape&) const = default;
};

inline void check_shape(const GemmShape& s) {
  if (s.M < 1 || s.N < 1 || s.K < 1)
    throw Error(Errc::ZeroDimension,
                "all GEMM dimensions must be >= 1, got M=" + std::to_string(s.M) +
                    " N=" + std::to_string(s.N) + " K=" + std::to_string(s.K));
}

/// Tile extents m x n (input), n x k (weight), m x k (output), plus the
/// partial-sum window widths for the hybrid schedules. k_prime spans output
/// columns held on chip under IS-OS, m_prime spans output rows under WS-OS.
/// A zero window means "default to the full extent" and is resolved by
/// validate().
struct TileConfig {
  Count m = 1;
  Count n = 1;
  Count k = 1;
  Count k_prime = 0;
  Count m_prime = 0;

  bool operator==(const TileConfig&) const = default;
};

struct EmaBreakdown {
  Count input_elems = 0;
  Count weight_elems = 0;
  Count output_elems = 0;

  Count total() const { return input_elems + weight_elems + output_elems; }

  bool operator==(const EmaBreakdown&) const = default;
};

enum class Scheme {
  Naive,
  InputStationary,
  WeightStationary,
  OutputStationaryRow,
  OutputStationaryCol,
  InputStationaryOs,
  WeightStationaryOs,
  Tas,
};

inline std::string_view scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Naive: return "naive";
    case Scheme::InputStationary: return "is";
    case Scheme::WeightStationary: return "ws";
    case Scheme::OutputStationaryRow: return "os-row";
    case Scheme::OutputStationaryCol: return "os-col";
    case Scheme::InputStationaryOs: return "is-os";
    case Scheme::WeightStationaryOs: return "ws-os";
    case Scheme::Tas: return "tas";
  }
  return "?";
}

inline Scheme parse_scheme(std::string_view text) {
  if (text == "naive") return Scheme::Naive;
  if (text == "is") return Scheme::InputStationary;
  if (text == "ws") return Scheme::WeightStationary;
  if (text == "os" || text == "os-row") return Scheme::OutputStationaryRow;
  if (text == "os-col") return Scheme::OutputStationaryCol;
  if (text == "is-os") return Scheme::InputStationaryOs;
  if (text == "ws-os") return Scheme::WeightStationaryOs;
  if (text == "tas") return Scheme::Tas;
  throw Error(Errc::BadArgument, "unknown scheme '" + std::string(text) + "'");
}

/// True for schemes that have an executable tile traversal. Naive is a pure
/// accounting baseline and TAS is a policy that resolves to a hybrid first.
inline bool scheme_has_schedule(Scheme s) {
  return s != Scheme::Naive && s != Scheme::Tas;
}

/// A shape/tile pair that passed validation. Tile counts use ceiling
/// division; in strict mode every tile and window extent divides its matrix
/// extent, so all counts are exact. The psum windows are resolved to
/// concrete values (full extents when they were left at 0).
class ValidatedProblem {
 public:
  const GemmShape& shape() const { return shape_; }
  const TileConfig& tiles() const { return tiles_; }
  bool strict_divisible() const { return strict_; }

  Count tm() const { return ceil_div(shape_.M, tiles_.m); }
  Count tn() const { return ceil_div(shape_.N, tiles_.n); }
  Count tk() const { return ceil_div(shape_.K, tiles_.k); }
  Count wk() const { return ceil_div(shape_.K, tiles_.k_prime); }
  Count wm() const { return ceil_div(shape_.M, tiles_.m_prime); }

  // Output-column tiles per IS-OS psum window / output-row tiles per WS-OS
  // psum window. A full-extent window spans the whole tile grid even when
  // the base tile does not divide the extent.
  Count k_group_tiles() const {
    return tiles_.k_prime == shape_.K ? tk() : tiles_.k_prime / tiles_.k;
  }
  Count m_group_tiles() const {
    return tiles_.m_prime == shape_.M ? tm() : tiles_.m_prime / tiles_.m;
  }

  // Clipped extents of the tile at the given grid index.
  Count rows_of(Count i) const { return std::min(tiles_.m, shape_.M - i * tiles_.m); }
  Count shared_of(Count j) const { return std::min(tiles_.n, shape_.N - j * tiles_.n); }
  Count cols_of(Count l) const { return std::min(tiles_.k, shape_.K - l * tiles_.k); }

  friend ValidatedProblem validate(const GemmShape&, const TileConfig&, bool);

 private:
  ValidatedProblem(GemmShape s, TileConfig t, bool strict)
      : shape_(s), tiles_(t), strict_(strict) {}

  GemmShape shape_;
  TileConfig tiles_;
  bool strict_;
};

/// Checks a shape/tile pair and resolves psum-window defaults. Never clamps:
/// out-of-range values are reported, not repaired.
///
/// Window rule: a window equal to the full extent is always accepted (the
/// trailing group is clipped); otherwise it must be a multiple of the base
/// tile within [tile, extent].
inline ValidatedProblem validate(const GemmShape& shape, const TileConfig& tiles,
                                 bool strict) {
  check_shape(shape);
  TileConfig t = tiles;
  if (t.m < 1 || t.n < 1 || t.k < 1)
    throw Error(Errc::ZeroDimension, "tile extents must be >= 1, got m=" +
                                         std::to_string(t.m) + " n=" + std::to_string(t.n) +
                                         " k=" + std::to_string(t.k));
  if (t.m > shape.M || t.n > shape.N || t.k > shape.K)
    throw Error(Errc::TileExceedsMatrix,
                "tile (m=" + std::to_string(t.m) + ",n=" + std::to_string(t.n) +
                    ",k=" + std::to_string(t.k) + ") exceeds matrix (M=" +
                    std::to_string(shape.M) + ",N=" + std::to_string(shape.N) +
                    ",K=" + std::to_string(shape.K) + ")");

  if (t.k_prime == 0) t.k_prime = shape.K;
  if (t.m_prime == 0) t.m_prime = shape.M;

  auto check_window = [](Count window, Count tile, Count extent, const char* name) {
    if (window == extent) return;  // full window always allowed
    if (window < tile || window > extent || window % tile != 0)
      throw Error(Errc::PsumWindowInvalid,
                  std::string(name) + "=" + std::to_string(window) +
                      " must be a multiple of its tile (" + std::to_string(tile) +
                      ") within [tile, extent=" + std::to_string(extent) + "]");
  };
  check_window(t.k_prime, t.k, shape.K, "k_prime");
  check_window(t.m_prime, t.m, shape.M, "m_prime");

  if (strict) {
    auto divides = [](Count tile, Count extent) { return extent % tile == 0; };
    if (!divides(t.m, shape.M) || !divides(t.n, shape.N) || !divides(t.k, shape.K) ||
        !divides(t.k_prime, shape.K) || !divides(t.m_prime, shape.M))
      throw Error(Errc::NotDivisible,
                  "strict mode requires m|M, n|N, k|K, k_prime|K, m_prime|M");
  }
  return ValidatedProblem(shape, t, strict);
}

}  // namespace tas
