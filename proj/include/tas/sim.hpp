#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tas/schedule.hpp"

namespace tas {

/// On-chip storage model. Tile slots hold whole operand tiles; the psum
/// store must hold the active scheme's window (m*k' for is-os, m'*k for
/// ws-os, one m*k output tile otherwise). A capacity of 0 means "exactly the
/// scheme's requirement".
struct BufferModel {
  Count input_tile_slots = 1;
  Count weight_tile_slots = 1;
  Count psum_capacity_elems = 0;
};

inline Count psum_requirement(const ValidatedProblem& p, Scheme scheme) {
  const TileConfig& t = p.tiles();
  switch (scheme) {
    case Scheme::InputStationaryOs:
      return t.m * std::min(t.k_prime, p.shape().K);
    case Scheme::WeightStationaryOs:
      return std::min(t.m_prime, p.shape().M) * t.k;
    default:
      return t.m * t.k;
  }
}

/// Measured traffic and conflict counts for one schedule execution.
///
/// ema.output_elems follows the round convention: each psum spill round and
/// each final write is charged once; reload reads are tracked in
/// spill_reloads and not folded into ema. concurrent_rw_steps counts steps
/// that issue an operand load or psum reload together with a psum spill
/// write. Completed-output write-back is excluded from the conflict count:
/// it is never read back by the computation and drains one way, while a
/// spill opens a blocking external write/reload round trip mid-computation.
struct SimReport {
  EmaBreakdown ema;
  Count spill_writes = 0;
  Count spill_reloads = 0;
  Count concurrent_rw_steps = 0;
  Count peak_psum_elems = 0;
  Count steps_executed = 0;
};

/// Row-major integer matrix used by the functional oracle.
struct Matrix {
  Count rows = 0;
  Count cols = 0;
  std::vector<std::int64_t> v;

  Matrix() = default;
  Matrix(Count r, Count c) : rows(r), cols(c), v(static_cast<size_t>(r * c), 0) {}

  std::int64_t& at(Count r, Count c) { return v[static_cast<size_t>(r * cols + c)]; }
  std::int64_t at(Count r, Count c) const { return v[static_cast<size_t>(r * cols + c)]; }

  bool operator==(const Matrix&) const = default;
};

/// Triple-loop definition: C[i][j] = sum_t A[i][t] * B[t][j].
inline Matrix reference_gemm(const Matrix& input, const Matrix& weight) {
  if (input.cols != weight.rows)
    throw Error(Errc::BadArgument, "inner dimensions do not match");
  Matrix out(input.rows, weight.cols);
  for (Count i = 0; i < input.rows; ++i)
    for (Count t = 0; t < input.cols; ++t) {
      const std::int64_t a = input.at(i, t);
      if (a == 0) continue;
      for (Count j = 0; j < weight.cols; ++j)
        out.at(i, j) += a * weight.at(t, j);
    }
  return out;
}

inline Matrix random_matrix(Count rows, Count cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::uniform_int_distribution<int> dist(-8, 8);
  for (auto& x : m.v) x = dist(rng);
  return m;
}

namespace detail {

// Small most-recently-used tile slot set.
class SlotSet {
 public:
  explicit SlotSet(Count slots) : slots_(slots) {}

  void load(Count id) {
    auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it != ids_.end()) ids_.erase(it);
    ids_.push_back(id);
    if (static_cast<Count>(ids_.size()) > slots_) ids_.erase(ids_.begin());
  }

  bool touch(Count id) {
    auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) return false;
    ids_.erase(it);
    ids_.push_back(id);
    return true;
  }

 private:
  Count slots_;
  std::vector<Count> ids_;
};

struct PsumBlock {
  Count elems = 0;
  std::vector<std::int64_t> vals;  // empty in accounting-only runs
};

// Flag-driven executor shared by simulate() and the functional verifier.
// Transfers are counted exactly as the schedule's flags dictate (a fixed
// dataflow reloads per pattern without checking residency); the executor
// verifies feasibility instead: a no-load step must find its tile resident.
// When matrices are supplied the tile MACs are performed and the assembled
// output is written to *out.
template <class Source>
SimReport run_executor(const ValidatedProblem& p, Source&& next_step,
                       Count expected_steps, Count psum_capacity,
                       Count input_slots, Count weight_slots, const Matrix* a,
                       const Matrix* b, Matrix* out) {
  const Count tm = p.tm(), tn = p.tn(), tk = p.tk();
  const TileConfig& t = p.tiles();
  const bool functional = a != nullptr;

  auto violation = [](const std::string& what) {
    throw InternalError(Errc::ScheduleInvariantViolated, what);
  };

  SlotSet input_set(input_slots), weight_set(weight_slots);
  std::unordered_map<Count, PsumBlock> live, spilled;
  // contributions received per output block; -1 marks a finalized block
  std::vector<Count> contribs(static_cast<size_t>(tm * tk), 0);

  SimReport rep;
  Count live_elems = 0;

  TileStep st;
  while (next_step(st)) {
    const Count i = st.input.row_block, j = st.input.col_block;
    const Count l = st.weight.col_block;
    if (i < 0 || i >= tm || j < 0 || j >= tn || l < 0 || l >= tk)
      violation("tile coordinate out of range");
    if (st.weight.row_block != j) violation("shared-dimension misalignment");
    if (st.output.row_block != i || st.output.col_block != l)
      violation("output block misalignment");
    if (st.psum_spill && st.final_write)
      violation("psum_spill and final_write in one step");

    const Count rm = p.rows_of(i), rn = p.shared_of(j), rk = p.cols_of(l);
    const Count input_id = i * tn + j;
    const Count weight_id = j * tk + l;
    const Count block = i * tk + l;
    const Count block_elems = rm * rk;

    bool external_read = false;
    if (st.input_load) {
      input_set.load(input_id);
      rep.ema.input_elems += rm * rn;
      external_read = true;
    } else if (!input_set.touch(input_id)) {
      violation("input tile used without load or residency");
    }
    if (st.weight_load) {
      weight_set.load(weight_id);
      rep.ema.weight_elems += rn * rk;
      external_read = true;
    } else if (!weight_set.touch(weight_id)) {
      violation("weight tile used without load or residency");
    }

    Count& contrib = contribs[static_cast<size_t>(block)];
    if (contrib < 0) violation("contribution to a finalized output block");
    if (contrib != j) violation("output block visited out of shared-dim order");

    auto live_it = live.find(block);
    if (live_it == live.end()) {
      auto spilled_it = spilled.find(block);
      if (spilled_it != spilled.end()) {
        live_it = live.emplace(block, std::move(spilled_it->second)).first;
        spilled.erase(spilled_it);
        rep.spill_reloads += 1;
        external_read = true;
      } else {
        if (contrib != 0) violation("in-flight psum block missing");
        PsumBlock fresh;
        fresh.elems = block_elems;
        if (functional) fresh.vals.assign(static_cast<size_t>(block_elems), 0);
        live_it = live.emplace(block, std::move(fresh)).first;
      }
      live_elems += block_elems;
      rep.peak_psum_elems = std::max(rep.peak_psum_elems, live_elems);
      if (live_elems > psum_capacity) violation("psum window exceeds capacity");
    }

    if (functional) {
      auto& vals = live_it->second.vals;
      for (Count r = 0; r < rm; ++r)
        for (Count x = 0; x < rn; ++x) {
          const std::int64_t av = a->at(i * t.m + r, j * t.n + x);
          if (av == 0) continue;
          for (Count c = 0; c < rk; ++c)
            vals[static_cast<size_t>(r * rk + c)] += av * b->at(j * t.n + x, l * t.k + c);
        }
    }

    contrib += 1;
    if (st.psum_spill) {
      if (contrib >= tn) violation("spill on a completed output block");
      rep.ema.output_elems += block_elems;
      rep.spill_writes += 1;
      if (external_read) rep.concurrent_rw_steps += 1;
      spilled.emplace(block, std::move(live_it->second));
      live.erase(live_it);
      live_elems -= block_elems;
    } else if (st.final_write) {
      if (contrib != tn) violation("final write before all contributions");
      rep.ema.output_elems += block_elems;
      if (functional && out) {
        const auto& vals = live_it->second.vals;
        for (Count r = 0; r < rm; ++r)
          for (Count c = 0; c < rk; ++c)
            out->at(i * t.m + r, l * t.k + c) = vals[static_cast<size_t>(r * rk + c)];
      }
      live.erase(live_it);
      live_elems -= block_elems;
      contrib = -1;
    }
    rep.steps_executed += 1;
  }

  if (rep.steps_executed != expected_steps) violation("step count mismatch");
  if (!live.empty() || !spilled.empty()) violation("psum blocks left in flight");
  for (Count c : contribs)
    if (c != -1) violation("output block never finalized");
  return rep;
}

}  // namespace detail

/// Executes a schedule against the buffer model and counts actual external
/// traffic. Deterministic; in strict-divisible mode the resulting ema equals
/// ema_closed_form for the same problem and scheme, operand by operand.
inline SimReport simulate(const TileSchedule& schedule, const BufferModel& buffers = {}) {
  const ValidatedProblem& p = schedule.problem();
  if (buffers.input_tile_slots < 1 || buffers.weight_tile_slots < 1)
    throw Error(Errc::BadArgument, "tile slot counts must be >= 1");
  const Count required = psum_requirement(p, schedule.scheme());
  const Count capacity =
      buffers.psum_capacity_elems == 0 ? required : buffers.psum_capacity_elems;
  if (capacity < required)
    throw Error(Errc::InsufficientPsumCapacity,
                "psum capacity " + std::to_string(capacity) + " below the scheme's window of " +
                    std::to_string(required) + " elements");
  auto stream = schedule.stream();
  return detail::run_executor(
      p, [&stream](TileStep& st) { return stream.next(st); }, schedule.total_steps(),
      capacity, buffers.input_tile_slots, buffers.weight_tile_slots, nullptr, nullptr,
      nullptr);
}

inline constexpr Count kFunctionalElemLimit = Count(1) << 24;

namespace detail {

template <class Source>
bool verify_functional_impl(const ValidatedProblem& p, Source&& next_step,
                            Count expected_steps, std::uint64_t seed) {
  const GemmShape& s = p.shape();
  if (s.input_elems() + s.weight_elems() > kFunctionalElemLimit)
    throw Error(Errc::ProblemTooLarge,
                "matrices exceed the functional-verification guard of 2^24 elements");
  std::mt19937_64 rng(seed);
  const Matrix a = random_matrix(s.M, s.N, rng);
  const Matrix b = random_matrix(s.N, s.K, rng);
  Matrix out(s.M, s.K);
  try {
    run_executor(p, std::forward<Source>(next_step), expected_steps,
                 std::numeric_limits<Count>::max(), 1, 1, &a, &b, &out);
  } catch (const InternalError&) {
    return false;
  }
  return out == reference_gemm(a, b);
}

}  // namespace detail

/// Fills the operands with small pseudorandom integers from the seed,
/// executes the schedule step by step honoring spill/reload semantics, and
/// compares the assembled output to reference_gemm. Exact integer equality;
/// structural violations (missing, duplicated, or misordered steps) also
/// fail.
inline bool verify_functional(const TileSchedule& schedule, std::uint64_t seed) {
  auto stream = schedule.stream();
  return detail::verify_functional_impl(
      schedule.problem(), [&stream](TileStep& st) { return stream.next(st); },
      schedule.total_steps(), seed);
}

/// Same oracle over an explicit step sequence; the expected step count is
/// the problem's full grid. Used to probe tampered schedules.
inline bool verify_functional_steps(const ValidatedProblem& p,
                                    std::span<const TileStep> steps,
                                    std::uint64_t seed) {
  size_t pos = 0;
  return detail::verify_functional_impl(
      p,
      [&](TileStep& st) {
        if (pos >= steps.size()) return false;
        st = steps[pos++];
        return true;
      },
      p.tm() * p.tn() * p.tk(), seed);
}

}  // namespace tas
