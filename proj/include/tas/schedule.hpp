#pragma once

#include <ostream>

#include "tas/core.hpp"

namespace tas {

/// Position of a tile in its matrix's tiling grid.
struct TileCoord {
  Count row_block = 0;
  Count col_block = 0;

  bool operator==(const TileCoord&) const = default;
};

/// One tile-pair MAC phase. The input tile is (row_block=i over M/m,
/// col_block=j over N/n), the weight tile (j over N/n, l over K/k), the
/// output tile (i, l).
///
///   input_load / weight_load  tile fetched from external memory this step
///   psum_spill                incomplete output tile written out, reloaded
///                             on its next visit
///   final_write               completed output tile written out
///
/// psum_spill and final_write never both hold in one step.
struct TileStep {
  TileCoord input;
  TileCoord weight;
  TileCoord output;
  bool input_load = false;
  bool weight_load = false;
  bool psum_spill = false;
  bool final_write = false;

  bool operator==(const TileStep&) const = default;
};

/// Step ordering for is/ws. Serpentine reverses the inner sweep direction as
/// the middle loop advances, so the streamed operand never jumps back across
/// its matrix; RowMajorReset restarts every inner sweep from index 0. Access
/// counts are traversal-order-invariant; only the step sequence differs.
enum class Traversal { Serpentine, RowMajorReset };

/// Lazily generated tile traversal for one scheme. Steps are decoded on
/// demand from their index, so full transformer-scale schedules never
/// materialize a step list.
///
/// Loop structure per scheme (outermost first; Tm/Tn/Tk are grid sizes,
/// G the psum-window group):
///
///   is      i, j, l-sweep        input held K/k steps; weight streams
///   ws      l, j, i-sweep        weight held M/m steps; input streams
///   os-row  i, l, j-sweep        psums complete on chip, outputs row-major
///   os-col  l, i, j-sweep        outputs column-major
///   is-os   i, g, j, l-in-group  input reloaded once per k'-column group,
///                                m x k' psums live across the whole j sweep
///   ws-os   l, h, j, i-in-group  weight reloaded once per m'-row group,
///                                m' x k psums live across the whole j sweep
///
/// Every (input-tile, weight-tile) pair contributing to the product appears
/// exactly once; an output block's contributions arrive at strictly
/// ascending j.
class TileSchedule {
 public:
  TileSchedule(const ValidatedProblem& problem, Scheme scheme,
               Traversal order = Traversal::Serpentine)
      : problem_(problem), scheme_(scheme), order_(order) {
    if (scheme == Scheme::Tas)
      throw Error(Errc::SchemeUnresolved,
                  "tas is a policy; resolve it to is-os or ws-os first");
    if (scheme == Scheme::Naive)
      throw Error(Errc::NaiveHasNoSchedule,
                  "naive is an accounting baseline without a tile traversal");
  }

  const ValidatedProblem& problem() const { return problem_; }
  Scheme scheme() const { return scheme_; }
  Traversal order() const { return order_; }

  Count total_steps() const { return problem_.tm() * problem_.tn() * problem_.tk(); }

  TileStep step_at(Count s) const {
    const Count tm = problem_.tm(), tn = problem_.tn(), tk = problem_.tk();
    Count i = 0, j = 0, l = 0;
    bool input_load = true, weight_load = true;

    switch (scheme_) {
      case Scheme::InputStationary: {
        i = s / (tn * tk);
        const Count r = s % (tn * tk);
        j = r / tk;
        const Count lp = r % tk;
        l = sweep_index(lp, tk, j);
        input_load = lp == 0;  // held while the weight tile sweeps K
        break;
      }
      case Scheme::WeightStationary: {
        l = s / (tn * tm);
        const Count r = s % (tn * tm);
        j = r / tm;
        const Count ip = r % tm;
        i = sweep_index(ip, tm, j);
        weight_load = ip == 0;  // held while the input tile sweeps M
        break;
      }
      case Scheme::OutputStationaryRow: {
        i = s / (tk * tn);
        const Count r = s % (tk * tn);
        l = r / tn;
        j = r % tn;
        break;
      }
      case Scheme::OutputStationaryCol: {
        l = s / (tm * tn);
        const Count r = s % (tm * tn);
        i = r / tn;
        j = r % tn;
        break;
      }
      case Scheme::InputStationaryOs: {
        const Count per_i = tn * tk;
        i = s / per_i;
        Count g = 0, lp = 0;
        decode_grouped(s % per_i, tk, problem_.k_group_tiles(), tn, g, j, lp);
        l = g * problem_.k_group_tiles() + lp;
        input_load = lp == 0;  // held for one k'-group, reloaded per group
        break;
      }
      case Scheme::WeightStationaryOs: {
        const Count per_l = tn * tm;
        l = s / per_l;
        Count h = 0, ip = 0;
        decode_grouped(s % per_l, tm, problem_.m_group_tiles(), tn, h, j, ip);
        i = h * problem_.m_group_tiles() + ip;
        weight_load = ip == 0;  // held for one m'-group, reloaded per group
        break;
      }
      default:
        throw InternalError(Errc::ScheduleInvariantViolated, "unreachable scheme");
    }

    TileStep step;
    step.input = {i, j};
    step.weight = {j, l};
    step.output = {i, l};
    step.input_load = input_load;
    step.weight_load = weight_load;
    const bool last_contribution = j == tn - 1;
    if (keeps_psums_on_chip()) {
      step.final_write = last_contribution;
    } else {
      // One psum tile round per visit: spill until the last shared-dim
      // contribution, then write the completed tile.
      step.psum_spill = !last_contribution;
      step.final_write = last_contribution;
    }
    return step;
  }

  /// Single-consumer forward stream over the steps.
  class Stream {
   public:
    explicit Stream(const TileSchedule& s) : sched_(&s), total_(s.total_steps()) {}

    bool next(TileStep& out) {
      if (index_ >= total_) return false;
      out = sched_->step_at(index_++);
      return true;
    }
    Count index() const { return index_; }

   private:
    const TileSchedule* sched_;
    Count total_;
    Count index_ = 0;
  };

  Stream stream() const { return Stream(*this); }

  /// One step per line: step,i_row,i_col,w_row,w_col,o_row,o_col,il,wl,sp,fw
  void dump_csv(std::ostream& os) const {
    os << "step,i_row,i_col,w_row,w_col,o_row,o_col,il,wl,sp,fw\n";
    TileStep st;
    Stream str = stream();
    Count s = 0;
    while (str.next(st)) {
      os << s++ << ',' << st.input.row_block << ',' << st.input.col_block << ','
         << st.weight.row_block << ',' << st.weight.col_block << ','
         << st.output.row_block << ',' << st.output.col_block << ','
         << int(st.input_load) << ',' << int(st.weight_load) << ','
         << int(st.psum_spill) << ',' << int(st.final_write) << '\n';
    }
  }

 private:
  bool keeps_psums_on_chip() const {
    return scheme_ == Scheme::OutputStationaryRow ||
           scheme_ == Scheme::OutputStationaryCol ||
           scheme_ == Scheme::InputStationaryOs ||
           scheme_ == Scheme::WeightStationaryOs;
  }

  // Serpentine inner sweep: odd middle-loop passes run backwards.
  Count sweep_index(Count pos, Count extent, Count pass) const {
    if (order_ == Traversal::Serpentine && (pass & 1)) return extent - 1 - pos;
    return pos;
  }

  // Decodes r into (group, j, pos-in-group) for the hybrid schemes, where
  // the tile grid of size `grid` is split into groups of `per_group` tiles
  // (trailing group possibly short) and each group spans the whole j sweep.
  static void decode_grouped(Count r, Count grid, Count per_group, Count tn,
                             Count& group, Count& j, Count& pos) {
    const Count full = grid / per_group;
    const Count rem = grid % per_group;
    const Count full_region = full * tn * per_group;
    if (r < full_region) {
      group = r / (tn * per_group);
      const Count r2 = r % (tn * per_group);
      j = r2 / per_group;
      pos = r2 % per_group;
    } else {
      group = full;
      const Count r2 = r - full_region;
      j = r2 / rem;
      pos = r2 % rem;
    }
  }

  ValidatedProblem problem_;
  Scheme scheme_;
  Traversal order_;
};

/// Builds the tile traversal realizing the scheme's dataflow.
inline TileSchedule generate(const ValidatedProblem& problem, Scheme scheme,
                             Traversal order = Traversal::Serpentine) {
  return TileSchedule(problem, scheme, order);
}

}  // namespace tas
