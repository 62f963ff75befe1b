#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "tas/analytic.hpp"

namespace tas {

/// Relative energy weights. External transfers cost ext_cost_per_elem per
/// element, on-chip arithmetic int_cost_per_mac per MAC; only the ratio is
/// meaningful. External transfer is typically one to two orders of
/// magnitude more expensive than a MAC; the default ratio is 64.
struct EnergyParams {
  double ext_cost_per_elem = 64.0;
  double int_cost_per_mac = 1.0;

  double ratio() const { return ext_cost_per_elem / int_cost_per_mac; }

  void check() const {
    if (ext_cost_per_elem <= 0 || int_cost_per_mac <= 0)
      throw Error(Errc::BadArgument, "energy costs must be positive");
  }
};

/// Relative energy units: traffic plus arithmetic. MAC count is M*N*K
/// regardless of scheme; schemes change traffic, not arithmetic.
inline double energy(const EmaBreakdown& ema, Count macs, const EnergyParams& params) {
  params.check();
  return static_cast<double>(ema.total()) * params.ext_cost_per_elem +
         static_cast<double>(macs) * params.int_cost_per_mac;
}

struct PolicyEnergy {
  std::string label;
  EmaBreakdown ema;
  Count macs = 0;
  double energy = 0.0;
  Count rank = 0;  // 1 = lowest energy
};

struct PairwiseReduction {
  std::string baseline;
  std::string candidate;
  double energy_reduction = 0.0;
  double ema_reduction = 0.0;
};

struct EnergyComparison {
  std::vector<PolicyEnergy> entries;          // sorted by label
  std::vector<PairwiseReduction> reductions;  // all label pairs, baseline first
};

struct PolicyCost {
  std::string label;
  EmaBreakdown ema;
  Count macs = 0;
};

/// Energies plus every pairwise reduction. Entries are ordered by label so
/// repeated runs serialize identically; ranks order by energy.
inline EnergyComparison compare(std::vector<PolicyCost> policies, const EnergyParams& params) {
  if (policies.size() < 2)
    throw Error(Errc::TooFewPolicies, "need at least two policies to compare");
  std::sort(policies.begin(), policies.end(),
            [](const PolicyCost& a, const PolicyCost& b) { return a.label < b.label; });

  EnergyComparison cmp;
  for (const PolicyCost& p : policies)
    cmp.entries.push_back({p.label, p.ema, p.macs, energy(p.ema, p.macs, params), 0});

  std::vector<size_t> by_energy(cmp.entries.size());
  for (size_t i = 0; i < by_energy.size(); ++i) by_energy[i] = i;
  std::stable_sort(by_energy.begin(), by_energy.end(), [&](size_t a, size_t b) {
    return cmp.entries[a].energy < cmp.entries[b].energy;
  });
  for (size_t r = 0; r < by_energy.size(); ++r)
    cmp.entries[by_energy[r]].rank = static_cast<Count>(r + 1);

  for (size_t a = 0; a < cmp.entries.size(); ++a)
    for (size_t b = a + 1; b < cmp.entries.size(); ++b) {
      const PolicyEnergy& pa = cmp.entries[a];
      const PolicyEnergy& pb = cmp.entries[b];
      cmp.reductions.push_back({pa.label, pb.label,
                                reduction_ratio(pa.energy, pb.energy),
                                reduction_ratio(pa.ema, pb.ema)});
    }
  return cmp;
}

}  // namespace tas
