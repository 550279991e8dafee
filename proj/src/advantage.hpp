#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rollout.hpp"

namespace prco {

// (r_i - mean) / (population std + eps_norm).
std::vector<double> zscore_advantages(std::span<const double> rewards, double eps_norm);

// r_i - mean; the variant used for role-wise dual updates.
std::vector<double> centered_advantages(std::span<const double> rewards);

// Uniform draw over captions whose solver reward group has positive variance
// (checked as "not all rewards equal", exact since rewards come from a small
// discrete set). Empty when no caption qualifies.
std::optional<int> select_caption_index(const RolloutTree& tree, Rng& rng);

struct AdvantageEntry {
  const Trajectory* traj = nullptr;
  double advantage = 0.0;
  Role role = Role::Observer;
  int group_id = 0;
};

struct AdvantageBatch {
  std::vector<AdvantageEntry> entries;
};

// Role-wise grouping: one centered advantage per caption over the observer
// rewards, plus centered advantages over the solver rewards of the single
// selected caption (none when selection comes back empty). group_base and
// group_base + 1 tag the observer and solver groups for audit.
AdvantageBatch build_prco_advantages(const RolloutTree& tree, Rng& rng, int group_base = 0);

}  // namespace prco
