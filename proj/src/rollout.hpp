#pragma once

#include <functional>
#include <vector>

#include "policy.hpp"

namespace prco {

// Dual-role rollout structure for one instance: G_O caption trajectories,
// each with G_S answer trajectories. Rewards are filled by the reward module.
// utility_answers is only populated when caption utility is estimated with a
// frozen policy instead of the live one; it then feeds the observer rewards
// while `answers` still carries the trained rollouts.
struct RolloutTree {
  Instance instance;
  std::vector<Trajectory> captions;
  std::vector<std::vector<Trajectory>> answers;
  std::vector<std::vector<Trajectory>> utility_answers;
  std::vector<std::vector<double>> solver_rewards;
  std::vector<double> observer_rewards;
  bool degenerate = false;
  int attempts = 1;
};

// Single-role baseline group: G answers sampled directly from (image,
// question) with an empty caption.
struct FlatGroup {
  Instance instance;
  std::vector<Trajectory> answers;
  std::vector<double> rewards;
  bool degenerate = false;
  int attempts = 1;
};

struct SampleLimits {
  int max_caption_tokens = 16;
  int max_answer_tokens = 4;
};

RolloutTree rollout_prco(const Policy& policy, const PolicyParams& params, const Instance& inst,
                         int group_observer, int group_solver, bool image_visible_solver,
                         double temperature, const SampleLimits& limits, Rng& rng);

FlatGroup rollout_flat(const Policy& policy, const PolicyParams& params, const Instance& inst,
                       int group_size, double temperature, const SampleLimits& limits, Rng& rng);

// Retries a generator on fresh inputs until the result is not degenerate, up
// to 1 + max_retries attempts. If every attempt is degenerate the last one is
// returned with its degenerate flag set. The result's `attempts` field
// records how many generator calls were consumed.
template <typename ResultT>
ResultT dynamic_sample(const std::function<ResultT(int attempt)>& generate,
                       const std::function<bool(const ResultT&)>& degenerate, int max_retries) {
  if (max_retries < 0) throw ConfigError("dynamic sampling max_retries must be >= 0");
  ResultT result{};
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    result = generate(attempt);
    result.attempts = attempt + 1;
    result.degenerate = degenerate(result);
    if (!result.degenerate) return result;
  }
  return result;
}

}  // namespace prco
