#include "advantage.hpp"

#include <cmath>

namespace prco {

namespace {

double mean_of(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

bool all_equal(std::span<const double> xs) {
  for (double x : xs)
    if (x != xs[0]) return false;
  return true;
}

}  // namespace

std::vector<double> zscore_advantages(std::span<const double> rewards, double eps_norm) {
  if (rewards.size() < 2)
    throw ConfigError("z-score advantages need a group of at least 2 rewards");
  if (eps_norm <= 0.0) throw ConfigError("eps_norm must be > 0");
  const double mean = mean_of(rewards);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(rewards.size());  // population variance
  const double denom = std::sqrt(var) + eps_norm;
  std::vector<double> out(rewards.size());
  for (size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / denom;
  return out;
}

std::vector<double> centered_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2)
    throw ConfigError("centered advantages need a group of at least 2 rewards");
  const double mean = mean_of(rewards);
  std::vector<double> out(rewards.size());
  for (size_t i = 0; i < rewards.size(); ++i) out[i] = rewards[i] - mean;
  return out;
}

std::optional<int> select_caption_index(const RolloutTree& tree, Rng& rng) {
  std::vector<int> qualifying;
  for (size_t k = 0; k < tree.solver_rewards.size(); ++k)
    if (!all_equal(tree.solver_rewards[k])) qualifying.push_back(static_cast<int>(k));
  if (qualifying.empty()) return std::nullopt;
  return qualifying[rng.next_below(static_cast<uint32_t>(qualifying.size()))];
}

AdvantageBatch build_prco_advantages(const RolloutTree& tree, Rng& rng, int group_base) {
  if (tree.observer_rewards.size() != tree.captions.size() ||
      tree.solver_rewards.size() != tree.captions.size())
    throw ConfigError("rollout tree rewards not filled before advantage computation");

  AdvantageBatch batch;
  const std::vector<double> caption_adv = centered_advantages(tree.observer_rewards);
  for (size_t k = 0; k < tree.captions.size(); ++k)
    batch.entries.push_back({&tree.captions[k], caption_adv[k], Role::Observer, group_base});

  const std::optional<int> selected = select_caption_index(tree, rng);
  if (selected) {
    const auto& rewards = tree.solver_rewards[*selected];
    const std::vector<double> answer_adv = centered_advantages(rewards);
    for (size_t g = 0; g < rewards.size(); ++g)
      batch.entries.push_back(
          {&tree.answers[*selected][g], answer_adv[g], Role::Solver, group_base + 1});
  }
  return batch;
}

}  // namespace prco
