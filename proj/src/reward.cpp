#include "reward.hpp"

namespace prco {

double solver_reward(std::span<const TokenId> answer_tokens, int gold, const Vocab& vocab,
                     const RewardConfig& cfg) {
  const double acc = verify(answer_tokens, gold, vocab);
  const double fmt = format_score(answer_tokens, vocab);
  return cfg.lambda * acc + (1.0 - cfg.lambda) * fmt;
}

int leakage_indicator(const Question& /*question*/, std::span<const TokenId> caption_tokens,
                      const Vocab& vocab) {
  for (TokenId tok : caption_tokens)
    if (vocab.is_digit(tok)) return 1;
  return 0;
}

double observer_reward(const RolloutTree& tree, int caption_index, const Vocab& vocab,
                       const RewardConfig& cfg) {
  const auto& utility_source =
      tree.utility_answers.empty() ? tree.answers : tree.utility_answers;
  const auto& answers = utility_source.at(caption_index);
  double mean = 0.0;
  for (const Trajectory& answer : answers)
    mean += verify(answer.tokens, tree.instance.gold, vocab);
  mean /= static_cast<double>(answers.size());

  if (cfg.leakage_enabled &&
      leakage_indicator(tree.instance.question, tree.captions.at(caption_index).tokens, vocab))
    return 0.0;
  return mean;
}

void fill_tree_rewards(RolloutTree& tree, const Vocab& vocab, const RewardConfig& cfg) {
  cfg.validate();
  tree.solver_rewards.assign(tree.captions.size(), {});
  tree.observer_rewards.assign(tree.captions.size(), 0.0);
  for (size_t k = 0; k < tree.captions.size(); ++k) {
    tree.solver_rewards[k].reserve(tree.answers[k].size());
    for (const Trajectory& answer : tree.answers[k])
      tree.solver_rewards[k].push_back(
          solver_reward(answer.tokens, tree.instance.gold, vocab, cfg));
    tree.observer_rewards[k] = observer_reward(tree, static_cast<int>(k), vocab, cfg);
  }
}

void fill_flat_rewards(FlatGroup& group, const Vocab& vocab, const RewardConfig& cfg) {
  cfg.validate();
  group.rewards.clear();
  group.rewards.reserve(group.answers.size());
  for (const Trajectory& answer : group.answers)
    group.rewards.push_back(solver_reward(answer.tokens, group.instance.gold, vocab, cfg));
}

}  // namespace prco
