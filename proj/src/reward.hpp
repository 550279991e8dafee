#pragma once

#include <span>

#include "rollout.hpp"

namespace prco {

struct RewardConfig {
  double lambda = 0.9;          // accuracy weight; format gets 1 - lambda
  bool leakage_enabled = true;  // zero the utility reward of leaky captions

  void validate() const {
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("reward.lambda must be in [0, 1]");
  }
};

// lambda * verify + (1 - lambda) * format. Values are confined to
// {0, 1-lambda, lambda, 1} because both components are binary.
double solver_reward(std::span<const TokenId> answer_tokens, int gold, const Vocab& vocab,
                     const RewardConfig& cfg);

// 1 iff the caption contains any digit token; digits are exactly the answer
// vocabulary in this environment. The question argument is kept so richer
// checkers stay drop-in compatible.
int leakage_indicator(const Question& question, std::span<const TokenId> caption_tokens,
                      const Vocab& vocab);

// Utility reward of caption k: (1 - leak) * mean verifier score over its
// solver answers. Uses verifier scores only, not the blended solver reward.
double observer_reward(const RolloutTree& tree, int caption_index, const Vocab& vocab,
                       const RewardConfig& cfg);

// Fills solver_rewards and observer_rewards on the tree. When utility_answers
// is populated, observer rewards are computed from those instead of the
// trained answers.
void fill_tree_rewards(RolloutTree& tree, const Vocab& vocab, const RewardConfig& cfg);

void fill_flat_rewards(FlatGroup& group, const Vocab& vocab, const RewardConfig& cfg);

}  // namespace prco
