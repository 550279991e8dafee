#include "rollout.hpp"

namespace prco {

RolloutTree rollout_prco(const Policy& policy, const PolicyParams& params, const Instance& inst,
                         int group_observer, int group_solver, bool image_visible_solver,
                         double temperature, const SampleLimits& limits, Rng& rng) {
  if (group_observer < 2)
    throw ConfigError("observer group size must be >= 2 for group-relative advantages");
  if (group_solver < 2)
    throw ConfigError("solver group size must be >= 2 for group-relative advantages");

  RolloutTree tree;
  tree.instance = inst;
  tree.captions.reserve(group_observer);
  tree.answers.resize(group_observer);

  for (int k = 0; k < group_observer; ++k) {
    Trajectory caption = policy.sample_sequence(params, Role::Observer, inst,
                                                /*image_visible=*/true, std::nullopt, temperature,
                                                /*top_p=*/1.0, limits.max_caption_tokens, rng);
    caption.caption_index = k;
    tree.answers[k].reserve(group_solver);
    for (int g = 0; g < group_solver; ++g) {
      Trajectory answer = policy.sample_sequence(params, Role::Solver, inst, image_visible_solver,
                                                 std::span<const TokenId>(caption.tokens),
                                                 temperature, /*top_p=*/1.0,
                                                 limits.max_answer_tokens, rng);
      answer.caption_index = k;
      tree.answers[k].push_back(std::move(answer));
    }
    tree.captions.push_back(std::move(caption));
  }
  return tree;
}

FlatGroup rollout_flat(const Policy& policy, const PolicyParams& params, const Instance& inst,
                       int group_size, double temperature, const SampleLimits& limits, Rng& rng) {
  if (group_size < 2)
    throw ConfigError("flat group size must be >= 2 for group-relative advantages");

  FlatGroup group;
  group.instance = inst;
  group.answers.reserve(group_size);
  static const std::vector<TokenId> kEmptyCaption;
  for (int g = 0; g < group_size; ++g) {
    group.answers.push_back(policy.sample_sequence(
        params, Role::Solver, inst, /*image_visible=*/true,
        std::span<const TokenId>(kEmptyCaption), temperature, /*top_p=*/1.0,
        limits.max_answer_tokens, rng));
  }
  return group;
}

}  // namespace prco
