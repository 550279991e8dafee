#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "reward.hpp"

using namespace prco;

namespace {

// Builds a tree with one caption and hand-scripted answer correctness; the
// enumeration tests drive observer_reward through every verifier pattern.
RolloutTree scripted_tree(const Policy& policy, int gold, const std::vector<TokenId>& caption,
                          const std::vector<bool>& correct) {
  const Vocab& vocab = policy.vocab();
  RolloutTree tree;
  tree.instance.scene.slots = {{0, 0}, {1, 1}, {2, 0}, {0, 1}};
  tree.instance.question = Question::count_color(0);
  tree.instance.gold = gold;

  Trajectory cap;
  cap.role = Role::Observer;
  cap.tokens = caption;
  tree.captions.push_back(cap);
  tree.answers.emplace_back();
  for (bool ok : correct) {
    Trajectory answer;
    answer.role = Role::Solver;
    const int digit = ok ? gold : (gold + 1) % (vocab.num_digits());
    answer.tokens = {vocab.digit(digit), vocab.eos()};
    tree.answers[0].push_back(std::move(answer));
  }
  return tree;
}

}  // namespace

TEST_CASE("solver reward blends verifier and format with lambda") {
  EnvConfig env;
  const Vocab vocab(env);
  RewardConfig cfg;  // lambda = 0.9

  const std::vector<TokenId> right = {vocab.digit(2), vocab.eos()};
  const std::vector<TokenId> wrong = {vocab.digit(1), vocab.eos()};
  const std::vector<TokenId> malformed = {vocab.digit(2), vocab.digit(2), vocab.eos()};
  const std::vector<TokenId> junk = {vocab.eos()};

  CHECK(solver_reward(right, 2, vocab, cfg) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(solver_reward(wrong, 2, vocab, cfg) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(solver_reward(malformed, 2, vocab, cfg) == 0.0);
  CHECK(solver_reward(junk, 2, vocab, cfg) == 0.0);

  // Exact value set {0, 1-lambda, lambda, 1}: a format-invalid but correct
  // digit cannot happen (verify requires format), so lambda alone never
  // appears from real sequences; it is still the analytic value of
  // verify=1/format=0 and the blend confines everything to the four values.
  for (const auto& tokens : {right, wrong, malformed, junk}) {
    const double r = solver_reward(tokens, 2, vocab, cfg);
    const bool in_set = r == 0.0 || r == (1.0 - cfg.lambda) || r == cfg.lambda || r == 1.0;
    CHECK(in_set);
  }
}

TEST_CASE("lambda outside [0,1] is rejected") {
  RewardConfig cfg;
  cfg.lambda = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.lambda = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("leakage indicator fires exactly on digit tokens") {
  EnvConfig env;
  const Vocab vocab(env);
  const Question q = Question::count_color(1);

  const std::vector<TokenId> facts_only = {vocab.fact(0, AttrKind::Color, 1),
                                           vocab.fact(1, AttrKind::Shape, 0), vocab.eoc()};
  CHECK(leakage_indicator(q, facts_only, vocab) == 0);

  const std::vector<TokenId> with_digit = {vocab.fact(0, AttrKind::Color, 1), vocab.digit(2),
                                           vocab.eoc()};
  CHECK(leakage_indicator(q, with_digit, vocab) == 1);

  const std::vector<TokenId> empty_caption = {vocab.eoc()};
  CHECK(leakage_indicator(q, empty_caption, vocab) == 0);
}

TEST_CASE("observer reward is the verifier mean, zeroed under leakage") {
  EnvConfig env;
  const Policy policy(env);
  const Vocab& vocab = policy.vocab();
  RewardConfig cfg;

  const std::vector<TokenId> clean_caption = {vocab.fact(0, AttrKind::Color, 0), vocab.eoc()};
  const std::vector<TokenId> leaky_caption = {vocab.digit(2), vocab.eoc()};

  // 6 of 8 verified correct -> 0.75.
  std::vector<bool> six(8, true);
  six[0] = six[1] = false;
  RolloutTree tree = scripted_tree(policy, 2, clean_caption, six);
  CHECK(observer_reward(tree, 0, vocab, cfg) == doctest::Approx(0.75).epsilon(1e-15));

  // Leak -> 0 regardless of solver success.
  RolloutTree leaky = scripted_tree(policy, 2, leaky_caption, std::vector<bool>(8, true));
  CHECK(observer_reward(leaky, 0, vocab, cfg) == 0.0);

  // All wrong -> 0.
  RolloutTree hopeless = scripted_tree(policy, 2, clean_caption, std::vector<bool>(8, false));
  CHECK(observer_reward(hopeless, 0, vocab, cfg) == 0.0);

  // Checker disabled -> plain verifier mean even under leakage.
  RewardConfig no_leak_cfg;
  no_leak_cfg.leakage_enabled = false;
  CHECK(observer_reward(leaky, 0, vocab, no_leak_cfg) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("observer reward over all 2^8 verifier patterns matches popcount/8") {
  EnvConfig env;
  const Policy policy(env);
  const Vocab& vocab = policy.vocab();
  RewardConfig cfg;
  const std::vector<TokenId> clean_caption = {vocab.fact(0, AttrKind::Color, 0), vocab.eoc()};
  const std::vector<TokenId> leaky_caption = {vocab.digit(1), vocab.eoc()};

  for (unsigned pattern = 0; pattern < 256; ++pattern) {
    std::vector<bool> correct(8);
    for (int g = 0; g < 8; ++g) correct[g] = (pattern >> g) & 1;
    const double expected = __builtin_popcount(pattern) / 8.0;

    RolloutTree tree = scripted_tree(policy, 2, clean_caption, correct);
    CHECK(observer_reward(tree, 0, vocab, cfg) == doctest::Approx(expected).epsilon(1e-15));

    RolloutTree leaky = scripted_tree(policy, 2, leaky_caption, correct);
    CHECK(observer_reward(leaky, 0, vocab, cfg) == 0.0);
    CHECK(observer_reward(leaky, 0, vocab, cfg) <= 1.0);
  }
}

TEST_CASE("observer reward depends on the verifier, not the format component") {
  EnvConfig env;
  const Policy policy(env);
  const Vocab& vocab = policy.vocab();
  RewardConfig cfg;
  const std::vector<TokenId> caption = {vocab.fact(0, AttrKind::Color, 0), vocab.eoc()};

  // One answer is wrong-but-well-formatted; flipping it to malformed must
  // not change the observer reward (verify is 0 either way).
  RolloutTree tree = scripted_tree(policy, 2, caption, {true, false, true, true});
  const double before = observer_reward(tree, 0, vocab, cfg);
  tree.answers[0][1].tokens = {vocab.fact(0, AttrKind::Color, 0), vocab.eos()};
  const double after = observer_reward(tree, 0, vocab, cfg);
  CHECK(before == after);

  // The solver reward, by contrast, does change.
  const std::vector<TokenId> wrong_formatted = {vocab.digit(1), vocab.eos()};
  CHECK(solver_reward(wrong_formatted, 2, vocab, cfg) !=
        solver_reward(tree.answers[0][1].tokens, 2, vocab, cfg));
}

TEST_CASE("truncated captions are scored normally") {
  EnvConfig env;
  const Policy policy(env);
  const Vocab& vocab = policy.vocab();
  RewardConfig cfg;
  std::vector<TokenId> truncated_caption(6, vocab.fact(0, AttrKind::Color, 0));
  RolloutTree tree = scripted_tree(policy, 2, truncated_caption, {true, true, false, false});
  tree.captions[0].truncated = true;
  CHECK(observer_reward(tree, 0, vocab, cfg) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("fill_tree_rewards populates both reward layers consistently") {
  EnvConfig env;
  const Policy policy(env);
  const PolicyParams params = make_params(env, InitPreset::Pretrained, 1, 0.01);
  const Instance inst = generate_instance(7, env);
  Rng rng(11);
  RolloutTree tree =
      rollout_prco(policy, params, inst, 3, 4, true, 1.0, SampleLimits{}, rng);
  RewardConfig cfg;
  fill_tree_rewards(tree, policy.vocab(), cfg);

  REQUIRE(tree.solver_rewards.size() == 3);
  REQUIRE(tree.observer_rewards.size() == 3);
  for (size_t k = 0; k < 3; ++k) {
    double verified = 0.0;
    for (size_t g = 0; g < 4; ++g) {
      const double r = tree.solver_rewards[k][g];
      CHECK(r >= 0.0);
      CHECK(r <= 1.0);
      CHECK(r == solver_reward(tree.answers[k][g].tokens, inst.gold, policy.vocab(), cfg));
      verified += verify(tree.answers[k][g].tokens, inst.gold, policy.vocab());
    }
    const int leak = leakage_indicator(inst.question, tree.captions[k].tokens, policy.vocab());
    const double expected = leak ? 0.0 : verified / 4.0;
    CHECK(tree.observer_rewards[k] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(tree.observer_rewards[k] >= 0.0);
    CHECK(tree.observer_rewards[k] <= 1.0);
  }
}

TEST_CASE("utility answers override the observer reward source when present") {
  EnvConfig env;
  const Policy policy(env);
  const Vocab& vocab = policy.vocab();
  RewardConfig cfg;
  RolloutTree tree = scripted_tree(policy, 2, {vocab.eoc()}, {false, false, false, false});
  // Frozen-estimator answers all correct while trained answers are all wrong.
  tree.utility_answers.emplace_back();
  for (int g = 0; g < 4; ++g) {
    Trajectory t;
    t.role = Role::Solver;
    t.tokens = {vocab.digit(2), vocab.eos()};
    tree.utility_answers[0].push_back(std::move(t));
  }
  fill_tree_rewards(tree, vocab, cfg);
  CHECK(tree.observer_rewards[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(tree.solver_rewards[0][0] == doctest::Approx(0.1).epsilon(1e-12));
}
