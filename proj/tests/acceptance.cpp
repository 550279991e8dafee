// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Heavier than the unit tests; the whole binary targets a few
// minutes on one core.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "advantage.hpp"
#include "metrics.hpp"
#include "optimize.hpp"
#include "oracles.hpp"
#include "reward.hpp"
#include "trainer.hpp"

using namespace prco;

namespace {

int g_failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const auto start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

EnvConfig tiny_env() {
  EnvConfig env;
  env.slots = 2;
  env.colors = 2;
  env.shapes = 2;
  return env;
}

// Sampled dual-role batch under old_params with filled rewards/advantages.
struct BatchFixture {
  EnvConfig env = tiny_env();
  Policy policy{env};
  PolicyParams old_params;
  std::vector<RolloutTree> trees;
  AdvantageBatch batch;

  BatchFixture(uint64_t seed, double scale) {
    Rng rng(seed);
    old_params = make_params(env, InitPreset::Zeros, 0, 0.0);
    for (double& w : old_params.weights) w = scale * (2.0 * rng.next_double() - 1.0);
    RewardConfig reward_cfg;
    for (int i = 0; i < 2; ++i) {
      const Instance inst = generate_instance(seed * 131 + i, env);
      RolloutTree tree =
          rollout_prco(policy, old_params, inst, 2, 2, true, 1.0, SampleLimits{}, rng);
      fill_tree_rewards(tree, policy.vocab(), reward_cfg);
      trees.push_back(std::move(tree));
    }
    for (size_t t = 0; t < trees.size(); ++t) {
      Rng sel(seed + t);
      const AdvantageBatch part = build_prco_advantages(trees[t], sel, static_cast<int>(2 * t));
      batch.entries.insert(batch.entries.end(), part.entries.begin(), part.entries.end());
    }
  }

  bool near_clip_boundary(const PolicyParams& params, const OptimConfig& cfg,
                          double margin) const {
    for (const AdvantageEntry& entry : batch.entries) {
      const auto lps = policy.token_logprobs(params, *entry.traj);
      for (size_t t = 0; t < lps.size(); ++t) {
        const double ratio = std::exp(lps[t] - entry.traj->behavior_logprobs[t]);
        if (std::fabs(ratio - (1.0 - cfg.eps_low)) < margin ||
            std::fabs(ratio - (1.0 + cfg.eps_high)) < margin)
          return true;
      }
    }
    return false;
  }
};

void criterion1_gradient_correctness() {
  const double t0 = now_seconds();
  int accepted = 0;
  double worst = 0.0;
  uint64_t seed = 1;
  while (accepted < 100) {
    BatchFixture fx(seed, 0.6);
    OptimConfig cfg;  // eps 0.2 / 0.28
    cfg.beta = (accepted % 2 == 0) ? 0.0 : 0.01;
    cfg.kl_mode = cfg.beta > 0 ? KlMode::ExactCategoricalToOld : KlMode::None;
    cfg.aggregation =
        accepted % 4 < 2 ? Aggregation::TokenMean : Aggregation::SequenceMeanOfMeans;

    PolicyParams params = fx.old_params;
    Rng rng(seed * 977 + 5);
    for (double& w : params.weights) w += 0.05 * (2.0 * rng.next_double() - 1.0);
    ++seed;
    if (fx.near_clip_boundary(params, cfg, 2e-3)) continue;
    ++accepted;

    const SurrogateResult result =
        surrogate_loss(fx.policy, params, fx.old_params, fx.batch, cfg);
    const auto fd = testing_oracles::finite_difference_grad(
        params,
        [&] { return surrogate_loss(fx.policy, params, fx.old_params, fx.batch, cfg).loss; },
        1e-5);
    worst = std::max(worst, testing_oracles::max_rel_err(result.grad, fd, 1e-5));
  }
  const double elapsed = now_seconds() - t0;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "surrogate gradient vs central differences on 100 batches: max rel err %.3g "
                "(< 1e-4), %.1fs (< 60s)",
                worst, elapsed);
  report(1, worst < 1e-4 && elapsed < 60.0, detail);
}

void criterion2_advantage_kernels() {
  bool ok = true;
  const auto z2 = zscore_advantages(std::vector<double>{1.0, 0.0}, 1e-6);
  const double expect = 0.5 / (0.5 + 1e-6);
  ok = ok && std::fabs(z2[0] - expect) < 1e-12 && std::fabs(z2[1] + expect) < 1e-12;
  const auto z4 = zscore_advantages(std::vector<double>{1.0, 1.0, 0.0, 0.0}, 1e-6);
  ok = ok && z4[0] > 0 && z4[1] > 0 && z4[2] < 0 && z4[3] < 0;
  const auto c4 = centered_advantages(std::vector<double>{1.0, 0.0, 0.0, 1.0});
  ok = ok && c4 == std::vector<double>{0.5, -0.5, -0.5, 0.5};
  const auto c1 = centered_advantages(std::vector<double>{1.0, 0.0, 0.0, 0.0});
  ok = ok && c1 == std::vector<double>{0.75, -0.25, -0.25, -0.25};

  double worst_sum = 0.0;
  Rng rng(4);
  const double values[4] = {0.0, 0.1, 0.9, 1.0};
  for (int trial = 0; trial < 10000; ++trial) {
    const int size = 2 + static_cast<int>(rng.next_below(11));
    std::vector<double> rewards(size);
    for (double& r : rewards) r = values[rng.next_below(4)];
    double sz = 0.0, sc = 0.0;
    for (double a : zscore_advantages(rewards, 1e-6)) sz += a;
    for (double a : centered_advantages(rewards)) sc += a;
    worst_sum = std::max({worst_sum, std::fabs(sz), std::fabs(sc)});
  }
  ok = ok && worst_sum < 1e-9;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "hand vectors exact to 1e-12; worst group sum %.3g over 10k groups (< 1e-9)",
                worst_sum);
  report(2, ok, detail);
}

void criterion3_reward_kernels() {
  EnvConfig env;
  const Policy policy(env);
  const Vocab& vocab = policy.vocab();
  RewardConfig cfg;
  bool ok = true;

  // Solver rewards land exactly on the four-value set at lambda = 0.9.
  Rng rng(6);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<TokenId> tokens;
    const int len = static_cast<int>(rng.next_below(4));
    for (int i = 0; i < len; ++i)
      tokens.push_back(static_cast<TokenId>(rng.next_below(static_cast<uint32_t>(vocab.size()))));
    const double r = solver_reward(tokens, static_cast<int>(rng.next_below(5)), vocab, cfg);
    const bool in_set = std::fabs(r) < 1e-12 || std::fabs(r - 0.1) < 1e-12 ||
                        std::fabs(r - 0.9) < 1e-12 || std::fabs(r - 1.0) < 1e-12;
    ok = ok && in_set;
  }

  // Observer reward across all 2^8 verifier patterns at G_S = 8.
  const int gold = 2;
  for (unsigned pattern = 0; pattern < 256 && ok; ++pattern) {
    RolloutTree tree;
    tree.instance = generate_instance(3, env);
    tree.instance.gold = gold;
    Trajectory caption;
    caption.role = Role::Observer;
    caption.tokens = {vocab.fact(0, AttrKind::Color, 0), vocab.eoc()};
    tree.captions.push_back(caption);
    tree.answers.emplace_back();
    int correct = 0;
    for (int g = 0; g < 8; ++g) {
      Trajectory answer;
      answer.role = Role::Solver;
      const bool hit = (pattern >> g) & 1;
      answer.tokens = {vocab.digit(hit ? gold : gold + 1), vocab.eos()};
      correct += hit ? 1 : 0;
      tree.answers[0].push_back(std::move(answer));
    }
    const double expected = correct / 8.0;
    ok = ok && std::fabs(observer_reward(tree, 0, vocab, cfg) - expected) < 1e-15;

    // The same pattern under a leaky caption must give 0.
    tree.captions[0].tokens = {vocab.digit(gold), vocab.eoc()};
    ok = ok && observer_reward(tree, 0, vocab, cfg) == 0.0;
  }
  report(3, ok,
         "solver rewards confined to {0, 0.1, 0.9, 1.0}; observer reward matches popcount/8 "
         "over all 256 patterns and zeroes under leakage");
}

void criterion4_on_policy_identity() {
  bool ok = true;
  double worst_ratio = 0.0, worst_grad = 0.0;
  for (uint64_t seed : {11u, 22u, 33u}) {
    BatchFixture fx(seed, 0.8);
    OptimConfig cfg;
    for (const AdvantageEntry& entry : fx.batch.entries) {
      const auto lps = fx.policy.token_logprobs(fx.old_params, *entry.traj);
      for (size_t t = 0; t < lps.size(); ++t)
        worst_ratio = std::max(
            worst_ratio,
            std::fabs(std::exp(lps[t] - entry.traj->behavior_logprobs[t]) - 1.0));
    }
    const SurrogateResult result =
        surrogate_loss(fx.policy, fx.old_params, fx.old_params, fx.batch, cfg);
    size_t total_tokens = 0;
    for (const AdvantageEntry& e : fx.batch.entries) total_tokens += e.traj->tokens.size();
    std::vector<double> reinforce(fx.old_params.weights.size(), 0.0);
    for (const AdvantageEntry& e : fx.batch.entries) {
      const SequenceLogprob lg = fx.policy.logprob_and_grad(fx.old_params, *e.traj);
      for (size_t i = 0; i < reinforce.size(); ++i)
        reinforce[i] -= e.advantage * lg.grad[i] / static_cast<double>(total_tokens);
    }
    for (size_t i = 0; i < reinforce.size(); ++i)
      worst_grad = std::max(worst_grad, std::fabs(result.grad[i] - reinforce[i]));
  }
  ok = worst_ratio < 1e-12 && worst_grad < 1e-10;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "ratios deviate %.3g (< 1e-12); surrogate vs REINFORCE gradient %.3g (< 1e-10)",
                worst_ratio, worst_grad);
  report(4, ok, detail);
}

TrainConfig desk_prco(uint64_t seed) {
  const KeyValueConfig kv = KeyValueConfig::parse_file(std::string(PRCO_CONFIG_DIR) +
                                                       "/desk_prco.cfg");
  TrainConfig cfg = train_config_from_kv(kv);
  cfg.master_seed = seed;
  return cfg;
}

TrainConfig desk_grpo(uint64_t seed) {
  const KeyValueConfig kv = KeyValueConfig::parse_file(std::string(PRCO_CONFIG_DIR) +
                                                       "/desk_grpo.cfg");
  TrainConfig cfg = train_config_from_kv(kv);
  cfg.master_seed = seed;
  return cfg;
}

constexpr uint64_t kSeeds[3] = {1, 2, 3};

struct LearnedRuns {
  RunArtifacts prco[3];
  RunArtifacts grpo[3];
};

void criterion5_learning(const LearnedRuns& runs) {
  const double t0 = now_seconds();
  const double step0 = runs.prco[0].step0_eval;
  const double final_prco = runs.prco[0].final_eval;
  const double final_grpo = runs.grpo[0].final_eval;
  const bool gained = final_prco >= step0 + 0.20;
  const bool beats = final_prco > final_grpo;
  char detail[240];
  std::snprintf(detail, sizeof detail,
                "desk preset seed %llu: accuracy %.3f -> %.3f (gain %.3f >= 0.20), matched-budget "
                "flat baseline %.3f (must be lower), %.0fs elapsed",
                static_cast<unsigned long long>(kSeeds[0]), step0, final_prco,
                final_prco - step0, final_grpo, now_seconds() - t0);
  report(5, gained && beats, detail);
}

void criterion6_warmup_diagnostic() {
  bool ok = true;
  std::string detail = "no-warmup caption-reward-std halves earlier:";
  for (uint64_t seed : kSeeds) {
    TrainConfig with_warmup = desk_prco(seed);
    with_warmup.steps = 100;
    with_warmup.eval_interval = 50;  // eval cadence is irrelevant here
    TrainConfig without = with_warmup;
    without.no_warmup = true;
    without.validate_and_normalize();

    const RunArtifacts warm = run_training(with_warmup);
    const RunArtifacts cold = run_training(without);
    auto crossing = [](const std::vector<StepMetrics>& ms) {
      const double initial = ms.front().caption_reward_std;
      for (const StepMetrics& m : ms)
        if (m.caption_reward_std < 0.5 * initial) return m.step;
      return 1 << 20;  // never crossed inside the window
    };
    const int t_warm = crossing(warm.metrics);
    const int t_cold = crossing(cold.metrics);
    detail += " seed " + std::to_string(seed) + ": " +
              (t_cold == (1 << 20) ? std::string("never") : std::to_string(t_cold)) + " vs " +
              (t_warm == (1 << 20) ? std::string("never") : std::to_string(t_warm)) + ";";
    ok = ok && t_cold < t_warm;
  }
  report(6, ok, detail);
}

void criterion7_perception_errors(const LearnedRuns& runs) {
  bool ok = true;
  std::string detail = "perception-error rate on 500 held-out instances:";
  const EnvConfig env = desk_prco(1).env;
  const Policy policy(env);
  const auto held_out = make_eval_set(env, 777, 500);
  for (int s = 0; s < 3; ++s) {
    const EvalResult p =
        evaluate(policy, runs.prco[s].final_params, held_out, SampleLimits{}, EvalOptions{});
    const EvalResult g =
        evaluate(policy, runs.grpo[s].final_params, held_out, SampleLimits{}, EvalOptions{});
    const double pp = p.category_rates.at("perception");
    const double gp = g.category_rates.at("perception");
    char part[80];
    std::snprintf(part, sizeof part, " seed %llu: %.3f vs %.3f;",
                  static_cast<unsigned long long>(kSeeds[s]), pp, gp);
    detail += part;
    ok = ok && pp < gp;
  }
  report(7, ok, detail);
}

void criterion8_dynamic_sampling() {
  struct Result {
    int id = 0;
    bool degenerate = false;
    int attempts = 0;
  };
  bool ok = true;
  for (const int m : {0, 3, 19, 20, 25, 100}) {
    int calls = 0;
    const std::function<Result(int)> gen = [&](int attempt) {
      ++calls;
      return Result{attempt, false, 0};
    };
    const std::function<bool(const Result&)> first_m_degenerate = [&](const Result& r) {
      return r.id < m;
    };
    dynamic_sample<Result>(gen, first_m_degenerate, 20);
    ok = ok && calls == std::min(m, 20) + 1;
  }
  report(8, ok, "scripted all-equal-reward prefixes consume exactly min(m, 20) + 1 attempts");
}

void criterion9_pass_at_k() {
  bool ok = true;
  double worst = 0.0;
  for (int n = 1; n <= 8; ++n)
    for (int c = 0; c <= n; ++c)
      for (int k = 1; k <= n; ++k) {
        const double estimator = pass_at_k(std::vector<std::pair<int, int>>{{n, c}}, k);
        const double exhaustive = testing_oracles::passk_enumerate(n, c, k);
        worst = std::max(worst, std::fabs(estimator - exhaustive));
      }
  ok = worst < 1e-12;

  Rng rng(8);
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    std::vector<std::pair<int, int>> counts;
    int min_n = 64;
    for (int q = 0; q < 1 + static_cast<int>(rng.next_below(5)); ++q) {
      const int n = 2 + static_cast<int>(rng.next_below(63));
      counts.emplace_back(n, static_cast<int>(rng.next_below(n + 1)));
      min_n = std::min(min_n, n);
    }
    double prev = -1.0;
    for (int k = 1; k <= min_n; ++k) {
      const double v = pass_at_k(counts, k);
      ok = ok && v >= prev - 1e-15;
      prev = v;
    }
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "matches exhaustive enumeration for n <= 8 (max diff %.3g) and is monotone in k",
                worst);
  report(9, ok, detail);
}

void criterion10_determinism() {
  const auto base = std::filesystem::temp_directory_path() / "prco_acceptance_det";
  std::filesystem::remove_all(base);
  TrainConfig cfg = desk_prco(9);
  cfg.steps = 25;
  cfg.warmup_steps = 10;
  cfg.rollout_batch = 16;
  cfg.eval_set_size = 100;
  cfg.eval_interval = 5;
  run_training(cfg, (base / "a").string());
  run_training(cfg, (base / "b").string());
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const bool jsonl_equal =
      slurp(base / "a" / "metrics.jsonl") == slurp(base / "b" / "metrics.jsonl");
  const bool csv_equal = slurp(base / "a" / "metrics.csv") == slurp(base / "b" / "metrics.csv");
  const bool nonempty = slurp(base / "a" / "metrics.jsonl").size() > 0;
  std::filesystem::remove_all(base);
  report(10, jsonl_equal && csv_equal && nonempty,
         "two identically-seeded runs produce byte-identical metrics logs");
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion1_gradient_correctness();
  criterion2_advantage_kernels();
  criterion3_reward_kernels();
  criterion4_on_policy_identity();

  // Criteria 5 and 7 share the trained runs (3 seeds each of the dual-role
  // preset and the matched-budget flat baseline).
  LearnedRuns runs;
  for (int s = 0; s < 3; ++s) {
    runs.prco[s] = run_training(desk_prco(kSeeds[s]));
    runs.grpo[s] = run_training(desk_grpo(kSeeds[s]));
  }
  criterion5_learning(runs);
  criterion6_warmup_diagnostic();
  criterion7_perception_errors(runs);
  criterion8_dynamic_sampling();
  criterion9_pass_at_k();
  criterion10_determinism();

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
