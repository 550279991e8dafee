#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "advantage.hpp"
#include "rng.hpp"

namespace prco {

const char* algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::Grpo: return "grpo";
    case Algorithm::Dapo: return "dapo";
    case Algorithm::Prco: return "prco";
  }
  return "invalid";
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "grpo") return Algorithm::Grpo;
  if (name == "dapo") return Algorithm::Dapo;
  if (name == "prco") return Algorithm::Prco;
  throw InputError("unknown algorithm: " + name);
}

void TrainConfig::validate_and_normalize() {
  env.validate();
  reward.validate();
  optim.validate();
  policy.validate();
  if (steps < 0) throw ConfigError("train.steps must be >= 0");
  if (rollout_batch < 1) throw ConfigError("train.rollout_batch must be >= 1");
  if (group_observer < 2) throw ConfigError("train.group_observer must be >= 2");
  if (group_solver < 2) throw ConfigError("train.group_solver must be >= 2");
  if (no_warmup) warmup_steps = 0;
  if (warmup_steps < 0) throw ConfigError("train.warmup_steps must be >= 0");
  if (warmup_steps > steps) throw ConfigError("train.warmup_steps must be <= train.steps");
  if (no_observer_update && no_solver_update)
    throw ConfigError("no_observer_update and no_solver_update cannot both be set");
  if (max_retries < 0) throw ConfigError("train.max_retries must be >= 0");
  if (eps_norm <= 0.0) throw ConfigError("train.eps_norm must be > 0");
  if (eval_interval < 1) throw ConfigError("train.eval_interval must be >= 1");
  if (eval_set_size < 1) throw ConfigError("train.eval_set_size must be >= 1");
  if (checkpoint_interval < 0) throw ConfigError("train.checkpoint_interval must be >= 0");
}

TrainConfig train_config_from_kv(const KeyValueConfig& kv) {
  TrainConfig cfg;
  cfg.algorithm = algorithm_from_name(kv.get_string("train.algorithm", "prco"));

  // Baseline-specific objective defaults; explicit keys always win.
  const bool grpo = cfg.algorithm == Algorithm::Grpo;
  OptimConfig od;
  od.eps_high = grpo ? 0.3 : 0.28;
  od.beta = grpo ? 0.01 : 0.0;
  od.kl_mode = grpo ? KlMode::ExactCategoricalToOld : KlMode::None;
  od.aggregation = grpo ? Aggregation::SequenceMeanOfMeans : Aggregation::TokenMean;

  cfg.env.slots = kv.get_int("env.slots", cfg.env.slots);
  cfg.env.colors = kv.get_int("env.colors", cfg.env.colors);
  cfg.env.shapes = kv.get_int("env.shapes", cfg.env.shapes);
  cfg.env.weight_count_color = kv.get_double("env.weight_count_color", cfg.env.weight_count_color);
  cfg.env.weight_count_shape = kv.get_double("env.weight_count_shape", cfg.env.weight_count_shape);
  cfg.env.weight_count_color_shape =
      kv.get_double("env.weight_count_color_shape", cfg.env.weight_count_color_shape);

  cfg.reward.lambda = kv.get_double("reward.lambda", cfg.reward.lambda);
  cfg.reward.leakage_enabled = kv.get_bool("reward.leakage_enabled", cfg.reward.leakage_enabled);

  cfg.optim.eps_low = kv.get_double("optim.eps_low", od.eps_low);
  cfg.optim.eps_high = kv.get_double("optim.eps_high", od.eps_high);
  cfg.optim.beta = kv.get_double("optim.beta", od.beta);
  const std::string agg = kv.get_string(
      "optim.aggregation", od.aggregation == Aggregation::TokenMean ? "token_mean" : "sequence_mean");
  if (agg == "token_mean")
    cfg.optim.aggregation = Aggregation::TokenMean;
  else if (agg == "sequence_mean")
    cfg.optim.aggregation = Aggregation::SequenceMeanOfMeans;
  else
    throw InputError("optim.aggregation must be token_mean or sequence_mean");
  cfg.optim.learning_rate = kv.get_double("optim.learning_rate", cfg.optim.learning_rate);
  cfg.optim.update_epochs = kv.get_int("optim.update_epochs", cfg.optim.update_epochs);
  const std::string kl =
      kv.get_string("optim.kl_mode", od.kl_mode == KlMode::None ? "none" : "exact_to_old");
  if (kl == "none")
    cfg.optim.kl_mode = KlMode::None;
  else if (kl == "exact_to_old")
    cfg.optim.kl_mode = KlMode::ExactCategoricalToOld;
  else
    throw InputError("optim.kl_mode must be none or exact_to_old");
  const std::string rule = kv.get_string("optim.optimizer", "adam");
  if (rule == "adam")
    cfg.optim.rule = UpdateRule::Adam;
  else if (rule == "sgd")
    cfg.optim.rule = UpdateRule::Sgd;
  else
    throw InputError("optim.optimizer must be adam or sgd");
  cfg.optim.adam_beta1 = kv.get_double("optim.adam_beta1", cfg.optim.adam_beta1);
  cfg.optim.adam_beta2 = kv.get_double("optim.adam_beta2", cfg.optim.adam_beta2);
  cfg.optim.adam_eps = kv.get_double("optim.adam_eps", cfg.optim.adam_eps);

  const std::string init = kv.get_string("policy.init", "pretrained");
  if (init == "pretrained")
    cfg.policy.init = InitPreset::Pretrained;
  else if (init == "zeros")
    cfg.policy.init = InitPreset::Zeros;
  else
    throw InputError("policy.init must be pretrained or zeros");
  cfg.policy.init_seed = kv.get_u64("policy.init_seed", cfg.policy.init_seed);
  cfg.policy.init_noise = kv.get_double("policy.init_noise", cfg.policy.init_noise);
  cfg.policy.max_caption_tokens =
      kv.get_int("policy.max_caption_tokens", cfg.policy.max_caption_tokens);
  cfg.policy.max_answer_tokens =
      kv.get_int("policy.max_answer_tokens", cfg.policy.max_answer_tokens);
  cfg.policy.temperature = kv.get_double("policy.temperature", cfg.policy.temperature);
  cfg.policy.top_p = kv.get_double("policy.top_p", cfg.policy.top_p);

  cfg.steps = kv.get_int("train.steps", cfg.steps);
  cfg.rollout_batch = kv.get_int("train.rollout_batch", cfg.rollout_batch);
  cfg.group_observer = kv.get_int("train.group_observer", cfg.group_observer);
  cfg.group_solver = kv.get_int("train.group_solver", cfg.group_solver);
  cfg.warmup_steps = kv.get_int("train.warmup_steps", cfg.warmup_steps);
  cfg.no_observer_update = kv.get_bool("train.no_observer_update", cfg.no_observer_update);
  cfg.no_solver_update = kv.get_bool("train.no_solver_update", cfg.no_solver_update);
  cfg.no_warmup = kv.get_bool("train.no_warmup", cfg.no_warmup);
  cfg.solver_image_never = kv.get_bool("train.solver_image_never", cfg.solver_image_never);
  cfg.fixed_utility_estimator =
      kv.get_bool("train.fixed_utility_estimator", cfg.fixed_utility_estimator);
  cfg.leakage_checker_disabled =
      kv.get_bool("train.leakage_checker_disabled", cfg.leakage_checker_disabled);
  cfg.dynamic_sampling = kv.get_bool("train.dynamic_sampling", !grpo);
  cfg.max_retries = kv.get_int("train.max_retries", cfg.max_retries);
  cfg.eps_norm = kv.get_double("train.eps_norm", cfg.eps_norm);
  cfg.eval_interval = kv.get_int("train.eval_interval", cfg.eval_interval);
  cfg.eval_set_size = kv.get_int("train.eval_set_size", cfg.eval_set_size);
  cfg.master_seed = kv.get_u64("train.master_seed", cfg.master_seed);
  cfg.checkpoint_interval = kv.get_int("train.checkpoint_interval", cfg.checkpoint_interval);
  cfg.emit_svg = kv.get_bool("train.emit_svg", cfg.emit_svg);
  cfg.dump_rollouts = kv.get_bool("train.dump_rollouts", cfg.dump_rollouts);

  // Sweep keys are read by the sweep runner; mark them so strict key
  // checking below only trips on genuine typos.
  kv.get_string("sweep.group_observer_values", "");
  kv.get_string("sweep.group_solver_values", "");
  kv.get_int("sweep.steps", 0);

  const auto unread = kv.unread_keys();
  if (!unread.empty()) throw InputError("unknown config key: " + unread.front());

  cfg.validate_and_normalize();
  return cfg;
}

TrainState make_train_state(const TrainConfig& cfg) {
  TrainState state;
  state.params =
      make_params(cfg.env, cfg.policy.init, cfg.policy.init_seed, cfg.policy.init_noise);
  if (cfg.fixed_utility_estimator) state.fixed_estimator = state.params;
  return state;
}

bool tree_is_solver_degenerate(const RolloutTree& tree) {
  for (const auto& rewards : tree.solver_rewards) {
    for (double r : rewards)
      if (r != rewards[0]) return false;
  }
  return true;
}

namespace {

bool flat_is_degenerate(const FlatGroup& group) {
  for (double r : group.rewards)
    if (r != group.rewards[0]) return false;
  return true;
}

double population_std(std::span<const double> xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(xs.size()));
}

nlohmann::json trajectory_to_json(const Trajectory& traj) {
  return {{"role", role_name(traj.role)},
          {"tokens", traj.tokens},
          {"truncated", traj.truncated}};
}

void dump_tree(std::ostream& out, const RolloutTree& tree) {
  nlohmann::json rec;
  rec["instance"] = nlohmann::json::parse(instance_to_json(tree.instance));
  rec["captions"] = nlohmann::json::array();
  for (const auto& c : tree.captions) rec["captions"].push_back(trajectory_to_json(c));
  rec["answers"] = nlohmann::json::array();
  for (const auto& group : tree.answers) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& a : group) arr.push_back(trajectory_to_json(a));
    rec["answers"].push_back(std::move(arr));
  }
  rec["solver_rewards"] = tree.solver_rewards;
  rec["observer_rewards"] = tree.observer_rewards;
  rec["degenerate"] = tree.degenerate;
  rec["attempts"] = tree.attempts;
  out << rec.dump() << '\n';
}

void dump_flat(std::ostream& out, const FlatGroup& group) {
  nlohmann::json rec;
  rec["instance"] = nlohmann::json::parse(instance_to_json(group.instance));
  rec["answers"] = nlohmann::json::array();
  for (const auto& a : group.answers) rec["answers"].push_back(trajectory_to_json(a));
  rec["rewards"] = group.rewards;
  rec["degenerate"] = group.degenerate;
  rec["attempts"] = group.attempts;
  out << rec.dump() << '\n';
}

struct ErrorTally {
  int total = 0;
  int perception = 0;
  int reasoning = 0;
  int other = 0;

  void add(ErrorCategory cat) {
    ++total;
    if (cat == ErrorCategory::Perception) ++perception;
    if (cat == ErrorCategory::Reasoning) ++reasoning;
    if (cat == ErrorCategory::Other) ++other;
  }

  std::map<std::string, double> rates() const {
    const double denom = std::max(1, total);
    return {{"perception", perception / denom},
            {"reasoning", reasoning / denom},
            {"other", other / denom}};
  }
};

StepMetrics train_step_prco(TrainState& state, const TrainConfig& cfg, const Policy& policy,
                            std::ostream* dump, StepTrace* trace) {
  const PolicyParams old_params = state.params;
  const bool image_visible_solver =
      cfg.solver_image_never ? false : (cfg.no_warmup || state.step >= cfg.warmup_steps);
  const SampleLimits limits{cfg.policy.max_caption_tokens, cfg.policy.max_answer_tokens};
  RewardConfig reward_cfg = cfg.reward;
  if (cfg.leakage_checker_disabled) reward_cfg.leakage_enabled = false;

  std::vector<RolloutTree> trees;
  trees.reserve(cfg.rollout_batch);
  for (int slot = 0; slot < cfg.rollout_batch; ++slot) {
    auto generate = [&](int attempt) {
      const uint64_t iseed =
          stream_seed(cfg.master_seed, "train-instance", state.step, slot, attempt);
      const Instance inst = generate_instance(iseed, cfg.env);
      Rng rng(stream_seed(cfg.master_seed, "rollout", state.step, slot, attempt));
      RolloutTree tree =
          rollout_prco(policy, old_params, inst, cfg.group_observer, cfg.group_solver,
                       image_visible_solver, cfg.policy.temperature, limits, rng);
      if (state.fixed_estimator) {
        Rng urng(stream_seed(cfg.master_seed, "utility", state.step, slot, attempt));
        tree.utility_answers.resize(tree.captions.size());
        for (size_t k = 0; k < tree.captions.size(); ++k)
          for (int g = 0; g < cfg.group_solver; ++g)
            tree.utility_answers[k].push_back(policy.sample_sequence(
                *state.fixed_estimator, Role::Solver, inst, image_visible_solver,
                std::span<const TokenId>(tree.captions[k].tokens), cfg.policy.temperature, 1.0,
                limits.max_answer_tokens, urng));
      }
      fill_tree_rewards(tree, policy.vocab(), reward_cfg);
      return tree;
    };
    if (cfg.dynamic_sampling) {
      trees.push_back(dynamic_sample<RolloutTree>(generate, tree_is_solver_degenerate,
                                                  cfg.max_retries));
    } else {
      RolloutTree tree = generate(0);
      tree.degenerate = tree_is_solver_degenerate(tree);
      trees.push_back(std::move(tree));
    }
  }

  AdvantageBatch combined;
  for (size_t ti = 0; ti < trees.size(); ++ti) {
    Rng sel_rng(stream_seed(cfg.master_seed, "select", state.step, ti));
    AdvantageBatch batch = build_prco_advantages(trees[ti], sel_rng, static_cast<int>(2 * ti));
    for (AdvantageEntry& entry : batch.entries) {
      if (cfg.no_observer_update && entry.role == Role::Observer) continue;
      if (cfg.no_solver_update && entry.role == Role::Solver) continue;
      combined.entries.push_back(entry);
    }
  }
  if (combined.entries.empty())
    throw ConfigError("combined update batch is empty (both role updates dropped)");

  if (trace) {
    trace->image_visible_solver = image_visible_solver;
    trace->old_params_version = old_params.version;
    for (const AdvantageEntry& entry : combined.entries) {
      trace->batch_entries.emplace_back(entry.role, entry.advantage);
      trace->batch_versions.push_back(entry.traj->params_version);
    }
  }

  for (int epoch = 0; epoch < cfg.optim.update_epochs; ++epoch) {
    const SurrogateResult result =
        surrogate_loss(policy, state.params, old_params, combined, cfg.optim);
    apply_update(state.params, result.grad, cfg.optim, state.adam);
  }

  StepMetrics m;
  m.step = state.step;
  double solver_sum = 0.0;
  int solver_count = 0;
  double observer_sum = 0.0;
  double std_sum = 0.0;
  int leaks = 0;
  int captions = 0;
  int degenerate = 0;
  ErrorTally errors;
  for (const RolloutTree& tree : trees) {
    for (size_t k = 0; k < tree.captions.size(); ++k) {
      for (size_t g = 0; g < tree.answers[k].size(); ++g) {
        solver_sum += tree.solver_rewards[k][g];
        ++solver_count;
        errors.add(categorize_error(tree.instance.scene, tree.instance.question,
                                    tree.captions[k].tokens, tree.answers[k][g].tokens,
                                    tree.instance.gold, policy.vocab()));
      }
      observer_sum += tree.observer_rewards[k];
      leaks += leakage_indicator(tree.instance.question, tree.captions[k].tokens, policy.vocab());
      ++captions;
    }
    std_sum += population_std(tree.observer_rewards);
    degenerate += tree.degenerate ? 1 : 0;
    if (dump) dump_tree(*dump, tree);
  }
  m.mean_solver_reward = solver_sum / std::max(1, solver_count);
  m.mean_observer_reward = observer_sum / std::max(1, captions);
  m.caption_reward_std = std_sum / static_cast<double>(trees.size());
  m.leakage_rate = static_cast<double>(leaks) / std::max(1, captions);
  m.degenerate_group_rate = static_cast<double>(degenerate) / static_cast<double>(trees.size());
  m.error_rates = errors.rates();
  if (trace) trace->trees = std::move(trees);
  ++state.step;
  return m;
}

StepMetrics train_step_baseline(TrainState& state, const TrainConfig& cfg, const Policy& policy,
                                std::ostream* dump, StepTrace* trace) {
  const PolicyParams old_params = state.params;
  const SampleLimits limits{cfg.policy.max_caption_tokens, cfg.policy.max_answer_tokens};

  std::vector<FlatGroup> groups;
  groups.reserve(cfg.rollout_batch);
  for (int slot = 0; slot < cfg.rollout_batch; ++slot) {
    auto generate = [&](int attempt) {
      const uint64_t iseed =
          stream_seed(cfg.master_seed, "train-instance", state.step, slot, attempt);
      const Instance inst = generate_instance(iseed, cfg.env);
      Rng rng(stream_seed(cfg.master_seed, "rollout", state.step, slot, attempt));
      FlatGroup group = rollout_flat(policy, old_params, inst, cfg.group_solver,
                                     cfg.policy.temperature, limits, rng);
      fill_flat_rewards(group, policy.vocab(), cfg.reward);
      return group;
    };
    if (cfg.dynamic_sampling) {
      groups.push_back(dynamic_sample<FlatGroup>(generate, flat_is_degenerate, cfg.max_retries));
    } else {
      FlatGroup group = generate(0);
      group.degenerate = flat_is_degenerate(group);
      groups.push_back(std::move(group));
    }
  }

  AdvantageBatch combined;
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    const std::vector<double> adv = zscore_advantages(groups[gi].rewards, cfg.eps_norm);
    for (size_t g = 0; g < adv.size(); ++g)
      combined.entries.push_back(
          {&groups[gi].answers[g], adv[g], Role::Solver, static_cast<int>(gi)});
  }

  if (trace) {
    trace->image_visible_solver = true;
    trace->old_params_version = old_params.version;
    for (const AdvantageEntry& entry : combined.entries) {
      trace->batch_entries.emplace_back(entry.role, entry.advantage);
      trace->batch_versions.push_back(entry.traj->params_version);
    }
  }

  for (int epoch = 0; epoch < cfg.optim.update_epochs; ++epoch) {
    const SurrogateResult result =
        surrogate_loss(policy, state.params, old_params, combined, cfg.optim);
    apply_update(state.params, result.grad, cfg.optim, state.adam);
  }

  StepMetrics m;
  m.step = state.step;
  double solver_sum = 0.0;
  int solver_count = 0;
  int degenerate = 0;
  ErrorTally errors;
  static const std::vector<TokenId> kEmptyCaption;
  for (const FlatGroup& group : groups) {
    for (size_t g = 0; g < group.answers.size(); ++g) {
      solver_sum += group.rewards[g];
      ++solver_count;
      errors.add(categorize_error(group.instance.scene, group.instance.question, kEmptyCaption,
                                  group.answers[g].tokens, group.instance.gold, policy.vocab()));
    }
    degenerate += group.degenerate ? 1 : 0;
    if (dump) dump_flat(*dump, group);
  }
  m.mean_solver_reward = solver_sum / std::max(1, solver_count);
  m.degenerate_group_rate = static_cast<double>(degenerate) / static_cast<double>(groups.size());
  m.error_rates = errors.rates();
  if (trace) trace->groups = std::move(groups);
  ++state.step;
  return m;
}

}  // namespace

StepMetrics train_step(TrainState& state, const TrainConfig& cfg, const Policy& policy,
                       std::ostream* dump, StepTrace* trace) {
  if (cfg.algorithm == Algorithm::Prco) return train_step_prco(state, cfg, policy, dump, trace);
  return train_step_baseline(state, cfg, policy, dump, trace);
}

void save_checkpoint(const TrainState& state, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open checkpoint for writing: " + path);
  out << "PRCO_CHECKPOINT_V1\n";
  out << "step " << state.step << '\n';
  out << "adam_t " << state.adam.t << '\n';
  out << "has_fixed_estimator " << (state.fixed_estimator ? 1 : 0) << '\n';
  char buf[64];
  auto write_block = [&](const char* name, const std::vector<double>& xs) {
    out << name << ' ' << xs.size() << '\n';
    for (size_t i = 0; i < xs.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%a", xs[i]);
      out << buf << ((i + 1) % 8 == 0 || i + 1 == xs.size() ? '\n' : ' ');
    }
  };
  char env_buf[96];
  std::snprintf(env_buf, sizeof env_buf, "%.17g %.17g %.17g", state.params.env.weight_count_color,
                state.params.env.weight_count_shape, state.params.env.weight_count_color_shape);
  out << "env " << state.params.env.slots << ' ' << state.params.env.colors << ' '
      << state.params.env.shapes << ' ' << env_buf << '\n';
  out << "dims " << state.params.vocab_size << ' ' << state.params.feature_dim << '\n';
  out << "version " << state.params.version << '\n';
  write_block("weights", state.params.weights);
  write_block("adam_m", state.adam.m);
  write_block("adam_v", state.adam.v);
  if (state.fixed_estimator) write_block("fixed_weights", state.fixed_estimator->weights);
  if (!out) throw InputError("failed writing checkpoint: " + path);
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint: " + path);
  std::string magic;
  in >> magic;
  if (magic != "PRCO_CHECKPOINT_V1") throw InputError("bad checkpoint magic in " + path);

  TrainState state;
  std::string key;
  int has_fixed = 0;
  in >> key >> state.step;
  if (key != "step") throw InputError("checkpoint missing step");
  in >> key >> state.adam.t;
  if (key != "adam_t") throw InputError("checkpoint missing adam_t");
  in >> key >> has_fixed;
  if (key != "has_fixed_estimator") throw InputError("checkpoint missing has_fixed_estimator");
  in >> key >> state.params.env.slots >> state.params.env.colors >> state.params.env.shapes >>
      state.params.env.weight_count_color >> state.params.env.weight_count_shape >>
      state.params.env.weight_count_color_shape;
  if (key != "env") throw InputError("checkpoint missing env");
  in >> key >> state.params.vocab_size >> state.params.feature_dim;
  if (key != "dims") throw InputError("checkpoint missing dims");
  in >> key >> state.params.version;
  if (key != "version") throw InputError("checkpoint missing version");

  auto read_block = [&](const char* name, std::vector<double>& xs) {
    size_t n = 0;
    in >> key >> n;
    if (key != name) throw InputError(std::string("checkpoint missing block ") + name);
    xs.resize(n);
    for (size_t i = 0; i < n; ++i) {
      std::string tok;
      if (!(in >> tok)) throw InputError("truncated checkpoint block: " + std::string(name));
      char* end = nullptr;
      xs[i] = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw InputError("bad numeric token in checkpoint: " + tok);
    }
  };
  read_block("weights", state.params.weights);
  read_block("adam_m", state.adam.m);
  read_block("adam_v", state.adam.v);
  if (has_fixed) {
    PolicyParams fixed = state.params;
    fixed.version = 0;
    read_block("fixed_weights", fixed.weights);
    state.fixed_estimator = std::move(fixed);
  }
  return state;
}

RunArtifacts run_training(const TrainConfig& cfg_in, const std::string& out_dir,
                          const std::string& resume_checkpoint) {
  TrainConfig cfg = cfg_in;
  cfg.validate_and_normalize();
  const Policy policy(cfg.env);
  const SampleLimits limits{cfg.policy.max_caption_tokens, cfg.policy.max_answer_tokens};
  const std::vector<Instance> eval_set =
      make_eval_set(cfg.env, cfg.master_seed, cfg.eval_set_size);

  const bool resuming = !resume_checkpoint.empty();
  TrainState state = resuming ? load_checkpoint(resume_checkpoint) : make_train_state(cfg);
  if (resuming) policy.check_params(state.params);

  std::ofstream metrics_jsonl, metrics_csv, rollout_dump;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto mode = resuming ? std::ios::app : std::ios::trunc;
    metrics_jsonl.open(out_dir + "/metrics.jsonl", mode);
    metrics_csv.open(out_dir + "/metrics.csv", mode);
    if (!metrics_jsonl || !metrics_csv)
      throw InputError("cannot open metrics files under " + out_dir);
    if (!resuming) metrics_csv << step_metrics_csv_header() << '\n';
    if (cfg.dump_rollouts) rollout_dump.open(out_dir + "/rollouts.jsonl", mode);
    if (!resuming) save_params(state.params, out_dir + "/params_init.txt");
  }

  RunArtifacts artifacts;
  const EvalOptions greedy{};
  artifacts.step0_eval = evaluate(policy, state.params, eval_set, limits, greedy).accuracy;

  while (state.step < cfg.steps) {
    std::optional<double> eval_acc;
    if (state.step % cfg.eval_interval == 0)
      eval_acc = evaluate(policy, state.params, eval_set, limits, greedy).accuracy;

    StepMetrics m;
    try {
      m = train_step(state, cfg, policy, cfg.dump_rollouts && rollout_dump ? &rollout_dump : nullptr);
    } catch (const NumericError& e) {
      throw NumericError("step " + std::to_string(state.step) + ": " + e.what());
    }
    m.eval_accuracy = eval_acc;
    artifacts.metrics.push_back(m);
    if (metrics_jsonl) {
      metrics_jsonl << step_metrics_to_json(m) << '\n';
      metrics_csv << step_metrics_to_csv(m) << '\n';
    }
    if (cfg.checkpoint_interval > 0 && state.step % cfg.checkpoint_interval == 0 &&
        !out_dir.empty())
      save_checkpoint(state, out_dir + "/checkpoint_step" + std::to_string(state.step) + ".txt");
  }

  artifacts.final_eval = evaluate(policy, state.params, eval_set, limits, greedy).accuracy;
  artifacts.final_params = state.params;

  if (!out_dir.empty()) {
    save_params(state.params, out_dir + "/params_final.txt");
    save_checkpoint(state, out_dir + "/checkpoint_final.txt");
    nlohmann::json summary;
    summary["algorithm"] = algorithm_name(cfg.algorithm);
    summary["steps"] = cfg.steps;
    summary["master_seed"] = cfg.master_seed;
    summary["step0_eval_accuracy"] = artifacts.step0_eval;
    summary["final_eval_accuracy"] = artifacts.final_eval;
    std::ofstream summary_out(out_dir + "/run_summary.json");
    summary_out << summary.dump(2) << '\n';
    if (cfg.emit_svg) {
      std::ofstream svg(out_dir + "/curves.svg");
      svg << render_metrics_svg(artifacts.metrics);
    }
  }
  return artifacts;
}

}  // namespace prco
