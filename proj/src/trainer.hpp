#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"
#include "metrics.hpp"
#include "optimize.hpp"
#include "reward.hpp"

namespace prco {

enum class Algorithm { Grpo, Dapo, Prco };

const char* algorithm_name(Algorithm algo);
Algorithm algorithm_from_name(const std::string& name);

struct TrainConfig {
  Algorithm algorithm = Algorithm::Prco;
  int steps = 200;
  int rollout_batch = 32;
  int group_observer = 4;
  int group_solver = 8;
  int warmup_steps = 40;
  bool no_observer_update = false;
  bool no_solver_update = false;
  bool no_warmup = false;
  bool solver_image_never = false;
  bool fixed_utility_estimator = false;
  bool leakage_checker_disabled = false;
  bool dynamic_sampling = true;
  int max_retries = 20;
  double eps_norm = 1e-6;  // z-score stabilizer for the baseline advantages
  int eval_interval = 10;
  int eval_set_size = 500;
  uint64_t master_seed = 1;
  int checkpoint_interval = 0;  // 0: checkpoint only at the end
  bool emit_svg = false;
  bool dump_rollouts = false;

  EnvConfig env;
  RewardConfig reward;
  OptimConfig optim;
  PolicyConfig policy;

  // Checks invariants and applies normalizations (no_warmup zeroes
  // warmup_steps). Throws ConfigError on inconsistent settings.
  void validate_and_normalize();
};

// Builds a TrainConfig from parsed key=value data, filling absent [optim]
// keys with per-algorithm defaults. Rejects unknown keys.
TrainConfig train_config_from_kv(const KeyValueConfig& kv);

struct TrainState {
  PolicyParams params;
  AdamState adam;
  int step = 0;
  // Frozen copy of the initial params for fixed utility estimation.
  std::optional<PolicyParams> fixed_estimator;
};

TrainState make_train_state(const TrainConfig& cfg);

// Optional capture of one step's internals (rollouts after reward filling,
// the role/advantage composition of the update batch, the visibility gate
// and the snapshot version). Rollout storage is moved in, so trajectory
// pointers inside stay valid for the trace's lifetime.
struct StepTrace {
  std::vector<RolloutTree> trees;
  std::vector<FlatGroup> groups;
  std::vector<std::pair<Role, double>> batch_entries;
  std::vector<uint64_t> batch_versions;
  bool image_visible_solver = false;
  uint64_t old_params_version = 0;
};

// One optimization step (snapshot, rollouts, rewards, advantages, update).
// Pre-update evaluation is the caller's business; the returned metrics have
// eval_accuracy unset. dump writes one rollout record per instance when
// non-null.
StepMetrics train_step(TrainState& state, const TrainConfig& cfg, const Policy& policy,
                       std::ostream* dump = nullptr, StepTrace* trace = nullptr);

// The caption-selection degeneracy rule: no caption has solver rewards with
// positive variance.
bool tree_is_solver_degenerate(const RolloutTree& tree);

struct RunArtifacts {
  PolicyParams final_params;
  std::vector<StepMetrics> metrics;
  double step0_eval = 0.0;
  double final_eval = 0.0;
};

// Runs cfg.steps training steps. When out_dir is non-empty, writes
// metrics.jsonl / metrics.csv, initial and final params, a resumable
// checkpoint, run_summary.json, and optionally curves.svg / rollouts.jsonl.
// resume_checkpoint continues a previous run from its saved step.
RunArtifacts run_training(const TrainConfig& cfg, const std::string& out_dir = "",
                          const std::string& resume_checkpoint = "");

void save_checkpoint(const TrainState& state, const std::string& path);
TrainState load_checkpoint(const std::string& path);

}  // namespace prco
