#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "policy.hpp"
#include "rollout.hpp"

namespace prco {

enum class ErrorCategory { Correct, Perception, Reasoning, Other };

const char* error_category_name(ErrorCategory cat);

// Exact error taxonomy:
//   Correct     verify == 1
//   Other       format invalid
//   Perception  caption contradicts the scene, or omits the attribute of a
//               slot whose attribute kind the question targets
//   Reasoning   evidence faithful and complete, answer still wrong
ErrorCategory categorize_error(const Scene& scene, const Question& question,
                               std::span<const TokenId> caption_tokens,
                               std::span<const TokenId> answer_tokens, int gold,
                               const Vocab& vocab);

// Unbiased pass@k: mean over questions of 1 - C(n-c, k) / C(n, k), evaluated
// with overflow-safe running products. counts holds (n, c) per question.
double pass_at_k(std::span<const std::pair<int, int>> counts, int k);

struct StepMetrics {
  int step = 0;
  double mean_solver_reward = 0.0;
  double mean_observer_reward = 0.0;
  double caption_reward_std = 0.0;  // mean over instances of per-instance observer-reward std
  double leakage_rate = 0.0;
  double degenerate_group_rate = 0.0;
  std::map<std::string, double> error_rates;  // perception / reasoning / other
  std::optional<double> eval_accuracy;

  bool operator==(const StepMetrics&) const = default;
};

std::string step_metrics_to_json(const StepMetrics& m);
StepMetrics step_metrics_from_json(const std::string& line);
std::string step_metrics_csv_header();
std::string step_metrics_to_csv(const StepMetrics& m);

struct EvalResult {
  double accuracy = 0.0;
  // (n, c) per question; filled in sampled mode for pass@k.
  std::vector<std::pair<int, int>> per_question;
  std::map<std::string, double> category_rates;  // correct / perception / reasoning / other
};

struct EvalOptions {
  bool sampled = false;  // greedy when false
  int samples_per_question = 32;
  double temperature = 0.6;
  double top_p = 0.95;
  uint64_t sample_seed = 0;
};

// Runs the Observer (image visible) then the Solver (image visible, caption
// conditioned) on every instance. Greedy mode decodes by argmax; sampled mode
// draws samples_per_question full pipelines per instance.
EvalResult evaluate(const Policy& policy, const PolicyParams& params,
                    std::span<const Instance> eval_set, const SampleLimits& limits,
                    const EvalOptions& opts);

// Deterministic held-out set derived from the master seed.
std::vector<Instance> make_eval_set(const EnvConfig& env, uint64_t master_seed, int size);

// Reward / std / accuracy line charts for a finished run.
std::string render_metrics_svg(std::span<const StepMetrics> metrics);

}  // namespace prco
