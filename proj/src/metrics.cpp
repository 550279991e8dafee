#include "metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "rng.hpp"

namespace prco {

const char* error_category_name(ErrorCategory cat) {
  switch (cat) {
    case ErrorCategory::Correct: return "correct";
    case ErrorCategory::Perception: return "perception";
    case ErrorCategory::Reasoning: return "reasoning";
    case ErrorCategory::Other: return "other";
  }
  return "invalid";
}

ErrorCategory categorize_error(const Scene& scene, const Question& question,
                               std::span<const TokenId> caption_tokens,
                               std::span<const TokenId> answer_tokens, int gold,
                               const Vocab& vocab) {
  if (verify(answer_tokens, gold, vocab)) return ErrorCategory::Correct;
  if (!format_score(answer_tokens, vocab)) return ErrorCategory::Other;

  const bool color_relevant = question.target_color.has_value();
  const bool shape_relevant = question.target_shape.has_value();
  const int num_slots = static_cast<int>(scene.slots.size());

  std::vector<bool> color_asserted(num_slots, false), shape_asserted(num_slots, false);
  for (TokenId tok : caption_tokens) {
    if (!vocab.is_fact(tok)) continue;
    const Vocab::FactInfo fact = vocab.fact_info(tok);
    if (fact.slot >= num_slots) return ErrorCategory::Perception;  // slot does not exist
    const Slot& slot = scene.slots[fact.slot];
    if (fact.kind == AttrKind::Color) {
      if (fact.value != slot.color) return ErrorCategory::Perception;
      color_asserted[fact.slot] = true;
    } else {
      if (fact.value != slot.shape) return ErrorCategory::Perception;
      shape_asserted[fact.slot] = true;
    }
  }
  for (int s = 0; s < num_slots; ++s) {
    if (color_relevant && !color_asserted[s]) return ErrorCategory::Perception;
    if (shape_relevant && !shape_asserted[s]) return ErrorCategory::Perception;
  }
  return ErrorCategory::Reasoning;
}

double pass_at_k(std::span<const std::pair<int, int>> counts, int k) {
  if (k < 1) throw InputError("pass@k requires k >= 1");
  if (counts.empty()) throw InputError("pass@k requires at least one question");
  double total = 0.0;
  for (const auto& [n, c] : counts) {
    if (c < 0 || c > n) throw InputError("pass@k correct count outside [0, n]");
    if (k > n) throw InputError("pass@k requires k <= n for every question");
    // 1 - C(n-c, k) / C(n, k) as a running product of ratios.
    double miss = 1.0;
    for (int i = 0; i < k; ++i) {
      const int numer = n - c - i;
      if (numer <= 0) {
        miss = 0.0;
        break;
      }
      miss *= static_cast<double>(numer) / static_cast<double>(n - i);
    }
    total += 1.0 - miss;
  }
  return total / static_cast<double>(counts.size());
}

std::string step_metrics_to_json(const StepMetrics& m) {
  nlohmann::json rec;
  rec["step"] = m.step;
  rec["mean_solver_reward"] = m.mean_solver_reward;
  rec["mean_observer_reward"] = m.mean_observer_reward;
  rec["caption_reward_std"] = m.caption_reward_std;
  rec["leakage_rate"] = m.leakage_rate;
  rec["degenerate_group_rate"] = m.degenerate_group_rate;
  rec["error_rates"] = m.error_rates;
  if (m.eval_accuracy) rec["eval_accuracy"] = *m.eval_accuracy;
  return rec.dump();
}

StepMetrics step_metrics_from_json(const std::string& line) {
  StepMetrics m;
  try {
    const nlohmann::json rec = nlohmann::json::parse(line);
    m.step = rec.at("step").get<int>();
    m.mean_solver_reward = rec.at("mean_solver_reward").get<double>();
    m.mean_observer_reward = rec.at("mean_observer_reward").get<double>();
    m.caption_reward_std = rec.at("caption_reward_std").get<double>();
    m.leakage_rate = rec.at("leakage_rate").get<double>();
    m.degenerate_group_rate = rec.at("degenerate_group_rate").get<double>();
    m.error_rates = rec.at("error_rates").get<std::map<std::string, double>>();
    if (rec.contains("eval_accuracy")) m.eval_accuracy = rec["eval_accuracy"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad metrics record: ") + e.what());
  }
  return m;
}

namespace {
std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

std::string step_metrics_csv_header() {
  return "step,mean_solver_reward,mean_observer_reward,caption_reward_std,leakage_rate,"
         "degenerate_group_rate,err_perception,err_reasoning,err_other,eval_accuracy";
}

std::string step_metrics_to_csv(const StepMetrics& m) {
  std::ostringstream out;
  auto rate = [&](const char* key) {
    const auto it = m.error_rates.find(key);
    return it == m.error_rates.end() ? 0.0 : it->second;
  };
  out << m.step << ',' << fmt_double(m.mean_solver_reward) << ','
      << fmt_double(m.mean_observer_reward) << ',' << fmt_double(m.caption_reward_std) << ','
      << fmt_double(m.leakage_rate) << ',' << fmt_double(m.degenerate_group_rate) << ','
      << fmt_double(rate("perception")) << ',' << fmt_double(rate("reasoning")) << ','
      << fmt_double(rate("other"));
  out << ',';
  if (m.eval_accuracy) out << fmt_double(*m.eval_accuracy);
  return out.str();
}

std::vector<Instance> make_eval_set(const EnvConfig& env, uint64_t master_seed, int size) {
  std::vector<Instance> out;
  out.reserve(size);
  for (int i = 0; i < size; ++i)
    out.push_back(generate_instance(stream_seed(master_seed, "eval-instance", i), env));
  return out;
}

EvalResult evaluate(const Policy& policy, const PolicyParams& params,
                    std::span<const Instance> eval_set, const SampleLimits& limits,
                    const EvalOptions& opts) {
  if (eval_set.empty()) throw ConfigError("evaluation set is empty");
  EvalResult result;
  std::map<std::string, int> category_counts;
  int total_samples = 0;
  int total_correct = 0;

  for (size_t q = 0; q < eval_set.size(); ++q) {
    const Instance& inst = eval_set[q];
    const int n = opts.sampled ? opts.samples_per_question : 1;
    Rng rng(stream_seed(opts.sample_seed, "eval-sample", q));
    int correct = 0;
    for (int s = 0; s < n; ++s) {
      Trajectory caption, answer;
      if (opts.sampled) {
        caption = policy.sample_sequence(params, Role::Observer, inst, true, std::nullopt,
                                         opts.temperature, opts.top_p, limits.max_caption_tokens,
                                         rng);
        answer = policy.sample_sequence(params, Role::Solver, inst, true,
                                        std::span<const TokenId>(caption.tokens),
                                        opts.temperature, opts.top_p, limits.max_answer_tokens,
                                        rng);
      } else {
        caption = policy.greedy_sequence(params, Role::Observer, inst, true, std::nullopt,
                                         limits.max_caption_tokens);
        answer = policy.greedy_sequence(params, Role::Solver, inst, true,
                                        std::span<const TokenId>(caption.tokens),
                                        limits.max_answer_tokens);
      }
      correct += verify(answer.tokens, inst.gold, policy.vocab());
      const ErrorCategory cat = categorize_error(inst.scene, inst.question, caption.tokens,
                                                 answer.tokens, inst.gold, policy.vocab());
      ++category_counts[error_category_name(cat)];
    }
    result.per_question.emplace_back(n, correct);
    total_samples += n;
    total_correct += correct;
  }

  result.accuracy = static_cast<double>(total_correct) / static_cast<double>(total_samples);
  for (const char* name : {"correct", "perception", "reasoning", "other"})
    result.category_rates[name] =
        static_cast<double>(category_counts[name]) / static_cast<double>(total_samples);
  return result;
}

std::string render_metrics_svg(std::span<const StepMetrics> metrics) {
  const int width = 860, height = 420, margin = 50;
  const double plot_w = width - 2 * margin, plot_h = height - 2 * margin;
  const int last_step = metrics.empty() ? 1 : std::max(1, metrics.back().step);

  auto x_of = [&](int step) { return margin + plot_w * step / last_step; };
  auto y_of = [&](double v) { return margin + plot_h * (1.0 - std::min(1.0, std::max(0.0, v))); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
      << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = tick / 4.0;
    svg << "<text x=\"8\" y=\"" << y_of(v) + 4 << "\" font-size=\"11\">" << v << "</text>\n";
  }
  svg << "<text x=\"" << width / 2 - 20 << "\" y=\"" << height - 12
      << "\" font-size=\"12\">step (0.." << last_step << ")</text>\n";

  struct Series {
    const char* label;
    const char* color;
  };
  const Series series[] = {{"solver reward", "#1f77b4"},
                           {"observer reward", "#2ca02c"},
                           {"caption reward std", "#ff7f0e"},
                           {"eval accuracy", "#d62728"}};
  auto value_of = [&](const StepMetrics& m, int which) -> std::optional<double> {
    switch (which) {
      case 0: return m.mean_solver_reward;
      case 1: return m.mean_observer_reward;
      case 2: return m.caption_reward_std;
      default: return m.eval_accuracy;
    }
  };

  for (int which = 0; which < 4; ++which) {
    std::ostringstream points;
    for (const StepMetrics& m : metrics) {
      const auto v = value_of(m, which);
      if (!v) continue;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", x_of(m.step), y_of(*v));
      points << buf;
    }
    svg << "<polyline fill=\"none\" stroke=\"" << series[which].color
        << "\" stroke-width=\"1.5\" points=\"" << points.str() << "\"/>\n";
    svg << "<text x=\"" << margin + 10 + which * 180 << "\" y=\"" << margin - 14
        << "\" font-size=\"11\" fill=\"" << series[which].color << "\">" << series[which].label
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace prco
