#include "policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>

#include "errors.hpp"

namespace prco {

namespace {

// "Pretrained base model" analog: the initial policy can already read slot
// attributes into fact tokens and mostly answers in the digit-then-EOS shape,
// but has no question conditioning and no caption/scene-to-digit wiring.
// RL has to learn the actual task on top of this.
constexpr double kInitSceneFact = 2.5;       // scene attribute -> matching fact token
constexpr double kInitFactSelfInhibit = -4.0;  // don't repeat an emitted fact
constexpr double kInitEocBias = 1.5;
constexpr double kInitDigitBias = 2.0;
constexpr double kInitDigitAfterDigit = -3.0;
constexpr double kInitEosAfterDigit = 5.0;
constexpr double kInitEosBias = -1.0;
constexpr double kInitSolverFactPenalty = -3.0;  // answering beats narrating

double stable_log_sum_exp(std::span<const double> xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - m);
  return m + std::log(sum);
}

}  // namespace

void PolicyConfig::validate() const {
  if (init_noise < 0.0) throw ConfigError("policy.init_noise must be >= 0");
  if (max_caption_tokens < 1) throw ConfigError("policy.max_caption_tokens must be >= 1");
  if (max_answer_tokens < 1) throw ConfigError("policy.max_answer_tokens must be >= 1");
  if (temperature <= 0.0) throw ConfigError("policy.temperature must be > 0");
  if (top_p <= 0.0 || top_p > 1.0) throw ConfigError("policy.top_p must be in (0, 1]");
}

PolicyParams make_params(const EnvConfig& env, InitPreset preset, uint64_t init_seed,
                         double init_noise) {
  env.validate();
  const Vocab vocab(env);
  const FeatureLayout layout(env);

  PolicyParams params;
  params.env = env;
  params.vocab_size = vocab.size();
  params.feature_dim = layout.dim();
  params.version = 0;
  params.weights.assign(static_cast<size_t>(params.vocab_size) * params.feature_dim, 0.0);

  if (preset == InitPreset::Pretrained) {
    const int solver_role_dim = layout.role_offset() + 1;
    const int observer_role_dim = layout.role_offset();
    for (int slot = 0; slot < env.slots; ++slot) {
      for (int color = 0; color < env.colors; ++color) {
        const TokenId tok = vocab.fact(slot, AttrKind::Color, color);
        params.at(tok, layout.scene_dim(slot, AttrKind::Color, color)) = kInitSceneFact;
      }
      for (int shape = 0; shape < env.shapes; ++shape) {
        const TokenId tok = vocab.fact(slot, AttrKind::Shape, shape);
        params.at(tok, layout.scene_dim(slot, AttrKind::Shape, shape)) = kInitSceneFact;
      }
    }
    for (TokenId tok = 0; tok < static_cast<TokenId>(vocab.num_facts()); ++tok) {
      params.at(tok, layout.history_offset() + static_cast<int>(tok)) = kInitFactSelfInhibit;
      params.at(tok, solver_role_dim) = kInitSolverFactPenalty;
    }
    params.at(vocab.eoc(), observer_role_dim) = kInitEocBias;
    for (int d = 0; d <= env.slots; ++d) {
      const TokenId digit = vocab.digit(d);
      params.at(digit, solver_role_dim) = kInitDigitBias;
      for (int d2 = 0; d2 <= env.slots; ++d2)
        params.at(digit, layout.history_offset() + static_cast<int>(vocab.digit(d2))) =
            kInitDigitAfterDigit;
      params.at(vocab.eos(), layout.history_offset() + static_cast<int>(digit)) =
          kInitEosAfterDigit;
    }
    params.at(vocab.eos(), solver_role_dim) = kInitEosBias;
  }

  if (init_noise > 0.0) {
    Rng rng(stream_seed(init_seed, "policy-init"));
    for (double& w : params.weights) w += init_noise * (2.0 * rng.next_double() - 1.0);
  }
  return params;
}

Policy::Policy(const EnvConfig& env) : vocab_(env), layout_(env) {
  for (TokenId tok = 0; tok < static_cast<TokenId>(vocab_.num_facts()); ++tok)
    observer_legal_.push_back(tok);
  observer_legal_.push_back(vocab_.eoc());

  for (int d = 0; d <= env.slots; ++d) solver_legal_.push_back(vocab_.digit(d));
  solver_legal_.push_back(vocab_.eos());
  // Fact tokens stay legal for the Solver so malformed answers are reachable.
  for (TokenId tok = 0; tok < static_cast<TokenId>(vocab_.num_facts()); ++tok)
    solver_legal_.push_back(tok);
}

void Policy::check_params(const PolicyParams& params) const {
  if (params.vocab_size != vocab_.size() || params.feature_dim != layout_.dim())
    throw ConfigError("policy params shape " + std::to_string(params.vocab_size) + "x" +
                      std::to_string(params.feature_dim) + " does not match env-derived " +
                      std::to_string(vocab_.size()) + "x" + std::to_string(layout_.dim()));
  if (params.weights.size() != static_cast<size_t>(params.vocab_size) * params.feature_dim)
    throw ConfigError("policy params weight buffer has wrong length");
}

std::vector<double> Policy::logits(const PolicyParams& params, const Context& ctx) const {
  check_params(params);
  if (ctx.features.size() != static_cast<size_t>(layout_.dim()))
    throw ConfigError("context feature length does not match layout");
  const auto& legal = legal_tokens(ctx.role);
  std::vector<double> out(legal.size());
  const int fdim = params.feature_dim;
  for (size_t i = 0; i < legal.size(); ++i) {
    const double* row = params.weights.data() + static_cast<size_t>(legal[i]) * fdim;
    double acc = 0.0;
    for (int f = 0; f < fdim; ++f) acc += row[f] * ctx.features[f];
    out[i] = acc;
  }
  return out;
}

std::vector<double> Policy::token_probs(const PolicyParams& params, const Context& ctx,
                                        double temperature) const {
  std::vector<double> scaled = logits(params, ctx);
  for (double& x : scaled) x /= temperature;
  const double lse = stable_log_sum_exp(scaled);
  for (double& x : scaled) x = std::exp(x - lse);
  return scaled;
}

Trajectory Policy::sample_sequence(const PolicyParams& params, Role role, const Instance& inst,
                                   bool image_visible,
                                   std::optional<std::span<const TokenId>> caption,
                                   double temperature, double top_p, int max_tokens,
                                   Rng& rng) const {
  if (temperature <= 0.0) throw ConfigError("sampling temperature must be > 0");
  if (top_p <= 0.0 || top_p > 1.0) throw ConfigError("top_p must be in (0, 1]");
  if (role == Role::Solver && !caption.has_value())
    throw ConfigError("solver sampling requires a caption (may be empty for flat rollouts)");

  static const std::vector<TokenId> kNoCaption;
  std::span<const TokenId> caption_span = caption ? *caption : std::span<const TokenId>(kNoCaption);
  ContextBuilder builder(layout_, role, inst, image_visible, caption_span);

  Trajectory traj;
  traj.role = role;
  traj.temperature = temperature;
  traj.params_version = params.version;
  traj.instance_seed = inst.scene.scene_id;
  const TokenId terminal = terminal_token(role);
  const auto& legal = legal_tokens(role);

  for (int step = 0; step < max_tokens; ++step) {
    Context ctx = builder.next_context();
    std::vector<double> probs = token_probs(params, ctx, temperature);

    if (top_p < 1.0) {
      // Nucleus truncation: keep the smallest prefix of the sorted
      // distribution whose mass reaches top_p, renormalize the rest away.
      std::vector<size_t> order(probs.size());
      std::iota(order.begin(), order.end(), size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](size_t a, size_t b) { return probs[a] > probs[b]; });
      double cum = 0.0;
      size_t keep = order.size();
      for (size_t i = 0; i < order.size(); ++i) {
        cum += probs[order[i]];
        if (cum >= top_p) {
          keep = i + 1;
          break;
        }
      }
      std::vector<double> truncated(probs.size(), 0.0);
      double mass = 0.0;
      for (size_t i = 0; i < keep; ++i) mass += probs[order[i]];
      for (size_t i = 0; i < keep; ++i) truncated[order[i]] = probs[order[i]] / mass;
      probs = std::move(truncated);
    }

    const size_t pick = rng.categorical(probs);
    const TokenId tok = legal[pick];
    traj.tokens.push_back(tok);
    traj.contexts.push_back(std::move(ctx));
    traj.behavior_logprobs.push_back(std::log(probs[pick]));
    if (tok == terminal) return traj;
    builder.push_token(tok);
  }
  traj.truncated = true;
  return traj;
}

Trajectory Policy::greedy_sequence(const PolicyParams& params, Role role, const Instance& inst,
                                   bool image_visible,
                                   std::optional<std::span<const TokenId>> caption,
                                   int max_tokens) const {
  if (role == Role::Solver && !caption.has_value())
    throw ConfigError("solver decoding requires a caption (may be empty for flat rollouts)");
  static const std::vector<TokenId> kNoCaption;
  std::span<const TokenId> caption_span = caption ? *caption : std::span<const TokenId>(kNoCaption);
  ContextBuilder builder(layout_, role, inst, image_visible, caption_span);

  Trajectory traj;
  traj.role = role;
  traj.params_version = params.version;
  traj.instance_seed = inst.scene.scene_id;
  const TokenId terminal = terminal_token(role);
  const auto& legal = legal_tokens(role);

  for (int step = 0; step < max_tokens; ++step) {
    Context ctx = builder.next_context();
    const std::vector<double> scores = logits(params, ctx);
    size_t best = 0;
    for (size_t i = 1; i < scores.size(); ++i)
      if (scores[i] > scores[best]) best = i;
    const TokenId tok = legal[best];
    traj.tokens.push_back(tok);
    traj.contexts.push_back(std::move(ctx));
    traj.behavior_logprobs.push_back(0.0);
    if (tok == terminal) return traj;
    builder.push_token(tok);
  }
  traj.truncated = true;
  return traj;
}

std::vector<double> Policy::token_logprobs(const PolicyParams& params,
                                           const Trajectory& traj) const {
  const auto& legal = legal_tokens(traj.role);
  std::vector<double> out(traj.tokens.size());
  for (size_t t = 0; t < traj.tokens.size(); ++t) {
    std::vector<double> scaled = logits(params, traj.contexts[t]);
    for (double& x : scaled) x /= traj.temperature;
    const double lse = stable_log_sum_exp(scaled);
    const auto it = std::find(legal.begin(), legal.end(), traj.tokens[t]);
    out[t] = scaled[static_cast<size_t>(it - legal.begin())] - lse;
  }
  return out;
}

SequenceLogprob Policy::logprob_and_grad(const PolicyParams& params, const Trajectory& traj) const {
  check_params(params);
  SequenceLogprob result;
  result.grad.assign(params.weights.size(), 0.0);
  const auto& legal = legal_tokens(traj.role);
  const int fdim = params.feature_dim;
  const double inv_temp = 1.0 / traj.temperature;

  for (size_t t = 0; t < traj.tokens.size(); ++t) {
    const Context& ctx = traj.contexts[t];
    std::vector<double> scaled = logits(params, ctx);
    for (double& x : scaled) x *= inv_temp;
    const double lse = stable_log_sum_exp(scaled);

    size_t picked = legal.size();
    for (size_t i = 0; i < legal.size(); ++i)
      if (legal[i] == traj.tokens[t]) {
        picked = i;
        break;
      }
    if (picked == legal.size()) throw ConfigError("trajectory token not legal for its role");
    result.total_logprob += scaled[picked] - lse;

    // d log p(tok) / d w[v] = (1[v==tok] - p_v) * phi / temperature
    for (size_t i = 0; i < legal.size(); ++i) {
      const double p = std::exp(scaled[i] - lse);
      const double coeff = ((i == picked ? 1.0 : 0.0) - p) * inv_temp;
      if (coeff == 0.0) continue;
      double* row = result.grad.data() + static_cast<size_t>(legal[i]) * fdim;
      for (int f = 0; f < fdim; ++f) row[f] += coeff * ctx.features[f];
    }
  }
  return result;
}

void save_params(const PolicyParams& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open params file for writing: " + path);
  out << "PRCO_PARAMS_V1\n";
  out << "env " << params.env.slots << ' ' << params.env.colors << ' ' << params.env.shapes << ' ';
  char buf[64];
  const double env_weights[3] = {params.env.weight_count_color, params.env.weight_count_shape,
                                 params.env.weight_count_color_shape};
  for (int i = 0; i < 3; ++i) {
    std::snprintf(buf, sizeof buf, "%a", env_weights[i]);
    out << buf << (i == 2 ? '\n' : ' ');
  }
  out << "dims " << params.vocab_size << ' ' << params.feature_dim << '\n';
  out << "version " << params.version << '\n';
  for (int row = 0; row < params.vocab_size; ++row) {
    for (int f = 0; f < params.feature_dim; ++f) {
      std::snprintf(buf, sizeof buf, "%a", params.at(static_cast<TokenId>(row), f));
      out << buf << (f + 1 == params.feature_dim ? '\n' : ' ');
    }
  }
  if (!out) throw InputError("failed writing params file: " + path);
}

namespace {
// Hex floats are written with %a; istream double extraction does not parse
// them, so values are read as tokens and converted with strtod.
double read_double_token(std::istream& in, const std::string& path) {
  std::string tok;
  if (!(in >> tok)) throw InputError("truncated params data in " + path);
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0')
    throw InputError("bad numeric token '" + tok + "' in " + path);
  return v;
}
}  // namespace

PolicyParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open params file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "PRCO_PARAMS_V1") throw InputError("bad params file magic in " + path);

  PolicyParams params;
  std::string key;
  in >> key;
  if (key != "env") throw InputError("params file missing env line");
  in >> params.env.slots >> params.env.colors >> params.env.shapes;
  params.env.weight_count_color = read_double_token(in, path);
  params.env.weight_count_shape = read_double_token(in, path);
  params.env.weight_count_color_shape = read_double_token(in, path);
  in >> key;
  if (key != "dims") throw InputError("params file missing dims line");
  in >> params.vocab_size >> params.feature_dim;
  in >> key;
  if (key != "version") throw InputError("params file missing version line");
  in >> params.version;
  if (!in) throw InputError("truncated params header in " + path);

  params.env.validate();
  const Vocab vocab(params.env);
  const FeatureLayout layout(params.env);
  if (params.vocab_size != vocab.size() || params.feature_dim != layout.dim())
    throw InputError("params dims inconsistent with env in " + path);

  const size_t n = static_cast<size_t>(params.vocab_size) * params.feature_dim;
  params.weights.resize(n);
  for (size_t i = 0; i < n; ++i) params.weights[i] = read_double_token(in, path);
  return params;
}

}  // namespace prco
