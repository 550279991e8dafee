#include "optimize.hpp"

#include <algorithm>
#include <cmath>

namespace prco {

namespace {

void log_softmax_inplace(std::vector<double>& scaled) {
  const double m = *std::max_element(scaled.begin(), scaled.end());
  double sum = 0.0;
  for (double x : scaled) sum += std::exp(x - m);
  const double lse = m + std::log(sum);
  for (double& x : scaled) x -= lse;
}

std::vector<double> scaled_logits(const Policy& policy, const PolicyParams& params,
                                  const Context& ctx, double temperature) {
  std::vector<double> z = policy.logits(params, ctx);
  for (double& x : z) x /= temperature;
  return z;
}

}  // namespace

SurrogateResult surrogate_loss(const Policy& policy, const PolicyParams& params,
                               const PolicyParams& old_params, const AdvantageBatch& batch,
                               const OptimConfig& cfg) {
  cfg.validate();
  policy.check_params(params);
  policy.check_params(old_params);
  if (batch.entries.empty()) throw ConfigError("surrogate loss over an empty batch");

  size_t total_tokens = 0;
  for (const AdvantageEntry& entry : batch.entries) {
    if (entry.traj == nullptr || entry.traj->tokens.empty())
      throw ConfigError("advantage batch entry without a sampled trajectory");
    if (entry.traj->params_version != old_params.version)
      throw ConfigError("trajectory was not sampled under the old-params snapshot");
    total_tokens += entry.traj->tokens.size();
  }

  SurrogateResult result;
  result.grad.assign(params.weights.size(), 0.0);
  const int fdim = params.feature_dim;
  size_t clipped_tokens = 0;

  for (const AdvantageEntry& entry : batch.entries) {
    const Trajectory& traj = *entry.traj;
    const double adv = entry.advantage;
    const double token_weight =
        cfg.aggregation == Aggregation::TokenMean
            ? 1.0 / static_cast<double>(total_tokens)
            : 1.0 / (static_cast<double>(batch.entries.size()) *
                     static_cast<double>(traj.tokens.size()));
    const auto& legal = policy.legal_tokens(traj.role);
    const double inv_temp = 1.0 / traj.temperature;

    for (size_t t = 0; t < traj.tokens.size(); ++t) {
      const Context& ctx = traj.contexts[t];
      std::vector<double> lp_new = scaled_logits(policy, params, ctx, traj.temperature);
      log_softmax_inplace(lp_new);

      size_t picked = legal.size();
      for (size_t i = 0; i < legal.size(); ++i)
        if (legal[i] == traj.tokens[t]) {
          picked = i;
          break;
        }
      if (picked == legal.size()) throw ConfigError("trajectory token not legal for its role");

      const double ratio = std::exp(lp_new[picked] - traj.behavior_logprobs[t]);
      const bool clipped = (adv > 0.0 && ratio > 1.0 + cfg.eps_high) ||
                           (adv < 0.0 && ratio < 1.0 - cfg.eps_low);
      const double clipped_ratio = std::clamp(ratio, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
      result.loss -= token_weight * (clipped ? clipped_ratio : ratio) * adv;
      if (clipped) ++clipped_tokens;

      const bool need_surrogate_grad = !clipped && adv != 0.0;
      const bool need_kl = cfg.kl_mode != KlMode::None;
      if (!need_surrogate_grad && !need_kl) continue;

      std::vector<double> lp_old;
      double kl = 0.0;
      if (need_kl) {
        lp_old = scaled_logits(policy, old_params, ctx, traj.temperature);
        log_softmax_inplace(lp_old);
        for (size_t i = 0; i < legal.size(); ++i)
          kl += std::exp(lp_new[i]) * (lp_new[i] - lp_old[i]);
        result.loss += cfg.beta * token_weight * kl;
        result.mean_kl += token_weight * kl;
      }

      // Surrogate: -w * A * rho * (onehot - p) * phi / temp.
      // KL: d KL / d z_u = p_u * ((lp_new - lp_old)_u - KL), times phi / temp.
      const double surr_coeff = need_surrogate_grad ? -token_weight * adv * ratio : 0.0;
      for (size_t i = 0; i < legal.size(); ++i) {
        const double p = std::exp(lp_new[i]);
        double coeff = 0.0;
        if (need_surrogate_grad)
          coeff += surr_coeff * ((i == picked ? 1.0 : 0.0) - p) * inv_temp;
        if (need_kl)
          coeff += cfg.beta * token_weight * p * (lp_new[i] - lp_old[i] - kl) * inv_temp;
        if (coeff == 0.0) continue;
        double* row = result.grad.data() + static_cast<size_t>(legal[i]) * fdim;
        for (int f = 0; f < fdim; ++f) row[f] += coeff * ctx.features[f];
      }
    }
  }
  result.clip_fraction = static_cast<double>(clipped_tokens) / static_cast<double>(total_tokens);
  return result;
}

double kl_to_old(const Policy& policy, const PolicyParams& params, const PolicyParams& old_params,
                 std::span<const Context> contexts, double temperature) {
  if (contexts.empty()) return 0.0;
  double total = 0.0;
  for (const Context& ctx : contexts) {
    std::vector<double> lp_new = scaled_logits(policy, params, ctx, temperature);
    log_softmax_inplace(lp_new);
    std::vector<double> lp_old = scaled_logits(policy, old_params, ctx, temperature);
    log_softmax_inplace(lp_old);
    double kl = 0.0;
    for (size_t i = 0; i < lp_new.size(); ++i)
      kl += std::exp(lp_new[i]) * (lp_new[i] - lp_old[i]);
    total += kl;
  }
  return total / static_cast<double>(contexts.size());
}

void apply_update(PolicyParams& params, std::span<const double> grad, const OptimConfig& cfg,
                  AdamState& state) {
  cfg.validate();
  if (grad.size() != params.weights.size())
    throw ConfigError("gradient shape does not match parameters");
  for (double g : grad)
    if (!std::isfinite(g)) throw NumericError("non-finite gradient entry; update aborted");

  if (cfg.rule == UpdateRule::Sgd) {
    for (size_t i = 0; i < grad.size(); ++i) params.weights[i] -= cfg.learning_rate * grad[i];
    ++params.version;
    return;
  }

  if (state.m.empty()) {
    state.m.assign(grad.size(), 0.0);
    state.v.assign(grad.size(), 0.0);
    state.t = 0;
  }
  if (state.m.size() != grad.size())
    throw ConfigError("optimizer state shape does not match parameters");

  ++state.t;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < grad.size(); ++i) {
    state.m[i] = cfg.adam_beta1 * state.m[i] + (1.0 - cfg.adam_beta1) * grad[i];
    state.v[i] = cfg.adam_beta2 * state.v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params.weights[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
  ++params.version;
}

}  // namespace prco
