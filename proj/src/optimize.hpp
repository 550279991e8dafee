#pragma once

#include <span>
#include <string>
#include <vector>

#include "advantage.hpp"

namespace prco {

enum class Aggregation { TokenMean, SequenceMeanOfMeans };
enum class KlMode { None, ExactCategoricalToOld };
enum class UpdateRule { Adam, Sgd };

struct OptimConfig {
  double eps_low = 0.2;
  double eps_high = 0.28;
  double beta = 0.0;
  Aggregation aggregation = Aggregation::TokenMean;
  double learning_rate = 0.05;
  int update_epochs = 1;
  KlMode kl_mode = KlMode::None;
  UpdateRule rule = UpdateRule::Adam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (eps_low <= 0.0 || eps_high <= 0.0) throw ConfigError("clip thresholds must be > 0");
    if (learning_rate <= 0.0) throw ConfigError("optim.learning_rate must be > 0");
    if (update_epochs < 1) throw ConfigError("optim.update_epochs must be >= 1");
    if (beta < 0.0) throw ConfigError("optim.beta must be >= 0");
  }
};

struct SurrogateResult {
  double loss = 0.0;
  std::vector<double> grad;   // d loss / d params, same shape as weights
  double clip_fraction = 0.0;  // fraction of tokens on the clipped branch
  double mean_kl = 0.0;        // token-weighted KL, 0 when kl_mode is None
};

// Clipped surrogate over the batch:
//   loss = -sum_i w_i sum_t min(rho * A_i, clip(rho, 1-eps_l, 1+eps_h) * A_i)
//        + beta * sum_i w_i sum_t KL_t          (when kl_mode != None)
// with per-token weights w_i = 1/total_tokens (TokenMean) or
// 1/(num_trajs * len_i) (SequenceMeanOfMeans). Ratios sitting exactly on a
// clip boundary count as unclipped. The gradient is the exact analytic one;
// clipped tokens contribute zero through the surrogate term.
SurrogateResult surrogate_loss(const Policy& policy, const PolicyParams& params,
                               const PolicyParams& old_params, const AdvantageBatch& batch,
                               const OptimConfig& cfg);

// Mean exact categorical KL(current || old) over the given contexts.
double kl_to_old(const Policy& policy, const PolicyParams& params, const PolicyParams& old_params,
                 std::span<const Context> contexts, double temperature = 1.0);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
};

// In-place parameter update (Adam with bias correction, or plain descent).
// Throws NumericError on non-finite gradient entries; bumps params.version.
void apply_update(PolicyParams& params, std::span<const double> grad, const OptimConfig& cfg,
                  AdamState& state);

}  // namespace prco
