#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "features.hpp"
#include "rng.hpp"
#include "synthenv.hpp"
#include "vocab.hpp"

namespace prco {

// Weight matrix of the shared role-conditioned linear-softmax policy,
// row-major [vocab_size x feature_dim]. Carries the EnvConfig it was built
// for so saved parameter files are self-describing.
struct PolicyParams {
  EnvConfig env;
  int vocab_size = 0;
  int feature_dim = 0;
  uint64_t version = 0;
  std::vector<double> weights;

  double& at(TokenId token, int feature) { return weights[token * feature_dim + feature]; }
  double at(TokenId token, int feature) const { return weights[token * feature_dim + feature]; }
};

enum class InitPreset { Zeros, Pretrained };

struct PolicyConfig {
  InitPreset init = InitPreset::Pretrained;
  uint64_t init_seed = 1;
  double init_noise = 0.01;
  int max_caption_tokens = 16;
  int max_answer_tokens = 4;
  double temperature = 1.0;
  double top_p = 1.0;

  void validate() const;
};

PolicyParams make_params(const EnvConfig& env, InitPreset preset, uint64_t init_seed,
                         double init_noise);

// One role-tagged sequence with everything needed to recompute importance
// ratios later: the exact per-step contexts, the behavior log-probs at the
// sampling distribution, and the temperature they were taken at.
struct Trajectory {
  Role role = Role::Observer;
  std::vector<TokenId> tokens;
  std::vector<Context> contexts;
  std::vector<double> behavior_logprobs;
  double temperature = 1.0;
  bool truncated = false;
  uint64_t params_version = 0;
  uint64_t instance_seed = 0;
  int caption_index = -1;
};

struct SequenceLogprob {
  double total_logprob = 0.0;
  std::vector<double> grad;  // same shape as PolicyParams.weights
};

// Binds the vocab and feature layout of one EnvConfig; all policy operations
// go through this view. Parameters are passed explicitly so many workers can
// share one immutable snapshot.
class Policy {
 public:
  explicit Policy(const EnvConfig& env);

  const Vocab& vocab() const { return vocab_; }
  const FeatureLayout& layout() const { return layout_; }
  const std::vector<TokenId>& legal_tokens(Role role) const {
    return role == Role::Observer ? observer_legal_ : solver_legal_;
  }

  // Raw logits over the role-legal token subset, in legal_tokens(role) order.
  std::vector<double> logits(const PolicyParams& params, const Context& ctx) const;

  // Softmax over the legal subset at the given temperature.
  std::vector<double> token_probs(const PolicyParams& params, const Context& ctx,
                                  double temperature) const;

  Trajectory sample_sequence(const PolicyParams& params, Role role, const Instance& inst,
                             bool image_visible, std::optional<std::span<const TokenId>> caption,
                             double temperature, double top_p, int max_tokens, Rng& rng) const;

  // Argmax decoding (ties broken toward the lowest token id).
  Trajectory greedy_sequence(const PolicyParams& params, Role role, const Instance& inst,
                             bool image_visible,
                             std::optional<std::span<const TokenId>> caption,
                             int max_tokens) const;

  // Total log-probability of the trajectory under params at the trajectory's
  // sampling temperature, with its exact gradient w.r.t. the weights.
  SequenceLogprob logprob_and_grad(const PolicyParams& params, const Trajectory& traj) const;

  // Per-token log-probabilities only (no gradient).
  std::vector<double> token_logprobs(const PolicyParams& params, const Trajectory& traj) const;

  void check_params(const PolicyParams& params) const;

 private:
  TokenId terminal_token(Role role) const { return role == Role::Observer ? vocab_.eoc() : vocab_.eos(); }

  Vocab vocab_;
  FeatureLayout layout_;
  std::vector<TokenId> observer_legal_;
  std::vector<TokenId> solver_legal_;
};

// Parameter file round-trip (text format with lossless hex floats; see
// README for the layout).
void save_params(const PolicyParams& params, const std::string& path);
PolicyParams load_params(const std::string& path);

}  // namespace prco
