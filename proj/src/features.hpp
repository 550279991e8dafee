#pragma once

#include <span>
#include <vector>

#include "synthenv.hpp"
#include "vocab.hpp"

namespace prco {

enum class Role { Observer, Solver };

inline const char* role_name(Role role) { return role == Role::Observer ? "observer" : "solver"; }

// Fixed feature vector layout for a given EnvConfig:
//   [ role one-hot | question kind one-hot | target color one-hot |
//     target shape one-hot | per-slot scene attribute one-hots |
//     caption token bag | history token bag | position ]
// Scene entries are zero when the image is hidden from the role; the caption
// bag is zero for the Observer and for flat (caption-free) Solver contexts.
class FeatureLayout {
 public:
  explicit FeatureLayout(const EnvConfig& env)
      : K_(env.slots), C_(env.colors), S_(env.shapes), vocab_size_(Vocab(env).size()) {}

  int dim() const { return position_offset() + 1; }
  int vocab_size() const { return vocab_size_; }

  int role_offset() const { return 0; }
  int kind_offset() const { return 2; }
  int target_color_offset() const { return kind_offset() + 3; }
  int target_shape_offset() const { return target_color_offset() + C_; }
  int scene_offset() const { return target_shape_offset() + S_; }
  int scene_dim(int slot, AttrKind kind, int value) const {
    return scene_offset() + slot * (C_ + S_) + (kind == AttrKind::Shape ? C_ + value : value);
  }
  int caption_offset() const { return scene_offset() + K_ * (C_ + S_); }
  int history_offset() const { return caption_offset() + vocab_size_; }
  int position_offset() const { return history_offset() + vocab_size_; }

 private:
  int K_, C_, S_, vocab_size_;
};

struct Context {
  Role role = Role::Observer;
  std::vector<double> features;
};

// Builds the per-step contexts of one sequence: static parts (role, question,
// scene, caption) are assembled once, history and position change per step.
class ContextBuilder {
 public:
  ContextBuilder(const FeatureLayout& layout, Role role, const Instance& inst, bool image_visible,
                 std::span<const TokenId> caption)
      : layout_(layout), role_(role) {
    base_.assign(layout.dim(), 0.0);
    base_[layout.role_offset() + (role == Role::Observer ? 0 : 1)] = 1.0;
    base_[layout.kind_offset() + static_cast<int>(inst.question.kind)] = 1.0;
    if (inst.question.target_color)
      base_[layout.target_color_offset() + *inst.question.target_color] = 1.0;
    if (inst.question.target_shape)
      base_[layout.target_shape_offset() + *inst.question.target_shape] = 1.0;
    if (image_visible) {
      for (size_t s = 0; s < inst.scene.slots.size(); ++s) {
        base_[layout.scene_dim(static_cast<int>(s), AttrKind::Color, inst.scene.slots[s].color)] = 1.0;
        base_[layout.scene_dim(static_cast<int>(s), AttrKind::Shape, inst.scene.slots[s].shape)] = 1.0;
      }
    }
    for (TokenId tok : caption) base_[layout.caption_offset() + tok] += 1.0;
  }

  Context next_context() {
    Context ctx;
    ctx.role = role_;
    ctx.features = base_;
    ctx.features[layout_.position_offset()] = static_cast<double>(position_);
    return ctx;
  }

  void push_token(TokenId tok) {
    base_[layout_.history_offset() + tok] += 1.0;
    ++position_;
  }

 private:
  const FeatureLayout& layout_;
  Role role_;
  std::vector<double> base_;
  int position_ = 0;
};

}  // namespace prco
