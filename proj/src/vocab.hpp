#pragma once

#include <cstdint>
#include <string>

#include "errors.hpp"

namespace prco {

// Environment shape: K object slots, each carrying one of C colors and one
// of S shapes, plus relative weights for the three question kinds.
struct EnvConfig {
  int slots = 4;
  int colors = 3;
  int shapes = 2;
  double weight_count_color = 1.0;
  double weight_count_shape = 1.0;
  double weight_count_color_shape = 1.0;

  static constexpr int kMaxSlots = 6;

  void validate() const {
    if (slots < 1 || slots > kMaxSlots)
      throw ConfigError("env.slots must be in [1, " + std::to_string(kMaxSlots) +
                        "], got " + std::to_string(slots));
    if (colors < 2) throw ConfigError("env.colors must be >= 2, got " + std::to_string(colors));
    if (shapes < 2) throw ConfigError("env.shapes must be >= 2, got " + std::to_string(shapes));
    if (weight_count_color < 0.0 || weight_count_shape < 0.0 || weight_count_color_shape < 0.0)
      throw ConfigError("question kind weights must be non-negative");
    if (weight_count_color + weight_count_shape + weight_count_color_shape <= 0.0)
      throw ConfigError("at least one question kind weight must be positive");
  }

  bool operator==(const EnvConfig&) const = default;
};

enum class AttrKind { Color, Shape };

using TokenId = uint32_t;

// Token id layout for a fixed EnvConfig. Ids are dense and assigned in a
// fixed order: fact tokens slot-major (colors before shapes within a slot),
// then digit tokens 0..K, then EOC, then EOS.
class Vocab {
 public:
  explicit Vocab(const EnvConfig& env) : K_(env.slots), C_(env.colors), S_(env.shapes) {
    env.validate();
  }

  int size() const { return num_facts() + num_digits() + 2; }
  int num_facts() const { return K_ * (C_ + S_); }
  int num_digits() const { return K_ + 1; }

  TokenId fact(int slot, AttrKind kind, int value) const {
    check(slot >= 0 && slot < K_, "fact slot out of range");
    if (kind == AttrKind::Color) {
      check(value >= 0 && value < C_, "fact color out of range");
      return static_cast<TokenId>(slot * (C_ + S_) + value);
    }
    check(value >= 0 && value < S_, "fact shape out of range");
    return static_cast<TokenId>(slot * (C_ + S_) + C_ + value);
  }

  TokenId digit(int value) const {
    check(value >= 0 && value <= K_, "digit out of range");
    return static_cast<TokenId>(num_facts() + value);
  }

  TokenId eoc() const { return static_cast<TokenId>(num_facts() + num_digits()); }
  TokenId eos() const { return static_cast<TokenId>(num_facts() + num_digits() + 1); }

  bool is_fact(TokenId id) const { return id < static_cast<TokenId>(num_facts()); }
  bool is_digit(TokenId id) const {
    return id >= static_cast<TokenId>(num_facts()) &&
           id < static_cast<TokenId>(num_facts() + num_digits());
  }

  int digit_value(TokenId id) const {
    check(is_digit(id), "not a digit token");
    return static_cast<int>(id) - num_facts();
  }

  struct FactInfo {
    int slot;
    AttrKind kind;
    int value;
  };

  FactInfo fact_info(TokenId id) const {
    check(is_fact(id), "not a fact token");
    const int slot = static_cast<int>(id) / (C_ + S_);
    const int rest = static_cast<int>(id) % (C_ + S_);
    if (rest < C_) return {slot, AttrKind::Color, rest};
    return {slot, AttrKind::Shape, rest - C_};
  }

  std::string describe(TokenId id) const {
    if (is_fact(id)) {
      const FactInfo f = fact_info(id);
      return "fact(s" + std::to_string(f.slot) +
             (f.kind == AttrKind::Color ? ",color=" : ",shape=") + std::to_string(f.value) + ")";
    }
    if (is_digit(id)) return "digit(" + std::to_string(digit_value(id)) + ")";
    if (id == eoc()) return "eoc";
    if (id == eos()) return "eos";
    return "invalid(" + std::to_string(id) + ")";
  }

  int slots() const { return K_; }
  int colors() const { return C_; }
  int shapes() const { return S_; }

 private:
  static void check(bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  }
  int K_, C_, S_;
};

}  // namespace prco
