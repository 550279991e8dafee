#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vocab.hpp"

namespace prco {

struct Slot {
  int color = 0;
  int shape = 0;
  bool operator==(const Slot&) const = default;
};

struct Scene {
  std::vector<Slot> slots;
  uint64_t scene_id = 0;
  bool operator==(const Scene&) const = default;
};

enum class QuestionKind { CountColor, CountShape, CountColorShape };

struct Question {
  QuestionKind kind = QuestionKind::CountColor;
  std::optional<int> target_color;
  std::optional<int> target_shape;

  static Question count_color(int color) { return {QuestionKind::CountColor, color, std::nullopt}; }
  static Question count_shape(int shape) { return {QuestionKind::CountShape, std::nullopt, shape}; }
  static Question count_color_shape(int color, int shape) {
    return {QuestionKind::CountColorShape, color, shape};
  }

  bool operator==(const Question&) const = default;
};

struct Instance {
  Scene scene;
  Question question;
  int gold = 0;
  bool operator==(const Instance&) const = default;
};

// Deterministic instance generation: the same (seed, env) always produces
// the same scene, question and gold answer.
Instance generate_instance(uint64_t seed, const EnvConfig& env);

// Exact count of slots matching every targeted attribute.
int oracle_answer(const Scene& scene, const Question& question);

// 1 iff the sequence is exactly one digit token followed by EOS.
int format_score(std::span<const TokenId> tokens, const Vocab& vocab);

// 1 iff format-valid and the digit equals gold. Never throws.
int verify(std::span<const TokenId> tokens, int gold, const Vocab& vocab);

// One JSON object per instance; see README for the record schema.
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& line, const EnvConfig& env);

const char* question_kind_name(QuestionKind kind);
QuestionKind question_kind_from_name(const std::string& name);

}  // namespace prco
