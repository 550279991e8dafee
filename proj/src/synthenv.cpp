#include "synthenv.hpp"

#include <nlohmann/json.hpp>

#include "rng.hpp"

namespace prco {

Instance generate_instance(uint64_t seed, const EnvConfig& env) {
  env.validate();
  Rng rng(stream_seed(seed, "instance"));

  Instance inst;
  inst.scene.scene_id = seed;
  inst.scene.slots.resize(env.slots);
  for (auto& slot : inst.scene.slots) {
    slot.color = static_cast<int>(rng.next_below(static_cast<uint32_t>(env.colors)));
    slot.shape = static_cast<int>(rng.next_below(static_cast<uint32_t>(env.shapes)));
  }

  const double weights[3] = {env.weight_count_color, env.weight_count_shape,
                             env.weight_count_color_shape};
  const double total = weights[0] + weights[1] + weights[2];
  const double u = rng.next_double() * total;
  QuestionKind kind;
  if (u < weights[0])
    kind = QuestionKind::CountColor;
  else if (u < weights[0] + weights[1])
    kind = QuestionKind::CountShape;
  else
    kind = QuestionKind::CountColorShape;

  const int color = static_cast<int>(rng.next_below(static_cast<uint32_t>(env.colors)));
  const int shape = static_cast<int>(rng.next_below(static_cast<uint32_t>(env.shapes)));
  switch (kind) {
    case QuestionKind::CountColor: inst.question = Question::count_color(color); break;
    case QuestionKind::CountShape: inst.question = Question::count_shape(shape); break;
    case QuestionKind::CountColorShape:
      inst.question = Question::count_color_shape(color, shape);
      break;
  }

  inst.gold = oracle_answer(inst.scene, inst.question);
  return inst;
}

int oracle_answer(const Scene& scene, const Question& question) {
  int count = 0;
  for (const Slot& slot : scene.slots) {
    if (question.target_color && slot.color != *question.target_color) continue;
    if (question.target_shape && slot.shape != *question.target_shape) continue;
    ++count;
  }
  return count;
}

int format_score(std::span<const TokenId> tokens, const Vocab& vocab) {
  return tokens.size() == 2 && vocab.is_digit(tokens[0]) && tokens[1] == vocab.eos() ? 1 : 0;
}

int verify(std::span<const TokenId> tokens, int gold, const Vocab& vocab) {
  if (format_score(tokens, vocab) == 0) return 0;
  return vocab.digit_value(tokens[0]) == gold ? 1 : 0;
}

const char* question_kind_name(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::CountColor: return "count_color";
    case QuestionKind::CountShape: return "count_shape";
    case QuestionKind::CountColorShape: return "count_color_shape";
  }
  return "invalid";
}

QuestionKind question_kind_from_name(const std::string& name) {
  if (name == "count_color") return QuestionKind::CountColor;
  if (name == "count_shape") return QuestionKind::CountShape;
  if (name == "count_color_shape") return QuestionKind::CountColorShape;
  throw InputError("unknown question kind: " + name);
}

std::string instance_to_json(const Instance& inst) {
  nlohmann::json rec;
  rec["scene_id"] = inst.scene.scene_id;
  auto& slots = rec["slots"] = nlohmann::json::array();
  for (const Slot& slot : inst.scene.slots)
    slots.push_back({{"color", slot.color}, {"shape", slot.shape}});
  rec["kind"] = question_kind_name(inst.question.kind);
  if (inst.question.target_color) rec["target_color"] = *inst.question.target_color;
  if (inst.question.target_shape) rec["target_shape"] = *inst.question.target_shape;
  rec["gold"] = inst.gold;
  return rec.dump();
}

Instance instance_from_json(const std::string& line, const EnvConfig& env) {
  nlohmann::json rec;
  try {
    rec = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad instance record: ") + e.what());
  }
  Instance inst;
  try {
    inst.scene.scene_id = rec.at("scene_id").get<uint64_t>();
    for (const auto& slot : rec.at("slots"))
      inst.scene.slots.push_back({slot.at("color").get<int>(), slot.at("shape").get<int>()});
    inst.question.kind = question_kind_from_name(rec.at("kind").get<std::string>());
    if (rec.contains("target_color")) inst.question.target_color = rec["target_color"].get<int>();
    if (rec.contains("target_shape")) inst.question.target_shape = rec["target_shape"].get<int>();
    inst.gold = rec.at("gold").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("bad instance record: ") + e.what());
  }
  if (static_cast<int>(inst.scene.slots.size()) != env.slots)
    throw InputError("instance record slot count does not match env config");
  return inst;
}

}  // namespace prco
