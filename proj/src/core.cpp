#include "pb/core.hpp"

#include <stdexcept>

namespace pb::core {

std::string to_string(AnswerType type) {
  switch (type) {
    case AnswerType::arabic_numeral: return "arabic_numeral";
    case AnswerType::multiple_choice_letter: return "multiple_choice_letter";
    case AnswerType::yes_no: return "yes_no";
    case AnswerType::exact_string: return "exact_string";
  }
  throw std::logic_error("to_string: bad AnswerType");
}

std::optional<AnswerType> answer_type_from_string(std::string_view name) {
  if (name == "arabic_numeral") return AnswerType::arabic_numeral;
  if (name == "multiple_choice_letter") return AnswerType::multiple_choice_letter;
  if (name == "yes_no") return AnswerType::yes_no;
  if (name == "exact_string") return AnswerType::exact_string;
  return std::nullopt;
}

std::vector<std::string> EvolutionConfig::validate() const {
  std::vector<std::string> problems;
  auto bad = [&](const std::string& msg) { problems.push_back(msg); };

  if (population_size < 2) bad("population_size must be >= 2");
  if (prompts_per_unit < 1) bad("prompts_per_unit must be >= 1");
  if (batch_size < 1) bad("batch_size must be >= 1");
  if (max_contexts < 1) bad("max_contexts must be >= 1");
  if (crossover_prob < 0.0 || crossover_prob > 1.0)
    bad("crossover_prob must be in [0, 1]");
  if (context_resample_trigger_prob < 0.0 || context_resample_trigger_prob > 1.0)
    bad("context_resample_trigger_prob must be in [0, 1]");
  if (similarity_threshold <= 0.0 || similarity_threshold > 1.0)
    bad("similarity_threshold must be in (0, 1]");
  if (random_prefix_len < 1) bad("random_prefix_len must be >= 1");
  if (redescriber_max_tokens < 1) bad("redescriber_max_tokens must be >= 1");
  if (inducer_max_tokens < 1) bad("inducer_max_tokens must be >= 1");
  if (evaluator_max_tokens < 1) bad("evaluator_max_tokens must be >= 1");
  if (temp_init_min > temp_init_max) bad("temp_init_min must be <= temp_init_max");
  if (temp_mutation_half_range < 0.0) bad("temp_mutation_half_range must be >= 0");
  if (temp_min > temp_max) bad("temp_min must be <= temp_max");
  if (max_prompt_chars < 1) bad("max_prompt_chars must be >= 1");
  if (max_generations < 0) bad("max_generations must be >= 0");
  return problems;
}

void record_elite(EvolutionUnit& unit, double fitness) {
  if (fitness < 0.0 || fitness > 1.0)
    throw std::invalid_argument("record_elite: fitness outside [0, 1]");
  if (!unit.elite_history.empty() && fitness <= unit.elite_history.back().fitness)
    return;
  unit.elite_history.push_back(EliteRecord{unit.task_prompts, fitness});
}

namespace {

using nlohmann::json;

json require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw std::invalid_argument(std::string("missing json key: ") + key);
  return *it;
}

}  // namespace

nlohmann::json to_json(const TaskPrompt& p) {
  return {{"id", p.id}, {"text", p.text}};
}

nlohmann::json to_json(const MutationPrompt& p) {
  return {{"id", p.id}, {"text", p.text}};
}

nlohmann::json to_json(const WorkingOut& w) {
  return {{"question", w.question},
          {"reasoning", w.reasoning},
          {"predicted_answer", w.predicted_answer},
          {"correct", w.correct}};
}

nlohmann::json to_json(const EliteRecord& e) {
  nlohmann::json prompts = nlohmann::json::array();
  for (const auto& p : e.task_prompts) prompts.push_back(to_json(p));
  return {{"task_prompts", prompts}, {"fitness", e.fitness}};
}

nlohmann::json to_json(const PendingOp& p) {
  return {{"op_name", p.op_name},
          {"parent_fitness", p.parent_fitness},
          {"generation", p.generation}};
}

nlohmann::json to_json(const EvolutionUnit& u) {
  nlohmann::json prompts = nlohmann::json::array();
  for (const auto& p : u.task_prompts) prompts.push_back(to_json(p));
  nlohmann::json contexts = nlohmann::json::array();
  for (const auto& c : u.contexts) contexts.push_back(to_json(c));
  nlohmann::json elites = nlohmann::json::array();
  for (const auto& e : u.elite_history) elites.push_back(to_json(e));

  nlohmann::json j{{"id", u.id},
                   {"task_prompts", prompts},
                   {"mutation_prompt", to_json(u.mutation_prompt)},
                   {"contexts", contexts},
                   {"redescriber_temperature", u.redescriber_temperature},
                   {"elite_history", elites}};
  j["fitness"] = u.fitness ? nlohmann::json(*u.fitness) : nlohmann::json();
  j["pending_op"] = u.pending_op ? to_json(*u.pending_op) : nlohmann::json();
  return j;
}

nlohmann::json to_json(const Population& p) {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& u : p.units) units.push_back(to_json(u));
  nlohmann::json j{{"units", units},
                   {"generation", p.generation},
                   {"evaluations_used", p.evaluations_used}};
  if (p.global_best) {
    j["global_best"] = {{"unit", to_json(p.global_best->unit)},
                        {"fitness", p.global_best->fitness}};
  } else {
    j["global_best"] = nlohmann::json();
  }
  return j;
}

nlohmann::json to_json(const EvolutionConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  visit_config_fields(cfg, [&](const char* name, const auto& value) {
    j[name] = value;
  });
  return j;
}

nlohmann::json to_json(const IdGen& g) {
  return {{"next_prompt", g.next_prompt}, {"next_unit", g.next_unit}};
}

TaskPrompt task_prompt_from_json(const nlohmann::json& j) {
  return TaskPrompt{require(j, "id").get<std::uint64_t>(),
                    require(j, "text").get<std::string>()};
}

MutationPrompt mutation_prompt_from_json(const nlohmann::json& j) {
  return MutationPrompt{require(j, "id").get<std::uint64_t>(),
                        require(j, "text").get<std::string>()};
}

WorkingOut working_out_from_json(const nlohmann::json& j) {
  return WorkingOut{require(j, "question").get<std::string>(),
                    require(j, "reasoning").get<std::string>(),
                    require(j, "predicted_answer").get<std::string>(),
                    require(j, "correct").get<bool>()};
}

EliteRecord elite_record_from_json(const nlohmann::json& j) {
  EliteRecord e;
  for (const auto& p : require(j, "task_prompts"))
    e.task_prompts.push_back(task_prompt_from_json(p));
  e.fitness = require(j, "fitness").get<double>();
  return e;
}

PendingOp pending_op_from_json(const nlohmann::json& j) {
  return PendingOp{require(j, "op_name").get<std::string>(),
                   require(j, "parent_fitness").get<double>(),
                   require(j, "generation").get<std::uint64_t>()};
}

EvolutionUnit unit_from_json(const nlohmann::json& j) {
  EvolutionUnit u;
  u.id = require(j, "id").get<std::uint64_t>();
  for (const auto& p : require(j, "task_prompts"))
    u.task_prompts.push_back(task_prompt_from_json(p));
  u.mutation_prompt = mutation_prompt_from_json(require(j, "mutation_prompt"));
  for (const auto& c : require(j, "contexts"))
    u.contexts.push_back(working_out_from_json(c));
  u.redescriber_temperature = require(j, "redescriber_temperature").get<double>();
  if (auto f = require(j, "fitness"); !f.is_null()) u.fitness = f.get<double>();
  for (const auto& e : require(j, "elite_history"))
    u.elite_history.push_back(elite_record_from_json(e));
  if (auto p = require(j, "pending_op"); !p.is_null())
    u.pending_op = pending_op_from_json(p);
  return u;
}

Population population_from_json(const nlohmann::json& j) {
  Population p;
  for (const auto& u : require(j, "units")) p.units.push_back(unit_from_json(u));
  p.generation = require(j, "generation").get<std::uint64_t>();
  p.evaluations_used = require(j, "evaluations_used").get<std::uint64_t>();
  if (auto b = require(j, "global_best"); !b.is_null()) {
    p.global_best = BestRecord{unit_from_json(require(b, "unit")),
                               require(b, "fitness").get<double>()};
  }
  return p;
}

EvolutionConfig config_from_json(const nlohmann::json& j) {
  EvolutionConfig cfg;
  visit_config_fields(cfg, [&](const char* name, auto& value) {
    auto it = j.find(name);
    if (it != j.end()) value = it->get<std::decay_t<decltype(value)>>();
  });
  return cfg;
}

IdGen id_gen_from_json(const nlohmann::json& j) {
  return IdGen{require(j, "next_prompt").get<std::uint64_t>(),
               require(j, "next_unit").get<std::uint64_t>()};
}

}  // namespace pb::core
