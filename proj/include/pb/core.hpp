#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace pb::core {

enum class AnswerType {
  arabic_numeral,
  multiple_choice_letter,
  yes_no,
  exact_string,
};

std::string to_string(AnswerType type);
std::optional<AnswerType> answer_type_from_string(std::string_view name);

/// Instruction text under evolution. Empty text is legal (a degenerate but
/// valid genotype); ids are unique within a run.
struct TaskPrompt {
  std::uint64_t id = 0;
  std::string text;

  bool operator==(const TaskPrompt&) const = default;
};

/// Instruction that rewrites task-prompts. Text is never empty: a rewrite
/// that would produce an empty mutation-prompt leaves the old one in place.
struct MutationPrompt {
  std::uint64_t id = 0;
  std::string text;

  bool operator==(const MutationPrompt&) const = default;
};

struct ThinkingStyle {
  std::string text;

  bool operator==(const ThinkingStyle&) const = default;
};

/// One solved example kept as few-shot context. Only correct ones are stored.
struct WorkingOut {
  std::string question;
  std::string reasoning;
  std::string predicted_answer;
  bool correct = false;

  bool operator==(const WorkingOut&) const = default;
};

/// The task being optimized against.
struct ProblemSpec {
  std::string name;
  std::string description;
  AnswerType answer_type = AnswerType::exact_string;
  std::string dataset_ref;
};

/// Snapshot taken whenever a unit wins with a fitness above everything in its
/// lineage so far. Fitness values are strictly increasing along the list.
struct EliteRecord {
  std::vector<TaskPrompt> task_prompts;
  double fitness = 0.0;

  bool operator==(const EliteRecord&) const = default;
};

/// Mutation bookkeeping carried by a child until its first evaluation, at
/// which point the (parent fitness, child fitness) pair becomes a log row.
struct PendingOp {
  std::string op_name;
  double parent_fitness = 0.0;
  std::uint64_t generation = 0;

  bool operator==(const PendingOp&) const = default;
};

struct EvolutionUnit {
  std::uint64_t id = 0;
  std::vector<TaskPrompt> task_prompts;
  MutationPrompt mutation_prompt;
  std::vector<WorkingOut> contexts;
  double redescriber_temperature = 1.0;
  std::optional<double> fitness;  // absent until evaluated
  std::vector<EliteRecord> elite_history;
  std::optional<PendingOp> pending_op;

  bool operator==(const EvolutionUnit&) const = default;
};

struct BestRecord {
  EvolutionUnit unit;
  double fitness = 0.0;

  bool operator==(const BestRecord&) const = default;
};

struct Population {
  std::vector<EvolutionUnit> units;
  std::uint64_t generation = 0;
  std::optional<BestRecord> global_best;
  std::uint64_t evaluations_used = 0;

  bool operator==(const Population&) const = default;
};

struct EvolutionConfig {
  int population_size = 50;
  int prompts_per_unit = 2;
  int batch_size = 100;
  int max_contexts = 3;
  bool few_shot = false;

  double crossover_prob = 0.10;
  double context_resample_trigger_prob = 0.10;
  double similarity_threshold = 0.95;

  bool random_prefix_enabled = false;
  int random_prefix_len = 50;

  int redescriber_max_tokens = 50;
  int inducer_max_tokens = 30;
  int evaluator_max_tokens = 5;
  double inducer_temperature = 0.0;
  double evaluator_temperature = 0.0;

  double temp_init_min = 1.0;
  double temp_init_max = 2.0;
  double temp_mutation_half_range = 0.2;
  double temp_min = 0.5;
  double temp_max = 2.5;

  int max_prompt_chars = 2000;
  std::uint64_t rng_seed = 1;
  int max_generations = 25;
  std::uint64_t eval_budget = 0;  // 0 = unlimited
  bool shared_batch = true;
  bool fitness_sharing_enabled = false;

  bool disable_init_thinking_styles = false;
  bool disable_init_mutation_prompt_sampling = false;
  bool disable_lamarckian = false;
  bool disable_hypermutation = false;

  /// Problems found, empty when the config is usable.
  std::vector<std::string> validate() const;

  bool operator==(const EvolutionConfig&) const = default;
};

/// Applies one field visitor call per config entry, in a fixed order. Single
/// source of truth for serialization and key=value parsing.
template <typename Config, typename Visitor>
void visit_config_fields(Config&& cfg, Visitor&& f) {
  f("population_size", cfg.population_size);
  f("prompts_per_unit", cfg.prompts_per_unit);
  f("batch_size", cfg.batch_size);
  f("max_contexts", cfg.max_contexts);
  f("few_shot", cfg.few_shot);
  f("crossover_prob", cfg.crossover_prob);
  f("context_resample_trigger_prob", cfg.context_resample_trigger_prob);
  f("similarity_threshold", cfg.similarity_threshold);
  f("random_prefix_enabled", cfg.random_prefix_enabled);
  f("random_prefix_len", cfg.random_prefix_len);
  f("redescriber_max_tokens", cfg.redescriber_max_tokens);
  f("inducer_max_tokens", cfg.inducer_max_tokens);
  f("evaluator_max_tokens", cfg.evaluator_max_tokens);
  f("inducer_temperature", cfg.inducer_temperature);
  f("evaluator_temperature", cfg.evaluator_temperature);
  f("temp_init_min", cfg.temp_init_min);
  f("temp_init_max", cfg.temp_init_max);
  f("temp_mutation_half_range", cfg.temp_mutation_half_range);
  f("temp_min", cfg.temp_min);
  f("temp_max", cfg.temp_max);
  f("max_prompt_chars", cfg.max_prompt_chars);
  f("rng_seed", cfg.rng_seed);
  f("max_generations", cfg.max_generations);
  f("eval_budget", cfg.eval_budget);
  f("shared_batch", cfg.shared_batch);
  f("fitness_sharing_enabled", cfg.fitness_sharing_enabled);
  f("disable_init_thinking_styles", cfg.disable_init_thinking_styles);
  f("disable_init_mutation_prompt_sampling",
    cfg.disable_init_mutation_prompt_sampling);
  f("disable_lamarckian", cfg.disable_lamarckian);
  f("disable_hypermutation", cfg.disable_hypermutation);
}

/// Monotonic id source for units and prompts, checkpointed with the run.
struct IdGen {
  std::uint64_t next_prompt = 1;
  std::uint64_t next_unit = 1;

  std::uint64_t prompt_id() { return next_prompt++; }
  std::uint64_t unit_id() { return next_unit++; }

  bool operator==(const IdGen&) const = default;
};

/// Appends a snapshot of the unit's current task-prompts to its elite
/// history, but only on strict improvement over the last recorded entry.
/// fitness must lie in [0, 1].
void record_elite(EvolutionUnit& unit, double fitness);

// JSON codecs. Object keys are emitted sorted, so serialize → parse →
// serialize is byte-stable.
nlohmann::json to_json(const TaskPrompt&);
nlohmann::json to_json(const MutationPrompt&);
nlohmann::json to_json(const WorkingOut&);
nlohmann::json to_json(const EliteRecord&);
nlohmann::json to_json(const PendingOp&);
nlohmann::json to_json(const EvolutionUnit&);
nlohmann::json to_json(const Population&);
nlohmann::json to_json(const EvolutionConfig&);
nlohmann::json to_json(const IdGen&);

TaskPrompt task_prompt_from_json(const nlohmann::json&);
MutationPrompt mutation_prompt_from_json(const nlohmann::json&);
WorkingOut working_out_from_json(const nlohmann::json&);
EliteRecord elite_record_from_json(const nlohmann::json&);
PendingOp pending_op_from_json(const nlohmann::json&);
EvolutionUnit unit_from_json(const nlohmann::json&);
Population population_from_json(const nlohmann::json&);
EvolutionConfig config_from_json(const nlohmann::json&);
IdGen id_gen_from_json(const nlohmann::json&);

}  // namespace pb::core
