#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pb/core.hpp"
#include "pb/llm.hpp"
#include "pb/rng.hpp"
#include "pb/similarity.hpp"

namespace pb::fit {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One question with its already-normalized gold answer.
struct QaExample {
  std::string id;
  std::string question;
  std::string gold_answer;
};

struct Dataset {
  std::vector<QaExample> train;
  std::vector<QaExample> test;
  core::AnswerType answer_type = core::AnswerType::exact_string;
};

enum class DatasetFormat { jsonl, csv };
std::optional<DatasetFormat> dataset_format_from_string(std::string_view name);

/// Loads every example into train (test stays empty). jsonl rows and csv
/// rows both need "question" and "answer" fields; an optional "id" field
/// overrides the line-derived id. Gold answers have any "####" final-answer
/// marker stripped and are normalized; rows whose answer does not normalize
/// raise a DatasetError naming the line.
Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     core::AnswerType answer_type);

/// Seeded shuffle, then an even split: first half train (odd count leaves
/// the extra example in train), remainder test. Input must hold >= 2
/// examples in train.
Dataset split_half(const Dataset& dataset, std::uint64_t seed);

/// Canonical answer-token extraction per answer type. Idempotent on its own
/// output; std::nullopt when no answer token is present.
std::optional<std::string> normalize_answer(std::string_view raw,
                                            core::AnswerType type);

/// Fixed stage-two scaffold that elicits the short final answer.
std::string answer_elicitation(core::AnswerType type);

/// Renders a stored working out as a Q./A. transcript block.
std::string context_transcript(const core::WorkingOut& w);

struct StrategyResult {
  core::WorkingOut working_out;
  std::string stage1_prompt;
  std::string stage2_prompt;
  std::string raw_answer;
  bool provider_failed = false;
};

/// Runs the two-stage strategy for one example: the inducer continues
/// "[contexts] Q. <question> A. <first prompt>", then the evaluator answers
/// after the second prompt plus the elicitation suffix. Units with a single
/// task-prompt skip the second prompt. Provider errors mark the example
/// failed (scored incorrect) instead of propagating.
StrategyResult run_strategy(const core::EvolutionUnit& unit, const QaExample& ex,
                            core::AnswerType answer_type,
                            llm::ModelProvider& provider,
                            const core::EvolutionConfig& config);

struct EvaluationReport {
  double fitness = 0.0;
  std::size_t batch_size = 0;
  std::size_t correct_count = 0;
  std::size_t provider_failures = 0;
  std::vector<core::WorkingOut> correct_workings;
  std::vector<std::pair<std::string, bool>> per_example;  // (example id, correct)

  /// Every example in the batch failed at the provider; fitness is
  /// meaningless and the caller should treat it as absent.
  bool all_failed() const {
    return batch_size > 0 && provider_failures == batch_size;
  }
};

/// Uniform sample without replacement; returns the whole pool (in order)
/// when want >= pool.
std::vector<std::size_t> sample_batch_indices(std::size_t pool_size,
                                              std::size_t want, Rng& rng);

EvaluationReport evaluate_on_batch(const core::EvolutionUnit& unit,
                                   std::span<const QaExample> batch,
                                   core::AnswerType answer_type,
                                   llm::ModelProvider& provider,
                                   const core::EvolutionConfig& config);

/// Samples a batch of config.batch_size from the pool, then evaluates.
EvaluationReport evaluate_unit(const core::EvolutionUnit& unit,
                               const std::vector<QaExample>& pool,
                               core::AnswerType answer_type, Rng& rng,
                               llm::ModelProvider& provider,
                               const core::EvolutionConfig& config);

/// Niching transform: each unit's raw fitness is divided by the summed
/// kernel sh(s) = max(0, (s - threshold) / (1 - threshold)) over its
/// similarity to every evaluated unit, with the self term forced to 1.
/// Units without fitness get NaN entries. Used for selection only.
std::vector<double> shared_fitness(const std::vector<core::EvolutionUnit>& units,
                                   sim::SimilarityProvider& provider,
                                   double threshold);

/// Text a unit is embedded by for sharing: task-prompts joined by newline.
std::string unit_text(const core::EvolutionUnit& unit);

}  // namespace pb::fit
