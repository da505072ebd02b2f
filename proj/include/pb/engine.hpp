#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pb/core.hpp"
#include "pb/fitness.hpp"
#include "pb/llm.hpp"
#include "pb/operators.hpp"
#include "pb/rng.hpp"
#include "pb/seeds.hpp"
#include "pb/similarity.hpp"

namespace pb::engine {

inline constexpr std::string_view kCheckpointVersion = "pb-checkpoint-v1";

/// Consecutive generations without global-best improvement after which the
/// run log flags a stall; enabling the diversity rescues (random prefixes,
/// fitness sharing) is recommended at that point.
inline constexpr std::uint64_t kStallTrigger = 5;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One completed (generation, unit) mutation with the fitness measured at
/// the child's first evaluation. child_fitness is empty for children the run
/// ended before evaluating.
struct OperatorLogRow {
  std::uint64_t generation = 0;
  std::uint64_t unit_id = 0;
  std::string op_name;
  double parent_fitness = 0.0;
  std::optional<double> child_fitness;
};

struct EvalLogRow {
  std::uint64_t generation = 0;
  std::uint64_t unit_id = 0;
  double fitness = 0.0;
};

struct GenerationStats {
  std::uint64_t generation = 0;  // index of the generation that just ran
  std::size_t pair_count = 0;
  std::size_t mutation_count = 0;
  std::size_t skipped_pairs = 0;
  std::size_t evaluations = 0;
  double mean_fitness = 0.0;          // mean over this generation's evaluations
  double best_fitness = 0.0;          // global best after the generation
  std::uint64_t stall_generations = 0;
  std::vector<std::uint64_t> winner_ids;
  std::vector<std::size_t> loser_slots;
  std::vector<std::uint64_t> child_ids;
};

struct RunState {
  core::EvolutionConfig config;
  core::Population population;
  Rng rng;
  core::IdGen ids;
  std::uint64_t stall_generations = 0;

  // Log rows waiting to be drained by the caller; not checkpointed.
  std::vector<OperatorLogRow> operator_rows;
  std::vector<EvalLogRow> eval_rows;
};

/// Fresh run: seeds the rng from config.rng_seed and builds the initial
/// population of config.population_size units.
RunState init_run(const core::EvolutionConfig& config, const core::ProblemSpec& spec,
                  const seeds::SeedCorpora& corpora, llm::ModelProvider& provider,
                  sim::SimilarityProvider& similarity);

/// One tournament generation: disjoint random pairs (odd sizes rotate one
/// unit out), per-pair batch evaluation, winner selection on raw or shared
/// fitness, then each loser slot is overwritten by a mutated copy of its
/// pair's winner carrying a fresh unit id.
GenerationStats run_generation(RunState& state, const core::ProblemSpec& spec,
                               const seeds::SeedCorpora& corpora,
                               const std::vector<fit::QaExample>& train,
                               llm::ModelProvider& provider,
                               sim::SimilarityProvider& similarity);

/// Log rows for mutations whose children were never evaluated (run ended
/// first). Pure read; state is unchanged.
std::vector<OperatorLogRow> unresolved_operator_rows(const RunState& state);

struct FinalReport {
  core::EvolutionUnit best;
  double train_fitness = 0.0;
  std::optional<double> test_accuracy;  // absent when the test split is empty
};

/// Returns the best unit ever recorded and, when a test split exists, its
/// accuracy over the full split.
FinalReport final_select(RunState& state, const fit::Dataset& dataset,
                         llm::ModelProvider& provider);

nlohmann::json checkpoint_to_json(const RunState& state);
RunState checkpoint_from_json(const nlohmann::json& j);

/// Atomic write: temp file in the same directory, then rename.
void write_checkpoint(const RunState& state, const std::filesystem::path& path);
RunState read_checkpoint(const std::filesystem::path& path);

}  // namespace pb::engine
