#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "pb/core.hpp"
#include "pb/llm.hpp"
#include "pb/rng.hpp"
#include "pb/seeds.hpp"
#include "pb/similarity.hpp"

namespace pb::ops {

enum class OperatorKind {
  zero_order_prompt_gen,
  first_order_prompt_gen,
  eda_mutation,
  eda_rank_index_mutation,
  lineage_mutation,
  zero_order_hyper_mutation,
  first_order_hyper_mutation,
  lamarckian_mutation,
  context_shuffle,
};

inline constexpr std::array<OperatorKind, 9> kAllOperators = {
    OperatorKind::zero_order_prompt_gen,    OperatorKind::first_order_prompt_gen,
    OperatorKind::eda_mutation,             OperatorKind::eda_rank_index_mutation,
    OperatorKind::lineage_mutation,         OperatorKind::zero_order_hyper_mutation,
    OperatorKind::first_order_hyper_mutation, OperatorKind::lamarckian_mutation,
    OperatorKind::context_shuffle,
};

std::string_view to_string(OperatorKind kind);

/// Raised by an operator whose requirements the unit or population cannot
/// meet; the dispatcher reacts by re-sampling among the remaining operators.
class PreconditionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shared environment for mutation. `population` is the live population (the
/// unit being mutated is a detached copy and need not appear in it);
/// `fresh_correct` carries the correct workings out from the parent's latest
/// evaluation, for the context operators.
struct MutationContext {
  const core::EvolutionConfig& config;
  const core::ProblemSpec& spec;
  const seeds::SeedCorpora& corpora;
  llm::ModelProvider& provider;
  sim::SimilarityProvider& similarity;
  const std::vector<core::EvolutionUnit>& population;
  core::IdGen& ids;
  const std::vector<core::WorkingOut>* fresh_correct = nullptr;
};

struct MutationOutcome {
  core::EvolutionUnit unit;
  OperatorKind operator_used = OperatorKind::first_order_prompt_gen;
  int llm_calls = 0;
  std::vector<std::string> continuations;
  bool crossover_applied = false;
  bool context_full_resample = false;
};

// --- Prompt template assembly (pure string builders) ---

std::string init_prompt(std::string_view mutation_prompt,
                        std::string_view thinking_style,
                        std::string_view description);
std::string hints_prompt(std::string_view description);
std::string first_order_prompt(std::string_view mutation_prompt,
                               std::string_view task_prompt);
std::string eda_list_prompt(const std::vector<std::string>& entries);
std::string eda_rank_prompt(std::string_view mutation_prompt,
                            const std::vector<std::string>& entries);
std::string lineage_prompt(const std::vector<std::string>& genotypes);
std::string hyper_zero_prompt(std::string_view description,
                              std::string_view thinking_style);
std::string hyper_first_prompt(std::string_view mutation_prompt);
std::string lamarckian_prompt(std::string_view working_out);

/// Pulls one list item out of a list continuation: strips a leading index
/// marker, cuts at the first newline or the next index token, trims.
std::string extract_list_item(std::string_view continuation);

/// Greedy de-duplication in a random order: an entry is kept only while its
/// similarity to every kept entry stays <= threshold.
std::vector<std::string> diversity_filter(const std::vector<std::string>& entries,
                                          sim::SimilarityProvider& provider,
                                          double threshold, Rng& rng);

/// Alphanumeric prefix of config.random_prefix_len chars plus one space,
/// prepended to the prompt. Applied to rewrite calls when enabled.
std::string inject_random_prefix(const std::string& prompt,
                                 const core::EvolutionConfig& config, Rng& rng);

// --- Individual operators ---
//
// Each mutates `unit` in place (the chosen task-prompt slot, and for the
// hyper variants the mutation-prompt; context_shuffle only the contexts)
// and appends any raw model continuations to `out`.

void zero_order_prompt_gen(core::EvolutionUnit& unit, std::size_t slot,
                           MutationContext& ctx, Rng& rng, MutationOutcome& out);
void first_order_prompt_gen(core::EvolutionUnit& unit, std::size_t slot,
                            MutationContext& ctx, Rng& rng, MutationOutcome& out);
void eda_mutation(core::EvolutionUnit& unit, std::size_t slot, MutationContext& ctx,
                  Rng& rng, MutationOutcome& out);
void eda_rank_index_mutation(core::EvolutionUnit& unit, std::size_t slot,
                             MutationContext& ctx, Rng& rng, MutationOutcome& out);
void lineage_mutation(core::EvolutionUnit& unit, std::size_t slot,
                      MutationContext& ctx, Rng& rng, MutationOutcome& out);
void zero_order_hyper_mutation(core::EvolutionUnit& unit, std::size_t slot,
                               MutationContext& ctx, Rng& rng, MutationOutcome& out);
void first_order_hyper_mutation(core::EvolutionUnit& unit, std::size_t slot,
                                MutationContext& ctx, Rng& rng, MutationOutcome& out);
void lamarckian_mutation(core::EvolutionUnit& unit, std::size_t slot,
                         MutationContext& ctx, Rng& rng, MutationOutcome& out);
void context_shuffle(core::EvolutionUnit& unit, MutationContext& ctx, Rng& rng,
                     MutationOutcome& out);

/// With probability config.crossover_prob, overwrites the target slot with a
/// task-prompt from a donor drawn fitness-proportionately (epsilon floor
/// 1e-6) among evaluated population units other than `unit`. Returns whether
/// a donor prompt was copied in.
bool crossover_maybe(core::EvolutionUnit& unit, std::size_t slot,
                     MutationContext& ctx, Rng& rng);

/// Adds U[-half_range, +half_range] to the unit's rewrite temperature and
/// clamps it into [temp_min, temp_max].
void mutate_temperature(core::EvolutionUnit& unit,
                        const core::EvolutionConfig& config, Rng& rng);

/// Operators that can be drawn given the config's ablation flags.
std::vector<OperatorKind> enabled_operators(const core::EvolutionConfig& config);

/// Draws an operator uniformly from the enabled set, re-sampling on
/// precondition failures, then applies crossover_maybe and the temperature
/// step. The unit's id is never changed here; clone ids upstream.
MutationOutcome dispatch_mutation(const core::EvolutionUnit& unit,
                                  MutationContext& ctx, Rng& rng);

/// Builds a new unit: rewrite temperature drawn from the init range, then
/// each task-prompt produced by rewriting "mutation-prompt + thinking-style
/// + INSTRUCTION: + description" (or taken verbatim from the description
/// when thinking-style initialization is disabled). The first drawn
/// mutation-prompt becomes the unit's heritable one.
core::EvolutionUnit init_unit(MutationContext& ctx, Rng& rng);

}  // namespace pb::ops
