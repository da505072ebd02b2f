#include "pb/engine.hpp"

#include <cmath>
#include <fstream>

namespace pb::engine {

namespace {

/// Copy of a unit under a fresh identity: new unit id, new prompt ids.
/// Lineage, contexts, and temperature carry over; fitness does not.
core::EvolutionUnit clone_unit(const core::EvolutionUnit& parent, core::IdGen& ids) {
  core::EvolutionUnit child = parent;
  child.id = ids.unit_id();
  for (auto& p : child.task_prompts) p.id = ids.prompt_id();
  child.mutation_prompt.id = ids.prompt_id();
  child.fitness.reset();
  child.pending_op.reset();
  return child;
}

void update_global_best(core::Population& population, const core::EvolutionUnit& unit) {
  if (!unit.fitness) return;
  if (!population.global_best || *unit.fitness > population.global_best->fitness)
    population.global_best = core::BestRecord{unit, *unit.fitness};
}

}  // namespace

RunState init_run(const core::EvolutionConfig& config, const core::ProblemSpec& spec,
                  const seeds::SeedCorpora& corpora, llm::ModelProvider& provider,
                  sim::SimilarityProvider& similarity) {
  RunState state;
  state.config = config;
  state.rng = Rng(config.rng_seed);

  ops::MutationContext ctx{config,     spec,      corpora, provider,
                           similarity, state.population.units, state.ids};
  state.population.units.reserve(static_cast<std::size_t>(config.population_size));
  for (int i = 0; i < config.population_size; ++i)
    state.population.units.push_back(ops::init_unit(ctx, state.rng));
  return state;
}

GenerationStats run_generation(RunState& state, const core::ProblemSpec& spec,
                               const seeds::SeedCorpora& corpora,
                               const std::vector<fit::QaExample>& train,
                               llm::ModelProvider& provider,
                               sim::SimilarityProvider& similarity) {
  auto& population = state.population;
  auto& units = population.units;
  const auto& config = state.config;
  const std::uint64_t gen = population.generation;

  GenerationStats stats;
  stats.generation = gen;

  // Pairing: shuffle unit indices, then take consecutive disjoint pairs.
  // Odd sizes leave one unit out, rotating by generation.
  std::vector<std::size_t> order;
  order.reserve(units.size());
  const bool odd = units.size() % 2 != 0;
  const std::size_t sit_out = odd ? gen % units.size() : units.size();
  for (std::size_t i = 0; i < units.size(); ++i)
    if (i != sit_out) order.push_back(i);
  state.rng.shuffle(order);

  const std::size_t pair_count = order.size() / 2;
  stats.pair_count = pair_count;

  // Phase 1: evaluate both members of every pair, by default on one shared
  // batch per pair.
  std::vector<fit::EvaluationReport> reports(units.size());
  const double best_before =
      population.global_best ? population.global_best->fitness : -1.0;

  auto evaluate_into = [&](std::size_t idx, const std::vector<fit::QaExample>& batch) {
    auto report =
        fit::evaluate_on_batch(units[idx], batch, spec.answer_type, provider, config);
    if (report.all_failed()) {
      units[idx].fitness.reset();
    } else {
      units[idx].fitness = report.fitness;
      population.evaluations_used += 1;
      stats.evaluations += 1;
      state.eval_rows.push_back(EvalLogRow{gen, units[idx].id, report.fitness});
      update_global_best(population, units[idx]);
      if (units[idx].pending_op) {
        state.operator_rows.push_back(OperatorLogRow{
            units[idx].pending_op->generation, units[idx].id,
            units[idx].pending_op->op_name, units[idx].pending_op->parent_fitness,
            report.fitness});
        units[idx].pending_op.reset();
      }
    }
    reports[idx] = std::move(report);
  };

  auto sample_batch = [&]() {
    auto indices = fit::sample_batch_indices(
        train.size(), static_cast<std::size_t>(config.batch_size), state.rng);
    std::vector<fit::QaExample> batch;
    batch.reserve(indices.size());
    for (auto i : indices) batch.push_back(train[i]);
    return batch;
  };

  for (std::size_t p = 0; p < pair_count; ++p) {
    const std::size_t a = order[2 * p];
    const std::size_t b = order[2 * p + 1];
    auto batch = sample_batch();
    evaluate_into(a, batch);
    if (!config.shared_batch) batch = sample_batch();
    evaluate_into(b, batch);
  }

  // Selection pressure can be taken on niched fitness instead of raw scores;
  // raw fitness stays on the units and in the logs either way.
  std::vector<double> shared;
  if (config.fitness_sharing_enabled)
    shared = fit::shared_fitness(units, similarity, config.similarity_threshold);

  double fitness_sum = 0.0;
  std::size_t fitness_count = 0;
  for (const auto& row : state.eval_rows) {
    if (row.generation != gen) continue;
    fitness_sum += row.fitness;
    ++fitness_count;
  }

  // Phase 2: resolve each pair and overwrite the loser with a mutated copy
  // of the winner. Committed in pair order.
  for (std::size_t p = 0; p < pair_count; ++p) {
    const std::size_t a = order[2 * p];
    const std::size_t b = order[2 * p + 1];
    if (!units[a].fitness || !units[b].fitness) {
      ++stats.skipped_pairs;
      continue;
    }

    const double fa = config.fitness_sharing_enabled ? shared[a] : *units[a].fitness;
    const double fb = config.fitness_sharing_enabled ? shared[b] : *units[b].fitness;
    std::size_t winner, loser;
    if (fa > fb) {
      winner = a;
      loser = b;
    } else if (fb > fa) {
      winner = b;
      loser = a;
    } else {
      winner = state.rng.bernoulli(0.5) ? a : b;
      loser = winner == a ? b : a;
    }

    const double winner_fitness = *units[winner].fitness;
    core::record_elite(units[winner], winner_fitness);
    stats.winner_ids.push_back(units[winner].id);
    stats.loser_slots.push_back(loser);

    core::EvolutionUnit child = clone_unit(units[winner], state.ids);
    ops::MutationContext ctx{config,     spec, corpora, provider,
                             similarity, units, state.ids,
                             &reports[winner].correct_workings};
    auto outcome = ops::dispatch_mutation(child, ctx, state.rng);
    outcome.unit.pending_op = core::PendingOp{
        std::string(ops::to_string(outcome.operator_used)), winner_fitness, gen};

    stats.child_ids.push_back(outcome.unit.id);
    units[loser] = std::move(outcome.unit);
    ++stats.mutation_count;
  }

  population.generation += 1;

  const double best_after =
      population.global_best ? population.global_best->fitness : -1.0;
  state.stall_generations = best_after > best_before ? 0 : state.stall_generations + 1;

  stats.mean_fitness = fitness_count == 0 ? 0.0 : fitness_sum / fitness_count;
  stats.best_fitness = best_after < 0.0 ? 0.0 : best_after;
  stats.stall_generations = state.stall_generations;
  return stats;
}

std::vector<OperatorLogRow> unresolved_operator_rows(const RunState& state) {
  std::vector<OperatorLogRow> rows;
  for (const auto& unit : state.population.units) {
    if (!unit.pending_op) continue;
    rows.push_back(OperatorLogRow{unit.pending_op->generation, unit.id,
                                  unit.pending_op->op_name,
                                  unit.pending_op->parent_fitness, std::nullopt});
  }
  return rows;
}

FinalReport final_select(RunState& state, const fit::Dataset& dataset,
                         llm::ModelProvider& provider) {
  if (!state.population.global_best)
    throw std::runtime_error("final_select: no unit has been evaluated");

  FinalReport report;
  report.best = state.population.global_best->unit;
  report.train_fitness = state.population.global_best->fitness;
  if (!dataset.test.empty()) {
    auto test_report = fit::evaluate_on_batch(report.best, dataset.test,
                                              dataset.answer_type, provider,
                                              state.config);
    report.test_accuracy = test_report.fitness;
  }
  return report;
}

nlohmann::json checkpoint_to_json(const RunState& state) {
  return {{"version", std::string(kCheckpointVersion)},
          {"config", core::to_json(state.config)},
          {"rng", state.rng.state_string()},
          {"ids", core::to_json(state.ids)},
          {"stall_generations", state.stall_generations},
          {"population", core::to_json(state.population)}};
}

RunState checkpoint_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("version") || !j["version"].is_string())
    throw CheckpointError("checkpoint has no version field");
  if (j["version"].get<std::string>() != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version: " +
                          j["version"].get<std::string>());
  try {
    RunState state;
    state.config = core::config_from_json(j.at("config"));
    state.rng = Rng::from_state_string(j.at("rng").get<std::string>());
    state.ids = core::id_gen_from_json(j.at("ids"));
    state.stall_generations = j.at("stall_generations").get<std::uint64_t>();
    state.population = core::population_from_json(j.at("population"));
    return state;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

void write_checkpoint(const RunState& state, const std::filesystem::path& path) {
  const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out)
      throw CheckpointError("cannot write checkpoint: " + tmp.string());
    out << checkpoint_to_json(state).dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

RunState read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot read checkpoint: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint is not valid json: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace pb::engine
