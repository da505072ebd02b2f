#include "pb/operators.hpp"

#include <algorithm>
#include <cctype>

#include "pb/fitness.hpp"

namespace pb::ops {

namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string clip(std::string text, int max_chars) {
  if (max_chars > 0 && text.size() > static_cast<std::size_t>(max_chars))
    text.resize(static_cast<std::size_t>(max_chars));
  return text;
}

void set_slot(core::EvolutionUnit& unit, std::size_t slot, std::string text,
              MutationContext& ctx) {
  unit.task_prompts[slot] =
      core::TaskPrompt{ctx.ids.prompt_id(), clip(std::move(text), ctx.config.max_prompt_chars)};
}

/// Replaces the mutation-prompt only when the rewrite produced something.
void maybe_set_mutation_prompt(core::EvolutionUnit& unit, std::string text,
                               MutationContext& ctx) {
  text = trim(text);
  if (text.empty()) return;
  unit.mutation_prompt = core::MutationPrompt{
      ctx.ids.prompt_id(), clip(std::move(text), ctx.config.max_prompt_chars)};
}

std::string redescribe(const std::string& prompt, const core::EvolutionUnit& unit,
                       MutationContext& ctx, Rng& rng, MutationOutcome& out) {
  std::string p = ctx.config.random_prefix_enabled
                      ? inject_random_prefix(prompt, ctx.config, rng)
                      : prompt;
  std::string continuation = llm::generate(
      ctx.provider,
      llm::Role::redescriber(ctx.config, unit.redescriber_temperature), p);
  ++out.llm_calls;
  out.continuations.push_back(continuation);
  return continuation;
}

std::string numbered(const std::vector<std::string>& entries) {
  std::string body;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    body += "(" + std::to_string(i + 1) + ") " + entries[i] + "\n";
  }
  body += "(" + std::to_string(entries.size() + 1) + ")";
  return body;
}

/// Task-prompt texts across the population, paired with the owning unit's
/// fitness when present.
std::vector<std::pair<std::string, std::optional<double>>> population_prompts(
    const std::vector<core::EvolutionUnit>& units) {
  std::vector<std::pair<std::string, std::optional<double>>> out;
  for (const auto& u : units)
    for (const auto& p : u.task_prompts) out.emplace_back(p.text, u.fitness);
  return out;
}

std::size_t evaluated_count(const std::vector<core::EvolutionUnit>& units) {
  std::size_t n = 0;
  for (const auto& u : units)
    if (u.fitness) ++n;
  return n;
}

}  // namespace

std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::zero_order_prompt_gen: return "zero_order_prompt_gen";
    case OperatorKind::first_order_prompt_gen: return "first_order_prompt_gen";
    case OperatorKind::eda_mutation: return "eda_mutation";
    case OperatorKind::eda_rank_index_mutation: return "eda_rank_index_mutation";
    case OperatorKind::lineage_mutation: return "lineage_mutation";
    case OperatorKind::zero_order_hyper_mutation: return "zero_order_hyper_mutation";
    case OperatorKind::first_order_hyper_mutation: return "first_order_hyper_mutation";
    case OperatorKind::lamarckian_mutation: return "lamarckian_mutation";
    case OperatorKind::context_shuffle: return "context_shuffle";
  }
  return "unknown";
}

std::string init_prompt(std::string_view mutation_prompt,
                        std::string_view thinking_style,
                        std::string_view description) {
  std::string out;
  out += mutation_prompt;
  out += ' ';
  out += thinking_style;
  out += " INSTRUCTION: ";
  out += description;
  out += " INSTRUCTION MUTANT:";
  return out;
}

std::string hints_prompt(std::string_view description) {
  std::string out;
  out += description;
  out += " A list of 100 hints:\n1.";
  return out;
}

std::string first_order_prompt(std::string_view mutation_prompt,
                               std::string_view task_prompt) {
  std::string out;
  out += mutation_prompt;
  out += " INSTRUCTION: ";
  out += task_prompt;
  out += " INSTRUCTION MUTANT:";
  return out;
}

std::string eda_list_prompt(const std::vector<std::string>& entries) {
  return numbered(entries);
}

std::string eda_rank_prompt(std::string_view mutation_prompt,
                            const std::vector<std::string>& entries) {
  std::string out;
  out += "INSTRUCTION: ";
  out += mutation_prompt;
  out += "\n A List of Responses in descending order of score. ";
  out += std::to_string(entries.size() + 1);
  out += " is the best response. It resembles ";
  out += std::to_string(entries.size());
  out += " more than it does (1)\n";
  out += numbered(entries);
  return out;
}

std::string lineage_prompt(const std::vector<std::string>& genotypes) {
  std::string out = "GENOTYPES FOUND IN ASCENDING ORDER OF QUALITY\n";
  for (const auto& g : genotypes) {
    out += g;
    out += '\n';
  }
  return out;
}

std::string hyper_zero_prompt(std::string_view description,
                              std::string_view thinking_style) {
  std::string out;
  out += description;
  out += ' ';
  out += thinking_style;
  return out;
}

std::string hyper_first_prompt(std::string_view mutation_prompt) {
  std::string out = "Please summarize and improve the following instruction: ";
  out += mutation_prompt;
  return out;
}

std::string lamarckian_prompt(std::string_view working_out) {
  std::string out =
      "I gave a friend an instruction and some advice. "
      "Here are the correct examples of his workings out:\n";
  out += working_out;
  out += "\nThe instruction was:";
  return out;
}

std::string extract_list_item(std::string_view continuation) {
  std::string s = trim(continuation);

  // Leading index marker left over from the list seed, e.g. "1." or "(2)".
  std::size_t i = 0;
  if (i < s.size() && s[i] == '(') {
    std::size_t j = i + 1;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i + 1 && j < s.size() && s[j] == ')') i = j + 1;
  } else {
    std::size_t j = i;
    while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i && j < s.size() && (s[j] == '.' || s[j] == ')')) i = j + 1;
  }
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  s.erase(0, i);

  // Cut at the first newline or the start of the next item.
  std::size_t cut = s.size();
  for (std::size_t k = 0; k < s.size() && k < cut; ++k) {
    if (s[k] == '\n') {
      cut = k;
      break;
    }
    bool at_boundary = k == 0 || s[k - 1] == ' ' || s[k - 1] == '\t';
    if (!at_boundary) continue;
    if (s[k] == '(') {
      std::size_t j = k + 1;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j > k + 1 && j < s.size() && s[j] == ')' && k > 0) cut = k;
    } else if (std::isdigit(static_cast<unsigned char>(s[k])) && k > 0) {
      std::size_t j = k;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j < s.size() && (s[j] == '.' || s[j] == ')')) cut = k;
    }
  }
  return trim(s.substr(0, cut));
}

std::vector<std::string> diversity_filter(const std::vector<std::string>& entries,
                                          sim::SimilarityProvider& provider,
                                          double threshold, Rng& rng) {
  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<std::string> kept;
  std::vector<std::vector<double>> kept_embeddings;
  for (std::size_t idx : order) {
    const std::string& candidate = entries[idx];
    auto embedding = provider.embed(candidate);
    bool ok = true;
    for (const auto& seen : kept_embeddings) {
      if (sim::cosine(embedding, seen) > threshold) {
        ok = false;
        break;
      }
    }
    if (ok) {
      kept.push_back(candidate);
      kept_embeddings.push_back(std::move(embedding));
    }
  }
  return kept;
}

std::string inject_random_prefix(const std::string& prompt,
                                 const core::EvolutionConfig& config, Rng& rng) {
  static constexpr std::string_view kAlphabet =
      "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";
  std::string prefix;
  prefix.reserve(static_cast<std::size_t>(config.random_prefix_len) + 1);
  for (int i = 0; i < config.random_prefix_len; ++i)
    prefix += kAlphabet[rng.uniform_index(kAlphabet.size())];
  prefix += ' ';
  return prefix + prompt;
}

void zero_order_prompt_gen(core::EvolutionUnit& unit, std::size_t slot,
                           MutationContext& ctx, Rng& rng, MutationOutcome& out) {
  std::string prompt = hints_prompt(ctx.spec.description);
  std::string hint = extract_list_item(redescribe(prompt, unit, ctx, rng, out));
  if (hint.empty())
    hint = extract_list_item(redescribe(prompt, unit, ctx, rng, out));
  if (hint.empty()) hint = ctx.spec.description;  // degenerate model output
  set_slot(unit, slot, std::move(hint), ctx);
}

void first_order_prompt_gen(core::EvolutionUnit& unit, std::size_t slot,
                            MutationContext& ctx, Rng& rng, MutationOutcome& out) {
  std::string prompt =
      first_order_prompt(unit.mutation_prompt.text, unit.task_prompts[slot].text);
  set_slot(unit, slot, trim(redescribe(prompt, unit, ctx, rng, out)), ctx);
}

void eda_mutation(core::EvolutionUnit& unit, std::size_t slot, MutationContext& ctx,
                  Rng& rng, MutationOutcome& out) {
  if (evaluated_count(ctx.population) < 1)
    throw PreconditionFailure("eda_mutation: no evaluated units");
  std::vector<std::string> texts;
  for (auto& [text, fitness] : population_prompts(ctx.population))
    texts.push_back(text);
  auto entries =
      diversity_filter(texts, ctx.similarity, ctx.config.similarity_threshold, rng);
  std::string continuation = redescribe(eda_list_prompt(entries), unit, ctx, rng, out);
  set_slot(unit, slot, extract_list_item(continuation), ctx);
}

void eda_rank_index_mutation(core::EvolutionUnit& unit, std::size_t slot,
                             MutationContext& ctx, Rng& rng, MutationOutcome& out) {
  if (evaluated_count(ctx.population) < 2)
    throw PreconditionFailure("eda_rank_index_mutation: needs 2 evaluated units");

  std::vector<std::string> texts;
  std::vector<std::pair<std::string, double>> scored;
  for (auto& [text, fitness] : population_prompts(ctx.population)) {
    if (!fitness) continue;
    texts.push_back(text);
    scored.emplace_back(text, *fitness);
  }
  auto kept =
      diversity_filter(texts, ctx.similarity, ctx.config.similarity_threshold, rng);

  // Order the surviving prompts by ascending owner fitness. The header
  // claims a descending list on purpose; the lie aims the continuation at
  // an entry "better" than the real best, which sits last.
  std::vector<std::pair<std::string, double>> entries;
  for (const auto& text : kept) {
    for (auto it = scored.begin(); it != scored.end(); ++it) {
      if (it->first == text) {
        entries.push_back(*it);
        scored.erase(it);
        break;
      }
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<std::string> ordered;
  for (auto& [text, fitness] : entries) ordered.push_back(text);

  std::string continuation = redescribe(
      eda_rank_prompt(unit.mutation_prompt.text, ordered), unit, ctx, rng, out);
  set_slot(unit, slot, extract_list_item(continuation), ctx);
}

void lineage_mutation(core::EvolutionUnit& unit, std::size_t slot,
                      MutationContext& ctx, Rng& rng, MutationOutcome& out) {
  if (unit.elite_history.empty()) {
    // No lineage yet; degrade to a plain rewrite of the slot.
    first_order_prompt_gen(unit, slot, ctx, rng, out);
    return;
  }
  std::vector<std::string> genotypes;
  for (const auto& record : unit.elite_history) {
    std::string g;
    for (std::size_t i = 0; i < record.task_prompts.size(); ++i) {
      if (i > 0) g += ' ';
      g += record.task_prompts[i].text;
    }
    genotypes.push_back(std::move(g));
  }
  std::string continuation = redescribe(lineage_prompt(genotypes), unit, ctx, rng, out);
  set_slot(unit, slot, extract_list_item(continuation), ctx);
}

void zero_order_hyper_mutation(core::EvolutionUnit& unit, std::size_t slot,
                               MutationContext& ctx, Rng& rng, MutationOutcome& out) {
  const auto& style = seeds::sample_thinking_style(ctx.corpora, rng);
  std::string meta = hyper_zero_prompt(ctx.spec.description, style.text);
  maybe_set_mutation_prompt(unit, redescribe(meta, unit, ctx, rng, out), ctx);
  // The fresh mutation-prompt is exercised immediately on the task-prompt.
  first_order_prompt_gen(unit, slot, ctx, rng, out);
}

void first_order_hyper_mutation(core::EvolutionUnit& unit, std::size_t slot,
                                MutationContext& ctx, Rng& rng, MutationOutcome& out) {
  std::string meta = hyper_first_prompt(unit.mutation_prompt.text);
  maybe_set_mutation_prompt(unit, redescribe(meta, unit, ctx, rng, out), ctx);
  first_order_prompt_gen(unit, slot, ctx, rng, out);
}

void lamarckian_mutation(core::EvolutionUnit& unit, std::size_t slot,
                         MutationContext& ctx, Rng& rng, MutationOutcome& out) {
  if (unit.contexts.empty())
    throw PreconditionFailure("lamarckian_mutation: no correct working out stored");
  const auto& w = unit.contexts[rng.uniform_index(unit.contexts.size())];
  std::string transcript = "Q. " + w.question + "\nA. " + w.reasoning;
  std::string continuation =
      redescribe(lamarckian_prompt(transcript), unit, ctx, rng, out);
  set_slot(unit, slot, trim(continuation), ctx);
}

void context_shuffle(core::EvolutionUnit& unit, MutationContext& ctx, Rng& rng,
                     MutationOutcome& out) {
  if (!ctx.config.few_shot)
    throw PreconditionFailure("context_shuffle: not in few-shot mode");

  const std::vector<core::WorkingOut> no_fresh;
  const auto& fresh = ctx.fresh_correct ? *ctx.fresh_correct : no_fresh;
  const auto max_contexts = static_cast<std::size_t>(ctx.config.max_contexts);

  if (rng.bernoulli(ctx.config.context_resample_trigger_prob) &&
      rng.bernoulli(1.0 / ctx.config.max_contexts)) {
    out.context_full_resample = true;
    unit.contexts.clear();
    for (const auto& w : fresh) {
      if (unit.contexts.size() >= max_contexts) break;
      unit.contexts.push_back(w);
    }
    return;
  }

  if (unit.contexts.size() < max_contexts) {
    for (const auto& w : fresh) {
      if (unit.contexts.size() >= max_contexts) break;
      unit.contexts.push_back(w);
    }
    return;
  }
  if (!fresh.empty()) {
    std::size_t victim = rng.uniform_index(unit.contexts.size());
    unit.contexts[victim] = fresh[rng.uniform_index(fresh.size())];
  }
}

bool crossover_maybe(core::EvolutionUnit& unit, std::size_t slot,
                     MutationContext& ctx, Rng& rng) {
  if (!rng.bernoulli(ctx.config.crossover_prob)) return false;

  constexpr double kEpsilonFloor = 1e-6;
  std::vector<const core::EvolutionUnit*> donors;
  std::vector<double> weights;
  double total = 0.0;
  for (const auto& u : ctx.population) {
    if (!u.fitness || u.id == unit.id) continue;
    donors.push_back(&u);
    weights.push_back(*u.fitness + kEpsilonFloor);
    total += weights.back();
  }
  if (donors.empty()) return false;

  double x = rng.uniform_real(0.0, total);
  std::size_t chosen = donors.size() - 1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (x < weights[i]) {
      chosen = i;
      break;
    }
    x -= weights[i];
  }
  const auto& donor = *donors[chosen];
  const auto& donor_prompt =
      donor.task_prompts[rng.uniform_index(donor.task_prompts.size())];
  set_slot(unit, slot, donor_prompt.text, ctx);
  return true;
}

void mutate_temperature(core::EvolutionUnit& unit,
                        const core::EvolutionConfig& config, Rng& rng) {
  double delta = rng.uniform_real(-config.temp_mutation_half_range,
                                  config.temp_mutation_half_range);
  unit.redescriber_temperature =
      std::clamp(unit.redescriber_temperature + delta, config.temp_min,
                 config.temp_max);
}

std::vector<OperatorKind> enabled_operators(const core::EvolutionConfig& config) {
  std::vector<OperatorKind> ops;
  for (OperatorKind kind : kAllOperators) {
    if (config.disable_hypermutation &&
        (kind == OperatorKind::zero_order_hyper_mutation ||
         kind == OperatorKind::first_order_hyper_mutation))
      continue;
    if (config.disable_lamarckian && kind == OperatorKind::lamarckian_mutation)
      continue;
    ops.push_back(kind);
  }
  return ops;
}

MutationOutcome dispatch_mutation(const core::EvolutionUnit& unit,
                                  MutationContext& ctx, Rng& rng) {
  MutationOutcome out;
  out.unit = unit;

  const auto slot =
      out.unit.task_prompts.empty()
          ? std::size_t{0}
          : rng.uniform_index(out.unit.task_prompts.size());

  std::vector<OperatorKind> candidates = enabled_operators(ctx.config);
  while (true) {
    std::size_t pick = rng.uniform_index(candidates.size());
    OperatorKind kind = candidates[pick];
    try {
      switch (kind) {
        case OperatorKind::zero_order_prompt_gen:
          zero_order_prompt_gen(out.unit, slot, ctx, rng, out);
          break;
        case OperatorKind::first_order_prompt_gen:
          first_order_prompt_gen(out.unit, slot, ctx, rng, out);
          break;
        case OperatorKind::eda_mutation:
          eda_mutation(out.unit, slot, ctx, rng, out);
          break;
        case OperatorKind::eda_rank_index_mutation:
          eda_rank_index_mutation(out.unit, slot, ctx, rng, out);
          break;
        case OperatorKind::lineage_mutation:
          lineage_mutation(out.unit, slot, ctx, rng, out);
          break;
        case OperatorKind::zero_order_hyper_mutation:
          zero_order_hyper_mutation(out.unit, slot, ctx, rng, out);
          break;
        case OperatorKind::first_order_hyper_mutation:
          first_order_hyper_mutation(out.unit, slot, ctx, rng, out);
          break;
        case OperatorKind::lamarckian_mutation:
          lamarckian_mutation(out.unit, slot, ctx, rng, out);
          break;
        case OperatorKind::context_shuffle:
          context_shuffle(out.unit, ctx, rng, out);
          break;
      }
      out.operator_used = kind;
      break;
    } catch (const PreconditionFailure&) {
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(pick));
      // first_order_prompt_gen has no preconditions, so this cannot empty
      // the candidate set.
    }
  }

  if (!out.unit.task_prompts.empty())
    out.crossover_applied = crossover_maybe(out.unit, slot, ctx, rng);
  mutate_temperature(out.unit, ctx.config, rng);
  return out;
}

core::EvolutionUnit init_unit(MutationContext& ctx, Rng& rng) {
  core::EvolutionUnit unit;
  unit.id = ctx.ids.unit_id();
  unit.redescriber_temperature =
      rng.uniform_real(ctx.config.temp_init_min, ctx.config.temp_init_max);

  std::string first_mutation_prompt;
  MutationOutcome scratch;
  for (int i = 0; i < ctx.config.prompts_per_unit; ++i) {
    std::string mp = seeds::sample_mutation_prompt(
        ctx.corpora, rng, ctx.config.disable_init_mutation_prompt_sampling);
    if (i == 0) first_mutation_prompt = mp;

    std::string text;
    if (ctx.config.disable_init_thinking_styles) {
      text = ctx.spec.description;
    } else {
      const auto& style = seeds::sample_thinking_style(ctx.corpora, rng);
      std::string prompt = init_prompt(mp, style.text, ctx.spec.description);
      text = trim(redescribe(prompt, unit, ctx, rng, scratch));
    }
    unit.task_prompts.push_back(core::TaskPrompt{
        ctx.ids.prompt_id(), clip(std::move(text), ctx.config.max_prompt_chars)});
  }

  unit.mutation_prompt =
      core::MutationPrompt{ctx.ids.prompt_id(), std::move(first_mutation_prompt)};
  return unit;
}

}  // namespace pb::ops
