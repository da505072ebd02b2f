#include "pb/seeds.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace pb::seeds {

namespace {

#ifndef PB_DEFAULT_DATA_DIR
#define PB_DEFAULT_DATA_DIR "data"
#endif

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

core::AnswerType answer_type_for_task(const std::string& name) {
  if (name == "svamp" || name == "singleeq" || name == "addsub" ||
      name == "gsm8k" || name == "multiarith")
    return core::AnswerType::arabic_numeral;
  if (name == "aqua-rat" || name == "csqa")
    return core::AnswerType::multiple_choice_letter;
  if (name == "ethos" || name == "sqa") return core::AnswerType::yes_no;
  return core::AnswerType::exact_string;
}

}  // namespace

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("PB_DATA_DIR"); env != nullptr && *env != '\0')
    return env;
  return PB_DEFAULT_DATA_DIR;
}

CorporaPaths corpora_paths_in(const std::filesystem::path& dir) {
  return CorporaPaths{dir / "mutation_prompts.txt", dir / "thinking_styles.txt",
                      dir / "problem_descriptions.txt"};
}

CorporaPaths default_corpora_paths() {
  return corpora_paths_in(default_data_dir());
}

std::vector<std::string> read_blank_line_entries(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in)
    throw CorpusError("corpus file not readable: " + file.string());

  std::vector<std::string> entries;
  std::string line;
  std::string block;
  std::size_t block_start_line = 0;
  std::size_t line_no = 0;

  auto flush = [&]() {
    if (block.empty()) return;
    std::string entry = trim(block);
    if (entry.empty())
      throw CorpusError(file.string() + ":" + std::to_string(block_start_line) +
                        ": entry is empty after trimming");
    entries.push_back(std::move(entry));
    block.clear();
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) {
      flush();
      continue;
    }
    if (block.empty())
      block_start_line = line_no;
    else
      block += ' ';
    block += t;
  }
  flush();
  return entries;
}

SeedCorpora load_corpora(const CorporaPaths& paths) {
  SeedCorpora corpora;
  corpora.mutation_prompts = read_blank_line_entries(paths.mutation_prompts);
  for (auto& text : read_blank_line_entries(paths.thinking_styles))
    corpora.thinking_styles.push_back(core::ThinkingStyle{std::move(text)});

  // Problem blocks carry the task name on the first line. Joining rejoined
  // blocks on the single space inserted by the reader recovers both lines.
  std::ifstream in(paths.problem_descriptions);
  if (!in)
    throw CorpusError("corpus file not readable: " +
                      paths.problem_descriptions.string());
  std::string line;
  std::string name;
  std::string description;
  std::size_t line_no = 0;
  auto flush = [&]() {
    if (name.empty() && description.empty()) return;
    if (name.empty() || description.empty())
      throw CorpusError(paths.problem_descriptions.string() +
                        ": block needs a task name line and a description");
    core::ProblemSpec spec;
    spec.name = name;
    spec.description = description;
    spec.answer_type = answer_type_for_task(name);
    corpora.problem_descriptions[name] = std::move(spec);
    name.clear();
    description.clear();
  };
  while (std::getline(in, line)) {
    ++line_no;
    std::string t = trim(line);
    if (t.empty()) {
      flush();
      continue;
    }
    if (name.empty()) {
      name = t;
    } else if (description.empty()) {
      description = t;
    } else {
      description += ' ';
      description += t;
    }
  }
  flush();

  if (corpora.mutation_prompts.empty())
    throw CorpusError("mutation-prompt corpus is empty");
  if (corpora.thinking_styles.empty())
    throw CorpusError("thinking-style corpus is empty");
  return corpora;
}

std::string sample_mutation_prompt(const SeedCorpora& corpora, Rng& rng,
                                   bool disable_sampling) {
  if (disable_sampling) return std::string(kFixedMutationPrompt);
  return corpora.mutation_prompts[rng.uniform_index(corpora.mutation_prompts.size())];
}

const core::ThinkingStyle& sample_thinking_style(const SeedCorpora& corpora, Rng& rng) {
  return corpora.thinking_styles[rng.uniform_index(corpora.thinking_styles.size())];
}

}  // namespace pb::seeds
