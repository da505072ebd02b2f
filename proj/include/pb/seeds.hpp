#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pb/core.hpp"
#include "pb/rng.hpp"

namespace pb::seeds {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bundled seed text used to bootstrap and rewrite prompts.
struct SeedCorpora {
  std::vector<std::string> mutation_prompts;
  std::vector<core::ThinkingStyle> thinking_styles;
  std::map<std::string, core::ProblemSpec> problem_descriptions;
};

struct CorporaPaths {
  std::filesystem::path mutation_prompts;
  std::filesystem::path thinking_styles;
  std::filesystem::path problem_descriptions;
};

/// Directory holding the bundled corpus files: $PB_DATA_DIR if set, else the
/// location baked in at build time.
std::filesystem::path default_data_dir();

CorporaPaths default_corpora_paths();
CorporaPaths corpora_paths_in(const std::filesystem::path& dir);

/// Reads a blank-line-delimited UTF-8 file: entries are blocks separated by
/// one or more blank lines; lines within a block are joined with a single
/// space. An entry that trims to nothing is a CorpusError.
std::vector<std::string> read_blank_line_entries(const std::filesystem::path& file);

/// Loads all three corpora. The problem-descriptions file holds the task
/// name on its own line followed by the description text per block.
SeedCorpora load_corpora(const CorporaPaths& paths);

/// Mutation-prompt used for every unit when initial sampling is disabled.
inline constexpr std::string_view kFixedMutationPrompt =
    "Please summarize and improve the following instruction:";

/// Uniform draw; with disable_sampling the fixed prompt is returned instead
/// and no rng state is consumed.
std::string sample_mutation_prompt(const SeedCorpora& corpora, Rng& rng,
                                   bool disable_sampling = false);

const core::ThinkingStyle& sample_thinking_style(const SeedCorpora& corpora, Rng& rng);

}  // namespace pb::seeds
