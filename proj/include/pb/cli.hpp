#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "pb/core.hpp"
#include "pb/llm.hpp"
#include "pb/similarity.hpp"

namespace pb::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;    // bad config, dataset, or flags
inline constexpr int kExitProvider = 3;  // provider failed after retries
inline constexpr int kExitMissing = 4;   // expected run artifacts absent

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a run needs beyond EvolutionConfig: task selection, dataset
/// location, provider and similarity wiring, output directory. Populated
/// from a key=value config file, then overridden by command-line flags.
struct RunSettings {
  core::EvolutionConfig config;

  std::string task = "gsm8k";       // key into the problem-description corpus
  std::string description;          // empty: use the corpus description
  std::string answer_type;          // empty: the task's default

  std::string dataset;              // path; required for cmd_run
  std::string dataset_format = "jsonl";
  std::string dataset_test;         // empty: split the train file in half

  std::string data_dir;             // empty: built-in corpus directory
  std::string mutation_prompts_file;
  std::string thinking_styles_file;
  std::string problem_descriptions_file;

  // mock:echo | mock:arith | mock:table=<file> | http
  std::string provider = "mock:echo";
  std::string http_base_url;
  std::string http_model;
  std::string http_path = "/v1/completions";
  std::string http_auth_env = "PB_API_KEY";
  int http_timeout_ms = 30000;
  int http_retries = 3;

  std::string similarity = "lexical";  // lexical | http
  std::string embed_path = "/v1/embeddings";
  std::string embed_model;

  std::string out_dir = "pb_run";
  std::string resume;  // checkpoint path; empty for a fresh run

  // Set by the --generations flag. On a fresh run it overrides
  // config.max_generations; on resume it overrides the checkpointed value.
  std::optional<int> generations_override;
};

/// Applies one config-file line. Keys are either EvolutionConfig field
/// names or the run-level keys in RunSettings. Unknown keys and
/// unparseable values throw ConfigError naming the key.
void apply_key(RunSettings& settings, const std::string& key,
               const std::string& value);

/// Flat key=value file; blank lines and lines starting with # are skipped.
RunSettings parse_config_file(const std::filesystem::path& path);

std::unique_ptr<llm::ModelProvider> make_provider(const RunSettings& settings);
std::unique_ptr<sim::SimilarityProvider> make_similarity(const RunSettings& settings);

/// Runs evolution to max_generations (or the eval budget), writing
/// manifest.json, run_log.csv, operators.csv, evals.csv, transcripts.jsonl,
/// checkpoint.json, best.txt, and best.json under settings.out_dir.
int cmd_run(const RunSettings& settings, std::ostream& out, std::ostream& err);

/// Prints the global-best unit recorded in run_dir/checkpoint.json.
int cmd_best(const std::filesystem::path& run_dir, std::ostream& out,
             std::ostream& err);

/// Derives plot-ready summaries from a run's logs: report_curve.csv,
/// report_scatter.csv, and report_operators.csv under out_dir.
int cmd_report(const std::filesystem::path& run_dir,
               const std::filesystem::path& out_dir, std::ostream& out,
               std::ostream& err);

int run_main(int argc, char** argv);

}  // namespace pb::cli
