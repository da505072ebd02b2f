#include "pb/cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <utility>

#include <CLI11.hpp>

#include "pb/engine.hpp"
#include "pb/fitness.hpp"
#include "pb/hash.hpp"
#include "pb/operators.hpp"
#include "pb/seeds.hpp"

namespace fs = std::filesystem;

namespace pb::cli {

namespace {

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
  throw ConfigError("bad value for key " + key + ": '" + value + "' (expected " +
                    expected + ")");
}

int parse_int(const std::string& key, const std::string& value) {
  int v = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end) bad_value(key, value, "an integer");
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end)
    bad_value(key, value, "a non-negative integer");
  return v;
}

double parse_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end) bad_value(key, value, "a number");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

/// Shortest round-trip representation; keeps logs byte-reproducible.
std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> read_csv_double(const std::string& field) {
  if (field.empty()) return std::nullopt;
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc{} || ptr != end) return std::nullopt;
  return v;
}

// The run logs never quote fields, so a plain comma split is exact.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header) {
      header = false;
      continue;
    }
    if (line.empty()) continue;
    rows.push_back(split_csv(line));
  }
  return rows;
}

/// Fresh runs truncate their logs; resumed runs append, adding the header
/// only when the file does not exist yet.
std::ofstream open_log(const fs::path& path, bool append, const char* header) {
  bool write_header = true;
  if (append) {
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    write_header = static_cast<bool>(ec) || size == 0;
  }
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw ConfigError("cannot open log file: " + path.string());
  if (write_header) out << header << '\n';
  return out;
}

std::string run_id(const RunSettings& settings, const core::EvolutionConfig& cfg) {
  const std::string key = settings.task + "\n" + settings.dataset + "\n" +
                          settings.provider + "\n" + core::to_json(cfg).dump();
  char buf[32];
  std::snprintf(buf, sizeof buf, "run-%016llx",
                static_cast<unsigned long long>(fnv1a64(key)));
  return buf;
}

nlohmann::json manifest_json(const RunSettings& settings,
                             const core::EvolutionConfig& cfg,
                             const core::ProblemSpec& spec,
                             const llm::ModelProvider& provider,
                             const sim::SimilarityProvider& similarity) {
  nlohmann::json j{
      {"run_id", run_id(settings, cfg)},
      {"task", settings.task},
      {"description", spec.description},
      {"answer_type", core::to_string(spec.answer_type)},
      {"dataset", settings.dataset},
      {"dataset_test", settings.dataset_test},
      {"provider", provider.name()},
      {"similarity", similarity.name()},
      {"config", core::to_json(cfg)},
  };
  if (settings.provider == "http")
    j["http"] = {{"base_url", settings.http_base_url},
                 {"model", settings.http_model},
                 {"path", settings.http_path},
                 {"auth_env", settings.http_auth_env}};
  return j;
}

void write_best_text(std::ostream& out, const core::EvolutionUnit& unit,
                     double train_fitness, std::optional<double> test_accuracy) {
  out << "train_fitness: " << fmt_double(train_fitness) << '\n';
  if (test_accuracy)
    out << "test_accuracy: " << fmt_double(*test_accuracy) << '\n';
  out << "temperature: " << fmt_double(unit.redescriber_temperature) << '\n';
  out << "mutation-prompt: " << unit.mutation_prompt.text << '\n';
  for (std::size_t i = 0; i < unit.task_prompts.size(); ++i)
    out << "task-prompt " << i + 1 << ": " << unit.task_prompts[i].text << '\n';
  for (std::size_t i = 0; i < unit.contexts.size(); ++i) {
    out << "context " << i + 1 << " question: " << unit.contexts[i].question
        << '\n';
    out << "context " << i + 1 << " working: " << unit.contexts[i].reasoning
        << '\n';
  }
}

}  // namespace

void apply_key(RunSettings& settings, const std::string& key,
               const std::string& value) {
  bool found = false;
  core::visit_config_fields(settings.config, [&](std::string_view name,
                                                 auto& field) {
    if (found || name != key) return;
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, bool>)
      field = parse_bool(key, value);
    else if constexpr (std::is_same_v<T, int>)
      field = parse_int(key, value);
    else if constexpr (std::is_same_v<T, std::uint64_t>)
      field = parse_u64(key, value);
    else
      field = parse_double(key, value);
    found = true;
  });
  if (found) return;

  if (key == "task")
    settings.task = value;
  else if (key == "description")
    settings.description = value;
  else if (key == "answer_type")
    settings.answer_type = value;
  else if (key == "dataset")
    settings.dataset = value;
  else if (key == "dataset_format")
    settings.dataset_format = value;
  else if (key == "dataset_test")
    settings.dataset_test = value;
  else if (key == "data_dir")
    settings.data_dir = value;
  else if (key == "mutation_prompts_file")
    settings.mutation_prompts_file = value;
  else if (key == "thinking_styles_file")
    settings.thinking_styles_file = value;
  else if (key == "problem_descriptions_file")
    settings.problem_descriptions_file = value;
  else if (key == "provider")
    settings.provider = value;
  else if (key == "http_base_url")
    settings.http_base_url = value;
  else if (key == "http_model")
    settings.http_model = value;
  else if (key == "http_path")
    settings.http_path = value;
  else if (key == "http_auth_env")
    settings.http_auth_env = value;
  else if (key == "http_timeout_ms")
    settings.http_timeout_ms = parse_int(key, value);
  else if (key == "http_retries")
    settings.http_retries = parse_int(key, value);
  else if (key == "similarity")
    settings.similarity = value;
  else if (key == "embed_path")
    settings.embed_path = value;
  else if (key == "embed_model")
    settings.embed_model = value;
  else if (key == "out_dir")
    settings.out_dir = value;
  else if (key == "resume")
    settings.resume = value;
  else
    throw ConfigError("unknown config key: " + key);
}

RunSettings parse_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path.string());

  RunSettings settings;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": expected key=value");
    apply_key(settings, trim(stripped.substr(0, eq)),
              trim(stripped.substr(eq + 1)));
  }
  return settings;
}

std::unique_ptr<llm::ModelProvider> make_provider(const RunSettings& settings) {
  const std::string& p = settings.provider;
  if (p == "mock:echo") return std::make_unique<llm::EchoProvider>();
  if (p == "mock:arith") return std::make_unique<llm::ArithmeticProvider>();
  if (p.rfind("mock:table=", 0) == 0) {
    const std::string file = p.substr(std::string_view("mock:table=").size());
    if (file.empty()) throw ConfigError("mock:table needs a file: mock:table=<file>");
    try {
      return llm::TableProvider::from_file(file);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("cannot load provider table: ") + e.what());
    }
  }
  if (p == "http") {
    if (settings.http_base_url.empty())
      throw ConfigError("provider http requires http_base_url");
    const char* token = std::getenv(settings.http_auth_env.c_str());
    if (token == nullptr || *token == '\0')
      throw ConfigError("auth env var not set: " + settings.http_auth_env);
    llm::HttpProviderConfig cfg;
    cfg.base_url = settings.http_base_url;
    cfg.model = settings.http_model;
    cfg.path = settings.http_path;
    cfg.auth_env = settings.http_auth_env;
    cfg.timeout_ms = settings.http_timeout_ms;
    cfg.retry.attempts = settings.http_retries;
    return std::make_unique<llm::HttpCompletionProvider>(std::move(cfg));
  }
  throw ConfigError("unknown provider: " + p +
                    " (expected mock:echo, mock:arith, mock:table=<file>, or http)");
}

std::unique_ptr<sim::SimilarityProvider> make_similarity(const RunSettings& settings) {
  if (settings.similarity == "lexical") return std::make_unique<sim::LexicalEmbedder>();
  if (settings.similarity == "http") {
    if (settings.http_base_url.empty())
      throw ConfigError("similarity http requires http_base_url");
    sim::RemoteEmbedder::Config cfg;
    cfg.base_url = settings.http_base_url;
    cfg.model = settings.embed_model;
    cfg.path = settings.embed_path;
    cfg.auth_env = settings.http_auth_env;
    cfg.timeout_ms = settings.http_timeout_ms;
    cfg.retry.attempts = settings.http_retries;
    return std::make_unique<sim::RemoteEmbedder>(std::move(cfg));
  }
  throw ConfigError("unknown similarity provider: " + settings.similarity +
                    " (expected lexical or http)");
}

int cmd_run(const RunSettings& settings, std::ostream& out, std::ostream& err) {
  try {
    const bool resuming = !settings.resume.empty();

    std::optional<engine::RunState> resumed;
    core::EvolutionConfig cfg;
    if (resuming) {
      resumed = engine::read_checkpoint(settings.resume);
      if (settings.generations_override)
        resumed->config.max_generations = *settings.generations_override;
      cfg = resumed->config;
    } else {
      cfg = settings.config;
      if (settings.generations_override)
        cfg.max_generations = *settings.generations_override;
    }

    const auto problems = cfg.validate();
    if (!problems.empty()) {
      for (const auto& p : problems) err << "config error: " << p << '\n';
      return kExitConfig;
    }
    if (settings.dataset.empty()) {
      err << "config error: no dataset given (key: dataset)\n";
      return kExitConfig;
    }
    const auto format = fit::dataset_format_from_string(settings.dataset_format);
    if (!format) {
      err << "config error: unknown dataset_format: " << settings.dataset_format
          << '\n';
      return kExitConfig;
    }

    auto paths = settings.data_dir.empty()
                     ? seeds::default_corpora_paths()
                     : seeds::corpora_paths_in(settings.data_dir);
    if (!settings.mutation_prompts_file.empty())
      paths.mutation_prompts = settings.mutation_prompts_file;
    if (!settings.thinking_styles_file.empty())
      paths.thinking_styles = settings.thinking_styles_file;
    if (!settings.problem_descriptions_file.empty())
      paths.problem_descriptions = settings.problem_descriptions_file;
    const auto corpora = seeds::load_corpora(paths);

    const auto task_it = corpora.problem_descriptions.find(settings.task);
    if (task_it == corpora.problem_descriptions.end()) {
      err << "config error: unknown task: " << settings.task << " (key: task)\n";
      return kExitConfig;
    }
    core::ProblemSpec spec = task_it->second;
    if (!settings.description.empty()) spec.description = settings.description;
    if (!settings.answer_type.empty()) {
      const auto type = core::answer_type_from_string(settings.answer_type);
      if (!type) {
        err << "config error: unknown answer_type: " << settings.answer_type
            << '\n';
        return kExitConfig;
      }
      spec.answer_type = *type;
    }
    spec.dataset_ref = settings.dataset;

    fit::Dataset dataset = fit::load_dataset(settings.dataset, *format,
                                             spec.answer_type);
    if (!settings.dataset_test.empty()) {
      dataset.test =
          fit::load_dataset(settings.dataset_test, *format, spec.answer_type)
              .train;
    } else {
      dataset = fit::split_half(dataset, cfg.rng_seed);
    }
    if (dataset.train.empty()) {
      err << "config error: dataset has no training examples: "
          << settings.dataset << '\n';
      return kExitConfig;
    }

    auto provider = make_provider(settings);
    auto similarity = make_similarity(settings);

    const fs::path out_dir = settings.out_dir;
    fs::create_directories(out_dir);

    // The manifest must exist before the first model call. Resumed runs keep
    // the one the original run wrote.
    const fs::path manifest_path = out_dir / "manifest.json";
    if (!resuming || !fs::exists(manifest_path)) {
      std::ofstream m(manifest_path, std::ios::trunc);
      if (!m) throw ConfigError("cannot write manifest: " + manifest_path.string());
      m << manifest_json(settings, cfg, spec, *provider, *similarity).dump(2)
        << '\n';
    }

    engine::RunState state =
        resumed ? std::move(*resumed)
                : engine::init_run(cfg, spec, corpora, *provider, *similarity);

    auto run_log = open_log(out_dir / "run_log.csv", resuming,
                            "generation,mean_fitness,best_fitness,evaluations_used");
    auto op_log = open_log(out_dir / "operators.csv", resuming,
                           "generation,unit_id,operator,parent_fitness,child_fitness");
    auto eval_log = open_log(out_dir / "evals.csv", resuming,
                             "generation,unit_id,fitness");
    std::ofstream transcripts(out_dir / "transcripts.jsonl",
                              resuming ? std::ios::app : std::ios::trunc);
    if (!transcripts)
      throw ConfigError("cannot open log file: " +
                        (out_dir / "transcripts.jsonl").string());

    const auto write_op_row = [&](const engine::OperatorLogRow& row) {
      op_log << row.generation << ',' << row.unit_id << ',' << row.op_name << ','
             << fmt_double(row.parent_fitness) << ','
             << (row.child_fitness ? fmt_double(*row.child_fitness) : "")
             << '\n';
    };
    const auto drain_logs = [&] {
      for (const auto& row : state.operator_rows) write_op_row(row);
      state.operator_rows.clear();
      for (const auto& row : state.eval_rows)
        eval_log << row.generation << ',' << row.unit_id << ','
                 << fmt_double(row.fitness) << '\n';
      state.eval_rows.clear();
      for (const auto& entry : provider->drain_transcript()) {
        const nlohmann::json tj{{"prompt", entry.request.prompt},
                                {"max_tokens", entry.request.max_tokens},
                                {"temperature", entry.request.temperature},
                                {"stop", entry.request.stop},
                                {"completion", entry.completion}};
        transcripts << tj.dump() << '\n';
      }
      op_log.flush();
      eval_log.flush();
      transcripts.flush();
    };

    drain_logs();  // initialization transcripts

    const auto max_generations = static_cast<std::uint64_t>(cfg.max_generations);
    while (state.population.generation < max_generations) {
      if (cfg.eval_budget > 0 &&
          state.population.evaluations_used >= cfg.eval_budget) {
        out << "eval budget reached (" << state.population.evaluations_used
            << "/" << cfg.eval_budget << "); stopping early\n";
        break;
      }
      const auto stats = engine::run_generation(state, spec, corpora,
                                                dataset.train, *provider,
                                                *similarity);
      run_log << stats.generation << ',' << fmt_double(stats.mean_fitness) << ','
              << fmt_double(stats.best_fitness) << ','
              << state.population.evaluations_used << '\n';
      run_log.flush();
      drain_logs();
      engine::write_checkpoint(state, out_dir / "checkpoint.json");

      out << "generation " << stats.generation << ": mean "
          << fmt_double(stats.mean_fitness) << ", best "
          << fmt_double(stats.best_fitness) << '\n';
      if (stats.stall_generations == engine::kStallTrigger)
        out << "note: best fitness unchanged for " << engine::kStallTrigger
            << " generations; consider random_prefix_enabled=true or "
               "fitness_sharing_enabled=true\n";
    }

    // Mutations whose children were never evaluated get blank fitness rows,
    // so operators.csv row count always equals the mutation count.
    for (const auto& row : engine::unresolved_operator_rows(state))
      write_op_row(row);
    op_log.flush();
    for (auto& unit : state.population.units) unit.pending_op.reset();
    engine::write_checkpoint(state, out_dir / "checkpoint.json");

    if (!state.population.global_best) {
      out << "run finished without any evaluated unit; no best recorded\n";
      return kExitOk;
    }

    const auto final = engine::final_select(state, dataset, *provider);
    drain_logs();  // test-split transcripts

    {
      std::ofstream best_txt(out_dir / "best.txt", std::ios::trunc);
      write_best_text(best_txt, final.best, final.train_fitness,
                      final.test_accuracy);
    }
    {
      nlohmann::json bj{{"unit", core::to_json(final.best)},
                        {"train_fitness", final.train_fitness},
                        {"test_accuracy", final.test_accuracy
                                              ? nlohmann::json(*final.test_accuracy)
                                              : nlohmann::json(nullptr)}};
      std::ofstream best_json(out_dir / "best.json", std::ios::trunc);
      best_json << bj.dump(2) << '\n';
    }

    out << "best train fitness " << fmt_double(final.train_fitness);
    if (final.test_accuracy)
      out << ", test accuracy " << fmt_double(*final.test_accuracy);
    out << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const seeds::CorpusError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fit::DatasetError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const engine::CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const llm::ProviderError& e) {
    err << "provider error: " << e.what() << '\n';
    return kExitProvider;
  } catch (const fs::filesystem_error& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int cmd_best(const fs::path& run_dir, std::ostream& out, std::ostream& err) {
  engine::RunState state;
  try {
    state = engine::read_checkpoint(run_dir / "checkpoint.json");
  } catch (const engine::CheckpointError& e) {
    err << "no usable checkpoint in " << run_dir.string() << ": " << e.what()
        << '\n';
    return kExitMissing;
  }
  if (!state.population.global_best) {
    err << "checkpoint records no evaluated unit\n";
    return kExitMissing;
  }

  // Test accuracy is only measured at run end; pick it up when present.
  std::optional<double> test_accuracy;
  if (std::ifstream best_json{run_dir / "best.json"}) {
    try {
      nlohmann::json j;
      best_json >> j;
      if (j.contains("test_accuracy") && j["test_accuracy"].is_number())
        test_accuracy = j["test_accuracy"].get<double>();
    } catch (const nlohmann::json::exception&) {
      // best.txt is advisory here; a bad file only loses the test line
    }
  }

  write_best_text(out, state.population.global_best->unit,
                  state.population.global_best->fitness, test_accuracy);
  return kExitOk;
}

int cmd_report(const fs::path& run_dir, const fs::path& out_dir,
               std::ostream& out, std::ostream& err) {
  const fs::path run_log = run_dir / "run_log.csv";
  const fs::path operators = run_dir / "operators.csv";
  const fs::path evals = run_dir / "evals.csv";
  for (const auto& path : {run_log, operators, evals}) {
    if (!fs::exists(path)) {
      err << "missing run log: " << path.string() << '\n';
      return kExitMissing;
    }
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);

  {
    std::ofstream curve(out_dir / "report_curve.csv", std::ios::trunc);
    curve << "generation,mean_fitness,best_fitness\n";
    for (const auto& row : read_csv_rows(run_log)) {
      if (row.size() < 3) continue;
      curve << row[0] << ',' << row[1] << ',' << row[2] << '\n';
    }
  }
  {
    std::ofstream scatter(out_dir / "report_scatter.csv", std::ios::trunc);
    scatter << "generation,unit_id,fitness\n";
    for (const auto& row : read_csv_rows(evals)) {
      if (row.size() < 3) continue;
      scatter << row[0] << ',' << row[1] << ',' << row[2] << '\n';
    }
  }
  {
    // operator -> (applied, improved); improvement means the child's first
    // measured fitness beat the parent's at mutation time
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> counts;
    for (const auto& kind : ops::kAllOperators)
      counts.emplace(std::string(ops::to_string(kind)), std::make_pair(0, 0));
    for (const auto& row : read_csv_rows(operators)) {
      if (row.size() < 5) continue;
      auto& [applied, improved] = counts[row[2]];
      ++applied;
      const auto parent = read_csv_double(row[3]);
      const auto child = read_csv_double(row[4]);
      if (parent && child && *child > *parent) ++improved;
    }
    std::ofstream table(out_dir / "report_operators.csv", std::ios::trunc);
    table << "operator,applied_count,improved_count,improvement_rate\n";
    for (const auto& [name, pair] : counts) {
      const auto [applied, improved] = pair;
      const double rate =
          applied == 0 ? 0.0
                       : static_cast<double>(improved) / static_cast<double>(applied);
      table << name << ',' << applied << ',' << improved << ','
            << fmt_double(rate) << '\n';
    }
  }

  out << "report written to " << out_dir.string() << '\n';
  return kExitOk;
}

int run_main(int argc, char** argv) {
  CLI::App app{"evolutionary prompt optimizer"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run or resume an evolution");
  std::string config_path, provider, resume, out_dir;
  int generations = 0;
  std::uint64_t seed = 0;
  bool few_shot = false;
  auto* config_opt = run->add_option("--config", config_path, "key=value config file");
  auto* provider_opt = run->add_option(
      "--provider", provider, "mock:echo | mock:arith | mock:table=<file> | http");
  auto* generations_opt =
      run->add_option("--generations", generations, "generations to run");
  auto* seed_opt = run->add_option("--seed", seed, "rng seed");
  auto* resume_opt = run->add_option("--resume", resume, "checkpoint to resume");
  auto* few_shot_opt =
      run->add_flag("--few-shot", few_shot, "evolve few-shot contexts");
  auto* out_dir_opt = run->add_option("--out-dir", out_dir, "output directory");

  auto* best = app.add_subcommand("best", "print a run's best unit");
  std::string best_dir;
  best->add_option("run_dir", best_dir, "run output directory")->required();

  auto* report = app.add_subcommand("report", "emit plot-ready csv summaries");
  std::string report_dir, report_out;
  report->add_option("run_dir", report_dir, "run output directory")->required();
  report->add_option("--out", report_out,
                     "directory for report files (default: run_dir)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run->parsed()) {
    RunSettings settings;
    if (config_opt->count() > 0) {
      try {
        settings = parse_config_file(config_path);
      } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
      }
    }
    if (provider_opt->count() > 0) settings.provider = provider;
    if (generations_opt->count() > 0) settings.generations_override = generations;
    if (seed_opt->count() > 0) settings.config.rng_seed = seed;
    if (resume_opt->count() > 0) settings.resume = resume;
    if (few_shot_opt->count() > 0) settings.config.few_shot = true;
    if (out_dir_opt->count() > 0) settings.out_dir = out_dir;
    return cmd_run(settings, std::cout, std::cerr);
  }
  if (best->parsed()) return cmd_best(best_dir, std::cout, std::cerr);
  if (report->parsed())
    return cmd_report(report_dir, report_out.empty() ? fs::path(report_dir)
                                                     : fs::path(report_out),
                      std::cout, std::cerr);
  return kExitConfig;
}

}  // namespace pb::cli
