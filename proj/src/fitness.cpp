#include "pb/fitness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace pb::fit {

namespace {

std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return "";
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

/// "... #### 18" → "18"; text without the marker passes through.
std::string strip_final_answer_marker(std::string_view raw) {
  auto pos = raw.rfind("####");
  if (pos == std::string_view::npos) return std::string(raw);
  return trim(raw.substr(pos + 4));
}

std::optional<std::string> normalize_numeral(std::string_view raw) {
  // First signed decimal number, commas allowed as thousands separators.
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(raw[i]))) continue;

    std::size_t start = i;
    bool negative = false;
    if (start > 0 && (raw[start - 1] == '-' || raw[start - 1] == '+')) {
      negative = raw[start - 1] == '-';
      // A sign glued to a preceding word ("x-5") is subtraction, not a sign.
      if (start < 2 || !is_word_char(raw[start - 2])) {
        // sign accepted
      } else {
        negative = false;
      }
    }

    std::string digits;
    std::string fraction;
    std::size_t j = i;
    while (j < raw.size()) {
      char c = raw[j];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        digits += c;
        ++j;
      } else if (c == ',' && j + 1 < raw.size() &&
                 std::isdigit(static_cast<unsigned char>(raw[j + 1]))) {
        ++j;  // thousands separator
      } else {
        break;
      }
    }
    if (j < raw.size() && raw[j] == '.' && j + 1 < raw.size() &&
        std::isdigit(static_cast<unsigned char>(raw[j + 1]))) {
      ++j;
      while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) {
        fraction += raw[j];
        ++j;
      }
    }

    // Canonical form: no leading zeros, no trailing fraction zeros, no
    // dangling decimal point, no "-0".
    while (digits.size() > 1 && digits.front() == '0') digits.erase(digits.begin());
    while (!fraction.empty() && fraction.back() == '0') fraction.pop_back();

    std::string out;
    if (negative) out += '-';
    out += digits;
    if (!fraction.empty()) {
      out += '.';
      out += fraction;
    }
    if (out == "-0") out = "0";
    return out;
  }
  return std::nullopt;
}

std::optional<std::string> normalize_choice_letter(std::string_view raw) {
  for (std::size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (upper < 'A' || upper > 'E') continue;
    bool left_ok = i == 0 || !is_word_char(raw[i - 1]);
    bool right_ok = i + 1 == raw.size() || !is_word_char(raw[i + 1]);
    if (left_ok && right_ok) return std::string(1, upper);
  }
  return std::nullopt;
}

std::optional<std::string> normalize_yes_no(std::string_view raw) {
  for (std::size_t i = 0; i < raw.size(); ++i) {
    bool left_ok = i == 0 || !is_word_char(raw[i - 1]);
    if (!left_ok) continue;
    auto rest = raw.substr(i);
    auto matches = [&](std::string_view word) {
      if (rest.size() < word.size()) return false;
      for (std::size_t k = 0; k < word.size(); ++k) {
        if (std::tolower(static_cast<unsigned char>(rest[k])) != word[k])
          return false;
      }
      return rest.size() == word.size() || !is_word_char(rest[word.size()]);
    };
    if (matches("yes")) return "yes";
    if (matches("no")) return "no";
  }
  return std::nullopt;
}

std::optional<std::string> normalize_exact(std::string_view raw) {
  std::string s = trim(raw);
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?' ||
                        s.back() == ',' || s.back() == ';' || s.back() == ':'))
    s.pop_back();
  s = trim(s);
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s.empty()) return std::nullopt;
  return s;
}

std::vector<std::string> split_csv_record(const std::string& record,
                                          std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < record.size(); ++i) {
    char c = record[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < record.size() && record[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      if (!field.empty())
        throw DatasetError("csv line " + std::to_string(line_no) +
                           ": quote inside unquoted field");
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += c;
    }
  }
  if (quoted)
    throw DatasetError("csv line " + std::to_string(line_no) +
                       ": unterminated quoted field");
  fields.push_back(std::move(field));
  return fields;
}

QaExample make_example(std::string id, std::string question, std::string raw_answer,
                       core::AnswerType answer_type, std::size_t line_no) {
  if (question.empty())
    throw DatasetError("line " + std::to_string(line_no) + ": empty question");
  auto gold = normalize_answer(strip_final_answer_marker(raw_answer), answer_type);
  if (!gold)
    throw DatasetError("line " + std::to_string(line_no) +
                       ": gold answer does not normalize as " +
                       core::to_string(answer_type) + ": \"" + raw_answer + "\"");
  return QaExample{std::move(id), std::move(question), std::move(*gold)};
}

Dataset load_jsonl(const std::filesystem::path& path, core::AnswerType answer_type) {
  std::ifstream in(path);
  if (!in) throw DatasetError("dataset not readable: " + path.string());
  Dataset ds;
  ds.answer_type = answer_type;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError("line " + std::to_string(line_no) +
                         ": invalid json: " + e.what());
    }
    if (!j.is_object() || !j.contains("question") || !j.contains("answer") ||
        !j["question"].is_string() || !j["answer"].is_string())
      throw DatasetError("line " + std::to_string(line_no) +
                         ": need string fields \"question\" and \"answer\"");
    std::string id = j.contains("id") && j["id"].is_string()
                         ? j["id"].get<std::string>()
                         : "L" + std::to_string(line_no);
    ds.train.push_back(make_example(std::move(id), j["question"].get<std::string>(),
                                    j["answer"].get<std::string>(), answer_type,
                                    line_no));
  }
  if (ds.train.empty()) throw DatasetError("dataset is empty: " + path.string());
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, core::AnswerType answer_type) {
  std::ifstream in(path);
  if (!in) throw DatasetError("dataset not readable: " + path.string());
  Dataset ds;
  ds.answer_type = answer_type;

  std::string line;
  std::size_t line_no = 0;
  std::ptrdiff_t q_col = -1, a_col = -1, id_col = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
      line.erase(0, 3);
    if (line.empty()) continue;
    auto fields = split_csv_record(line, line_no);
    if (q_col < 0) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "question") q_col = static_cast<std::ptrdiff_t>(i);
        if (fields[i] == "answer") a_col = static_cast<std::ptrdiff_t>(i);
        if (fields[i] == "id") id_col = static_cast<std::ptrdiff_t>(i);
      }
      if (q_col < 0 || a_col < 0)
        throw DatasetError("csv header must contain \"question\" and \"answer\"");
      continue;
    }
    if (fields.size() <= static_cast<std::size_t>(std::max(q_col, a_col)))
      throw DatasetError("csv line " + std::to_string(line_no) +
                         ": not enough fields");
    std::string id = id_col >= 0 && fields.size() > static_cast<std::size_t>(id_col)
                         ? fields[id_col]
                         : "L" + std::to_string(line_no);
    ds.train.push_back(make_example(std::move(id), fields[q_col], fields[a_col],
                                    answer_type, line_no));
  }
  if (ds.train.empty()) throw DatasetError("dataset is empty: " + path.string());
  return ds;
}

}  // namespace

std::optional<DatasetFormat> dataset_format_from_string(std::string_view name) {
  if (name == "jsonl") return DatasetFormat::jsonl;
  if (name == "csv") return DatasetFormat::csv;
  return std::nullopt;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format,
                     core::AnswerType answer_type) {
  switch (format) {
    case DatasetFormat::jsonl: return load_jsonl(path, answer_type);
    case DatasetFormat::csv: return load_csv(path, answer_type);
  }
  throw DatasetError("unsupported dataset format");
}

Dataset split_half(const Dataset& dataset, std::uint64_t seed) {
  if (dataset.train.size() < 2)
    throw DatasetError("split needs at least 2 examples");
  std::vector<std::size_t> order(dataset.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  Dataset out;
  out.answer_type = dataset.answer_type;
  std::size_t train_count = (order.size() + 1) / 2;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& ex = dataset.train[order[i]];
    (i < train_count ? out.train : out.test).push_back(ex);
  }
  return out;
}

std::optional<std::string> normalize_answer(std::string_view raw,
                                            core::AnswerType type) {
  switch (type) {
    case core::AnswerType::arabic_numeral: return normalize_numeral(raw);
    case core::AnswerType::multiple_choice_letter: return normalize_choice_letter(raw);
    case core::AnswerType::yes_no: return normalize_yes_no(raw);
    case core::AnswerType::exact_string: return normalize_exact(raw);
  }
  return std::nullopt;
}

std::string answer_elicitation(core::AnswerType type) {
  if (type == core::AnswerType::arabic_numeral)
    return "Therefore, the answer (arabic numerals) is";
  return "Therefore, the correct answer is (";
}

std::string context_transcript(const core::WorkingOut& w) {
  return "Q. " + w.question + "\nA. " + w.reasoning + "\n";
}

StrategyResult run_strategy(const core::EvolutionUnit& unit, const QaExample& ex,
                            core::AnswerType answer_type,
                            llm::ModelProvider& provider,
                            const core::EvolutionConfig& config) {
  StrategyResult result;
  result.working_out.question = ex.question;

  std::string prefix;
  if (config.few_shot)
    for (const auto& c : unit.contexts) prefix += context_transcript(c);

  const std::string first = unit.task_prompts.empty() ? std::string()
                                                      : unit.task_prompts[0].text;
  result.stage1_prompt = prefix + "Q. " + ex.question + "\nA. " + first;

  try {
    std::string reasoning =
        llm::generate(provider, llm::Role::inducer(config), result.stage1_prompt);
    result.working_out.reasoning = reasoning;

    result.stage2_prompt = result.stage1_prompt + reasoning + "\n";
    if (unit.task_prompts.size() >= 2)
      result.stage2_prompt += unit.task_prompts[1].text + "\n";
    result.stage2_prompt += answer_elicitation(answer_type);

    result.raw_answer =
        llm::generate(provider, llm::Role::evaluator(config), result.stage2_prompt);
  } catch (const llm::ProviderError&) {
    result.provider_failed = true;
    result.working_out.correct = false;
    return result;
  }

  auto predicted = normalize_answer(result.raw_answer, answer_type);
  result.working_out.predicted_answer = predicted.value_or("");
  result.working_out.correct = predicted && *predicted == ex.gold_answer;
  return result;
}

std::vector<std::size_t> sample_batch_indices(std::size_t pool_size,
                                              std::size_t want, Rng& rng) {
  std::vector<std::size_t> indices(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) indices[i] = i;
  if (want >= pool_size) return indices;
  // Partial Fisher-Yates: the first `want` slots end up a uniform sample.
  for (std::size_t i = 0; i < want; ++i) {
    std::size_t j = i + rng.uniform_index(pool_size - i);
    std::swap(indices[i], indices[j]);
  }
  indices.resize(want);
  return indices;
}

EvaluationReport evaluate_on_batch(const core::EvolutionUnit& unit,
                                   std::span<const QaExample> batch,
                                   core::AnswerType answer_type,
                                   llm::ModelProvider& provider,
                                   const core::EvolutionConfig& config) {
  EvaluationReport report;
  report.batch_size = batch.size();
  for (const auto& ex : batch) {
    StrategyResult r = run_strategy(unit, ex, answer_type, provider, config);
    if (r.provider_failed) ++report.provider_failures;
    bool correct = !r.provider_failed && r.working_out.correct;
    if (correct) {
      ++report.correct_count;
      report.correct_workings.push_back(r.working_out);
    }
    report.per_example.emplace_back(ex.id, correct);
  }
  report.fitness = report.batch_size == 0
                       ? 0.0
                       : static_cast<double>(report.correct_count) /
                             static_cast<double>(report.batch_size);
  return report;
}

EvaluationReport evaluate_unit(const core::EvolutionUnit& unit,
                               const std::vector<QaExample>& pool,
                               core::AnswerType answer_type, Rng& rng,
                               llm::ModelProvider& provider,
                               const core::EvolutionConfig& config) {
  auto indices = sample_batch_indices(
      pool.size(), static_cast<std::size_t>(config.batch_size), rng);
  std::vector<QaExample> batch;
  batch.reserve(indices.size());
  for (auto i : indices) batch.push_back(pool[i]);
  return evaluate_on_batch(unit, batch, answer_type, provider, config);
}

std::string unit_text(const core::EvolutionUnit& unit) {
  std::string out;
  for (std::size_t i = 0; i < unit.task_prompts.size(); ++i) {
    if (i > 0) out += '\n';
    out += unit.task_prompts[i].text;
  }
  return out;
}

std::vector<double> shared_fitness(const std::vector<core::EvolutionUnit>& units,
                                   sim::SimilarityProvider& provider,
                                   double threshold) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> out(units.size(), nan);

  auto kernel = [threshold](double s) {
    if (threshold >= 1.0) return s >= 1.0 ? 1.0 : 0.0;
    return std::max(0.0, (s - threshold) / (1.0 - threshold));
  };

  std::vector<std::size_t> live;
  std::vector<std::vector<double>> embeddings(units.size());
  for (std::size_t i = 0; i < units.size(); ++i) {
    if (!units[i].fitness) continue;
    live.push_back(i);
    embeddings[i] = provider.embed(unit_text(units[i]));
  }

  for (std::size_t i : live) {
    double denom = 0.0;
    for (std::size_t j : live) {
      if (i == j) {
        denom += 1.0;  // self term is defined as 1 regardless of kernel
        continue;
      }
      denom += kernel(sim::cosine(embeddings[i], embeddings[j]));
    }
    out[i] = *units[i].fitness / denom;
  }
  return out;
}

}  // namespace pb::fit
