// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kgqa/agent.hpp"
#include "kgqa/dataset.hpp"
#include "kgqa/sparql.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace kgqa {

struct Scores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const Scores&) const = default;
};

/// Set-based precision/recall/F1 over comparison_keys(). Both empty scores 1;
/// exactly one side empty scores 0. Error sets count as empty.
Scores f1_score(const AnswerSet& gold, const AnswerSet& predicted);

/// Unweighted means. Throws InputError on an empty list.
Scores macro_f1(std::span<const Scores> results);

/// Gold answers of `question`: stored answers when present, otherwise the
/// gold query executed on `store`.
AnswerSet gold_answers(const QaldQuestion& question, Triplestore& store);

/// Scorer for build_experience_pool backed by a triplestore.
QueryScorer make_answer_scorer(Triplestore& store);

// --- translation -------------------------------------------------------------

class Translator {
public:
    virtual ~Translator() = default;
    /// English rendering of `text`. Throws on service failure.
    virtual std::string translate(const std::string& text, const std::string& source_language) = 0;
};

class IdentityTranslator final : public Translator {
public:
    std::string translate(const std::string& text, const std::string&) override { return text; }
};

class MapTranslator final : public Translator {
public:
    explicit MapTranslator(std::map<std::string, std::string> table) : table_(std::move(table)) {}
    std::string translate(const std::string& text, const std::string& source_language) override;

private:
    std::map<std::string, std::string> table_;
};

/// POST {"text", "source", "target": "en"} -> {"translation"}.
class HttpTranslator final : public Translator {
public:
    explicit HttpTranslator(std::string endpoint, std::chrono::milliseconds timeout = std::chrono::seconds(30));
    std::string translate(const std::string& text, const std::string& source_language) override;

private:
    std::string endpoint_;
    std::chrono::milliseconds timeout_;
};

struct Translation {
    std::string text;
    bool translated = false;
    std::vector<std::string> diagnostics;
};

/// English text for the agent; on failure the original text with a diagnostic.
Translation translate_to_english(Translator& translator, const std::string& text, const std::string& language);

// --- benchmark ------------------------------------------------------------------

using AgentRunner = std::function<AgentRunRecord(const std::string& question, const std::string& language)>;

struct BenchmarkOptions {
    std::string language = "en";
    std::string model = "unknown";
    /// Translate to English before the agent sees the question.
    Translator* translator = nullptr;
    std::size_t parallelism = 1;
};

struct QuestionResult {
    std::string id;
    std::string question;     ///< text as given in the dataset
    std::string agent_input;  ///< text the agent received
    std::string agent_language;
    std::string final_query;
    Scores scores;
    std::int64_t call_count = 0;
    UsageSnapshot usage;
    std::vector<std::string> diagnostics;
};

struct EvalResult {
    std::string language;
    std::string model;
    bool machine_translated = false;
    std::vector<QuestionResult> per_question;
    std::vector<std::string> skipped;
    Scores macro;

    std::size_t evaluated() const noexcept { return per_question.size(); }
};

/// Runs `agent` over every question with `options.language`, scores against
/// gold answers, and aggregates. Agent failures score zero.
EvalResult run_benchmark(const QaldDataset& dataset, const AgentRunner& agent, Triplestore& scoring_store,
                         const BenchmarkOptions& options);

json to_json(const EvalResult& result);

} // namespace kgqa
