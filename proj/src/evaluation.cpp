// SPDX-License-Identifier: Apache-2.0
#include "kgqa/evaluation.hpp"

#include "kgqa/cost.hpp"
#include "kgqa/error.hpp"
#include "kgqa/http.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <thread>

namespace kgqa {

std::string_view to_string(Split split)
{
    return split == Split::train ? "train" : "test";
}

Split split_from_string(std::string_view text)
{
    if (text == "train") return Split::train;
    if (text == "test") return Split::test;
    throw InputError("split must be 'train' or 'test', got '" + std::string(text) + "'");
}

QaldDataset parse_qald(const json& document, Split split)
{
    if (!document.is_object() || !document.contains("questions") || !document["questions"].is_array())
        throw DatasetError(-1, "dataset has no 'questions' array");

    QaldDataset dataset;
    dataset.split = split;
    std::set<std::string> ids;
    long index = 0;
    for (const auto& entry : document["questions"]) {
        try {
            QaldQuestion q;
            auto const& id = entry.at("id");
            q.id = id.is_string() ? id.get<std::string>() : id.dump();
            for (const auto& s : entry.at("question")) {
                auto text = s.value("string", "");
                if (!text.empty())
                    q.strings[s.at("language").get<std::string>()] = std::move(text);
            }
            if (q.strings.empty())
                throw DatasetError(index, "no question strings");
            q.gold_sparql = entry.at("query").at("sparql").get<std::string>();
            if (q.gold_sparql.empty())
                throw DatasetError(index, "empty gold query");
            if (auto answers = entry.find("answers"); answers != entry.end() && answers->is_array() && !answers->empty()) {
                SparqlQuery const gold(q.gold_sparql);
                auto parsed = parse_results((*answers)[0].dump(), gold.form);
                if (parsed.kind == AnswerSet::Kind::error)
                    throw DatasetError(index, "unreadable gold answers: " + parsed.error_text.value_or(""));
                q.gold_answers = std::move(parsed);
            }
            if (!ids.insert(q.id).second)
                throw DatasetError(index, "duplicate question id '" + q.id + "'");
            dataset.questions.push_back(std::move(q));
        } catch (const json::exception& e) {
            throw DatasetError(index, std::string("malformed question: ") + e.what());
        }
        ++index;
    }
    return dataset;
}

QaldDataset load_qald(const std::filesystem::path& path, Split split)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open dataset " + path.string());
    json document;
    try {
        document = json::parse(in);
    } catch (const json::parse_error& e) {
        throw DatasetError(-1, "dataset is not valid JSON: " + std::string(e.what()));
    }
    return parse_qald(document, split);
}

Scores f1_score(const AnswerSet& gold, const AnswerSet& predicted)
{
    auto const g = comparison_keys(gold);
    auto const p = comparison_keys(predicted);
    if (g.empty() && p.empty())
        return {1.0, 1.0, 1.0};
    if (g.empty() || p.empty())
        return {0.0, 0.0, 0.0};

    std::size_t common = 0;
    for (const auto& key : p)
        common += g.count(key);
    if (common == 0)
        return {0.0, 0.0, 0.0};
    double const precision = static_cast<double>(common) / static_cast<double>(p.size());
    double const recall = static_cast<double>(common) / static_cast<double>(g.size());
    return {precision, recall, 2.0 * precision * recall / (precision + recall)};
}

Scores macro_f1(std::span<const Scores> results)
{
    if (results.empty())
        throw InputError("macro average of an empty result list");
    Scores sum;
    for (const auto& r : results) {
        sum.precision += r.precision;
        sum.recall += r.recall;
        sum.f1 += r.f1;
    }
    auto const n = static_cast<double>(results.size());
    return {sum.precision / n, sum.recall / n, sum.f1 / n};
}

AnswerSet gold_answers(const QaldQuestion& question, Triplestore& store)
{
    if (question.gold_answers)
        return *question.gold_answers;
    return fetch_answers(store, question.gold_sparql);
}

QueryScorer make_answer_scorer(Triplestore& store)
{
    return [&store](const QaldQuestion& question, const std::string& generated) {
        return f1_score(gold_answers(question, store), fetch_answers(store, generated)).f1;
    };
}

// --- translation -----------------------------------------------------------------

std::string MapTranslator::translate(const std::string& text, const std::string& source_language)
{
    if (auto it = table_.find(text); it != table_.end())
        return it->second;
    throw TransportError("no translation for '" + text + "' from " + source_language);
}

HttpTranslator::HttpTranslator(std::string endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout)
{
    if (endpoint_.empty())
        throw InputError("translator endpoint is not configured");
}

std::string HttpTranslator::translate(const std::string& text, const std::string& source_language)
{
    http::Request req;
    req.method = "POST";
    req.url = endpoint_;
    req.timeout = timeout_;
    req.body = json{{"text", text}, {"source", source_language}, {"target", "en"}}.dump();
    req.content_type = "application/json";
    auto const res = http::send(req);
    if (res.status != 200)
        throw TransportError("translator returned " + std::to_string(res.status));
    try {
        return json::parse(res.body).at("translation").get<std::string>();
    } catch (const json::exception& e) {
        throw ProtocolError(std::string("malformed translator payload: ") + e.what());
    }
}

Translation translate_to_english(Translator& translator, const std::string& text, const std::string& language)
{
    if (language == "en")
        return {text, false, {}};
    try {
        return {translator.translate(text, language), true, {}};
    } catch (const Error& e) {
        return {text, false, {std::string("translation failed, using original text: ") + e.what()}};
    }
}

// --- benchmark ------------------------------------------------------------------------

EvalResult run_benchmark(const QaldDataset& dataset, const AgentRunner& agent, Triplestore& scoring_store,
                         const BenchmarkOptions& options)
{
    EvalResult result;
    result.language = options.language;
    result.model = options.model;
    result.machine_translated = options.translator != nullptr;

    std::vector<const QaldQuestion*> todo;
    for (const auto& q : dataset.questions) {
        if (q.text(options.language))
            todo.push_back(&q);
        else
            result.skipped.push_back(q.id);
    }

    result.per_question.resize(todo.size());
    auto evaluate = [&](std::size_t i) {
        const auto& q = *todo[i];
        auto& out = result.per_question[i];
        out.id = q.id;
        out.question = *q.text(options.language);
        out.agent_input = out.question;
        out.agent_language = options.language;
        if (options.translator) {
            auto t = translate_to_english(*options.translator, out.question, options.language);
            out.agent_input = t.text;
            if (t.translated || options.language == "en")
                out.agent_language = "en";
            out.diagnostics = std::move(t.diagnostics);
        }

        AgentRunRecord run;
        bool failed = false;
        try {
            run = agent(out.agent_input, out.agent_language);
        } catch (const std::exception& e) {
            failed = true;
            out.diagnostics.push_back(std::string("agent failed: ") + e.what());
        }
        out.final_query = run.final_query;
        out.usage = run.usage;
        out.call_count = run.usage.calls;
        out.diagnostics.insert(out.diagnostics.end(), run.diagnostics.begin(), run.diagnostics.end());

        if (failed || run.final_query.empty()) {
            out.scores = {};
            return;
        }
        out.scores = f1_score(gold_answers(q, scoring_store), fetch_answers(scoring_store, run.final_query));
    };

    auto const workers = std::max<std::size_t>(1, std::min(options.parallelism, todo.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < todo.size(); ++i)
            evaluate(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (auto i = next++; i < todo.size(); i = next++)
                    evaluate(i);
            });
    }

    if (!result.per_question.empty()) {
        std::vector<Scores> scores;
        for (const auto& r : result.per_question)
            scores.push_back(r.scores);
        result.macro = macro_f1(scores);
    }
    return result;
}

json to_json(const EvalResult& result)
{
    json rows = json::array();
    std::vector<UsageSnapshot> usages;
    for (const auto& r : result.per_question) {
        rows.push_back({{"id", r.id},
                        {"question", r.question},
                        {"agent_input", r.agent_input},
                        {"final_query", r.final_query},
                        {"precision", r.scores.precision},
                        {"recall", r.scores.recall},
                        {"f1", r.scores.f1},
                        {"call_count", r.call_count},
                        {"input_tokens", r.usage.input_tokens},
                        {"output_tokens", r.usage.output_tokens},
                        {"diagnostics", r.diagnostics}});
        usages.push_back(r.usage);
    }

    json summary = {{"language", result.language},
                    {"model", result.model},
                    {"machine_translated", result.machine_translated},
                    {"evaluated", result.evaluated()},
                    {"skipped", result.skipped.size()},
                    {"macro_precision", result.macro.precision},
                    {"macro_recall", result.macro.recall},
                    {"macro_f1", result.macro.f1}};
    if (!usages.empty()) {
        auto const stats = aggregate_usage(usages);
        summary["mean_llm_calls"] = stats.n_c;
        summary["usage"] = to_json(stats);
    } else {
        summary["mean_llm_calls"] = 0.0;
        summary["usage"] = to_json(UsageStats{});
    }
    return {{"summary", std::move(summary)}, {"questions", std::move(rows)}, {"skipped_ids", result.skipped}};
}

} // namespace kgqa
