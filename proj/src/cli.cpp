// SPDX-License-Identifier: Apache-2.0
#include "kgqa/cli.hpp"

#include "kgqa/config.hpp"
#include "kgqa/cost.hpp"
#include "kgqa/error.hpp"
#include "kgqa/service.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>

namespace kgqa {

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string config;

    std::string train;
    std::string out;
    std::string lang;
    std::string triplestore;

    std::string question;
    std::string pool;

    std::string dataset;
    std::string split = "test";
    bool mt = false;
    std::string report;

    std::string usage;
    std::string pricing;

    std::string host;
    int port = -1;
};

RunConfig effective_config(const Options& o)
{
    if (!o.config.empty())
        return load_config(o.config);
    RunConfig c;
    apply_environment(c);
    return c;
}

std::string fixed(double value, int digits)
{
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.*f", digits, value);
    return buffer;
}

void warn_on_template_fallback(const Runtime& rt, const std::string& lang, std::ostream& err)
{
    if (rt.agent_options.prompt_policy == PromptPolicy::native && !rt.prompts.has_language(lang))
        err << "warning: no prompt templates for '" << lang << "', using English\n";
}

void apply_language_filter(const RunConfig& c, Runtime& rt, const std::string& lang)
{
    if (c.filter_pool_by_language)
        rt.agent_options.retrieval.language = lang;
}

std::shared_ptr<const ExperiencePool> open_pool(const std::string& path, const Embedder& embedder, std::ostream& err)
{
    auto pool = std::make_shared<const ExperiencePool>(ExperiencePool::load(path));
    if (pool->dimension() != embedder.dimension())
        throw ConfigError("pool " + path + " has dimension " + std::to_string(pool->dimension())
                          + " but the embedder produces " + std::to_string(embedder.dimension()));
    if (!pool->embedder_id().empty() && pool->embedder_id() != embedder.id())
        err << "warning: pool was built with embedder '" << pool->embedder_id() << "', now using '" << embedder.id()
            << "'\n";
    return pool;
}

int build_pool(const Options& o, std::ostream& out, std::ostream& err)
{
    auto const config = effective_config(o);
    auto rt = build_runtime(config);
    warn_on_template_fallback(rt, o.lang, err);

    QaldDataset dataset;
    dataset.split = Split::train;
    if (fs::file_size(o.train) == 0)
        err << "warning: " << o.train << " is empty\n";
    else
        dataset = load_qald(o.train, Split::train);
    if (dataset.questions.empty())
        err << "warning: no training questions, writing an empty pool\n";

    auto& store = rt.triplestore(o.triplestore.empty() ? config.default_triplestore : o.triplestore);
    auto agent = rt.make_agent();
    auto build = build_experience_pool(agent, dataset, o.lang, *rt.embedder, make_answer_scorer(store));
    build.pool.save(o.out);

    for (auto const& d : build.diagnostics)
        err << d << '\n';
    if (!build.skipped.empty())
        err << build.skipped.size() << " question(s) without language '" << o.lang << "' skipped\n";

    std::size_t successful = 0;
    for (auto const& r : build.pool.records())
        successful += std::abs(r.f1 - 1.0) <= kSuccessTolerance ? 1 : 0;
    out << build.pool.size() << " records (" << successful << " successful)\n";
    return 0;
}

int answer(const Options& o, std::ostream& out, std::ostream& err)
{
    auto const config = effective_config(o);
    auto rt = build_runtime(config);
    apply_language_filter(config, rt, o.lang);
    warn_on_template_fallback(rt, o.lang, err);

    auto const pool_path = o.pool.empty() ? config.pool : o.pool;
    std::shared_ptr<const ExperiencePool> pool;
    if (pool_path.empty())
        err << "warning: no experience pool given, answering without experience\n";
    else
        pool = open_pool(pool_path, *rt.embedder, err);

    auto& store = rt.triplestore(o.triplestore.empty() ? config.default_triplestore : o.triplestore);
    auto agent = rt.make_agent();
    auto const deadline = std::chrono::steady_clock::now()
        + std::chrono::milliseconds(static_cast<long long>(config.request_timeout_s * 1000));
    auto const record = agent.run_full(o.question, o.lang, pool.get(), rt.embedder.get(), store, deadline);

    for (auto const& d : record.diagnostics)
        err << d << '\n';
    if (record.final_query.empty())
        err << "no query was produced\n";
    out << record.final_query << '\n';
    return 0;
}

int bench(const Options& o, std::ostream& out, std::ostream& err)
{
    auto const config = effective_config(o);
    auto rt = build_runtime(config);
    apply_language_filter(config, rt, o.mt ? std::string("en") : o.lang);
    if (!o.mt)
        warn_on_template_fallback(rt, o.lang, err);

    auto const dataset = load_qald(o.dataset, split_from_string(o.split));
    auto const pool_path = o.pool.empty() ? config.pool : o.pool;
    std::shared_ptr<const ExperiencePool> pool;
    if (!pool_path.empty())
        pool = open_pool(pool_path, *rt.embedder, err);

    auto& store = rt.triplestore(o.triplestore.empty() ? config.default_triplestore : o.triplestore);
    auto agent = rt.make_agent();
    auto const timeout = std::chrono::milliseconds(static_cast<long long>(config.request_timeout_s * 1000));
    AgentRunner runner = [&](const std::string& question, const std::string& language) {
        return agent.run_full(question, language, pool.get(), rt.embedder.get(), store,
                              std::chrono::steady_clock::now() + timeout);
    };

    BenchmarkOptions options;
    options.language = o.lang;
    options.model = config.llm.backend == "scripted" ? "scripted" : config.llm.model;
    options.translator = o.mt ? rt.translator.get() : nullptr;
    options.parallelism = config.parallelism;
    auto const result = run_benchmark(dataset, runner, store, options);

    auto const report = to_json(result);
    {
        std::ofstream file(o.report, std::ios::binary | std::ios::trunc);
        if (!file)
            throw IoError("cannot write report " + o.report);
        file << report.dump(2, ' ', false, json::error_handler_t::replace) << '\n';
    }

    if (!result.skipped.empty())
        err << result.skipped.size() << " question(s) without language '" << o.lang << "' skipped\n";
    for (auto const& q : result.per_question)
        for (auto const& d : q.diagnostics)
            err << q.id << ": " << d << '\n';

    out << result.evaluated() << " questions evaluated\n";
    out << "macro precision " << fixed(result.macro.precision, 4) << " recall " << fixed(result.macro.recall, 4)
        << " F1 " << fixed(result.macro.f1, 4) << '\n';
    out << "mean LLM calls " << fixed(report["summary"]["mean_llm_calls"].get<double>(), 2) << '\n';
    return 0;
}

int cost(const Options& o, std::ostream& out, std::ostream&)
{
    auto const usage = load_usage(o.usage);
    auto const pricing = load_pricing(o.pricing);
    out << format_usd(price_per_100_questions(usage, pricing)) << " / 100 questions\n";
    if (auto const* gpu = std::get_if<GpuPricing>(&pricing)) {
        UsageStats per100 = usage;
        per100.n_q = 100.0;
        out << "GPU hours / 100 questions: " << fixed(gpu_hours(per100, gpu->tokens_per_second), 2) << '\n';
    }
    if (usage.estimated)
        out << "note: token counts are estimates\n";
    return 0;
}

int serve(const Options& o, std::ostream& out, std::ostream& err)
{
    auto const config = effective_config(o);
    auto rt = build_runtime(config);
    if (config.service.datasets.empty())
        throw ConfigError("service.datasets is empty; nothing to serve");

    std::map<std::string, DatasetBinding> bindings;
    for (auto const& [name, profile] : config.service.datasets) {
        DatasetBinding b;
        b.triplestore = rt.triplestores.at(profile.triplestore);
        b.language = profile.language;
        if (!profile.pool.empty())
            b.pool = open_pool(profile.pool, *rt.embedder, err);
        bindings[name] = std::move(b);
    }

    auto agent = rt.make_agent(config.service.prompt_policy);
    AnsweringService service(agent, rt.embedder, std::move(bindings),
                             std::chrono::milliseconds(static_cast<long long>(config.request_timeout_s * 1000)));
    HttpFrontend frontend(service, config.parallelism);
    auto const host = o.host.empty() ? config.service.host : o.host;
    auto const port = o.port >= 0 ? o.port : config.service.port;
    frontend.serve(host, port, [&](int bound) { out << "listening on " << host << ':' << bound << std::endl; });
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Multilingual question answering over knowledge graphs via SPARQL-generating agents", "kgqa"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);

    auto* build_cmd = app.add_subcommand("build-pool", "Run the simple agent over a train split and store the experience");
    build_cmd->add_option("--train", o.train, "QALD-format train file")->required()->check(CLI::ExistingFile);
    build_cmd->add_option("--lang", o.lang, "Question language code")->required();
    build_cmd->add_option("--out", o.out, "Pool file to write")->required();
    build_cmd->add_option("--triplestore", o.triplestore, "Triplestore profile used for scoring");

    auto* answer_cmd = app.add_subcommand("answer", "Answer one question; prints the SPARQL query only");
    answer_cmd->add_option("--question", o.question, "Question text")->required();
    answer_cmd->add_option("--lang", o.lang, "Question language code")->required();
    answer_cmd->add_option("--pool", o.pool, "Experience pool file");
    answer_cmd->add_option("--triplestore", o.triplestore, "Triplestore profile");

    auto* bench_cmd = app.add_subcommand("bench", "Evaluate against a QALD-format dataset");
    bench_cmd->add_option("--dataset", o.dataset, "QALD-format dataset file")->required()->check(CLI::ExistingFile);
    bench_cmd->add_option("--split", o.split, "train or test")->check(CLI::IsMember({"train", "test"}));
    bench_cmd->add_option("--lang", o.lang, "Question language code")->required();
    bench_cmd->add_flag("--mt", o.mt, "Machine-translate questions to English first");
    bench_cmd->add_option("--report", o.report, "Report JSON to write")->required();
    bench_cmd->add_option("--pool", o.pool, "Experience pool file");
    bench_cmd->add_option("--triplestore", o.triplestore, "Triplestore profile");

    auto* cost_cmd = app.add_subcommand("cost", "Price per 100 questions");
    cost_cmd->add_option("--usage", o.usage, "Usage document or benchmark report")->required()->check(CLI::ExistingFile);
    cost_cmd->add_option("--pricing", o.pricing, "Pricing fixture")->required()->check(CLI::ExistingFile);

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP answering service");
    serve_cmd->add_option("--host", o.host, "Bind address");
    serve_cmd->add_option("--port", o.port, "Port (0 picks a free one)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << "kgqa 1.0\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\nRun with --help for usage.\n";
        return 2;
    }

    try {
        if (*build_cmd) return build_pool(o, out, err);
        if (*answer_cmd) return answer(o, out, err);
        if (*bench_cmd) return bench(o, out, err);
        if (*cost_cmd) return cost(o, out, err);
        if (*serve_cmd) return serve(o, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace kgqa
