// SPDX-License-Identifier: Apache-2.0
#include "kgqa/agent.hpp"

#include "kgqa/error.hpp"

#include <algorithm>
#include <cctype>

namespace kgqa {

namespace {

class DeadlineExceeded : public Error {
public:
    DeadlineExceeded() : Error("request time budget exhausted") {}
};

std::string trim(std::string_view s)
{
    auto const b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    auto const e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool word_boundary(std::string_view text, std::size_t pos, std::size_t len)
{
    auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    bool const before = pos == 0 || !is_word(text[pos - 1]);
    bool const after = pos + len >= text.size() || !is_word(text[pos + len]);
    return before && after;
}

} // namespace

// --- tools ---------------------------------------------------------------------

void ToolRegistry::add(ToolSpec spec, ToolHandler handler)
{
    if (spec.name.empty())
        throw InputError("tool name must not be empty");
    if (handlers_.contains(spec.name))
        throw InputError("tool '" + spec.name + "' registered twice");
    handlers_[spec.name] = std::move(handler);
    specs_.push_back(std::move(spec));
}

bool ToolRegistry::contains(const std::string& name) const
{
    return handlers_.contains(name);
}

std::string ToolRegistry::invoke(const ToolCallRequest& call, const ToolContext& context) const
{
    auto it = handlers_.find(call.tool_name);
    if (it == handlers_.end())
        throw ToolProtocolError("unknown tool '" + call.tool_name + "'", to_wire(ChatMessage::assistant("", {call})).dump());
    return it->second(call.arguments, context);
}

ToolRegistry make_link_tools(std::shared_ptr<Linker> linker)
{
    ToolRegistry registry;
    registry.add(link_tool_spec(), [linker](const json& arguments, const ToolContext& context) {
        auto const result = linker->link(candidates_from_arguments(arguments, context.language));
        return to_json(result).dump();
    });
    return registry;
}

// --- text utilities --------------------------------------------------------------

std::string sanitize_query(std::string_view raw)
{
    std::string text(raw);

    if (auto open = text.find("```"); open != std::string::npos) {
        auto body_start = text.find('\n', open);
        body_start = body_start == std::string::npos ? text.size() : body_start + 1;
        auto close = text.find("```", body_start);
        text = text.substr(body_start, close == std::string::npos ? std::string::npos : close - body_start);
    }
    text = trim(text);

    std::string upper = text;
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    std::size_t start = std::string::npos;
    for (std::string_view keyword : {"PREFIX", "BASE", "SELECT", "ASK", "CONSTRUCT", "DESCRIBE"}) {
        for (auto pos = upper.find(keyword); pos != std::string::npos && pos < start;
             pos = upper.find(keyword, pos + 1)) {
            if (word_boundary(upper, pos, keyword.size())) {
                start = pos;
                break;
            }
        }
    }
    if (start == std::string::npos)
        return text;
    return trim(std::string_view(text).substr(start));
}

std::string truncate_bytes(std::string_view text, std::size_t budget)
{
    if (text.size() <= budget)
        return std::string(text);
    auto cut = budget;
    // back off continuation bytes so a multi-byte character is never split
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80)
        --cut;
    return std::string(text.substr(0, cut)) + "\n[TRUNCATED: " + std::to_string(text.size() - cut) + " more bytes]";
}

std::vector<ChatMessage> fit_context(std::span<const ChatMessage> history, std::int64_t budget)
{
    std::vector<ChatMessage> context(history.begin(), history.end());
    if (budget <= 0 || estimate_tokens(context) <= budget)
        return context;

    auto const first_free = static_cast<std::size_t>(!context.empty() && context.front().role == Role::system);
    while (estimate_tokens(context) > budget && context.size() > first_free + 1) {
        auto const removable = context.size() - first_free - 1;
        auto const n = std::min<std::size_t>(2, removable);
        context.erase(context.begin() + static_cast<std::ptrdiff_t>(first_free),
                      context.begin() + static_cast<std::ptrdiff_t>(first_free + n));
        // a tool result without its assistant call is rejected by chat APIs
        while (context.size() > first_free + 1 && context[first_free].role == Role::tool)
            context.erase(context.begin() + static_cast<std::ptrdiff_t>(first_free));
    }
    return context;
}

std::string format_plan_examples(std::span<const PlanMatch> plans)
{
    if (plans.empty())
        return {};
    std::string out = "Examples of successful plans for similar questions:\n";
    for (const auto& match : plans) {
        const auto& plan = match.record->plan;
        auto const text = plan.raw_text.empty() ? format_plan(plan) : trim(plan.raw_text);
        out += "\nQuestion: " + match.record->question + "\nPlan:\n" + text + "\n";
    }
    return out;
}

std::string format_query_examples(std::span<const QueryMatch> queries)
{
    if (queries.empty())
        return {};
    std::string out = "Examples of similar questions and their SPARQL queries:\n";
    for (const auto& q : queries)
        out += "\nQuestion: " + q.question + "\nSPARQL: " + q.sparql + "\n";
    return out;
}

std::string_view to_string(PromptPolicy policy)
{
    switch (policy) {
    case PromptPolicy::native: return "native";
    case PromptPolicy::english_only: return "english-only";
    case PromptPolicy::mt_to_english: return "mt-to-english";
    }
    return "native";
}

PromptPolicy prompt_policy_from_string(std::string_view text)
{
    if (text == "native") return PromptPolicy::native;
    if (text == "english-only") return PromptPolicy::english_only;
    if (text == "mt-to-english") return PromptPolicy::mt_to_english;
    throw ConfigError("unknown prompt policy '" + std::string(text) + "'");
}

json to_json(const AgentRunRecord& record)
{
    json history = json::array();
    for (const auto& m : record.history)
        history.push_back(to_wire(m));
    return {{"question", record.question},
            {"language", record.language},
            {"plan", {{"steps", record.plan.steps}, {"raw_text", record.plan.raw_text}}},
            {"history", std::move(history)},
            {"intermediate_query", record.intermediate_query},
            {"final_query", record.final_query},
            {"feedback_used", record.feedback_used},
            {"triplestore_executions", record.triplestore_executions},
            {"llm_invocations", record.llm_invocations},
            {"usage",
             {{"calls", record.usage.calls},
              {"input_tokens", record.usage.input_tokens},
              {"output_tokens", record.usage.output_tokens},
              {"estimated", record.usage.estimated}}},
            {"diagnostics", record.diagnostics}};
}

std::string last_query(std::span<const ChatMessage> history)
{
    for (auto it = history.rbegin(); it != history.rend(); ++it)
        if (it->role == Role::assistant)
            return it->content.empty() ? std::string() : sanitize_query(it->content);
    return {};
}

// --- agent ---------------------------------------------------------------------------

Agent::Agent(Gateway& gateway, PromptRegistry prompts, ToolRegistry tools, AgentOptions options)
    : gateway_(gateway), prompts_(std::move(prompts)), tools_(std::move(tools)), options_(std::move(options))
{
    if (options_.max_tool_rounds < 0)
        throw InputError("max_tool_rounds must be nonnegative");
}

const PromptTemplate& Agent::prompt_for(const std::string& language, PromptKind kind, RunTrace& trace) const
{
    auto const wanted = options_.prompt_policy == PromptPolicy::native ? language : std::string("en");
    auto const lookup = prompts_.resolve(wanted, kind);
    if (lookup.fell_back) {
        auto const note = "no " + std::string(to_string(kind)) + " template for '" + wanted + "', using English";
        if (std::find(trace.diagnostics.begin(), trace.diagnostics.end(), note) == trace.diagnostics.end())
            trace.diagnostics.push_back(note);
    }
    return *lookup.prompt;
}

LlmResponse Agent::call_model(std::span<const ChatMessage> history, bool with_tools, RunTrace& trace)
{
    if (trace.deadline && std::chrono::steady_clock::now() >= *trace.deadline)
        throw DeadlineExceeded();
    auto const context = fit_context(history, options_.context_token_budget);
    if (context.size() < history.size())
        trace.diagnostics.push_back("context truncated from " + std::to_string(history.size()) + " to "
                                    + std::to_string(context.size()) + " messages");
    ++trace.usage.calls;
    auto response = gateway_.complete(context, with_tools ? std::span<const ToolSpec>(tools_.specs())
                                                          : std::span<const ToolSpec>());
    trace.usage.input_tokens += response.usage.input_tokens;
    trace.usage.output_tokens += response.usage.output_tokens;
    trace.usage.estimated = trace.usage.estimated || response.usage.estimated;
    return response;
}

void Agent::converse(std::vector<ChatMessage>& history, const std::string& language, RunTrace& trace)
{
    ++trace.llm_invocations;
    ToolContext const context{language};
    for (int round = 0;; ++round) {
        bool const offer_tools = round < options_.max_tool_rounds && !tools_.specs().empty();
        LlmResponse response;
        try {
            response = call_model(history, offer_tools, trace);
        } catch (const ToolProtocolError& e) {
            if (offer_tools)
                throw;
            trace.diagnostics.push_back("tool-loop bound of " + std::to_string(options_.max_tool_rounds)
                                        + " exceeded; keeping last text reply (" + e.what() + ")");
            return;
        }
        history.push_back(response.message);
        if (!response.message.has_tool_calls())
            return;
        for (const auto& call : response.message.tool_calls) {
            std::string output;
            try {
                output = tools_.invoke(call, context);
            } catch (const ToolProtocolError&) {
                throw;
            } catch (const Error& e) {
                output = json{{"error", e.what()}}.dump();
                trace.diagnostics.push_back("tool '" + call.tool_name + "' failed: " + e.what());
            }
            history.push_back(ChatMessage::tool(call.call_id, std::move(output)));
        }
    }
}

Plan Agent::plan_step(const std::string& question, const std::string& language, std::span<const PlanMatch> experience,
                      RunTrace* trace)
{
    if (trim(question).empty())
        throw InputError("question must not be empty");
    RunTrace local;
    auto& t = trace ? *trace : local;

    auto const& prompt = prompt_for(language, PromptKind::plan, t);
    std::vector<ChatMessage> messages{
        ChatMessage::system(render_prompt(prompt, {{kUserQuestion, question},
                                                   {kPlanExperience, format_plan_examples(experience)}})),
        ChatMessage::user(question)};
    ++t.llm_invocations;
    auto const response = call_model(messages, false, t);
    return parse_plan(response.message.content);
}

void Agent::run_actions(const Plan& plan, const std::string& question, const std::string& language,
                        std::span<const QueryMatch> experience, std::vector<ChatMessage>& history, RunTrace& trace)
{
    if (plan.empty())
        throw InputError("cannot act on an empty plan");
    if (!tools_.contains(kLinkToolName))
        throw InputError(std::string("the '") + kLinkToolName + "' tool is not registered");

    auto const& prompt = prompt_for(language, PromptKind::action, trace);
    history.push_back(ChatMessage::system(render_prompt(prompt, {{kQueryExperience, format_query_examples(experience)}})));

    auto const total = plan.steps.size();
    for (std::size_t j = 0; j < total; ++j) {
        std::string content;
        if (j == 0)
            content = "Question: " + question + "\n\n";
        content += "Step " + std::to_string(j + 1) + "/" + std::to_string(total) + ": " + plan.steps[j];
        history.push_back(ChatMessage::user(std::move(content)));
        converse(history, language, trace);
    }
}

ActionOutcome Agent::action_step(const Plan& plan, const std::string& question, const std::string& language,
                                 std::span<const QueryMatch> experience, RunTrace* trace)
{
    RunTrace local;
    auto& t = trace ? *trace : local;
    ActionOutcome outcome;
    run_actions(plan, question, language, experience, outcome.history, t);
    outcome.final_query = last_query(outcome.history);
    return outcome;
}

std::string Agent::feedback_prompt(const std::string& question, const std::string& query,
                                   const std::string& triplestore_response, const std::string& language) const
{
    RunTrace scratch;
    auto const& prompt = prompt_for(language, PromptKind::feedback, scratch);
    auto response = trim(triplestore_response).empty() ? std::string(kEmptyResultMarker) : triplestore_response;
    return render_prompt(prompt, {{kUserQuestion, question},
                                  {kGeneratedSparql, query},
                                  {kFeedback, truncate_bytes(response, options_.feedback_byte_budget)}});
}

AgentRunRecord Agent::run_simple(const std::string& question, const std::string& language)
{
    AgentRunRecord record;
    record.question = question;
    record.language = language;
    RunTrace trace;

    try {
        record.plan = plan_step(question, language, {}, &trace);
        run_actions(record.plan, question, language, {}, record.history, trace);
        record.final_query = last_query(record.history);
        record.intermediate_query = record.final_query;
    } catch (const PlanParseError& e) {
        trace.diagnostics.push_back(std::string("plan step failed: ") + e.what());
        record.plan.raw_text = e.raw_text();
    } catch (const Error& e) {
        trace.diagnostics.push_back(std::string("agent run failed: ") + e.what());
        record.final_query.clear();
    }

    record.usage = trace.usage;
    record.llm_invocations = trace.llm_invocations;
    record.diagnostics = std::move(trace.diagnostics);
    return record;
}

AgentRunRecord Agent::run_full(const std::string& question, const std::string& language, const ExperiencePool* pool,
                               const Embedder* embedder, Triplestore& triplestore,
                               std::optional<std::chrono::steady_clock::time_point> deadline)
{
    AgentRunRecord record;
    record.question = question;
    record.language = language;
    RunTrace trace;
    trace.deadline = deadline;

    std::vector<PlanMatch> plans;
    std::vector<QueryMatch> queries;
    if (pool && embedder && !pool->empty()) {
        try {
            auto const vector = embedder->embed(question);
            auto const& r = options_.retrieval;
            plans = pool->find_top_n_plans(vector, r.top_n_plans, r.language);
            queries = pool->find_top_n_queries(vector, r.top_n_queries, r.query_source, r.language);
        } catch (const Error& e) {
            plans.clear();
            queries.clear();
            trace.diagnostics.push_back(std::string("experience pool unavailable, continuing without it: ") + e.what());
        }
    }

    auto finish = [&] {
        record.final_query = last_query(record.history);
        record.usage = trace.usage;
        record.llm_invocations = trace.llm_invocations;
        record.diagnostics = std::move(trace.diagnostics);
        return std::move(record);
    };

    try {
        record.plan = plan_step(question, language, plans, &trace);
        run_actions(record.plan, question, language, queries, record.history, trace);
    } catch (const PlanParseError& e) {
        trace.diagnostics.push_back(std::string("plan step failed: ") + e.what());
        record.plan.raw_text = e.raw_text();
        return finish();
    } catch (const Error& e) {
        trace.diagnostics.push_back(std::string("agent run failed: ") + e.what());
        auto out = finish();
        out.intermediate_query = out.final_query;
        return out;
    }
    record.intermediate_query = last_query(record.history);

    // Feedback is formulated exactly once per question.
    std::string response_text;
    ++record.triplestore_executions;
    try {
        SparqlQuery const query(record.intermediate_query);
        auto const response = triplestore.execute(query);
        auto const parsed = parse_results(response.body, query.form);
        response_text = parsed.kind == AnswerSet::Kind::empty ? std::string(kEmptyResultMarker) : response.body;
    } catch (const HttpStatusError& e) {
        response_text = "Triplestore error (HTTP " + std::to_string(e.status()) + "): " + e.body();
    } catch (const Error& e) {
        response_text = std::string("Triplestore error: ") + e.what();
    }

    record.feedback_used = true;
    try {
        record.history.push_back(
            ChatMessage::user(feedback_prompt(question, record.intermediate_query, response_text, language)));
        converse(record.history, language, trace);
    } catch (const Error& e) {
        trace.diagnostics.push_back(std::string("refinement failed, keeping intermediate query: ") + e.what());
    }
    return finish();
}

// --- offline phase ---------------------------------------------------------------

PoolBuild build_experience_pool(Agent& agent, const QaldDataset& dataset, const std::string& language,
                                const Embedder& embedder, const QueryScorer& scorer)
{
    PoolBuild build{ExperiencePool(embedder.dimension(), embedder.id()), {}, {}, {}};

    for (const auto& question : dataset.questions) {
        const auto* text = question.text(language);
        if (!text || trim(*text).empty()) {
            build.skipped.push_back(question.id);
            continue;
        }

        auto run = agent.run_simple(*text, language);

        double f1 = 0.0;
        if (!run.final_query.empty()) {
            try {
                f1 = scorer(question, run.final_query);
            } catch (const Error& e) {
                run.diagnostics.push_back(std::string("scoring failed: ") + e.what());
            }
        }

        try {
            ExperienceRecord record;
            record.question = *text;
            record.language = language;
            record.vector = embedder.embed(*text);
            record.gold_sparql = question.gold_sparql;
            record.generated_sparql = run.final_query;
            record.plan = run.plan;
            record.chat_history = run.history;
            record.f1 = std::clamp(f1, 0.0, 1.0);
            build.pool.add_example(std::move(record));
        } catch (const Error& e) {
            build.diagnostics.push_back("question " + question.id + " not stored: " + e.what());
        }
        build.runs.push_back(std::move(run));
    }
    return build;
}

} // namespace kgqa
