// SPDX-License-Identifier: Apache-2.0
//
// Plan, act, feedback. The simple agent (plan + act) feeds the experience
// pool offline; the full agent adds pool retrieval and one feedback pass.
#pragma once

#include "kgqa/dataset.hpp"
#include "kgqa/embeddings.hpp"
#include "kgqa/experience_pool.hpp"
#include "kgqa/llm.hpp"
#include "kgqa/nel.hpp"
#include "kgqa/plan.hpp"
#include "kgqa/prompts.hpp"
#include "kgqa/sparql.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace kgqa {

// --- tools ------------------------------------------------------------------

struct ToolContext {
    std::string language;
};

using ToolHandler = std::function<std::string(const json& arguments, const ToolContext& context)>;

class ToolRegistry {
public:
    /// Throws InputError on a duplicate name.
    void add(ToolSpec spec, ToolHandler handler);

    const std::vector<ToolSpec>& specs() const noexcept { return specs_; }
    bool contains(const std::string& name) const;

    /// Throws ToolProtocolError for an unregistered tool.
    std::string invoke(const ToolCallRequest& call, const ToolContext& context) const;

private:
    std::vector<ToolSpec> specs_;
    std::map<std::string, ToolHandler> handlers_;
};

/// Registry holding the `wikidata_el` tool backed by `linker`.
ToolRegistry make_link_tools(std::shared_ptr<Linker> linker);

// --- text utilities ----------------------------------------------------------

/// Strips markdown fences and any prose before the first PREFIX/BASE/SELECT/
/// ASK/CONSTRUCT/DESCRIBE keyword. Returns the trimmed input when none is found.
std::string sanitize_query(std::string_view raw);

inline constexpr const char* kEmptyResultMarker = "EMPTY RESULT";

/// At most `budget` bytes of `text`, cut on a UTF-8 boundary, followed by a
/// truncation marker when anything was dropped.
std::string truncate_bytes(std::string_view text, std::size_t budget);

/// Context actually sent to the model: when the estimate exceeds `budget`
/// tokens, the oldest non-system messages go first, two at a time; the last
/// message is always kept. `history` itself is never modified.
std::vector<ChatMessage> fit_context(std::span<const ChatMessage> history, std::int64_t budget);

std::string format_plan_examples(std::span<const PlanMatch> plans);
std::string format_query_examples(std::span<const QueryMatch> queries);

// --- agent -------------------------------------------------------------------

enum class PromptPolicy { native, english_only, mt_to_english };

std::string_view to_string(PromptPolicy policy);
PromptPolicy prompt_policy_from_string(std::string_view text);

struct AgentOptions {
    RetrievalOptions retrieval;
    int max_tool_rounds = 3;
    std::int64_t context_token_budget = 16384;
    std::size_t feedback_byte_budget = 4096;
    PromptPolicy prompt_policy = PromptPolicy::native;
};

struct AgentRunRecord {
    std::string question;
    std::string language;
    Plan plan;
    std::vector<ChatMessage> history; ///< action-step history, including the feedback exchange
    std::string intermediate_query;
    std::string final_query;
    bool feedback_used = false;
    std::size_t triplestore_executions = 0;
    /// Logical model invocations: one for the plan, one per plan step, one for
    /// the refinement. Tool round-trips inside a step do not add to this.
    std::size_t llm_invocations = 0;
    /// Raw completions and tokens spent by this run.
    UsageSnapshot usage;
    std::vector<std::string> diagnostics;

    bool operator==(const AgentRunRecord&) const = default;
};

json to_json(const AgentRunRecord& record);

/// Per-run bookkeeping threaded through the steps.
struct RunTrace {
    UsageSnapshot usage;
    std::size_t llm_invocations = 0;
    std::vector<std::string> diagnostics;
    std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct ActionOutcome {
    std::string final_query;
    std::vector<ChatMessage> history;
};

class Agent {
public:
    Agent(Gateway& gateway, PromptRegistry prompts, ToolRegistry tools, AgentOptions options = {});

    /// One model call. `experience` comes from find_top_n_plans; empty means no pool.
    Plan plan_step(const std::string& question, const std::string& language,
                   std::span<const PlanMatch> experience = {}, RunTrace* trace = nullptr);

    /// One user message per plan step, each answered after at most
    /// max_tool_rounds tool round-trips.
    ActionOutcome action_step(const Plan& plan, const std::string& question, const std::string& language,
                              std::span<const QueryMatch> experience = {}, RunTrace* trace = nullptr);

    std::string feedback_prompt(const std::string& question, const std::string& query,
                                const std::string& triplestore_response, const std::string& language) const;

    /// Plan then act, no pool and no triplestore. Never throws for model or tool
    /// failures; they land in diagnostics with an empty final query.
    AgentRunRecord run_simple(const std::string& question, const std::string& language);

    /// Retrieval, plan, act, one triplestore execution, one refinement.
    /// `pool` and `embedder` may be null (no-experience mode).
    AgentRunRecord run_full(const std::string& question, const std::string& language, const ExperiencePool* pool,
                            const Embedder* embedder, Triplestore& triplestore,
                            std::optional<std::chrono::steady_clock::time_point> deadline = {});

    const AgentOptions& options() const noexcept { return options_; }
    const PromptRegistry& prompts() const noexcept { return prompts_; }
    const ToolRegistry& tools() const noexcept { return tools_; }

private:
    const PromptTemplate& prompt_for(const std::string& language, PromptKind kind, RunTrace& trace) const;
    LlmResponse call_model(std::span<const ChatMessage> history, bool with_tools, RunTrace& trace);
    /// Runs one user turn to a text reply, executing tool calls on the way.
    void converse(std::vector<ChatMessage>& history, const std::string& language, RunTrace& trace);
    void run_actions(const Plan& plan, const std::string& question, const std::string& language,
                     std::span<const QueryMatch> experience, std::vector<ChatMessage>& history, RunTrace& trace);

    Gateway& gateway_;
    PromptRegistry prompts_;
    ToolRegistry tools_;
    AgentOptions options_;
};

/// Final query text of a history: the last assistant message, sanitized.
std::string last_query(std::span<const ChatMessage> history);

// --- offline phase --------------------------------------------------------------

/// F1 of a generated query against a dataset question's gold answers.
using QueryScorer = std::function<double(const QaldQuestion& question, const std::string& generated)>;

struct PoolBuild {
    ExperiencePool pool;
    std::vector<AgentRunRecord> runs;
    std::vector<std::string> skipped; ///< ids lacking the language
    std::vector<std::string> diagnostics;
};

/// Runs the simple agent over every question that has `language`, scores it,
/// embeds the question, and appends a record whatever the outcome.
PoolBuild build_experience_pool(Agent& agent, const QaldDataset& dataset, const std::string& language,
                                const Embedder& embedder, const QueryScorer& scorer);

} // namespace kgqa
