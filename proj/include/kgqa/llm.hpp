// SPDX-License-Identifier: Apache-2.0
//
// Chat-completion access with tool calling. Two backends: an OpenAI-compatible
// HTTP client and a scripted replay used by tests and offline runs.
#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace kgqa {

using json = nlohmann::json;

enum class Role { system, user, assistant, tool };

std::string_view to_string(Role role);
Role role_from_string(std::string_view text);

struct ToolCallRequest {
    std::string call_id;
    std::string tool_name;
    json arguments = json::object();

    bool operator==(const ToolCallRequest&) const = default;
};

struct ChatMessage {
    Role role = Role::user;
    std::string content;
    std::vector<ToolCallRequest> tool_calls;
    std::optional<std::string> tool_call_id;

    static ChatMessage system(std::string text) { return {Role::system, std::move(text), {}, {}}; }
    static ChatMessage user(std::string text) { return {Role::user, std::move(text), {}, {}}; }
    static ChatMessage assistant(std::string text, std::vector<ToolCallRequest> calls = {})
    {
        return {Role::assistant, std::move(text), std::move(calls), {}};
    }
    static ChatMessage tool(std::string call_id, std::string text)
    {
        return {Role::tool, std::move(text), {}, std::move(call_id)};
    }

    bool has_tool_calls() const noexcept { return !tool_calls.empty(); }

    bool operator==(const ChatMessage&) const = default;
};

/// Throws InputError unless tool_call_id is present exactly for tool messages
/// and only assistant messages carry tool calls.
void validate(const ChatMessage& message);

struct ToolSpec {
    std::string name;
    std::string description;
    json parameters = json::object();
};

struct TokenUsage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    /// Counts came from the whitespace heuristic, not the backend.
    bool estimated = false;

    bool operator==(const TokenUsage&) const = default;
};

struct LlmResponse {
    ChatMessage message;
    TokenUsage usage;
};

/// Cumulative gateway accounting.
struct UsageSnapshot {
    std::int64_t calls = 0;
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    bool estimated = false;

    UsageSnapshot& operator+=(const UsageSnapshot& other);
    bool operator==(const UsageSnapshot&) const = default;
};

/// Whitespace token count times 1.3, rounded up.
std::int64_t estimate_tokens(std::string_view text);
std::int64_t estimate_tokens(std::span<const ChatMessage> messages);

/// Checks `arguments` against a JSON-schema subset (type, properties,
/// required, items, additionalProperties). Returns an empty string when valid.
std::string check_arguments(const json& schema, const json& arguments);

struct CompletionRequest {
    std::span<const ChatMessage> messages;
    std::span<const ToolSpec> tools;
    double temperature = 0.0;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual LlmResponse complete(const CompletionRequest& request) = 0;
    virtual std::string model_name() const = 0;
};

// --- OpenAI-compatible wire format --------------------------------------

json to_wire(const ChatMessage& message);
ChatMessage message_from_wire(const json& wire);
json to_wire(const ToolSpec& spec);
json to_wire_request(const CompletionRequest& request, const std::string& model);
LlmResponse response_from_wire(const json& wire);

struct ChatCompletionsOptions {
    std::string endpoint; ///< base URL; "/chat/completions" is appended unless already present
    std::string model;
    std::string api_key;
    std::chrono::milliseconds timeout{120'000};
};

class ChatCompletionsBackend final : public LlmBackend {
public:
    explicit ChatCompletionsBackend(ChatCompletionsOptions options);

    LlmResponse complete(const CompletionRequest& request) override;
    std::string model_name() const override { return options_.model; }

private:
    ChatCompletionsOptions options_;
};

// --- scripted replay ------------------------------------------------------

using PromptPredicate = std::function<bool(std::span<const ChatMessage>, std::span<const ToolSpec>)>;

struct ScriptedResponse {
    LlmResponse response;
    PromptPredicate expect;
    std::string expect_description;
};

/// Predicate that holds when any message content contains `needle`.
PromptPredicate prompt_contains(std::string needle);

ScriptedResponse scripted_text(std::string text, TokenUsage usage = {});
ScriptedResponse scripted_tool_call(std::string call_id, std::string tool_name, json arguments, TokenUsage usage = {});

/// Replays canned responses first-in first-out. Single consumer: overlapping
/// calls raise ContractViolation.
class ScriptedBackend final : public LlmBackend {
public:
    ScriptedBackend() = default;
    explicit ScriptedBackend(std::vector<ScriptedResponse> responses);

    LlmResponse complete(const CompletionRequest& request) override;
    std::string model_name() const override { return "scripted"; }

    /// Appends to the script. Throws InputError on an empty list.
    void script(std::vector<ScriptedResponse> responses);

    std::size_t remaining() const;
    std::size_t consumed() const { return consumed_; }
    /// Every prompt seen, in call order.
    const std::vector<std::vector<ChatMessage>>& captured_prompts() const { return captured_; }

private:
    mutable std::mutex mutex_;
    std::deque<ScriptedResponse> queue_;
    std::atomic<bool> busy_{false};
    std::size_t consumed_ = 0;
    std::vector<std::vector<ChatMessage>> captured_;
};

/// Parses a script file: a JSON array of {"content", "tool_calls"?, "usage"?, "expect_contains"?}.
std::vector<ScriptedResponse> load_script(const json& document);

// --- gateway ---------------------------------------------------------------

struct GatewayOptions {
    double temperature = 0.0;
    int max_attempts = 3;
    std::chrono::milliseconds backoff{250};
};

class Gateway {
public:
    explicit Gateway(std::shared_ptr<LlmBackend> backend, GatewayOptions options = {});

    /// One chat completion. Requires a nonempty message list that starts with a
    /// system message. Tool calls in the reply are validated against `tools`.
    LlmResponse complete(std::span<const ChatMessage> messages, std::span<const ToolSpec> tools = {});

    UsageSnapshot usage_snapshot() const;
    void reset_usage();

    LlmBackend& backend() { return *backend_; }
    const GatewayOptions& options() const { return options_; }

private:
    std::shared_ptr<LlmBackend> backend_;
    GatewayOptions options_;
    mutable std::mutex usage_mutex_;
    UsageSnapshot usage_;
};

} // namespace kgqa
