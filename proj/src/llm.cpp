// SPDX-License-Identifier: Apache-2.0
#include "kgqa/llm.hpp"

#include "kgqa/error.hpp"
#include "kgqa/http.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace kgqa {

std::string_view to_string(Role role)
{
    switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
    }
    return "user";
}

Role role_from_string(std::string_view text)
{
    if (text == "system") return Role::system;
    if (text == "user") return Role::user;
    if (text == "assistant") return Role::assistant;
    if (text == "tool") return Role::tool;
    throw ProtocolError("unknown chat role '" + std::string(text) + "'");
}

void validate(const ChatMessage& message)
{
    if (message.tool_call_id.has_value() != (message.role == Role::tool))
        throw InputError("tool_call_id must be present exactly on tool messages");
    if (message.has_tool_calls() && message.role != Role::assistant)
        throw InputError("only assistant messages may carry tool calls");
    for (const auto& call : message.tool_calls)
        if (call.tool_name.empty())
            throw InputError("tool call without a tool name");
}

UsageSnapshot& UsageSnapshot::operator+=(const UsageSnapshot& other)
{
    calls += other.calls;
    input_tokens += other.input_tokens;
    output_tokens += other.output_tokens;
    estimated = estimated || other.estimated;
    return *this;
}

std::int64_t estimate_tokens(std::string_view text)
{
    std::int64_t words = 0;
    bool in_word = false;
    for (char c : text) {
        bool const space = c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v';
        if (!space && !in_word)
            ++words;
        in_word = !space;
    }
    return static_cast<std::int64_t>(std::ceil(static_cast<double>(words) * 1.3));
}

std::int64_t estimate_tokens(std::span<const ChatMessage> messages)
{
    std::int64_t total = 0;
    for (const auto& m : messages) {
        total += estimate_tokens(m.content);
        for (const auto& call : m.tool_calls)
            total += estimate_tokens(call.tool_name + " " + call.arguments.dump());
    }
    return total;
}

namespace {

bool matches_type(const std::string& type, const json& value)
{
    if (type == "object") return value.is_object();
    if (type == "array") return value.is_array();
    if (type == "string") return value.is_string();
    if (type == "integer") return value.is_number_integer();
    if (type == "number") return value.is_number();
    if (type == "boolean") return value.is_boolean();
    if (type == "null") return value.is_null();
    return true;
}

std::string check_node(const json& schema, const json& value, const std::string& where)
{
    if (!schema.is_object())
        return {};
    if (auto t = schema.find("type"); t != schema.end() && t->is_string() && !matches_type(*t, value))
        return where + ": expected " + t->get<std::string>();

    if (value.is_object()) {
        auto props = schema.value("properties", json::object());
        for (const auto& req : schema.value("required", json::array()))
            if (req.is_string() && !value.contains(req.get<std::string>()))
                return where + ": missing required property '" + req.get<std::string>() + "'";
        bool const closed = schema.contains("additionalProperties") && schema["additionalProperties"] == false;
        for (const auto& [key, child] : value.items()) {
            if (auto p = props.find(key); p != props.end()) {
                if (auto err = check_node(*p, child, where + "." + key); !err.empty())
                    return err;
            } else if (closed) {
                return where + ": unexpected property '" + key + "'";
            }
        }
    }
    if (value.is_array()) {
        if (auto items = schema.find("items"); items != schema.end()) {
            for (std::size_t i = 0; i < value.size(); ++i)
                if (auto err = check_node(*items, value[i], where + "[" + std::to_string(i) + "]"); !err.empty())
                    return err;
        }
    }
    return {};
}

} // namespace

std::string check_arguments(const json& schema, const json& arguments)
{
    return check_node(schema, arguments, "arguments");
}

// --- wire format -------------------------------------------------------------

json to_wire(const ChatMessage& message)
{
    json wire = {{"role", to_string(message.role)}, {"content", message.content}};
    if (message.has_tool_calls()) {
        json calls = json::array();
        for (const auto& call : message.tool_calls)
            calls.push_back({{"id", call.call_id},
                             {"type", "function"},
                             {"function", {{"name", call.tool_name}, {"arguments", call.arguments.dump()}}}});
        wire["tool_calls"] = std::move(calls);
    }
    if (message.tool_call_id)
        wire["tool_call_id"] = *message.tool_call_id;
    return wire;
}

ChatMessage message_from_wire(const json& wire)
{
    if (!wire.is_object() || !wire.contains("role"))
        throw ProtocolError("chat message without a role");
    ChatMessage message;
    message.role = role_from_string(wire["role"].get<std::string>());
    if (auto c = wire.find("content"); c != wire.end() && c->is_string())
        message.content = c->get<std::string>();
    if (auto calls = wire.find("tool_calls"); calls != wire.end() && calls->is_array()) {
        for (const auto& call : *calls) {
            auto fn = call.value("function", json::object());
            ToolCallRequest req;
            req.call_id = call.value("id", "");
            req.tool_name = fn.value("name", "");
            auto const raw_args = fn.value("arguments", std::string("{}"));
            try {
                req.arguments = json::parse(raw_args.empty() ? std::string("{}") : raw_args);
            } catch (const json::parse_error&) {
                throw ToolProtocolError("tool call arguments are not JSON", call.dump());
            }
            if (!req.arguments.is_object())
                throw ToolProtocolError("tool call arguments must be a JSON object", call.dump());
            if (req.tool_name.empty())
                throw ToolProtocolError("tool call without a function name", call.dump());
            message.tool_calls.push_back(std::move(req));
        }
    }
    if (auto id = wire.find("tool_call_id"); id != wire.end() && id->is_string())
        message.tool_call_id = id->get<std::string>();
    return message;
}

json to_wire(const ToolSpec& spec)
{
    return {{"type", "function"},
            {"function", {{"name", spec.name}, {"description", spec.description}, {"parameters", spec.parameters}}}};
}

json to_wire_request(const CompletionRequest& request, const std::string& model)
{
    json messages = json::array();
    for (const auto& m : request.messages)
        messages.push_back(to_wire(m));
    json body = {{"model", model}, {"messages", std::move(messages)}, {"temperature", request.temperature}};
    if (!request.tools.empty()) {
        json tools = json::array();
        for (const auto& t : request.tools)
            tools.push_back(to_wire(t));
        body["tools"] = std::move(tools);
    }
    return body;
}

LlmResponse response_from_wire(const json& wire)
{
    auto choices = wire.find("choices");
    if (choices == wire.end() || !choices->is_array() || choices->empty())
        throw ProtocolError("completion payload has no choices");
    auto const& first = (*choices)[0];
    if (!first.contains("message"))
        throw ProtocolError("completion choice has no message");

    LlmResponse response;
    response.message = message_from_wire(first["message"]);
    if (response.message.role != Role::assistant)
        throw ProtocolError("completion message is not from the assistant");

    if (auto usage = wire.find("usage"); usage != wire.end() && usage->is_object()
        && usage->contains("prompt_tokens") && usage->contains("completion_tokens")) {
        response.usage.input_tokens = (*usage)["prompt_tokens"].get<std::int64_t>();
        response.usage.output_tokens = (*usage)["completion_tokens"].get<std::int64_t>();
    } else {
        response.usage.estimated = true;
    }
    return response;
}

ChatCompletionsBackend::ChatCompletionsBackend(ChatCompletionsOptions options)
    : options_(std::move(options))
{
    if (options_.endpoint.empty())
        throw InputError("chat completion endpoint is not configured");
}

LlmResponse ChatCompletionsBackend::complete(const CompletionRequest& request)
{
    http::Request req;
    req.method = "POST";
    req.url = options_.endpoint;
    if (req.url.find("/chat/completions") == std::string::npos) {
        if (!req.url.empty() && req.url.back() == '/')
            req.url.pop_back();
        req.url += "/chat/completions";
    }
    req.body = to_wire_request(request, options_.model).dump();
    req.content_type = "application/json";
    req.timeout = options_.timeout;
    if (!options_.api_key.empty())
        req.headers["Authorization"] = "Bearer " + options_.api_key;

    auto const res = http::send(req);
    if (res.status >= 500 || res.status == 429)
        throw TransportError("chat completion endpoint returned " + std::to_string(res.status));
    if (res.status < 200 || res.status >= 300)
        throw ProtocolError("chat completion endpoint returned " + std::to_string(res.status) + ": " + res.body);

    json wire;
    try {
        wire = json::parse(res.body);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed completion payload: ") + e.what());
    }
    auto response = response_from_wire(wire);
    if (response.usage.estimated) {
        response.usage.input_tokens = estimate_tokens(request.messages);
        response.usage.output_tokens = estimate_tokens(std::span<const ChatMessage>(&response.message, 1));
    }
    return response;
}

// --- scripted ------------------------------------------------------------------

PromptPredicate prompt_contains(std::string needle)
{
    return [needle = std::move(needle)](std::span<const ChatMessage> messages, std::span<const ToolSpec>) {
        for (const auto& m : messages)
            if (m.content.find(needle) != std::string::npos)
                return true;
        return false;
    };
}

ScriptedResponse scripted_text(std::string text, TokenUsage usage)
{
    return {{ChatMessage::assistant(std::move(text)), usage}, {}, {}};
}

ScriptedResponse scripted_tool_call(std::string call_id, std::string tool_name, json arguments, TokenUsage usage)
{
    ToolCallRequest call{std::move(call_id), std::move(tool_name), std::move(arguments)};
    return {{ChatMessage::assistant("", {std::move(call)}), usage}, {}, {}};
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptedResponse> responses)
{
    script(std::move(responses));
}

void ScriptedBackend::script(std::vector<ScriptedResponse> responses)
{
    if (responses.empty())
        throw InputError("a script needs at least one response");
    std::lock_guard lock(mutex_);
    for (auto& r : responses)
        queue_.push_back(std::move(r));
}

std::size_t ScriptedBackend::remaining() const
{
    std::lock_guard lock(mutex_);
    return queue_.size();
}

LlmResponse ScriptedBackend::complete(const CompletionRequest& request)
{
    if (busy_.exchange(true))
        throw ContractViolation("scripted backend used by more than one caller at once");
    struct Release {
        std::atomic<bool>& flag;
        ~Release() { flag = false; }
    } release{busy_};

    std::lock_guard lock(mutex_);
    captured_.emplace_back(request.messages.begin(), request.messages.end());
    auto const index = ++consumed_;
    if (queue_.empty())
        throw ScriptUnderrunError("script exhausted at call " + std::to_string(index));
    auto next = std::move(queue_.front());
    queue_.pop_front();
    if (next.expect && !next.expect(request.messages, request.tools))
        throw ScriptMismatchError(index, next.expect_description.empty() ? "prompt predicate failed"
                                                                         : next.expect_description);
    return next.response;
}

std::vector<ScriptedResponse> load_script(const json& document)
{
    if (!document.is_array())
        throw InputError("script document must be a JSON array");
    std::vector<ScriptedResponse> out;
    std::size_t n = 0;
    for (const auto& entry : document) {
        ++n;
        ScriptedResponse r;
        r.response.message = ChatMessage::assistant(entry.value("content", ""));
        if (auto calls = entry.find("tool_calls"); calls != entry.end()) {
            for (const auto& c : *calls) {
                r.response.message.tool_calls.push_back(
                    {c.value("id", "call_" + std::to_string(n)), c.at("name").get<std::string>(),
                     c.value("arguments", json::object())});
            }
        }
        if (auto usage = entry.find("usage"); usage != entry.end()) {
            r.response.usage.input_tokens = usage->value("input_tokens", 0);
            r.response.usage.output_tokens = usage->value("output_tokens", 0);
        }
        if (auto needle = entry.find("expect_contains"); needle != entry.end()) {
            r.expect = prompt_contains(needle->get<std::string>());
            r.expect_description = "prompt does not contain '" + needle->get<std::string>() + "'";
        }
        out.push_back(std::move(r));
    }
    return out;
}

// --- gateway ---------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<LlmBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(options)
{
    if (!backend_)
        throw InputError("gateway needs a backend");
    if (options_.max_attempts < 1)
        options_.max_attempts = 1;
}

LlmResponse Gateway::complete(std::span<const ChatMessage> messages, std::span<const ToolSpec> tools)
{
    if (messages.empty())
        throw InputError("complete() needs at least one message");
    if (messages.front().role != Role::system)
        throw InputError("the first message must be the system prompt");
    for (const auto& m : messages)
        validate(m);

    {
        std::lock_guard lock(usage_mutex_);
        ++usage_.calls;
    }

    CompletionRequest request{messages, tools, options_.temperature};
    LlmResponse response;
    for (int attempt = 1;; ++attempt) {
        try {
            response = backend_->complete(request);
            break;
        } catch (const TransportError& e) {
            if (attempt >= options_.max_attempts) {
                if (dynamic_cast<const TimeoutError*>(&e))
                    throw TimeoutError(e.what(), attempt);
                throw TransportError(e.what(), attempt);
            }
            std::this_thread::sleep_for(options_.backoff * (1 << (attempt - 1)));
        }
    }

    if (response.message.role != Role::assistant)
        throw ProtocolError("backend returned a non-assistant message");
    for (const auto& call : response.message.tool_calls) {
        auto spec = std::find_if(tools.begin(), tools.end(), [&](const ToolSpec& t) { return t.name == call.tool_name; });
        if (spec == tools.end())
            throw ToolProtocolError("model called unknown tool '" + call.tool_name + "'", to_wire(response.message).dump());
        if (auto err = check_arguments(spec->parameters, call.arguments); !err.empty())
            throw ToolProtocolError("invalid arguments for '" + call.tool_name + "': " + err,
                                    to_wire(response.message).dump());
    }

    std::lock_guard lock(usage_mutex_);
    usage_.input_tokens += response.usage.input_tokens;
    usage_.output_tokens += response.usage.output_tokens;
    usage_.estimated = usage_.estimated || response.usage.estimated;
    return response;
}

UsageSnapshot Gateway::usage_snapshot() const
{
    std::lock_guard lock(usage_mutex_);
    return usage_;
}

void Gateway::reset_usage()
{
    std::lock_guard lock(usage_mutex_);
    usage_ = {};
}

} // namespace kgqa
