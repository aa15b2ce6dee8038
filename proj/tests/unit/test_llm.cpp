// SPDX-License-Identifier: Apache-2.0
#include "kgqa/error.hpp"
#include "kgqa/llm.hpp"
#include "kgqa/nel.hpp"
#include "scenarios.hpp"
#include "stub_server.hpp"

#include <doctest.h>

#include <thread>

using namespace kgqa;
namespace kt = kgqa::testing;

namespace {

std::vector<ChatMessage> conversation()
{
    return {ChatMessage::system("sys"), ChatMessage::user("hello there")};
}

class FlakyBackend final : public LlmBackend {
public:
    explicit FlakyBackend(int failures) : failures_(failures) {}
    LlmResponse complete(const CompletionRequest&) override
    {
        ++attempts;
        if (attempts <= failures_)
            throw TransportError("connection reset");
        return {ChatMessage::assistant("ok"), {3, 1, false}};
    }
    std::string model_name() const override { return "flaky"; }
    int attempts = 0;

private:
    int failures_;
};

} // namespace

TEST_CASE("chat message invariants")
{
    CHECK_NOTHROW(validate(ChatMessage::tool("c1", "out")));
    CHECK_THROWS_AS(validate(ChatMessage{Role::tool, "x", {}, std::nullopt}), InputError);
    CHECK_THROWS_AS(validate(ChatMessage{Role::user, "x", {}, std::string("c1")}), InputError);
    CHECK_THROWS_AS(validate(ChatMessage{Role::user, "x", {{"c1", "t", json::object()}}, {}}), InputError);
}

TEST_CASE("tool call survives the wire format unchanged")
{
    auto const msg = ChatMessage::assistant("", {{"call_7", kLinkToolName, {{"label", "Angela Merkel"}}}});
    auto const wire = to_wire(msg);
    CHECK(wire["tool_calls"][0]["function"]["arguments"].is_string());
    auto const back = message_from_wire(wire);
    CHECK(back == msg);
    CHECK(to_wire(back) == wire);

    for (auto const& m : {ChatMessage::system("s"), ChatMessage::user("ü"), ChatMessage::tool("call_7", "{}")})
        CHECK(message_from_wire(to_wire(m)) == m);
}

TEST_CASE("undecodable tool arguments are a tool-protocol error with the raw payload")
{
    json wire = {{"role", "assistant"},
                 {"content", nullptr},
                 {"tool_calls",
                  {{{"id", "c"}, {"type", "function"}, {"function", {{"name", "wikidata_el"}, {"arguments", "{oops"}}}}}}};
    try {
        message_from_wire(wire);
        FAIL("expected ToolProtocolError");
    } catch (const ToolProtocolError& e) {
        CHECK(e.raw_payload().find("{oops") != std::string::npos);
    }
}

TEST_CASE("request wire shape")
{
    auto const messages = conversation();
    std::vector<ToolSpec> const tools{link_tool_spec()};
    auto const wire = to_wire_request({messages, tools, 0.0}, "gpt-4o");
    CHECK(wire["model"] == "gpt-4o");
    CHECK(wire["temperature"] == 0.0);
    CHECK(wire["messages"].size() == 2);
    CHECK(wire["tools"][0]["type"] == "function");
    CHECK(wire["tools"][0]["function"]["name"] == "wikidata_el");
    auto const no_tools = to_wire_request({messages, {}, 0.0}, "m");
    CHECK_FALSE(no_tools.contains("tools"));
}

TEST_CASE("response parsing and usage")
{
    json wire = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "SELECT 1"}}}}}},
                 {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 3}}}};
    auto const r = response_from_wire(wire);
    CHECK(r.message.content == "SELECT 1");
    CHECK(r.usage == TokenUsage{12, 3, false});

    wire.erase("usage");
    CHECK(response_from_wire(wire).usage.estimated);
    CHECK_THROWS_AS(response_from_wire(json{{"choices", json::array()}}), ProtocolError);
}

TEST_CASE("token estimate is whitespace tokens times 1.3, rounded up")
{
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("one") == 2);            // ceil(1.3)
    CHECK(estimate_tokens("a b c d e f g h i j") == 13);
    CHECK(estimate_tokens("  spaced \t out\n") == 3); // ceil(2.6)
}

TEST_CASE("argument schema subset")
{
    auto const schema = link_tool_spec().parameters;
    CHECK(check_arguments(schema, {{"entities", {"a"}}, {"relations", json::array()}}).empty());
    CHECK(check_arguments(schema, {{"label", "Angela Merkel"}}).empty());
    CHECK_FALSE(check_arguments(schema, {{"entities", "not a list"}}).empty());
    CHECK_FALSE(check_arguments(schema, {{"entities", {1, 2}}}).empty());
    CHECK_FALSE(check_arguments(schema, {{"surprise", true}}).empty());
    CHECK_FALSE(check_arguments(schema, json::array()).empty());
}

TEST_CASE("gateway: counting, validation and tool checks")
{
    auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedResponse>{
        scripted_text("first", {10, 2}),
        scripted_tool_call("c1", kLinkToolName, {{"label", "Angela Merkel"}}, {5, 5}),
        scripted_tool_call("c2", "web_search", {{"q", "x"}}),
        scripted_tool_call("c3", kLinkToolName, {{"entities", 42}}),
    });
    Gateway gw(backend, kt::fast_gateway());
    auto const messages = conversation();
    std::vector<ToolSpec> const tools{link_tool_spec()};

    CHECK_THROWS_AS(gw.complete(std::vector<ChatMessage>{ChatMessage::user("no system")}), InputError);
    CHECK(gw.usage_snapshot().calls == 0);

    CHECK(gw.complete(messages).message.content == "first");
    auto const call = gw.complete(messages, tools);
    REQUIRE(call.message.tool_calls.size() == 1);
    CHECK(call.message.tool_calls[0].tool_name == "wikidata_el");
    CHECK(call.message.tool_calls[0].arguments == json{{"label", "Angela Merkel"}});

    CHECK_THROWS_AS(gw.complete(messages, tools), ToolProtocolError);
    CHECK_THROWS_AS(gw.complete(messages, tools), ToolProtocolError);

    auto const usage = gw.usage_snapshot();
    CHECK(usage.calls == 4);
    CHECK(usage.input_tokens == 15);
    CHECK(usage.output_tokens == 7);
    gw.reset_usage();
    CHECK(gw.usage_snapshot() == UsageSnapshot{});
}

TEST_CASE("gateway retries transport errors up to three attempts")
{
    auto two = std::make_shared<FlakyBackend>(2);
    Gateway ok(two, kt::fast_gateway());
    CHECK(ok.complete(conversation()).message.content == "ok");
    CHECK(two->attempts == 3);
    CHECK(ok.usage_snapshot().calls == 1);

    auto three = std::make_shared<FlakyBackend>(3);
    Gateway failing(three, kt::fast_gateway());
    try {
        failing.complete(conversation());
        FAIL("expected TransportError");
    } catch (const TransportError& e) {
        CHECK(e.attempts() == 3);
    }
    CHECK(three->attempts == 3);
}

TEST_CASE("scripted backend: underrun, expectations, capture")
{
    auto first = scripted_text("a");
    first.expect = prompt_contains("needle");
    first.expect_description = "mentions the needle";
    auto backend = std::make_shared<ScriptedBackend>(std::vector<ScriptedResponse>{first, scripted_text("b")});
    Gateway gw(backend, kt::fast_gateway());

    try {
        gw.complete(conversation());
        FAIL("expected mismatch");
    } catch (const ScriptMismatchError& e) {
        CHECK(e.call_index() == 1);
    }

    auto backend2 = std::make_shared<ScriptedBackend>(std::vector<ScriptedResponse>{first});
    Gateway gw2(backend2, kt::fast_gateway());
    std::vector<ChatMessage> const with_needle{ChatMessage::system("has needle"), ChatMessage::user("u")};
    CHECK(gw2.complete(with_needle).message.content == "a");
    CHECK(backend2->captured_prompts().size() == 1);
    CHECK(backend2->captured_prompts()[0] == with_needle);
    CHECK(backend2->remaining() == 0);
    CHECK_THROWS_AS(gw2.complete(with_needle), ScriptUnderrunError);
}

TEST_CASE("script files")
{
    auto const script = load_script(json::parse(R"([
        {"content": "1. plan", "usage": {"input_tokens": 7, "output_tokens": 2}, "expect_contains": "step by step"},
        {"tool_calls": [{"name": "wikidata_el", "arguments": {"label": "Berlin"}}]}
    ])"));
    REQUIRE(script.size() == 2);
    CHECK(script[0].response.message.content == "1. plan");
    CHECK(script[0].response.usage == TokenUsage{7, 2, false});
    CHECK(script[0].expect);
    CHECK(script[1].response.message.tool_calls.at(0).call_id == "call_2");
    CHECK_THROWS(load_script(json::object()));
}

TEST_CASE("chat completions client against a stub endpoint")
{
    kt::StubServer stub;
    json seen;
    std::string auth;
    int status = 200;
    bool with_usage = true;
    stub.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        ++stub.hits;
        seen = json::parse(req.body);
        auth = req.get_header_value("Authorization");
        json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "SELECT ?x WHERE {}"}}}}}}};
        if (with_usage)
            body["usage"] = {{"prompt_tokens", 21}, {"completion_tokens", 4}};
        res.status = status;
        res.set_content(body.dump(), "application/json");
    });
    stub.start();

    auto backend = std::make_shared<ChatCompletionsBackend>(
        ChatCompletionsOptions{stub.url("/v1"), "gpt-4o-2024-05-13", "sk-test", std::chrono::seconds(5)});
    Gateway gw(backend, kt::fast_gateway());

    auto r = gw.complete(conversation());
    CHECK(r.message.content == "SELECT ?x WHERE {}");
    CHECK(r.usage == TokenUsage{21, 4, false});
    CHECK(seen["model"] == "gpt-4o-2024-05-13");
    CHECK(seen["temperature"] == 0.0);
    CHECK(auth == "Bearer sk-test");

    with_usage = false;
    r = gw.complete(conversation());
    CHECK(r.usage.estimated);
    CHECK(r.usage.input_tokens == estimate_tokens(conversation()));
    CHECK(gw.usage_snapshot().estimated);

    status = 503;
    stub.hits = 0;
    CHECK_THROWS_AS(gw.complete(conversation()), TransportError);
    CHECK(stub.hits == 3);

    status = 400;
    stub.hits = 0;
    CHECK_THROWS_AS(gw.complete(conversation()), ProtocolError);
    CHECK(stub.hits == 1);
}

TEST_CASE("a stalled endpoint surfaces as a timeout")
{
    kt::StubServer stub;
    stub.server().Post("/chat/completions", [](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(600));
        res.set_content("{}", "application/json");
    });
    stub.start();
    auto backend = std::make_shared<ChatCompletionsBackend>(
        ChatCompletionsOptions{stub.url(), "m", "", std::chrono::milliseconds(150)});
    GatewayOptions once;
    once.max_attempts = 1;
    Gateway gw(backend, once);
    CHECK_THROWS_AS(gw.complete(conversation()), TimeoutError);
}
