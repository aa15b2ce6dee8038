// SPDX-License-Identifier: Apache-2.0
#include "kgqa/config.hpp"

#include "kgqa/error.hpp"

#include <cstdlib>
#include <fstream>

namespace kgqa {

namespace {

namespace fs = std::filesystem;

std::chrono::milliseconds to_ms(double seconds)
{
    return std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0));
}

std::string resolve_path(const std::string& value, const fs::path& base)
{
    if (value.empty() || base.empty() || fs::path(value).is_absolute())
        return value;
    return (base / value).lexically_normal().string();
}

template <typename T>
void read(const json& node, const char* key, T& target)
{
    if (auto it = node.find(key); it != node.end() && !it->is_null())
        target = it->get<T>();
}

SparqlResponse response_from_json(const json& node)
{
    SparqlResponse r;
    r.status = node.value("status", 200);
    auto const& body = node.at("body");
    r.body = body.is_string() ? body.get<std::string>() : body.dump();
    return r;
}

json response_to_json(const SparqlResponse& r)
{
    return {{"status", r.status}, {"body", r.body}};
}

void require_one_of(const std::string& value, std::initializer_list<const char*> allowed, const char* what)
{
    for (auto const* a : allowed)
        if (value == a)
            return;
    std::string list;
    for (auto const* a : allowed)
        list += (list.empty() ? "" : ", ") + std::string(a);
    throw ConfigError(std::string(what) + " must be one of {" + list + "}, got '" + value + "'");
}

QueryExampleSource query_source_from_string(const std::string& text)
{
    if (text == "gold") return QueryExampleSource::gold;
    if (text == "generated") return QueryExampleSource::generated;
    throw ConfigError("query_source must be 'gold' or 'generated', got '" + text + "'");
}

} // namespace

RunConfig config_from_json(const json& document, const fs::path& base_dir)
{
    if (!document.is_object())
        throw ConfigError("config must be a JSON object");
    RunConfig c;
    try {
        if (auto it = document.find("llm"); it != document.end()) {
            auto& n = *it;
            read(n, "backend", c.llm.backend);
            read(n, "endpoint", c.llm.endpoint);
            read(n, "model", c.llm.model);
            read(n, "api_key", c.llm.api_key);
            read(n, "api_key_env", c.llm.api_key_env);
            read(n, "script", c.llm.script);
            read(n, "temperature", c.llm.temperature);
            read(n, "max_attempts", c.llm.max_attempts);
            read(n, "timeout_s", c.llm.timeout_s);
            c.llm.script = resolve_path(c.llm.script, base_dir);
        }
        if (auto it = document.find("embedding"); it != document.end()) {
            auto& n = *it;
            read(n, "backend", c.embedding.backend);
            read(n, "endpoint", c.embedding.endpoint);
            read(n, "model", c.embedding.model);
            read(n, "dimension", c.embedding.dimension);
            read(n, "prefix", c.embedding.prefix);
            read(n, "seed", c.embedding.seed);
        }
        if (auto it = document.find("nel"); it != document.end()) {
            auto& n = *it;
            read(n, "cache_capacity", c.nel.cache_capacity);
            if (auto e = n.find("entity"); e != n.end()) {
                read(*e, "backend", c.nel.entity.backend);
                read(*e, "endpoint", c.nel.entity.endpoint);
                read(*e, "mock", c.nel.entity.mock);
            }
            if (auto r = n.find("relation"); r != n.end()) {
                read(*r, "backend", c.nel.relation.backend);
                read(*r, "endpoint", c.nel.relation.endpoint);
                read(*r, "result_key", c.nel.relation.result_key);
                read(*r, "mock", c.nel.relation.mock);
            }
        }
        if (auto it = document.find("triplestores"); it != document.end()) {
            c.triplestores.clear();
            for (auto& [name, n] : it->items()) {
                TriplestoreConfig t;
                read(n, "backend", t.backend);
                read(n, "endpoint", t.endpoint);
                read(n, "use_post", t.use_post);
                if (auto q = n.find("mock_queries"); q != n.end())
                    for (auto& [query, resp] : q->items())
                        t.mock_queries[query] = response_from_json(resp);
                if (auto d = n.find("mock_default"); d != n.end() && !d->is_null())
                    t.mock_default = response_from_json(*d);
                c.triplestores[name] = std::move(t);
            }
        }
        read(document, "default_triplestore", c.default_triplestore);
        read(document, "pool", c.pool);
        c.pool = resolve_path(c.pool, base_dir);
        read(document, "prompts_dir", c.prompts_dir);
        c.prompts_dir = resolve_path(c.prompts_dir, base_dir);
        if (auto it = document.find("prompt_policy"); it != document.end())
            c.prompt_policy = prompt_policy_from_string(it->get<std::string>());
        read(document, "top_n_plans", c.top_n_plans);
        read(document, "top_n_queries", c.top_n_queries);
        if (auto it = document.find("query_source"); it != document.end())
            c.query_source = query_source_from_string(it->get<std::string>());
        read(document, "filter_pool_by_language", c.filter_pool_by_language);
        read(document, "max_tool_rounds", c.max_tool_rounds);
        read(document, "context_token_budget", c.context_token_budget);
        read(document, "feedback_byte_budget", c.feedback_byte_budget);
        read(document, "sparql_timeout_s", c.sparql_timeout_s);
        read(document, "request_timeout_s", c.request_timeout_s);
        read(document, "parallelism", c.parallelism);
        if (auto it = document.find("translator"); it != document.end()) {
            read(*it, "backend", c.translator.backend);
            read(*it, "endpoint", c.translator.endpoint);
            read(*it, "mock", c.translator.mock);
        }
        if (auto it = document.find("service"); it != document.end()) {
            auto& n = *it;
            read(n, "host", c.service.host);
            read(n, "port", c.service.port);
            if (auto p = n.find("prompt_policy"); p != n.end())
                c.service.prompt_policy = prompt_policy_from_string(p->get<std::string>());
            if (auto d = n.find("datasets"); d != n.end())
                for (auto& [name, node] : d->items()) {
                    DatasetProfile profile;
                    read(node, "triplestore", profile.triplestore);
                    read(node, "pool", profile.pool);
                    read(node, "language", profile.language);
                    profile.pool = resolve_path(profile.pool, base_dir);
                    c.service.datasets[name] = std::move(profile);
                }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }

    require_one_of(c.llm.backend, {"openai", "scripted"}, "llm.backend");
    require_one_of(c.embedding.backend, {"hash", "http"}, "embedding.backend");
    require_one_of(c.nel.entity.backend, {"wikidata", "mock"}, "nel.entity.backend");
    require_one_of(c.nel.relation.backend, {"falcon", "mock"}, "nel.relation.backend");
    require_one_of(c.translator.backend, {"identity", "http", "mock"}, "translator.backend");
    for (auto const& [name, t] : c.triplestores)
        require_one_of(t.backend, {"http", "mock"}, ("triplestores." + name + ".backend").c_str());
    if (c.llm.backend == "scripted" && c.llm.script.empty())
        throw ConfigError("llm.script is required for the scripted backend");
    if (c.embedding.dimension <= 0)
        throw ConfigError("embedding.dimension must be positive");
    if (c.max_tool_rounds < 0)
        throw ConfigError("max_tool_rounds must be nonnegative");
    if (c.parallelism == 0)
        throw ConfigError("parallelism must be at least 1");
    if (!c.triplestores.contains(c.default_triplestore))
        throw ConfigError("default_triplestore '" + c.default_triplestore + "' is not configured");
    for (auto const& [name, profile] : c.service.datasets)
        if (!c.triplestores.contains(profile.triplestore))
            throw ConfigError("dataset '" + name + "' refers to unknown triplestore '" + profile.triplestore + "'");
    auto must_exist = [](const std::string& path, const char* what) {
        if (!path.empty() && !fs::exists(path))
            throw ConfigError(std::string(what) + " does not exist: " + path);
    };
    must_exist(c.llm.script, "llm.script");
    must_exist(c.prompts_dir, "prompts_dir");
    must_exist(c.pool, "pool");
    for (auto const& [name, profile] : c.service.datasets)
        must_exist(profile.pool, ("service.datasets." + name + ".pool").c_str());
    return c;
}

json to_json(const RunConfig& c)
{
    json stores = json::object();
    for (auto const& [name, t] : c.triplestores) {
        json queries = json::object();
        for (auto const& [q, r] : t.mock_queries)
            queries[q] = response_to_json(r);
        stores[name] = {{"backend", t.backend},
                        {"endpoint", t.endpoint},
                        {"use_post", t.use_post},
                        {"mock_queries", queries},
                        {"mock_default", t.mock_default ? response_to_json(*t.mock_default) : json(nullptr)}};
    }
    json datasets = json::object();
    for (auto const& [name, p] : c.service.datasets)
        datasets[name] = {{"triplestore", p.triplestore}, {"pool", p.pool}, {"language", p.language}};

    // api_key is deliberately not serialized
    return {
        {"llm",
         {{"backend", c.llm.backend},
          {"endpoint", c.llm.endpoint},
          {"model", c.llm.model},
          {"api_key_env", c.llm.api_key_env},
          {"script", c.llm.script},
          {"temperature", c.llm.temperature},
          {"max_attempts", c.llm.max_attempts},
          {"timeout_s", c.llm.timeout_s}}},
        {"embedding",
         {{"backend", c.embedding.backend},
          {"endpoint", c.embedding.endpoint},
          {"model", c.embedding.model},
          {"dimension", c.embedding.dimension},
          {"prefix", c.embedding.prefix},
          {"seed", c.embedding.seed}}},
        {"nel",
         {{"cache_capacity", c.nel.cache_capacity},
          {"entity",
           {{"backend", c.nel.entity.backend}, {"endpoint", c.nel.entity.endpoint}, {"mock", c.nel.entity.mock}}},
          {"relation",
           {{"backend", c.nel.relation.backend},
            {"endpoint", c.nel.relation.endpoint},
            {"result_key", c.nel.relation.result_key},
            {"mock", c.nel.relation.mock}}}}},
        {"triplestores", stores},
        {"default_triplestore", c.default_triplestore},
        {"pool", c.pool},
        {"prompts_dir", c.prompts_dir},
        {"prompt_policy", std::string(to_string(c.prompt_policy))},
        {"top_n_plans", c.top_n_plans},
        {"top_n_queries", c.top_n_queries},
        {"query_source", c.query_source == QueryExampleSource::gold ? "gold" : "generated"},
        {"filter_pool_by_language", c.filter_pool_by_language},
        {"max_tool_rounds", c.max_tool_rounds},
        {"context_token_budget", c.context_token_budget},
        {"feedback_byte_budget", c.feedback_byte_budget},
        {"sparql_timeout_s", c.sparql_timeout_s},
        {"request_timeout_s", c.request_timeout_s},
        {"parallelism", c.parallelism},
        {"translator",
         {{"backend", c.translator.backend}, {"endpoint", c.translator.endpoint}, {"mock", c.translator.mock}}},
        {"service",
         {{"host", c.service.host},
          {"port", c.service.port},
          {"prompt_policy", std::string(to_string(c.service.prompt_policy))},
          {"datasets", datasets}}},
    };
}

void apply_environment(RunConfig& config)
{
    auto env = [](const char* name) -> std::optional<std::string> {
        if (name == nullptr || *name == '\0')
            return std::nullopt;
        if (auto const* v = std::getenv(name); v != nullptr && *v != '\0')
            return std::string(v);
        return std::nullopt;
    };
    if (auto v = env("KGQA_LLM_API_KEY"))
        config.llm.api_key = *v;
    else if (config.llm.api_key.empty())
        if (auto v = env(config.llm.api_key_env.c_str()))
            config.llm.api_key = *v;
    if (auto v = env("KGQA_LLM_ENDPOINT"))
        config.llm.endpoint = *v;
    if (auto v = env("KGQA_LLM_MODEL"))
        config.llm.model = *v;
}

RunConfig load_config(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    json document;
    try {
        document = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + " is not valid JSON: " + e.what());
    }
    auto config = config_from_json(document, path.parent_path());
    apply_environment(config);
    return config;
}

// --- runtime ----------------------------------------------------------------------

Triplestore& Runtime::triplestore(const std::string& name) const
{
    auto it = triplestores.find(name);
    if (it == triplestores.end())
        throw ConfigError("unknown triplestore '" + name + "'");
    return *it->second;
}

Agent Runtime::make_agent(std::optional<PromptPolicy> policy) const
{
    auto options = agent_options;
    if (policy)
        options.prompt_policy = *policy;
    return Agent(*gateway, prompts, make_link_tools(linker), options);
}

Runtime build_runtime(const RunConfig& c)
{
    Runtime rt;

    if (c.llm.backend == "scripted") {
        std::ifstream in(c.llm.script, std::ios::binary);
        if (!in)
            throw ConfigError("cannot open LLM script " + c.llm.script);
        try {
            rt.backend = std::make_shared<ScriptedBackend>(load_script(json::parse(in)));
        } catch (const json::exception& e) {
            throw ConfigError("malformed LLM script: " + std::string(e.what()));
        }
    } else {
        rt.backend = std::make_shared<ChatCompletionsBackend>(
            ChatCompletionsOptions{c.llm.endpoint, c.llm.model, c.llm.api_key, to_ms(c.llm.timeout_s)});
    }
    GatewayOptions gw;
    gw.temperature = c.llm.temperature;
    gw.max_attempts = c.llm.max_attempts;
    rt.gateway = std::make_unique<Gateway>(rt.backend, gw);

    if (c.embedding.backend == "hash") {
        rt.embedder = std::make_shared<HashingEmbedder>(c.embedding.dimension, c.embedding.seed);
    } else {
        HttpEmbedderOptions eo;
        eo.endpoint = c.embedding.endpoint;
        eo.model = c.embedding.model;
        eo.dimension = c.embedding.dimension;
        eo.prefix = c.embedding.prefix;
        eo.api_key = c.llm.api_key;
        rt.embedder = std::make_shared<HttpEmbedder>(eo);
    }

    std::shared_ptr<EntityService> entities;
    if (c.nel.entity.backend == "mock")
        entities = std::make_shared<MockEntityService>(c.nel.entity.mock);
    else
        entities = std::make_shared<WikidataEntityService>(c.nel.entity.endpoint);
    std::shared_ptr<RelationService> relations;
    if (c.nel.relation.backend == "mock")
        relations = std::make_shared<MockRelationService>(c.nel.relation.mock);
    else
        relations = std::make_shared<FalconRelationService>(c.nel.relation.endpoint, c.nel.relation.result_key);
    if (c.nel.cache_capacity > 0)
        rt.cache = std::make_shared<LookupCache>(c.nel.cache_capacity);
    rt.linker = std::make_shared<Linker>(entities, relations, rt.cache);

    for (auto const& [name, t] : c.triplestores) {
        if (t.backend == "mock") {
            auto store = std::make_shared<MockTriplestore>();
            for (auto const& [q, r] : t.mock_queries)
                store->on(q, r);
            if (t.mock_default) {
                auto fallback = *t.mock_default;
                store->on_default([fallback](const std::string&) { return fallback; });
            }
            rt.triplestores[name] = std::move(store);
        } else {
            HttpTriplestoreOptions o;
            o.endpoint = t.endpoint;
            o.use_post = t.use_post;
            o.timeout = to_ms(c.sparql_timeout_s);
            rt.triplestores[name] = std::make_shared<HttpTriplestore>(o);
        }
    }

    if (c.translator.backend == "http")
        rt.translator = std::make_shared<HttpTranslator>(c.translator.endpoint);
    else if (c.translator.backend == "mock")
        rt.translator = std::make_shared<MapTranslator>(c.translator.mock);
    else
        rt.translator = std::make_shared<IdentityTranslator>();

    rt.prompts = c.prompts_dir.empty() ? PromptRegistry::builtin() : PromptRegistry::from_directory(c.prompts_dir);

    rt.agent_options.retrieval.top_n_plans = c.top_n_plans;
    rt.agent_options.retrieval.top_n_queries = c.top_n_queries;
    rt.agent_options.retrieval.query_source = c.query_source;
    rt.agent_options.max_tool_rounds = c.max_tool_rounds;
    rt.agent_options.context_token_budget = c.context_token_budget;
    rt.agent_options.feedback_byte_budget = c.feedback_byte_budget;
    rt.agent_options.prompt_policy = c.prompt_policy;
    return rt;
}

} // namespace kgqa
