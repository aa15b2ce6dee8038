// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "kgqa/agent.hpp"
#include "kgqa/embeddings.hpp"
#include "kgqa/evaluation.hpp"
#include "kgqa/experience_pool.hpp"
#include "kgqa/llm.hpp"
#include "kgqa/nel.hpp"
#include "kgqa/prompts.hpp"
#include "kgqa/sparql.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace kgqa {

struct LlmConfig {
    std::string backend = "openai"; ///< "openai" or "scripted"
    std::string endpoint = "https://api.openai.com/v1";
    std::string model = "gpt-4o-2024-05-13";
    std::string api_key;
    std::string api_key_env = "OPENAI_API_KEY";
    std::string script; ///< scripted backend: path to a JSON script
    double temperature = 0.0;
    int max_attempts = 3;
    double timeout_s = 120.0;
};

struct EmbeddingConfig {
    std::string backend = "hash"; ///< "hash" or "http"
    std::string endpoint;
    std::string model = "intfloat/multilingual-e5-large";
    long dimension = 256;
    std::string prefix = "query: ";
    std::uint64_t seed = 0x5eed;
};

struct EntityServiceConfig {
    std::string backend = "wikidata"; ///< "wikidata" or "mock"
    std::string endpoint = "https://www.wikidata.org/w/api.php";
    std::map<std::string, std::string> mock;
};

struct RelationServiceConfig {
    std::string backend = "falcon"; ///< "falcon" or "mock"
    std::string endpoint = "https://labs.tib.eu/falcon/falcon2/api?mode=long&db=1";
    std::string result_key = "relations";
    std::map<std::string, std::vector<std::string>> mock;
};

struct NelConfig {
    EntityServiceConfig entity;
    RelationServiceConfig relation;
    std::size_t cache_capacity = 10'000; ///< 0 disables caching
};

struct TriplestoreConfig {
    std::string backend = "http"; ///< "http" or "mock"
    std::string endpoint = "https://query.wikidata.org/bigdata/namespace/wdq/sparql";
    bool use_post = true;
    std::map<std::string, SparqlResponse> mock_queries;
    std::optional<SparqlResponse> mock_default;
};

struct TranslatorConfig {
    std::string backend = "identity"; ///< "identity", "http" or "mock"
    std::string endpoint;
    std::map<std::string, std::string> mock;
};

struct DatasetProfile {
    std::string triplestore = "wikidata";
    std::string pool;
    std::string language = "en";
};

struct ServiceConfig {
    std::string host = "0.0.0.0";
    int port = 8000;
    PromptPolicy prompt_policy = PromptPolicy::english_only;
    std::map<std::string, DatasetProfile> datasets;
};

struct RunConfig {
    LlmConfig llm;
    EmbeddingConfig embedding;
    NelConfig nel;
    std::map<std::string, TriplestoreConfig> triplestores{{"wikidata", {}}};
    std::string default_triplestore = "wikidata";
    std::string pool;
    std::string prompts_dir;
    PromptPolicy prompt_policy = PromptPolicy::native;
    std::size_t top_n_plans = 3;
    std::size_t top_n_queries = 3;
    QueryExampleSource query_source = QueryExampleSource::gold;
    bool filter_pool_by_language = false;
    int max_tool_rounds = 3;
    std::int64_t context_token_budget = 16384;
    std::size_t feedback_byte_budget = 4096;
    double sparql_timeout_s = 60.0;
    double request_timeout_s = 120.0;
    std::size_t parallelism = 1;
    TranslatorConfig translator;
    ServiceConfig service;
};

/// Parses a config tree; relative paths resolve against `base_dir`.
/// Throws ConfigError.
RunConfig config_from_json(const json& document, const std::filesystem::path& base_dir = {});
json to_json(const RunConfig& config);

/// Reads the file, then applies environment overrides: KGQA_LLM_API_KEY (or the
/// variable named by llm.api_key_env), KGQA_LLM_ENDPOINT, KGQA_LLM_MODEL.
RunConfig load_config(const std::filesystem::path& path);
void apply_environment(RunConfig& config);

/// Everything an agent run needs, built from a RunConfig.
struct Runtime {
    std::shared_ptr<LlmBackend> backend;
    std::unique_ptr<Gateway> gateway;
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<LookupCache> cache;
    std::shared_ptr<Linker> linker;
    std::map<std::string, std::shared_ptr<Triplestore>> triplestores;
    std::shared_ptr<Translator> translator;
    PromptRegistry prompts;
    AgentOptions agent_options;

    Triplestore& triplestore(const std::string& name) const;
    Agent make_agent(std::optional<PromptPolicy> policy = {}) const;
};

Runtime build_runtime(const RunConfig& config);

} // namespace kgqa
