// SPDX-License-Identifier: Apache-2.0
//
// GET /?question=...&dataset=...  ->  {"dataset", "question", "query"}
#pragma once

#include "kgqa/agent.hpp"
#include "kgqa/embeddings.hpp"
#include "kgqa/experience_pool.hpp"
#include "kgqa/sparql.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace kgqa {

struct DatasetBinding {
    std::shared_ptr<Triplestore> triplestore;
    std::shared_ptr<const ExperiencePool> pool; ///< may be null
    std::string language = "en";
};

struct ServiceReply {
    int status = 200;
    json body;
};

/// Transport-independent request handling. The agent is shared across
/// requests; it and everything it uses must be safe for concurrent calls.
class AnsweringService {
public:
    AnsweringService(Agent& agent, std::shared_ptr<const Embedder> embedder,
                     std::map<std::string, DatasetBinding> datasets,
                     std::chrono::milliseconds request_timeout = std::chrono::seconds(120));

    /// 200 with the query (empty plus "diagnostics" when the agent produced
    /// none); 422 for missing parameters; 404 for an unknown dataset; 500 when
    /// infrastructure fails outright.
    ServiceReply handle(const std::optional<std::string>& question, const std::optional<std::string>& dataset);

    const std::map<std::string, DatasetBinding>& datasets() const noexcept { return datasets_; }

private:
    Agent& agent_;
    std::shared_ptr<const Embedder> embedder_;
    std::map<std::string, DatasetBinding> datasets_;
    std::chrono::milliseconds request_timeout_;
};

/// Blocking HTTP server around `service`. `on_bound` receives the actual port
/// (useful with port 0). Returns when stop_serving() is called from elsewhere.
class HttpFrontend {
public:
    explicit HttpFrontend(AnsweringService& service, std::size_t worker_threads = 8);
    ~HttpFrontend();

    HttpFrontend(const HttpFrontend&) = delete;
    HttpFrontend& operator=(const HttpFrontend&) = delete;

    /// Binds and serves; throws IoError when the address cannot be bound.
    void serve(const std::string& host, int port, const std::function<void(int)>& on_bound = {});
    /// Binds to an ephemeral port and serves on a background thread.
    int start_background(const std::string& host = "127.0.0.1");
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace kgqa
