// SPDX-License-Identifier: Apache-2.0
#include "kgqa/service.hpp"

#include "kgqa/error.hpp"

#include <httplib.h>

#include <thread>

namespace kgqa {

AnsweringService::AnsweringService(Agent& agent, std::shared_ptr<const Embedder> embedder,
                                   std::map<std::string, DatasetBinding> datasets,
                                   std::chrono::milliseconds request_timeout)
    : agent_(agent), embedder_(std::move(embedder)), datasets_(std::move(datasets)), request_timeout_(request_timeout)
{
    for (auto const& [name, d] : datasets_)
        if (!d.triplestore)
            throw InputError("dataset '" + name + "' has no triplestore");
}

ServiceReply AnsweringService::handle(const std::optional<std::string>& question,
                                      const std::optional<std::string>& dataset)
{
    std::vector<std::string> missing;
    if (!question || question->find_first_not_of(" \t\r\n") == std::string::npos)
        missing.emplace_back("question");
    if (!dataset || dataset->empty())
        missing.emplace_back("dataset");
    if (!missing.empty())
        return {422, {{"error", "missing required parameter"}, {"missing", missing}}};

    auto it = datasets_.find(*dataset);
    if (it == datasets_.end()) {
        std::vector<std::string> known;
        for (auto const& [name, _] : datasets_)
            known.push_back(name);
        return {404, {{"error", "unknown dataset '" + *dataset + "'"}, {"datasets", known}}};
    }
    auto const& binding = it->second;

    try {
        auto const deadline = std::chrono::steady_clock::now() + request_timeout_;
        auto record = agent_.run_full(*question, binding.language, binding.pool.get(), embedder_.get(),
                                      *binding.triplestore, deadline);
        json body{{"dataset", *dataset}, {"question", *question}, {"query", record.final_query}};
        // an agent that produced nothing is still a served request
        if (record.final_query.empty())
            body["diagnostics"] = record.diagnostics;
        return {200, std::move(body)};
    } catch (const std::exception& e) {
        return {500, {{"error", e.what()}, {"dataset", *dataset}, {"question", *question}}};
    }
}

// --- HTTP binding -------------------------------------------------------------------

struct HttpFrontend::Impl {
    AnsweringService& service;
    httplib::Server server;
    std::thread background;

    Impl(AnsweringService& s, std::size_t workers) : service(s)
    {
        server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
        server.Get("/", [this](const httplib::Request& req, httplib::Response& res) {
            auto param = [&](const char* key) -> std::optional<std::string> {
                if (!req.has_param(key))
                    return std::nullopt;
                return req.get_param_value(key);
            };
            auto reply = service.handle(param("question"), param("dataset"));
            res.status = reply.status;
            res.set_content(reply.body.dump(-1, ' ', false, json::error_handler_t::replace), "application/json");
        });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            std::string what = "internal error";
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                what = e.what();
            } catch (...) {
            }
            res.status = 500;
            res.set_content(json{{"error", what}}.dump(), "application/json");
        });
    }
};

HttpFrontend::HttpFrontend(AnsweringService& service, std::size_t worker_threads)
    : impl_(std::make_unique<Impl>(service, std::max<std::size_t>(1, worker_threads)))
{
}

HttpFrontend::~HttpFrontend()
{
    stop();
}

void HttpFrontend::serve(const std::string& host, int port, const std::function<void(int)>& on_bound)
{
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
        if (bound < 0)
            throw IoError("cannot bind " + host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        throw IoError("cannot bind " + host + ":" + std::to_string(port));
    }
    if (on_bound)
        on_bound(bound);
    impl_->server.listen_after_bind();
}

int HttpFrontend::start_background(const std::string& host)
{
    int const port = impl_->server.bind_to_any_port(host);
    if (port < 0)
        throw IoError("cannot bind " + host);
    impl_->background = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void HttpFrontend::stop()
{
    if (!impl_)
        return;
    impl_->server.stop();
    if (impl_->background.joinable())
        impl_->background.join();
}

} // namespace kgqa
