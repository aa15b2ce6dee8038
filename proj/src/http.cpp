// SPDX-License-Identifier: Apache-2.0
#include "kgqa/http.hpp"

#include "kgqa/error.hpp"

#include <httplib.h>

namespace kgqa::http {

std::pair<std::string, std::string> split_url(const std::string& url)
{
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw InputError("URL has no scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos)
        return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

Response send(const Request& request)
{
    auto [base, path] = split_url(request.url);

    httplib::Client client(base);
    if (!client.is_valid())
        throw TransportError("unsupported endpoint " + base);

    auto const seconds = request.timeout.count() / 1000;
    auto const micros = (request.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    client.set_follow_location(true);

    httplib::Headers headers(request.headers.begin(), request.headers.end());

    if (!request.query.empty()) {
        httplib::Params params(request.query.begin(), request.query.end());
        path = httplib::append_query_params(path, params);
    }

    auto const started = std::chrono::steady_clock::now();
    httplib::Result result;
    if (request.method == "GET")
        result = client.Get(path, headers);
    else if (request.method == "POST")
        result = client.Post(path, headers, request.body, request.content_type);
    else
        throw InputError("unsupported HTTP method " + request.method);

    if (!result) {
        auto const elapsed = std::chrono::steady_clock::now() - started;
        auto const message = httplib::to_string(result.error());
        if (result.error() == httplib::Error::ConnectionTimeout || elapsed >= request.timeout)
            throw TimeoutError("request to " + base + " timed out: " + message);
        throw TransportError("request to " + base + " failed: " + message);
    }
    return {result->status, result->body};
}

} // namespace kgqa::http
