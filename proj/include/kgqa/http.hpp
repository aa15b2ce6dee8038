// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace kgqa::http {

struct Response {
    int status = 0;
    std::string body;
};

struct Request {
    std::string method = "GET";
    std::string url;
    std::vector<std::pair<std::string, std::string>> query;
    std::map<std::string, std::string> headers;
    std::string body;
    std::string content_type;
    std::chrono::milliseconds timeout{60'000};
};

/// Performs one request. Network failures raise TransportError, an elapsed
/// timeout raises TimeoutError. Non-2xx statuses are returned, not thrown.
Response send(const Request& request);

/// Splits "scheme://host:port/path?x" into ("scheme://host:port", "/path?x").
std::pair<std::string, std::string> split_url(const std::string& url);

} // namespace kgqa::http
