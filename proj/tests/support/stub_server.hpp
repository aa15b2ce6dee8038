// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <httplib.h>

#include <atomic>
#include <string>
#include <thread>

namespace kgqa::testing {

/// Loopback httplib server on an ephemeral port, torn down on destruction.
class StubServer {
public:
    StubServer() = default;
    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;
    ~StubServer() { stop(); }

    httplib::Server& server() { return server_; }

    int start()
    {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    void stop()
    {
        server_.stop();
        if (thread_.joinable())
            thread_.join();
    }

    std::string url(const std::string& path = "") const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

    std::atomic<int> hits{0};

private:
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
};

} // namespace kgqa::testing
