#pragma once

// Local HTTP server for the score and vector wire protocols.

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace asmqa::testkit {

class StubServer {
public:
    using Handler = std::function<nlohmann::json(const nlohmann::json& request)>;

    /// `status` lets a test force error responses; 200 uses `handler`.
    explicit StubServer(Handler handler) : handler_(std::move(handler)) {
        server_.Post("/rpc", [this](const httplib::Request& req, httplib::Response& res) {
            ++calls_;
            {
                std::lock_guard lock(mu_);
                last_auth_ = req.get_header_value("Authorization");
            }
            if (fail_next_ > 0) {
                --fail_next_;
                res.status = 503;
                return;
            }
            if (status_ != 200) {
                res.status = status_;
                return;
            }
            res.set_content(handler_(nlohmann::json::parse(req.body)).dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }

    ~StubServer() {
        server_.stop();
        thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/rpc"; }
    int calls() const { return calls_; }
    void set_status(int status) { status_ = status; }
    void fail_next(int n) { fail_next_ = n; }
    std::string last_auth() const {
        std::lock_guard lock(mu_);
        return last_auth_;
    }

private:
    Handler handler_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> calls_{0};
    std::atomic<int> status_{200};
    std::atomic<int> fail_next_{0};
    mutable std::mutex mu_;
    std::string last_auth_;
};

}  // namespace asmqa::testkit
