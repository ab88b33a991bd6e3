#include "asmqa/http_json.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "asmqa/error.hpp"

namespace asmqa {

HttpEndpoint parse_endpoint(std::string_view url) {
    HttpEndpoint ep;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) throw Error(ErrorKind::config, "endpoint url lacks a scheme: " + std::string(url));
    ep.scheme = std::string(url.substr(0, scheme_end));
    if (ep.scheme != "http") throw Error(ErrorKind::config, "only http endpoints are supported: " + std::string(url));
    const std::string rest(url.substr(scheme_end + 3));
    const auto slash = rest.find('/');
    const std::string authority = rest.substr(0, slash);
    if (slash != std::string_view::npos) ep.path = std::string(rest.substr(slash));
    const auto colon = authority.rfind(':');
    if (colon != std::string_view::npos) {
        ep.host = std::string(authority.substr(0, colon));
        try {
            ep.port = std::stoi(std::string(authority.substr(colon + 1)));
        } catch (const std::exception&) {
            throw Error(ErrorKind::config, "bad port in endpoint url: " + std::string(url));
        }
    } else {
        ep.host = std::string(authority);
    }
    if (ep.host.empty()) throw Error(ErrorKind::config, "endpoint url lacks a host: " + std::string(url));
    return ep;
}

Json post_json(const HttpEndpoint& endpoint, const Json& body, const HttpOptions& options) {
    httplib::Client client(endpoint.host, endpoint.port);
    client.set_connection_timeout(options.timeout_seconds, 0);
    client.set_read_timeout(options.timeout_seconds, 0);
    client.set_write_timeout(options.timeout_seconds, 0);

    httplib::Headers headers;
    if (const char* token = std::getenv(kAuthTokenEnv); token != nullptr && *token != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    const std::string payload = body.dump();
    const std::string where = endpoint.host + ":" + std::to_string(endpoint.port) + endpoint.path;

    std::string last_failure;
    for (int attempt = 0; attempt <= options.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
        auto res = client.Post(endpoint.path, headers, payload, "application/json");
        if (!res) {
            last_failure = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_failure = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            throw Error(ErrorKind::protocol, where + " answered HTTP " + std::to_string(res->status));
        }
        try {
            return Json::parse(res->body);
        } catch (const Json::parse_error&) {
            throw Error(ErrorKind::protocol, where + " returned a non-JSON body");
        }
    }
    throw Error(ErrorKind::io, where + " unreachable after " + std::to_string(options.retries + 1) +
                                   " attempts: " + last_failure);
}

}  // namespace asmqa
