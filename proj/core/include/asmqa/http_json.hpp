#pragma once

#include <string>
#include <string_view>

#include "asmqa/jsonl.hpp"

namespace asmqa {

/// Bearer token for remote endpoints is read from this environment variable.
inline constexpr const char* kAuthTokenEnv = "ASMQA_AUTH_TOKEN";

struct HttpEndpoint {
    std::string scheme;  // "http"
    std::string host;
    int port = 80;
    std::string path = "/";
};

/// Parses "http://host[:port][/path]". Throws Error{config} on anything else.
HttpEndpoint parse_endpoint(std::string_view url);

struct HttpOptions {
    int retries = 3;           // extra attempts after the first
    int timeout_seconds = 30;
};

/// POSTs `body` as JSON and returns the parsed response.
///
/// Connection failures and 5xx responses are retried; after the last attempt
/// they raise Error{io}. A 4xx or a non-JSON body raises Error{protocol}.
Json post_json(const HttpEndpoint& endpoint, const Json& body, const HttpOptions& options = {});

}  // namespace asmqa
