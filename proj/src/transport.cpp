#include "sce/transport.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include "sce/errors.hpp"

namespace sce {

HttpTransport::HttpTransport(std::string base_url, std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {}

HttpResponse HttpTransport::post(const std::string& path, const HttpHeaders& headers, const std::string& body) {
    // httplib::Client is not safe to share between threads; one per request.
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers h;
    for (const auto& [k, v] : headers) {
        h.emplace(k, v);
    }
    auto result = client.Post(path, h, body, "application/json");
    if (!result) {
        throw Error(Errc::transport_error,
                    fmt::format("POST {}{} failed: {}", base_url_, path, httplib::to_string(result.error())));
    }
    return HttpResponse{result->status, result->body};
}

}  // namespace sce
