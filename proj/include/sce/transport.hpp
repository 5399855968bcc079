#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace sce {

struct HttpResponse {
    int status = 0;
    std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// A single POST of a JSON body. Implementations must be callable from several
// threads at once; transport failures are thrown as Error(transport_error).
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& path, const HttpHeaders& headers, const std::string& body) = 0;
};

class HttpTransport final : public Transport {
public:
    explicit HttpTransport(std::string base_url, std::chrono::seconds timeout = std::chrono::seconds(120));
    HttpResponse post(const std::string& path, const HttpHeaders& headers, const std::string& body) override;

private:
    std::string base_url_;
    std::chrono::seconds timeout_;
};

}  // namespace sce
