#pragma once

#include <chrono>
#include <map>
#include <string>
#include <string_view>

namespace consult {

struct HttpResponse {
  int status = 0;
  std::map<std::string, std::string> headers;  // lower-cased names
  std::string body;
};

struct HttpOptions {
  std::chrono::seconds timeout{60};
  std::map<std::string, std::string> headers;
};

// Thin blocking client over cpp-httplib. Connection-level failures raise
// Error(kTransport); any HTTP status is returned as data.
HttpResponse http_get(const std::string& url, const HttpOptions& options = {});
HttpResponse http_post(const std::string& url, std::string_view body,
                       std::string_view content_type, const HttpOptions& options = {});

std::string url_encode(std::string_view value);
std::string url_host(std::string_view url);

}  // namespace consult
