#include "consult/common/http.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include "consult/common/error.hpp"
#include "consult/common/text.hpp"

namespace consult {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // includes query
};

SplitUrl split_url(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("not an absolute URL: {}", url));
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

HttpResponse convert(const httplib::Result& result, std::string_view url) {
  if (!result) {
    throw Error(ErrorCode::kTransport,
                fmt::format("request to {} failed: {}", url, httplib::to_string(result.error())));
  }
  HttpResponse out;
  out.status = result->status;
  out.body = result->body;
  for (const auto& [name, value] : result->headers) out.headers[to_lower(name)] = value;
  return out;
}

httplib::Client make_client(const SplitUrl& parts, const HttpOptions& options) {
  httplib::Client client(parts.origin);
  client.set_follow_location(true);
  client.set_connection_timeout(options.timeout);
  client.set_read_timeout(options.timeout);
  client.set_write_timeout(options.timeout);
  return client;
}

httplib::Headers to_headers(const HttpOptions& options) {
  httplib::Headers headers;
  for (const auto& [k, v] : options.headers) headers.emplace(k, v);
  return headers;
}

}  // namespace

HttpResponse http_get(const std::string& url, const HttpOptions& options) {
  const auto parts = split_url(url);
  auto client = make_client(parts, options);
  return convert(client.Get(parts.path, to_headers(options)), url);
}

HttpResponse http_post(const std::string& url, std::string_view body,
                       std::string_view content_type, const HttpOptions& options) {
  const auto parts = split_url(url);
  auto client = make_client(parts, options);
  return convert(client.Post(parts.path, to_headers(options), std::string(body),
                             std::string(content_type)),
                 url);
}

std::string url_encode(std::string_view value) {
  return httplib::detail::encode_query_param(std::string(value));
}

std::string url_host(std::string_view url) {
  const auto origin = split_url(url).origin;
  return to_lower(origin.substr(origin.find("://") + 3));
}

}  // namespace consult
