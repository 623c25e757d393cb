#include "consult/arxiv/transport.hpp"

#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "consult/common/error.hpp"
#include "consult/common/storage.hpp"
#include "consult/common/text.hpp"

namespace consult::arxiv {

namespace fs = std::filesystem;
using nlohmann::json;

LiveTransport::LiveTransport(std::chrono::seconds timeout) {
  options_.timeout = timeout;
  options_.headers["User-Agent"] = "consult-agent/0.1 (research tooling)";
}

HttpResponse LiveTransport::get(const std::string& url) { return http_get(url, options_); }

PoliteTransport::PoliteTransport(std::shared_ptr<HttpTransport> inner, std::chrono::milliseconds delay)
    : inner_(std::move(inner)), delay_(delay) {}

PoliteTransport::HostSlot& PoliteTransport::slot(const std::string& host) {
  std::lock_guard lock(slots_mu_);
  auto& entry = slots_[host];
  if (!entry) entry = std::make_unique<HostSlot>();
  return *entry;
}

HttpResponse PoliteTransport::get(const std::string& url) {
  auto& s = slot(url_host(url));
  std::lock_guard lock(s.mu);
  if (s.last) {
    const auto ready = *s.last + delay_;
    const auto now = std::chrono::steady_clock::now();
    if (now < ready) std::this_thread::sleep_for(ready - now);
  }
  try {
    auto response = inner_->get(url);
    s.last = std::chrono::steady_clock::now();
    return response;
  } catch (...) {
    s.last = std::chrono::steady_clock::now();
    throw;
  }
}

CassetteTransport::CassetteTransport(fs::path dir, Mode mode, std::shared_ptr<HttpTransport> live)
    : dir_(std::move(dir)), mode_(mode), live_(std::move(live)) {
  if (mode_ == Mode::kRecord && !live_) {
    throw Error(ErrorCode::kInvalidArgument, "record mode needs a live transport");
  }
}

fs::path CassetteTransport::path_for(const std::string& url) const {
  return dir_ / (sha256_hex(url).substr(0, 32) + ".json");
}

void CassetteTransport::store(const std::string& url, const HttpResponse& response) const {
  json headers = json::object();
  for (const auto* name : {"content-type", "content-encoding", "content-disposition"}) {
    if (const auto it = response.headers.find(name); it != response.headers.end()) {
      headers[name] = it->second;
    }
  }
  const json record = {{"url", url},
                       {"status", response.status},
                       {"headers", headers},
                       {"body_base64", base64_encode(response.body)}};
  write_file_atomic(path_for(url), record.dump(2) + "\n");
}

HttpResponse CassetteTransport::get(const std::string& url) {
  ++accesses_;
  if (mode_ == Mode::kRecord) {
    auto response = live_->get(url);
    store(url, response);
    return response;
  }
  const auto path = path_for(url);
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kTransport, fmt::format("no recorded exchange for {}", url),
                {path.string()});
  }
  const auto record = json::parse(read_file(path));
  if (record.value("url", "") != url) {
    throw Error(ErrorCode::kTransport, fmt::format("cassette {} does not match {}", path.string(), url));
  }
  HttpResponse response;
  response.status = record.at("status").get<int>();
  const auto headers = record.value("headers", json::object());
  for (const auto& [k, v] : headers.items()) {
    response.headers[k] = v.get<std::string>();
  }
  response.body = base64_decode(record.at("body_base64").get<std::string>());
  return response;
}

}  // namespace consult::arxiv
