#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "consult/common/http.hpp"

namespace consult::arxiv {

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse get(const std::string& url) = 0;
};

class LiveTransport : public HttpTransport {
 public:
  explicit LiveTransport(std::chrono::seconds timeout = std::chrono::seconds(60));
  HttpResponse get(const std::string& url) override;

 private:
  HttpOptions options_;
};

// Serializes requests per host and spaces them at least `delay` apart.
// Distinct hosts proceed independently.
class PoliteTransport : public HttpTransport {
 public:
  PoliteTransport(std::shared_ptr<HttpTransport> inner, std::chrono::milliseconds delay);
  HttpResponse get(const std::string& url) override;

 private:
  struct HostSlot {
    std::mutex mu;
    std::optional<std::chrono::steady_clock::time_point> last;
  };
  HostSlot& slot(const std::string& host);

  std::shared_ptr<HttpTransport> inner_;
  std::chrono::milliseconds delay_;
  std::mutex slots_mu_;
  std::map<std::string, std::unique_ptr<HostSlot>> slots_;
};

// Record/replay layer. One JSON file per exchange:
//   {"url", "status", "headers": {subset}, "body_base64"}
// named by the SHA-256 of the URL. In replay mode a missing cassette is a
// transport failure; nothing touches the network.
class CassetteTransport : public HttpTransport {
 public:
  enum class Mode { kReplay, kRecord };

  CassetteTransport(std::filesystem::path dir, Mode mode,
                    std::shared_ptr<HttpTransport> live = nullptr);

  HttpResponse get(const std::string& url) override;

  // Writes one exchange (used by record mode and by fixture builders).
  void store(const std::string& url, const HttpResponse& response) const;
  std::filesystem::path path_for(const std::string& url) const;

  std::size_t access_count() const { return accesses_.load(); }

 private:
  std::filesystem::path dir_;
  Mode mode_;
  std::shared_ptr<HttpTransport> live_;
  std::atomic<std::size_t> accesses_{0};
};

}  // namespace consult::arxiv
