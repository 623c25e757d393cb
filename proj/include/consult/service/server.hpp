#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "consult/common/error.hpp"
#include "consult/service/service.hpp"

namespace httplib {
class Server;
}

namespace consult::service {

int http_status_for(ErrorCode code);
nlohmann::json error_body(const Error& e);

// Routes (all JSON):
//   POST /api/sessions                         GET /api/sessions/{id}
//   PUT  /api/sessions/{id}/answers            POST /api/sessions/{id}/smartfill
//   POST /api/sessions/{id}/recommendation     GET  /api/sessions/{id}/recommendation
//   POST /api/sessions/{id}/prototype          GET  /api/sessions/{id}/jobs/{job_id}
//   POST /api/sessions/{id}/feedback
//   GET  /api/schema                           GET  /api/tools
class HttpServer {
 public:
  explicit HttpServer(ConsultService& service);
  ~HttpServer();

  // Port 0 picks a free port. Returns the bound port; kIoError on failure.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();

 private:
  ConsultService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace consult::service
