#include "consult/service/server.hpp"

#include <httplib.h>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace consult::service {

using nlohmann::json;

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kPrecondition: return 422;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParseError:
    case ErrorCode::kTypeError:
    case ErrorCode::kUnknownTool:
    case ErrorCode::kParamValidation: return 400;
    default: return 500;
  }
}

json error_body(const Error& e) {
  return {{"code", to_string(e.code())}, {"message", e.what()}, {"details", e.details()}};
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, "request body is not valid JSON", {e.what()});
  }
}

using Handler = std::function<std::pair<int, json>(const httplib::Request&)>;

httplib::Server::Handler wrap(Handler h) {
  return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      const auto [status, body] = h(req);
      reply(res, status, body);
    } catch (const Error& e) {
      reply(res, http_status_for(e.code()), error_body(e));
    } catch (const std::exception& e) {
      reply(res, 500, error_body(Error(ErrorCode::kIoError, e.what())));
    }
  };
}

}  // namespace

HttpServer::HttpServer(ConsultService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  auto& svc = service_;
  const std::string sid = "/api/sessions/([A-Za-z0-9_-]+)";

  s.Post("/api/sessions", wrap([&svc](const auto&) { return std::pair{201, svc.create_session()}; }));
  s.Get(sid, wrap([&svc](const auto& r) { return std::pair{200, svc.get_session(r.matches[1])}; }));
  s.Put(sid + "/answers",
        wrap([&svc](const auto& r) { return std::pair{200, svc.save_answers(r.matches[1], parse_body(r))}; }));
  s.Post(sid + "/smartfill", wrap([&svc](const auto& r) { return std::pair{202, svc.run_smartfill(r.matches[1])}; }));
  s.Post(sid + "/recommendation", wrap([&svc](const auto& r) {
           return std::pair{202, svc.run_recommendation(r.matches[1], parse_body(r))};
         }));
  s.Get(sid + "/recommendation",
        wrap([&svc](const auto& r) { return std::pair{200, svc.get_recommendation(r.matches[1])}; }));
  s.Post(sid + "/prototype",
         wrap([&svc](const auto& r) { return std::pair{202, svc.run_prototype(r.matches[1], parse_body(r))}; }));
  s.Get(sid + "/jobs/([A-Za-z0-9_-]+)",
        wrap([&svc](const auto& r) { return std::pair{200, svc.get_job(r.matches[1], r.matches[2])}; }));
  s.Post(sid + "/feedback",
         wrap([&svc](const auto& r) { return std::pair{201, svc.submit_feedback(r.matches[1], parse_body(r))}; }));
  s.Get("/api/schema", wrap([&svc](const auto&) { return std::pair{200, svc.schema_json()}; }));
  s.Get("/api/tools", wrap([&svc](const auto&) { return std::pair{200, svc.tools_json()}; }));

  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const auto code = res.status == 404 ? ErrorCode::kNotFound : ErrorCode::kInvalidArgument;
    reply(res, res.status, error_body(Error(code, fmt::format("no route for {} {}", req.method, req.path))));
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw Error(ErrorCode::kIoError, fmt::format("cannot bind {}:{}", host, port));
  spdlog::info("listening on {}:{}", host, bound);
  return bound;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_ && server_->is_running()) server_->stop();
}

}  // namespace consult::service
