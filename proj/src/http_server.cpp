#include "baitwatch/http_server.hpp"

#include <httplib.h>

#include <regex>
#include <thread>

namespace baitwatch {

struct HttpServer::Impl {
  ScoringService& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(ScoringService& s) : service(s) {}
};

namespace {

void reply(httplib::Response& res, const ServiceResponse& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json; charset=utf-8");
}

}  // namespace

HttpServer::HttpServer(ScoringService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  auto& svc = impl_->service;
  srv.set_payload_max_length(16u << 20);
  srv.Post("/v1/score", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.handle_score(req.body));
  });
  srv.Post("/v1/feedback", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.handle_feedback(req.body));
  });
  srv.Get("/v1/health", [&svc](const httplib::Request&, httplib::Response& res) { reply(res, svc.health()); });
  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    reply(res, {500, nlohmann::ordered_json{{"error", what}}});
  });
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(nlohmann::ordered_json{{"error", httplib::status_message(res.status)}}.dump(),
                      "application/json; charset=utf-8");
    }
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& srv = impl_->server;
  if (port == 0) {
    const int bound = srv.bind_to_any_port(host);
    if (bound < 0) throw std::runtime_error("cannot bind " + host);
    return bound;
  }
  if (!srv.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  impl_->thread = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string fetch_url(const std::string& url) {
  static const std::regex pattern(R"(^(https?://[^/]+)(/.*)?$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(url, m, pattern)) throw std::runtime_error("unsupported url " + url);
  httplib::Client client(m[1].str());
  client.set_connection_timeout(5);
  client.set_read_timeout(10);
  client.set_follow_location(true);
  const auto path = m[2].matched ? m[2].str() : std::string("/");
  auto res = client.Get(path);
  if (!res) throw std::runtime_error("request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw std::runtime_error("status " + std::to_string(res->status));
  return res->body;
}

}  // namespace baitwatch
