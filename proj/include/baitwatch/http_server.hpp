#pragma once

// HTTP transport for ScoringService.

#include <memory>
#include <string>

#include "baitwatch/service.hpp"

namespace baitwatch {

class HttpServer {
 public:
  explicit HttpServer(ScoringService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port. Returns the bound port; throws on failure.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void listen();
  // Runs listen() on a background thread and waits until it accepts.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// GET over http(s) with a timeout; throws std::runtime_error on failure or a
// non-200 response.
std::string fetch_url(const std::string& url);

}  // namespace baitwatch
