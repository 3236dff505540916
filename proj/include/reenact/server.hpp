#pragma once

#include <memory>
#include <string>

#include "reenact/session.hpp"

namespace reenact::service {

inline constexpr unsigned short kDefaultPort = 8765;

/// REENACT_PORT when set to a valid port, else kDefaultPort.
unsigned short default_port();

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = kDefaultPort;  // 0 picks a free port
  int threads = 2;
};

/// HTTP endpoints plus one WebSocket channel per session on a single port.
class Server {
 public:
  Server(SessionManager& sessions, ServerOptions options = {});
  ~Server();

  /// Binds and starts the worker threads. Throws PortInUse.
  void start();
  void stop();
  /// Blocks until stop() is called (from another thread or a signal).
  void wait();

  unsigned short port() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace reenact::service
