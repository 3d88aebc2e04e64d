#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "safeik/teleop/session.hpp"

namespace safeik::teleop {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  double rate_hz = 90.0;
  std::size_t max_pending_frames = 16;  // per client; beyond this state frames drop
  std::optional<std::string> record_path;  // message script of applied control frames
  std::optional<std::string> log_path;     // every broadcast state frame, one per line
};

/// WebSocket endpoint around one Session. The first client to connect while
/// the control slot is free becomes the controller; everyone else observes.
/// Network I/O runs on its own thread; the tick loop runs in run() and is the
/// only code that touches the Session.
class Server {
 public:
  /// Binds immediately; throws std::runtime_error if the port is taken.
  Server(Session session, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const;

  /// Blocks until stop() is called, then flushes the record and log files.
  void run();
  /// Safe from any thread, including signal-driven ones.
  void stop();

  std::uint64_t ticks() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace safeik::teleop
