#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "toolsup/score.hpp"

namespace toolsup::svc {

struct ServeOptions {
  unsigned workers = 4;
  std::size_t window = 64;
  ScoreContext ctx;
};

struct StreamStats {
  std::size_t requests = 0;
  std::size_t max_in_flight = 0;
};

using LineSource = std::function<std::optional<std::string>()>;
using LineSink = std::function<void(const std::string&)>;

/// Scores newline-delimited requests with up to `window` in flight. Responses
/// are written as they complete, so order may differ from input. A repeated
/// id within one stream is flagged on its second and later occurrences.
StreamStats serve_lines(const LineSource& next, const LineSink& emit, const ServeOptions& opts);

StreamStats serve_stream(std::istream& in, std::ostream& out, const ServeOptions& opts);

/// Line-delimited JSON over TCP; each connection is an independent stream.
class TcpServer {
 public:
  /// Binds immediately; port 0 picks a free port.
  TcpServer(ServeOptions opts, const std::string& host, int port);
  ~TcpServer();
  TcpServer(const TcpServer&) = delete;
  TcpServer& operator=(const TcpServer&) = delete;

  int port() const { return port_; }
  /// Accepts connections until stop().
  void run();
  void stop();
  std::size_t max_in_flight_observed() const { return max_in_flight_.load(); }
  std::size_t requests_served() const { return served_.load(); }

 private:
  void handle(int fd);

  ServeOptions opts_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::size_t> max_in_flight_{0};
  std::atomic<std::size_t> served_{0};
  std::mutex mu_;
  std::vector<int> conns_;
  std::vector<std::thread> threads_;
};

}  // namespace toolsup::svc
