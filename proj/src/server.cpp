#include "toolsup/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <condition_variable>
#include <cstring>
#include <deque>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <fmt/format.h>

#include "toolsup/error.hpp"

namespace toolsup::svc {

using nlohmann::json;

namespace {

struct Job {
  json request;
  bool parsed = true;
  std::string raw;
  bool duplicate = false;
};

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

}  // namespace

StreamStats serve_lines(const LineSource& next, const LineSink& emit, const ServeOptions& opts) {
  const std::size_t window = std::max<std::size_t>(1, opts.window);
  const unsigned workers = std::max(1u, opts.workers);

  std::mutex mu;
  std::condition_variable job_ready;
  std::condition_variable slot_free;
  std::deque<Job> queue;
  std::size_t in_flight = 0;
  bool done = false;
  std::mutex out_mu;
  StreamStats stats;

  auto worker = [&] {
    for (;;) {
      Job job;
      {
        std::unique_lock lock(mu);
        job_ready.wait(lock, [&] { return done || !queue.empty(); });
        if (queue.empty()) return;
        job = std::move(queue.front());
        queue.pop_front();
      }
      json resp = job.parsed ? score_one(job.request, opts.ctx) : score_line(job.raw, opts.ctx);
      if (job.duplicate) flag_duplicate(resp);
      {
        std::lock_guard lock(out_mu);
        try {
          emit(resp.dump());
        } catch (...) {
        }
      }
      {
        std::lock_guard lock(mu);
        --in_flight;
      }
      slot_free.notify_one();
    }
  };

  std::vector<std::thread> pool;
  for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);

  std::unordered_set<std::string> seen;
  while (auto line = next()) {
    if (blank(*line)) continue;
    Job job;
    job.request = json::parse(*line, nullptr, false);
    if (job.request.is_discarded()) {
      job.parsed = false;
      job.raw = std::move(*line);
    } else if (job.request.is_object() && job.request.contains("id") && job.request["id"].is_string()) {
      job.duplicate = !seen.insert(job.request["id"].get<std::string>()).second;
    }
    {
      std::unique_lock lock(mu);
      slot_free.wait(lock, [&] { return in_flight < window; });
      ++in_flight;
      stats.max_in_flight = std::max(stats.max_in_flight, in_flight);
      queue.push_back(std::move(job));
    }
    ++stats.requests;
    job_ready.notify_one();
  }
  {
    std::lock_guard lock(mu);
    done = true;
  }
  job_ready.notify_all();
  for (auto& t : pool) t.join();
  return stats;
}

StreamStats serve_stream(std::istream& in, std::ostream& out, const ServeOptions& opts) {
  return serve_lines(
      [&in]() -> std::optional<std::string> {
        std::string line;
        if (!std::getline(in, line)) return std::nullopt;
        return line;
      },
      [&out](const std::string& s) {
        out << s << '\n';
        out.flush();
      },
      opts);
}

TcpServer::TcpServer(ServeOptions opts, const std::string& host, int port) : opts_(std::move(opts)) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw Error(ErrorCode::Io, fmt::format("cannot resolve {}: {}", host, gai_strerror(rc)));
  }
  listen_fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (listen_fd_ < 0) {
    freeaddrinfo(res);
    throw Error(ErrorCode::Io, fmt::format("socket: {}", std::strerror(errno)));
  }
  const int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const int bound = ::bind(listen_fd_, res->ai_addr, res->ai_addrlen);
  freeaddrinfo(res);
  if (bound < 0 || ::listen(listen_fd_, 64) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw Error(ErrorCode::Io, fmt::format("cannot listen on {}:{}: {}", host, port, why));
  }
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpServer::~TcpServer() {
  stop();
  std::vector<std::thread> threads;
  {
    std::lock_guard lock(mu_);
    threads.swap(threads_);
  }
  for (auto& t : threads) {
    if (t.joinable()) t.join();
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void TcpServer::run() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_) break;
      if (errno == EINTR || errno == ECONNABORTED) continue;
      break;
    }
    std::lock_guard lock(mu_);
    if (stopping_) {
      ::close(fd);
      break;
    }
    conns_.push_back(fd);
    threads_.emplace_back([this, fd] { handle(fd); });
  }
}

void TcpServer::stop() {
  if (stopping_.exchange(true)) return;
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  std::lock_guard lock(mu_);
  for (int fd : conns_) ::shutdown(fd, SHUT_RDWR);
}

void TcpServer::handle(int fd) {
  std::string buffer;
  bool eof = false;
  auto next = [&]() -> std::optional<std::string> {
    for (;;) {
      if (const auto nl = buffer.find('\n'); nl != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        return line;
      }
      if (eof) {
        if (buffer.empty()) return std::nullopt;
        std::string line;
        line.swap(buffer);
        return line;
      }
      char chunk[8192];
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        eof = true;
        continue;
      }
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  };
  auto emit = [fd](const std::string& s) {
    std::string msg = s + '\n';
    std::size_t off = 0;
    while (off < msg.size()) {
      const ssize_t n = ::send(fd, msg.data() + off, msg.size() - off, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) return;
      off += static_cast<std::size_t>(n);
    }
  };
  const auto stats = serve_lines(next, emit, opts_);
  served_ += stats.requests;
  std::size_t prev = max_in_flight_.load();
  while (stats.max_in_flight > prev && !max_in_flight_.compare_exchange_weak(prev, stats.max_in_flight)) {
  }
  std::lock_guard lock(mu_);
  std::erase(conns_, fd);
  ::close(fd);
}

}  // namespace toolsup::svc
