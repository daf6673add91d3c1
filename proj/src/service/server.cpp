#include "dream/server.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <system_error>
#include <thread>

#include "websocket.hpp"

namespace dream::service {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::size_t kMaxLine = 1 << 20;
constexpr std::size_t kMaxHttpHeader = 16 * 1024;
constexpr std::size_t kMaxOutbox = 4096;
const std::string kReplayId = "replay";

enum class Dialect { Unknown, Ndjson, WebSocket };

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct HttpRequest {
  std::string method;
  std::string target;
  std::map<std::string, std::string> headers;  // lower-case names
};

std::optional<HttpRequest> parse_http_request(const std::string& head) {
  std::istringstream in(head);
  std::string line;
  if (!std::getline(in, line)) return std::nullopt;
  HttpRequest req;
  std::istringstream first(trim(line));
  std::string version;
  if (!(first >> req.method >> req.target >> version)) return std::nullopt;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) break;
    const auto colon = line.find(':');
    if (colon == std::string::npos) return std::nullopt;
    req.headers[lower(trim(line.substr(0, colon)))] = trim(line.substr(colon + 1));
  }
  return req;
}

std::string content_type(const std::filesystem::path& p) {
  static const std::map<std::string, std::string> kTypes = {
      {".html", "text/html; charset=utf-8"}, {".js", "text/javascript; charset=utf-8"},
      {".mjs", "text/javascript; charset=utf-8"}, {".css", "text/css; charset=utf-8"},
      {".json", "application/json"}, {".svg", "image/svg+xml"}, {".png", "image/png"},
      {".ico", "image/x-icon"}, {".wasm", "application/wasm"}, {".txt", "text/plain; charset=utf-8"}};
  auto it = kTypes.find(lower(p.extension().string()));
  return it == kTypes.end() ? "application/octet-stream" : it->second;
}

std::string http_response(int status, const std::string& reason, const std::string& type, const std::string& body,
                          bool include_body = true) {
  std::string out = "HTTP/1.1 " + std::to_string(status) + " " + reason + "\r\n";
  out += "Content-Type: " + type + "\r\n";
  out += "Content-Length: " + std::to_string(body.size()) + "\r\n";
  out += "Connection: close\r\n\r\n";
  if (include_body) out += body;
  return out;
}

/// Maps a request target to a file under `root`; nullopt for targets that
/// escape it.
std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root, std::string target) {
  target = target.substr(0, target.find_first_of("?#"));
  if (target.empty() || target.front() != '/') return std::nullopt;
  std::filesystem::path rel;
  std::istringstream parts(target.substr(1));
  std::string seg;
  while (std::getline(parts, seg, '/')) {
    if (seg.empty() || seg == ".") continue;
    if (seg == ".." || seg.find('\\') != std::string::npos || seg.find('%') != std::string::npos) return std::nullopt;
    rel /= seg;
  }
  auto path = root / rel;
  if (rel.empty() || std::filesystem::is_directory(path)) path /= "index.html";
  return path;
}

bool send_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

}  // namespace

class Connection {
 public:
  Connection(int fd, ClientId id) : fd_(fd), id_(id) {}
  ~Connection() {
    if (fd_ >= 0) ::close(fd_);
  }

  ClientId id() const { return id_; }
  int fd() const { return fd_; }

  /// Queues a message; "seq" is stamped at write time.
  void enqueue(Json msg) {
    std::lock_guard lk(mu_);
    if (closed_) return;
    if (outbox_.size() >= kMaxOutbox) {
      closed_ = true;
      ::shutdown(fd_, SHUT_RDWR);
      cv_.notify_all();
      return;
    }
    outbox_.push_back(std::move(msg));
    cv_.notify_all();
  }

  void enqueue_raw(std::string bytes) {
    std::lock_guard lk(mu_);
    if (closed_) return;
    raw_.push_back(std::move(bytes));
    cv_.notify_all();
  }

  /// Writer stops after draining what is queued.
  void finish_writing() {
    std::lock_guard lk(mu_);
    draining_ = true;
    cv_.notify_all();
  }

  void abort() {
    std::lock_guard lk(mu_);
    closed_ = true;
    ::shutdown(fd_, SHUT_RDWR);
    cv_.notify_all();
  }

  void set_dialect(Dialect d) {
    std::lock_guard lk(mu_);
    dialect_ = d;
  }

  void writer_loop() {
    std::unique_lock lk(mu_);
    while (true) {
      cv_.wait(lk, [&] { return closed_ || draining_ || !outbox_.empty() || !raw_.empty(); });
      if (closed_) break;
      if (outbox_.empty() && raw_.empty()) {
        if (draining_) break;
        continue;
      }
      std::deque<std::string> batch;
      std::swap(batch, raw_);
      std::deque<Json> msgs;
      std::swap(msgs, outbox_);
      const Dialect dialect = dialect_;
      lk.unlock();
      bool ok = true;
      for (auto& b : batch) ok = ok && send_all(fd_, b);
      for (auto& m : msgs) {
        if (!ok) break;
        m["seq"] = ++out_seq_;
        const std::string text = m.dump();
        ok = dialect == Dialect::WebSocket ? send_all(fd_, ws::encode_frame(ws::Opcode::Text, text))
                                           : send_all(fd_, text + "\n");
      }
      lk.lock();
      if (!ok) {
        closed_ = true;
        ::shutdown(fd_, SHUT_RDWR);
        break;
      }
    }
    if (draining_ && !closed_) ::shutdown(fd_, SHUT_WR);
  }

  std::thread reader;
  std::thread writer;
  std::atomic<bool> done{false};
  std::string session;  // bound session id; touched by the reader thread only

 private:
  int fd_;
  ClientId id_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Json> outbox_;
  std::deque<std::string> raw_;
  bool closed_ = false;
  bool draining_ = false;
  Dialect dialect_ = Dialect::Unknown;
  std::int64_t out_seq_ = 0;
};

namespace {

/// Owns one hosted session and the only thread that touches it.
class Runner {
 public:
  Runner(std::unique_ptr<Hosted> hosted, bool pacing) : hosted_(std::move(hosted)), pacing_(pacing) {
    id_ = hosted_->id();
    session_ = dynamic_cast<Session*>(hosted_.get());
    thread_ = std::thread([this] { loop(); });
  }
  ~Runner() { stop(); }

  const std::string& id() const { return id_; }

  void subscribe(std::shared_ptr<Connection> c) {
    post(Item{Item::Subscribe, c->id(), {}, std::move(c)});
  }
  void unsubscribe(ClientId id) { post(Item{Item::Unsubscribe, id, {}, nullptr}); }
  void message(std::shared_ptr<Connection> c, Json msg) {
    const ClientId id = c->id();
    post(Item{Item::Message, id, std::move(msg), std::move(c)});
  }

  void stop() {
    {
      std::lock_guard lk(mu_);
      stopping_ = true;
      cv_.notify_all();
    }
    if (thread_.joinable()) thread_.join();
  }

  bool finished() const { return finished_.load(); }

  std::vector<std::filesystem::path> logs() const {
    std::lock_guard lk(logs_mu_);
    return logs_;
  }

 private:
  struct Item {
    enum Kind { Subscribe, Unsubscribe, Message } kind;
    ClientId client;
    Json msg;
    std::shared_ptr<Connection> conn;
  };

  void post(Item item) {
    std::lock_guard lk(mu_);
    inbox_.push_back(std::move(item));
    cv_.notify_all();
  }

  void deliver(const std::vector<Json>& msgs) {
    if (msgs.empty()) return;
    for (auto& [id, conn] : subscribers_)
      for (const Json& m : msgs) conn->enqueue(m);
  }

  void drain(std::deque<Item>& items) {
    for (Item& item : items) {
      switch (item.kind) {
        case Item::Subscribe:
          subscribers_[item.client] = item.conn;
          if (!started_) {
            started_ = true;
            t0_ = Clock::now();
          }
          break;
        case Item::Unsubscribe:
          subscribers_.erase(item.client);
          hosted_->flush();
          break;
        case Item::Message:
          for (Json& reply : hosted_->handle_message(item.msg, item.client)) item.conn->enqueue(std::move(reply));
          break;
      }
    }
    items.clear();
  }

  void record_logs() {
    if (!session_) return;
    const auto& paths = session_->log_paths();
    std::lock_guard lk(logs_mu_);
    if (paths.size() != logs_.size()) logs_ = paths;
  }

  void loop() {
    started_ = !hosted_->starts_on_subscribe();
    t0_ = Clock::now();
    std::deque<Item> items;
    std::unique_lock lk(mu_);
    while (true) {
      if (!stopping_ && inbox_.empty()) {
        const bool can_step = started_ && !hosted_->finished();
        if (!can_step) {
          cv_.wait(lk, [&] { return stopping_ || !inbox_.empty(); });
        } else if (pacing_) {
          const auto due = t0_ + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double>(hosted_->next_due()));
          cv_.wait_until(lk, due, [&] { return stopping_ || !inbox_.empty(); });
        }
      }
      if (stopping_) break;
      std::swap(items, inbox_);
      lk.unlock();
      drain(items);
      if (started_ && !hosted_->finished()) {
        const double elapsed = std::chrono::duration<double>(Clock::now() - t0_).count();
        if (!pacing_ || elapsed >= hosted_->next_due()) {
          deliver(hosted_->step());
          if (hosted_->finished()) finished_ = true;
        }
      }
      record_logs();
      lk.lock();
    }
    lk.unlock();
    hosted_->close();
    record_logs();
  }

  std::unique_ptr<Hosted> hosted_;
  Session* session_ = nullptr;
  std::string id_;
  bool pacing_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Item> inbox_;
  bool stopping_ = false;
  // Runner-thread state.
  std::map<ClientId, std::shared_ptr<Connection>> subscribers_;
  bool started_ = false;
  Clock::time_point t0_;
  std::atomic<bool> finished_{false};
  mutable std::mutex logs_mu_;
  std::vector<std::filesystem::path> logs_;
  std::thread thread_;
};

}  // namespace

struct TeleopServer::Impl {
  explicit Impl(ServerOptions o) : options(std::move(o)) {}

  ServerOptions options;
  int listen_fd = -1;
  std::uint16_t bound_port = 0;
  std::atomic<bool> stopping{false};
  bool started = false;
  std::thread acceptor;

  mutable std::mutex mu;
  std::map<std::string, std::unique_ptr<Runner>> runners;
  std::vector<std::shared_ptr<Connection>> connections;
  std::vector<std::filesystem::path> closed_logs;
  ClientId next_client = 1;
  std::uint64_t next_session = 1;

  void accept_loop() {
    while (!stopping) {
      pollfd p{listen_fd, POLLIN, 0};
      const int r = ::poll(&p, 1, 100);
      reap();
      if (r <= 0 || stopping) continue;
      const int fd = ::accept(listen_fd, nullptr, nullptr);
      if (fd < 0) continue;
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      std::shared_ptr<Connection> conn;
      {
        std::lock_guard lk(mu);
        conn = std::make_shared<Connection>(fd, next_client++);
        connections.push_back(conn);
      }
      conn->writer = std::thread([conn] { conn->writer_loop(); });
      conn->reader = std::thread([this, conn] {
        read_loop(*conn);
        disconnect(conn);
        conn->done = true;
      });
    }
  }

  void reap() {
    std::vector<std::shared_ptr<Connection>> dead;
    {
      std::lock_guard lk(mu);
      auto it = std::stable_partition(connections.begin(), connections.end(),
                                      [](const auto& c) { return !c->done.load(); });
      dead.assign(it, connections.end());
      connections.erase(it, connections.end());
    }
    for (auto& c : dead) {
      if (c->reader.joinable()) c->reader.join();
      if (c->writer.joinable()) c->writer.join();
    }
  }

  void disconnect(const std::shared_ptr<Connection>& conn) {
    if (!conn->session.empty()) {
      std::lock_guard lk(mu);
      auto it = runners.find(conn->session);
      if (it != runners.end()) it->second->unsubscribe(conn->id());
    }
    conn->finish_writing();
  }

  void read_loop(Connection& conn) {
    std::string buf;
    Dialect dialect = Dialect::Unknown;
    std::string fragments;
    char chunk[4096];
    while (!stopping) {
      const ssize_t n = ::recv(conn.fd(), chunk, sizeof chunk, 0);
      if (n == 0) return;
      if (n < 0) {
        if (errno == EINTR) continue;
        return;
      }
      buf.append(chunk, static_cast<std::size_t>(n));

      if (dialect == Dialect::Unknown) {
        const auto first = buf.find_first_not_of(" \t\r\n");
        if (first == std::string::npos) continue;
        if (buf[first] == 'G' || buf[first] == 'H') {
          if (buf.size() - first < 4) continue;
          if (buf.compare(first, 4, "GET ") == 0 || buf.compare(first, 4, "HEAD") == 0) {
            const auto end = buf.find("\r\n\r\n");
            if (end == std::string::npos) {
              if (buf.size() > kMaxHttpHeader) return;
              continue;
            }
            const std::string head = buf.substr(first, end - first);
            buf.erase(0, end + 4);
            if (!handle_http(conn, head)) return;
            dialect = Dialect::WebSocket;
            conn.set_dialect(dialect);
          } else {
            dialect = Dialect::Ndjson;
          }
        } else {
          dialect = Dialect::Ndjson;
        }
        conn.set_dialect(dialect);
      }

      if (dialect == Dialect::Ndjson) {
        std::size_t pos;
        while ((pos = buf.find('\n')) != std::string::npos) {
          std::string line = buf.substr(0, pos);
          buf.erase(0, pos + 1);
          if (!line.empty() && line.back() == '\r') line.pop_back();
          if (trim(line).empty()) continue;
          on_text(conn, line);
        }
        if (buf.size() > kMaxLine) {
          conn.enqueue(make_error(conn.session, "malformed", "line exceeds maximum length"));
          return;
        }
      } else {
        try {
          while (auto frame = ws::parse_frame(buf)) {
            switch (frame->opcode) {
              case ws::Opcode::Text:
              case ws::Opcode::Binary:
              case ws::Opcode::Continuation:
                fragments += frame->payload;
                if (fragments.size() > kMaxLine) throw std::runtime_error("websocket: message too large");
                if (frame->fin) {
                  on_text(conn, fragments);
                  fragments.clear();
                }
                break;
              case ws::Opcode::Ping:
                conn.enqueue_raw(ws::encode_frame(ws::Opcode::Pong, frame->payload));
                break;
              case ws::Opcode::Pong:
                break;
              case ws::Opcode::Close:
                conn.enqueue_raw(ws::encode_frame(ws::Opcode::Close, frame->payload.substr(0, 2)));
                return;
              default:
                throw std::runtime_error("websocket: unknown opcode");
            }
          }
        } catch (const std::exception&) {
          conn.enqueue_raw(ws::encode_frame(ws::Opcode::Close, std::string("\x03\xea", 2)));
          return;
        }
      }
    }
  }

  /// Answers a plain HTTP request, or completes a WebSocket upgrade and
  /// returns true.
  bool handle_http(Connection& conn, const std::string& head) {
    auto req = parse_http_request(head);
    if (!req) {
      conn.enqueue_raw(http_response(400, "Bad Request", "text/plain", "bad request\n"));
      return false;
    }
    auto up = req->headers.find("upgrade");
    if (up != req->headers.end() && lower(up->second) == "websocket") {
      auto key = req->headers.find("sec-websocket-key");
      if (key == req->headers.end() || key->second.empty()) {
        conn.enqueue_raw(http_response(400, "Bad Request", "text/plain", "missing Sec-WebSocket-Key\n"));
        return false;
      }
      conn.enqueue_raw("HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                       "Sec-WebSocket-Accept: " +
                       ws::accept_key(key->second) + "\r\n\r\n");
      return true;
    }
    const bool head_only = req->method == "HEAD";
    if (req->method != "GET" && !head_only) {
      conn.enqueue_raw(http_response(405, "Method Not Allowed", "text/plain", "method not allowed\n"));
      return false;
    }
    if (!options.ui_dir) {
      conn.enqueue_raw(http_response(404, "Not Found", "text/plain", "no UI bundle configured\n", !head_only));
      return false;
    }
    auto path = resolve_static(*options.ui_dir, req->target);
    if (!path) {
      conn.enqueue_raw(http_response(403, "Forbidden", "text/plain", "forbidden\n", !head_only));
      return false;
    }
    std::ifstream in(*path, std::ios::binary);
    if (!std::filesystem::is_regular_file(*path) || !in) {
      conn.enqueue_raw(http_response(404, "Not Found", "text/plain", "not found\n", !head_only));
      return false;
    }
    std::ostringstream body;
    body << in.rdbuf();
    conn.enqueue_raw(http_response(200, "OK", content_type(*path), body.str(), !head_only));
    return false;
  }

  void on_text(Connection& conn, const std::string& text) {
    Json msg;
    try {
      msg = Json::parse(text);
    } catch (const std::exception& e) {
      conn.enqueue(make_error(conn.session, "malformed", std::string("invalid JSON: ") + e.what()));
      return;
    }
    std::shared_ptr<Connection> self = find_connection(conn.id());
    if (!self) return;

    if (!conn.session.empty()) {
      std::lock_guard lk(mu);
      auto it = runners.find(conn.session);
      if (it != runners.end()) it->second->message(self, std::move(msg));
      return;
    }

    if (!msg.is_object()) {
      conn.enqueue(make_error("", "malformed", "message must be a JSON object"));
      return;
    }
    auto v = msg.find("v");
    if (v == msg.end() || !v->is_number_integer() || v->get<int>() != kProtocolVersion) {
      conn.enqueue(make_error("", "version_mismatch",
                              "unsupported protocol version (server speaks v" + std::to_string(kProtocolVersion) + ")"));
      return;
    }
    auto type = msg.find("type");
    if (type == msg.end() || !type->is_string() || type->get<std::string>() != "hello") {
      conn.enqueue(make_error("", "hello_required", "the first message must be a hello"));
      return;
    }
    std::string requested;
    if (auto s = msg.find("session"); s != msg.end() && !s->is_null()) {
      if (!s->is_string()) {
        conn.enqueue(make_error("", "malformed", "'session' must be a string"));
        return;
      }
      requested = s->get<std::string>();
    }

    std::lock_guard lk(mu);
    std::string id;
    if (options.replay_log) {
      id = kReplayId;
    } else {
      id = requested.empty() ? "s" + std::to_string(next_session++) : requested;
      if (!runners.count(id)) {
        if (runners.size() >= options.max_sessions) {
          conn.enqueue(make_error("", "session_limit", "too many sessions"));
          return;
        }
        try {
          runners[id] = std::make_unique<Runner>(std::make_unique<Session>(id, options.session), options.pacing);
        } catch (const std::exception& e) {
          conn.enqueue(make_error(id, "session_failed", e.what()));
          return;
        }
      }
    }
    conn.session = id;
    msg["session"] = id;
    // The welcome must precede the first broadcast frame.
    Runner& runner = *runners.at(id);
    runner.message(self, std::move(msg));
    runner.subscribe(self);
  }

  std::shared_ptr<Connection> find_connection(ClientId id) {
    std::lock_guard lk(mu);
    for (auto& c : connections)
      if (c->id() == id) return c;
    return nullptr;
  }
};

TeleopServer::TeleopServer(ServerOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

TeleopServer::~TeleopServer() { stop(); }

void TeleopServer::start() {
  Impl& s = *impl_;
  if (s.started) return;
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw std::system_error(errno, std::generic_category(), "socket");
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(s.options.port);
  if (::inet_pton(AF_INET, s.options.host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw std::system_error(EINVAL, std::generic_category(), "invalid host address '" + s.options.host + "'");
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(fd, 64) < 0) {
    const int err = errno;
    ::close(fd);
    throw std::system_error(err, std::generic_category(),
                            "cannot listen on " + s.options.host + ":" + std::to_string(s.options.port));
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  s.bound_port = ntohs(addr.sin_port);
  s.listen_fd = fd;

  if (s.options.replay_log) {
    s.runners[kReplayId] = std::make_unique<Runner>(
        std::make_unique<ReplaySession>(kReplayId, *s.options.replay_log, s.options.replay_speed), s.options.pacing);
  }
  s.started = true;
  s.acceptor = std::thread([&s] { s.accept_loop(); });
}

void TeleopServer::stop() {
  Impl& s = *impl_;
  if (!s.started) return;
  s.started = false;
  s.stopping = true;
  if (s.acceptor.joinable()) s.acceptor.join();
  ::close(s.listen_fd);
  s.listen_fd = -1;

  std::vector<std::shared_ptr<Connection>> conns;
  {
    std::lock_guard lk(s.mu);
    conns = s.connections;
  }
  for (auto& c : conns) c->abort();
  for (auto& c : conns) {
    if (c->reader.joinable()) c->reader.join();
    if (c->writer.joinable()) c->writer.join();
  }
  std::map<std::string, std::unique_ptr<Runner>> runners;
  {
    std::lock_guard lk(s.mu);
    s.connections.clear();
    runners.swap(s.runners);
  }
  for (auto& [id, r] : runners) {
    r->stop();
    for (auto& p : r->logs()) s.closed_logs.push_back(p);
  }
}

std::uint16_t TeleopServer::port() const { return impl_->bound_port; }

bool TeleopServer::replay_finished() const {
  std::lock_guard lk(impl_->mu);
  auto it = impl_->runners.find(kReplayId);
  return it != impl_->runners.end() && it->second->finished();
}

std::vector<std::filesystem::path> TeleopServer::recorded_logs() const {
  std::lock_guard lk(impl_->mu);
  std::vector<std::filesystem::path> out = impl_->closed_logs;
  for (auto& [id, r] : impl_->runners)
    for (auto& p : r->logs()) out.push_back(p);
  return out;
}

std::size_t TeleopServer::session_count() const {
  std::lock_guard lk(impl_->mu);
  return impl_->runners.size();
}

}  // namespace dream::service
