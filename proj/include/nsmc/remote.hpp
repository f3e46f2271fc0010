#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nsmc/model.hpp"
#include "nsmc/parser.hpp"
#include "nsmc/runner.hpp"

namespace nsmc {

class RemoteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- encoding helpers ----------------------------------------------------------

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash identifying a model on both ends: taken over the canonical source, so
/// formatting and comments do not matter.
inline std::uint64_t model_hash(const ModelAst& m) { return fnv1a64(to_source(m)); }

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  auto r = std::to_chars(buf, buf + 16, v, 16);
  std::string s(buf, r.ptr);
  return std::string(16 - s.size(), '0') + s;
}

inline std::string base64_encode(std::string_view in) {
  static const char* tbl = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((in.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < in.size(); i += 3) {
    const std::uint32_t v = (static_cast<unsigned char>(in[i]) << 16) |
                            (static_cast<unsigned char>(in[i + 1]) << 8) |
                            static_cast<unsigned char>(in[i + 2]);
    out += tbl[v >> 18];
    out += tbl[(v >> 12) & 63];
    out += tbl[(v >> 6) & 63];
    out += tbl[v & 63];
  }
  if (i < in.size()) {
    std::uint32_t v = static_cast<unsigned char>(in[i]) << 16;
    if (i + 1 < in.size()) v |= static_cast<unsigned char>(in[i + 1]) << 8;
    out += tbl[v >> 18];
    out += tbl[(v >> 12) & 63];
    out += i + 1 < in.size() ? tbl[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

inline std::string base64_decode(std::string_view in) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  if (in.size() % 4 != 0) throw RemoteError("bad base64 length");
  std::string out;
  for (std::size_t i = 0; i < in.size(); i += 4) {
    int v[4];
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = in[i + static_cast<std::size_t>(k)];
      if (c == '=' && i + 4 == in.size() && k >= 2) {
        v[k] = 0;
        ++pad;
      } else {
        v[k] = val(c);
        if (v[k] < 0 || pad) throw RemoteError("bad base64 character");
      }
    }
    const std::uint32_t w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out += static_cast<char>(w >> 16);
    if (pad < 2) out += static_cast<char>((w >> 8) & 0xff);
    if (pad < 1) out += static_cast<char>(w & 0xff);
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw RemoteError("bad number '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw RemoteError("bad integer '" + std::string(s) + "'");
  return v;
}

// ---- messages ------------------------------------------------------------------

/// Work request for the runs whose seed counters lie in [seed_lo, seed_hi)
/// (mod 2^64). The run with counter c uses splitmix64(c) as its seed, which
/// equals run_seed(master, i) for c = master + i.
struct Request {
  std::uint64_t id = 0;
  std::uint64_t model_hash = 0;
  std::string payload;  // query text, newline, options
  std::uint64_t seed_lo = 0;
  std::uint64_t seed_hi = 0;

  std::uint64_t count() const { return seed_hi - seed_lo; }
};

struct Response {
  std::uint64_t id = 0;
  bool error = false;
  std::string reason;
  std::vector<RunOutcome> outcomes;
};

/// Query text plus the options that change outcomes.
inline std::string make_payload(const std::string& query, bool reuse) {
  return query + "\nreuse=" + (reuse ? "on" : "off");
}

inline std::pair<std::string, bool> split_payload(const std::string& payload) {
  const auto nl = payload.find('\n');
  if (nl == std::string::npos) return {payload, true};
  const std::string opts = payload.substr(nl + 1);
  if (opts != "reuse=on" && opts != "reuse=off") throw RemoteError("unknown options '" + opts + "'");
  return {payload.substr(0, nl), opts == "reuse=on"};
}

inline std::string encode(const Request& r) {
  return "REQ " + std::to_string(r.id) + " " + hex64(r.model_hash) + " " + base64_encode(r.payload) +
         " " + std::to_string(r.seed_lo) + " " + std::to_string(r.seed_hi);
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    if (i >= line.size()) break;
    std::size_t j = line.find(' ', i);
    if (j == std::string_view::npos) j = line.size();
    f.push_back(line.substr(i, j - i));
    i = j;
  }
  return f;
}

inline Request decode_request(std::string_view line) {
  auto f = split_fields(line);
  if (f.size() != 6 || f[0] != "REQ") throw RemoteError("malformed request");
  Request r;
  r.id = parse_u64(f[1]);
  if (f[2].size() != 16) throw RemoteError("malformed model hash");
  auto res = std::from_chars(f[2].data(), f[2].data() + 16, r.model_hash, 16);
  if (res.ec != std::errc{} || res.ptr != f[2].data() + 16) throw RemoteError("malformed model hash");
  r.payload = base64_decode(f[3]);
  r.seed_lo = parse_u64(f[4]);
  r.seed_hi = parse_u64(f[5]);
  return r;
}

/// Outcome bits, LSB first within each byte, as lowercase hex; aggregates as a
/// comma-separated list, a trailing '!' marking a deadlocked run. `-` stands
/// for an empty field.
inline std::string encode(const Response& r) {
  if (r.error) return "ERR " + std::to_string(r.id) + " " + r.reason;
  std::string bits, aggs;
  static const char* hex = "0123456789abcdef";
  for (std::size_t i = 0; i < r.outcomes.size(); i += 8) {
    unsigned byte = 0;
    for (std::size_t j = 0; j < 8 && i + j < r.outcomes.size(); ++j)
      if (r.outcomes[i + j].success) byte |= 1u << j;
    bits += hex[byte >> 4];
    bits += hex[byte & 15];
  }
  for (std::size_t i = 0; i < r.outcomes.size(); ++i) {
    if (i) aggs += ',';
    aggs += format_double(r.outcomes[i].aggregate);
    if (r.outcomes[i].deadlock) aggs += '!';
  }
  if (bits.empty()) bits = "-";
  if (aggs.empty()) aggs = "-";
  return "RES " + std::to_string(r.id) + " " + bits + " " + aggs;
}

inline Response decode_response(std::string_view line) {
  Response r;
  if (line.substr(0, 4) == "ERR ") {
    auto rest = line.substr(4);
    const auto sp = rest.find(' ');
    r.id = parse_u64(rest.substr(0, sp));
    r.error = true;
    r.reason = sp == std::string_view::npos ? "" : std::string(rest.substr(sp + 1));
    return r;
  }
  auto f = split_fields(line);
  if (f.size() != 4 || f[0] != "RES") throw RemoteError("malformed response");
  r.id = parse_u64(f[1]);
  std::vector<std::string_view> aggs;
  if (f[3] != "-") {
    std::size_t i = 0;
    while (i <= f[3].size()) {
      std::size_t j = f[3].find(',', i);
      if (j == std::string_view::npos) j = f[3].size();
      aggs.push_back(f[3].substr(i, j - i));
      i = j + 1;
    }
  }
  const std::string_view bits = f[2] == "-" ? std::string_view{} : f[2];
  if (bits.size() != (aggs.size() + 7) / 8 * 2) throw RemoteError("bit vector length mismatch");
  for (std::size_t i = 0; i < aggs.size(); ++i) {
    RunOutcome o;
    auto a = aggs[i];
    if (!a.empty() && a.back() == '!') {
      o.deadlock = true;
      a.remove_suffix(1);
    }
    o.aggregate = parse_double(a);
    const char hc = bits[(i / 8) * 2 + ((i % 8) < 4 ? 1 : 0)];
    const int nib = hc >= 'a' ? hc - 'a' + 10 : hc - '0';
    if (nib < 0 || nib > 15) throw RemoteError("bad hex digit in bit vector");
    o.success = (nib >> (i % 4)) & 1;
    r.outcomes.push_back(o);
  }
  return r;
}

// ---- sockets -------------------------------------------------------------------

namespace detail {

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& o) noexcept : fd_(o.fd_), buf_(std::move(o.buf_)) { o.fd_ = -1; }
  Socket& operator=(Socket&& o) noexcept {
    if (this != &o) {
      close();
      fd_ = o.fd_;
      buf_ = std::move(o.buf_);
      o.fd_ = -1;
    }
    return *this;
  }
  ~Socket() { close(); }

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  void close() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

  void send_line(const std::string& line) {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw RemoteError(std::string("send failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  /// Next line without its terminator; nullopt on orderly close. Throws on
  /// timeout (`timeout_ms` < 0 waits forever) or when `stop` becomes true.
  std::optional<std::string> read_line(int timeout_ms, const std::atomic<bool>* stop = nullptr) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
    for (;;) {
      const auto nl = buf_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      int wait = 200;
      if (timeout_ms >= 0) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                              deadline - std::chrono::steady_clock::now())
                              .count();
        if (left <= 0) throw RemoteError("timed out waiting for peer");
        wait = static_cast<int>(std::min<long long>(left, 200));
      }
      if (stop && stop->load()) throw RemoteError("stopped");
      pollfd p{fd_, POLLIN, 0};
      const int rc = ::poll(&p, 1, wait);
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw RemoteError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) continue;
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw RemoteError(std::string("recv failed: ") + std::strerror(errno));
      }
      if (n == 0) return std::nullopt;
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  int fd_ = -1;
  std::string buf_;
};

inline std::pair<std::string, std::string> split_endpoint(const std::string& ep) {
  const auto colon = ep.rfind(':');
  if (colon == std::string::npos) throw RemoteError("endpoint '" + ep + "' is not host:port");
  std::string host = ep.substr(0, colon);
  if (host.empty()) host = "127.0.0.1";
  return {host, ep.substr(colon + 1)};
}

inline Socket connect_to(const std::string& endpoint) {
  auto [host, port] = split_endpoint(endpoint);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw RemoteError("cannot resolve " + endpoint + ": " + ::gai_strerror(rc));
  Socket s;
  for (auto* ai = res; ai; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      s = Socket(fd);
      break;
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (!s.valid()) throw RemoteError("cannot connect to " + endpoint);
  const int one = 1;
  ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return s;
}

}  // namespace detail

// ---- worker side ---------------------------------------------------------------

/// Answers requests for one model. Engines are cached per query payload.
class WorkerService {
 public:
  WorkerService(const ModelAst& ast) : net_(build_network(ast)), hash_(model_hash(ast)) {}

  std::uint64_t hash() const { return hash_; }

  std::string handle(std::string_view line) {
    Response resp;
    try {
      auto f = split_fields(line);
      if (f.size() >= 2) resp.id = parse_u64(f[1]);
      const Request req = decode_request(line);
      if (req.model_hash != hash_)
        throw RemoteError("model hash mismatch: worker has " + hex64(hash_) + ", request has " +
                          hex64(req.model_hash));
      auto& engine = engine_for(req.payload);
      const std::uint64_t n = req.count();
      if (n > 100'000'000) throw RemoteError("seed range too large");
      resp.outcomes.reserve(n);
      for (std::uint64_t i = 0; i < n; ++i) resp.outcomes.push_back(engine.run(req.seed_lo + i, 0));
    } catch (const std::exception& e) {
      resp.error = true;
      resp.reason = e.what();
      for (auto& c : resp.reason)
        if (c == '\n' || c == '\r') c = ' ';
      resp.outcomes.clear();
    }
    return encode(resp);
  }

 private:
  RunEngine& engine_for(const std::string& payload) {
    auto it = engines_.find(payload);
    if (it != engines_.end()) return *it->second.engine;
    auto [text, reuse] = split_payload(payload);
    Entry e;
    e.query = resolve_query(parse_query(text), net_);
    e.engine = std::make_unique<RunEngine>(net_, e.query, reuse);
    return *engines_.emplace(payload, std::move(e)).first->second.engine;
  }

  struct Entry {
    Query query;
    std::unique_ptr<RunEngine> engine;
  };

  Network net_;
  std::uint64_t hash_;
  std::map<std::string, Entry> engines_;
};

/// Listening socket bound to `endpoint` ("host:port"; port 0 picks a free one).
class WorkerServer {
 public:
  WorkerServer(WorkerService& service, const std::string& endpoint) : service_(service) {
    auto [host, port] = detail::split_endpoint(endpoint);
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_PASSIVE;
    addrinfo* res = nullptr;
    if (int rc = ::getaddrinfo(host.c_str(), port.c_str(), &hints, &res); rc != 0)
      throw RemoteError("cannot resolve " + endpoint + ": " + ::gai_strerror(rc));
    const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
      ::freeaddrinfo(res);
      throw RemoteError("socket failed");
    }
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    listener_ = detail::Socket(fd);
    const int rc = ::bind(fd, res->ai_addr, res->ai_addrlen);
    ::freeaddrinfo(res);
    if (rc != 0 || ::listen(fd, 16) != 0)
      throw RemoteError("cannot listen on " + endpoint + ": " + std::strerror(errno));
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
  }

  int port() const { return port_; }

  /// Serves connections one at a time until `stop` becomes true.
  void serve(const std::atomic<bool>& stop) {
    while (!stop.load()) {
      pollfd p{listener_.fd(), POLLIN, 0};
      const int rc = ::poll(&p, 1, 100);
      if (rc <= 0) continue;
      const int fd = ::accept(listener_.fd(), nullptr, nullptr);
      if (fd < 0) continue;
      detail::Socket conn(fd);
      try {
        while (auto line = conn.read_line(-1, &stop)) {
          if (line->empty()) continue;
          conn.send_line(service_.handle(*line));
        }
      } catch (const RemoteError&) {
        // peer vanished or shutdown requested; drop the connection
      }
    }
  }

 private:
  WorkerService& service_;
  detail::Socket listener_;
  int port_ = 0;
};

// ---- coordinator side ----------------------------------------------------------

/// Executes batches on a remote worker. After a transport failure the worker
/// is considered gone and every later call throws, so the coordinator
/// recomputes those batches locally.
class RemoteExecutor {
 public:
  RemoteExecutor(std::string endpoint, std::uint64_t hash, std::string payload, int timeout_ms = 600'000)
      : state_(std::make_shared<State>()) {
    state_->endpoint = std::move(endpoint);
    state_->hash = hash;
    state_->payload = std::move(payload);
    state_->timeout_ms = timeout_ms;
  }

  /// Connects and exchanges an empty request; throws RemoteError when the
  /// worker rejects the model or the query.
  void handshake() {
    std::lock_guard lock(state_->mu);
    state_->sock = detail::connect_to(state_->endpoint);
    auto r = exchange(0, 0);
    if (r.error) {
      state_->dead = true;
      throw RemoteError("worker " + state_->endpoint + " refused: " + r.reason);
    }
  }

  std::vector<RunOutcome> operator()(std::uint64_t master, std::uint64_t lo, std::uint64_t hi) const {
    std::lock_guard lock(state_->mu);
    if (state_->dead) throw RemoteError("worker " + state_->endpoint + " is unavailable");
    try {
      if (!state_->sock.valid()) state_->sock = detail::connect_to(state_->endpoint);
      auto r = exchange(master + lo, master + hi);
      if (r.error) throw RemoteError("worker " + state_->endpoint + ": " + r.reason);
      if (r.outcomes.size() != hi - lo) throw RemoteError("worker returned wrong run count");
      return std::move(r.outcomes);
    } catch (...) {
      state_->dead = true;
      state_->sock.close();
      throw;
    }
  }

 private:
  struct State {
    std::mutex mu;
    std::string endpoint;
    std::uint64_t hash = 0;
    std::string payload;
    int timeout_ms = 0;
    detail::Socket sock;
    std::uint64_t next_id = 1;
    bool dead = false;
  };

  Response exchange(std::uint64_t seed_lo, std::uint64_t seed_hi) const {
    Request req;
    req.id = state_->next_id++;
    req.model_hash = state_->hash;
    req.payload = state_->payload;
    req.seed_lo = seed_lo;
    req.seed_hi = seed_hi;
    state_->sock.send_line(encode(req));
    auto line = state_->sock.read_line(state_->timeout_ms);
    if (!line) throw RemoteError("worker " + state_->endpoint + " closed the connection");
    auto r = decode_response(*line);
    if (r.id != req.id) throw RemoteError("response id mismatch");
    return r;
  }

  std::shared_ptr<State> state_;
};

/// Local cores plus remote workers under the same canonical-order contract as
/// run_parallel. Every remote endpoint is checked before any run starts.
inline StatResult dispatch_remote(const ModelAst& ast, const Network& net, const Query& q,
                                  const std::string& query_text, const RunParams& p,
                                  const std::vector<std::string>& endpoints, int timeout_ms = 600'000) {
  std::vector<RangeExecutor> execs;
  for (int w = 0; w < p.cores; ++w) execs.emplace_back(LocalExecutor(net, q, p.reuse));
  const auto hash = model_hash(ast);
  for (const auto& ep : endpoints) {
    RemoteExecutor r(ep, hash, make_payload(query_text, p.reuse), timeout_ms);
    r.handshake();
    execs.emplace_back(r);
  }
  return run_rounds(q, p, execs, LocalExecutor(net, q, p.reuse));
}

}  // namespace nsmc
