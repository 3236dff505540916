#include "reenact/server.hpp"

#include <charconv>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/core.h>

#include "reenact/error.hpp"
#include "reenact/script.hpp"

namespace reenact::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

inline constexpr std::uint16_t kProtocolClose = 4400;
inline constexpr std::size_t kBodyLimit = 256u << 20;

unsigned short default_port() {
  if (const char* env = std::getenv("REENACT_PORT")) {
    unsigned value = 0;
    const std::string_view s(env);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec == std::errc{} && ptr == s.data() + s.size() && value > 0 && value < 65536)
      return static_cast<unsigned short>(value);
  }
  return kDefaultPort;
}

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

struct Target {
  std::vector<std::string> path;
  std::map<std::string, std::string> query;
};

Target split_target(std::string_view target) {
  Target t;
  const auto q = target.find('?');
  std::string_view path = target.substr(0, q);
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const auto slash = path.find('/');
    t.path.emplace_back(path.substr(0, slash));
    path = slash == std::string_view::npos ? std::string_view{} : path.substr(slash);
  }
  if (q != std::string_view::npos) {
    std::string_view query = target.substr(q + 1);
    while (!query.empty()) {
      const auto amp = query.find('&');
      const std::string_view kv = query.substr(0, amp);
      const auto eq = kv.find('=');
      t.query[std::string(kv.substr(0, eq))] = eq == std::string_view::npos ? "" : std::string(kv.substr(eq + 1));
      query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
    }
  }
  return t;
}

std::optional<Frame> query_frame(const Target& t, const std::string& key) {
  auto it = t.query.find(key);
  if (it == t.query.end()) return std::nullopt;
  Frame v = 0;
  const std::string& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw Error(ErrorCode::InvalidArgument, fmt::format("query parameter '{}' must be an integer", key));
  return v;
}

http::status status_of(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return dynamic_cast<const json::exception*>(&e) ? http::status::bad_request : http::status::internal_server_error;
  switch (err->code()) {
    case ErrorCode::UnknownSession: return http::status::not_found;
    case ErrorCode::MalformedFile:
    case ErrorCode::UnsupportedVersion:
    case ErrorCode::SyntaxError:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidRange:
    case ErrorCode::ProtocolViolation: return http::status::bad_request;
    default: return http::status::unprocessable_entity;
  }
}

Response reply(const Request& req, http::status status, std::string body, std::string_view type = "application/json") {
  Response res{status, req.version()};
  res.set(http::field::server, "reenact");
  res.set(http::field::content_type, std::string(type));
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

Response reply_json(const Request& req, http::status status, const json& body) {
  return reply(req, status, body.dump() + "\n");
}

Response reply_error(const Request& req, const std::exception& e) {
  return reply_json(req, status_of(e), {{"error", error_json(e)}});
}

json violations_json(const std::vector<Violation>& vs) {
  json list = json::array();
  for (const auto& v : vs)
    list.push_back({{"code", std::string(to_string(v.code))}, {"constraint", v.constraint}, {"message", v.message}});
  return {{"valid", vs.empty()}, {"violations", list}};
}

}  // namespace

// ---------------------------------------------------------------------------

struct Server::Impl {
  SessionManager& sessions;
  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::vector<std::thread> threads;
  unsigned short bound = 0;

  std::mutex tick_mu;
  std::map<Session*, std::shared_ptr<net::steady_timer>> tickers;

  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stopped = false;

  Impl(SessionManager& s, ServerOptions o) : sessions(s), options(std::move(o)) {}

  void accept();
  Response route(const Request& req);
  void ensure_ticker(const std::shared_ptr<Session>& session);
  void schedule(std::shared_ptr<Session> session, std::shared_ptr<net::steady_timer> timer);
};

namespace {

/// One WebSocket client bound to a session.
class Channel : public std::enable_shared_from_this<Channel> {
 public:
  Channel(tcp::socket socket, std::shared_ptr<Session> session, Server::Impl& server)
      : ws_(std::move(socket)), session_(std::move(session)), server_(server) {}

  void run(Request req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(kBodyLimit);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      std::weak_ptr<Channel> weak = self;
      self->client_ = self->session_->connect([weak](const Event& e) {
        if (auto c = weak.lock()) c->post(e.to_json().dump());
      });
      self->connected_ = true;
      self->read();
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      drop();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    if (!ws_.got_text()) return close("binary frames are not accepted");
    json command;
    try {
      command = json::parse(text);
    } catch (const json::parse_error& e) {
      return close(fmt::format("invalid JSON: {}", e.what()));
    }
    try {
      session_->handle(client_, command);
    } catch (const Error& e) {
      return close(e.what());
    }
    server_.ensure_ticker(session_);
    read();
  }

  void post(std::string text) {
    net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)]() mutable {
      self->queue_.push_back({std::move(text), false});
      self->flush();
    });
  }

  void close(const std::string& reason) {
    drop();
    queue_.push_back({"ProtocolViolation: " + reason.substr(0, 100), true});
    flush();
  }

  void flush() {
    if (writing_ || queue_.empty() || closing_) return;
    writing_ = true;
    Outgoing& next = queue_.front();
    if (next.close) {
      closing_ = true;
      ws_.async_close(websocket::close_reason(static_cast<websocket::close_code>(kProtocolClose), next.text),
                      [self = shared_from_this()](beast::error_code) { self->writing_ = false; });
      return;
    }
    ws_.text(true);
    ws_.async_write(net::buffer(next.text), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) {
        self->queue_.clear();
        self->drop();
        return;
      }
      self->queue_.pop_front();
      self->flush();
    });
  }

  void drop() {
    if (connected_) session_->disconnect(client_);
    connected_ = false;
  }

  struct Outgoing {
    std::string text;
    bool close = false;
  };

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::shared_ptr<Session> session_;
  Server::Impl& server_;
  ClientId client_ = 0;
  bool connected_ = false;
  std::deque<Outgoing> queue_;
  bool writing_ = false;
  bool closing_ = false;
};

/// Plain HTTP connection; upgrades to a Channel on /sessions/{id}/channel.
class HttpConn : public std::enable_shared_from_this<HttpConn> {
 public:
  HttpConn(tcp::socket socket, Server::Impl& server) : stream_(std::move(socket)), server_(server) {}

  void run() {
    net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->read(); });
  }

 private:
  void read() {
    parser_.emplace();
    parser_->body_limit(kBodyLimit);
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, *parser_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    Request req = parser_->release();
    if (websocket::is_upgrade(req)) {
      const Target t = split_target(std::string_view(req.target().data(), req.target().size()));
      if (t.path.size() == 3 && t.path[0] == "sessions" && t.path[2] == "channel") {
        std::shared_ptr<Session> session;
        try {
          session = server_.sessions.get(t.path[1]);
        } catch (const std::exception& e) {
          return write(reply_error(req, e));
        }
        stream_.expires_never();
        std::make_shared<Channel>(stream_.release_socket(), std::move(session), server_)->run(std::move(req));
        return;
      }
      return write(reply_json(req, http::status::not_found, {{"error", {{"code", "NotFound"}, {"message", "no channel here"}}}}));
    }
    write(server_.route(req));
  }

  void write(Response res) {
    auto sp = std::make_shared<Response>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (sp->need_eof()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  Server::Impl& server_;
};

}  // namespace

void Server::Impl::accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec == net::error::operation_aborted) return;
    } else {
      std::make_shared<HttpConn>(std::move(socket), *this)->run();
    }
    accept();
  });
}

void Server::Impl::ensure_ticker(const std::shared_ptr<Session>& session) {
  std::lock_guard lock(tick_mu);
  if (tickers.count(session.get()) || !session->playing()) return;
  auto timer = std::make_shared<net::steady_timer>(net::make_strand(ioc));
  timer->expires_at(std::chrono::steady_clock::now());
  tickers[session.get()] = timer;
  schedule(session, timer);
}

void Server::Impl::schedule(std::shared_ptr<Session> session, std::shared_ptr<net::steady_timer> timer) {
  const auto period = std::chrono::nanoseconds(1'000'000'000LL / std::max(1, session->info().frame_rate));
  timer->expires_at(timer->expiry() + period);
  timer->async_wait([this, session, timer](beast::error_code ec) {
    std::lock_guard lock(tick_mu);
    if (ec || !session->advance()) {
      tickers.erase(session.get());
      return;
    }
    schedule(session, timer);
  });
}

Response Server::Impl::route(const Request& req) {
  try {
    const Target t = split_target(std::string_view(req.target().data(), req.target().size()));
    const auto& p = t.path;
    const http::verb m = req.method();
    const auto not_allowed = [&] {
      return reply_json(req, http::status::method_not_allowed,
                        {{"error", {{"code", "MethodNotAllowed"}, {"message", std::string(req.method_string())}}}});
    };

    if (p.size() == 1 && p[0] == "health") return reply_json(req, http::status::ok, {{"status", "ok"}});

    if (p.size() == 2 && p[0] == "scripts" && p[1] == "parse") {
      if (m != http::verb::post) return not_allowed();
      return reply(req, http::status::ok, save_project(parse_scenario(req.body())));
    }

    if (!p.empty() && p[0] == "sessions") {
      if (p.size() == 1) {
        if (m == http::verb::get) {
          json list = json::array();
          for (const auto& s : sessions.list()) list.push_back(s->info().to_json());
          return reply_json(req, http::status::ok, {{"sessions", list}});
        }
        if (m == http::verb::post) {
          Project project = req.body().empty() ? Project() : load_project(req.body());
          return reply_json(req, http::status::created, sessions.create(std::move(project))->info().to_json());
        }
        return not_allowed();
      }
      auto session = sessions.get(p[1]);
      if (p.size() == 2) {
        if (m == http::verb::get) return reply_json(req, http::status::ok, session->info().to_json());
        if (m == http::verb::delete_) {
          sessions.remove(p[1]);
          return reply_json(req, http::status::ok, {{"deleted", p[1]}});
        }
        return not_allowed();
      }
      if (p.size() == 3 && p[2] == "project") {
        if (m == http::verb::get) return reply(req, http::status::ok, session->save());
        if (m == http::verb::put) {
          session->replace(load_project(req.body()));
          return reply_json(req, http::status::ok, session->info().to_json());
        }
        return not_allowed();
      }
      if (p.size() == 3 && p[2] == "validate") {
        if (m != http::verb::get && m != http::verb::post) return not_allowed();
        return reply_json(req, http::status::ok, violations_json(session->validate()));
      }
      if (p.size() == 3 && p[2] == "state") {
        if (m != http::verb::get) return not_allowed();
        const auto frame = query_frame(t, "frame");
        if (!frame) throw Error(ErrorCode::InvalidArgument, "missing query parameter 'frame'");
        return reply_json(req, http::status::ok, state_to_json(session->state_at(*frame)));
      }
      if (p.size() == 3 && p[2] == "trace") {
        if (m != http::verb::get) return not_allowed();
        const auto snap = session->snapshot();
        const Frame from = query_frame(t, "from").value_or(0);
        const Frame to = query_frame(t, "to").value_or(snap->timeline.duration());
        const Frame stride = query_frame(t, "stride").value_or(1);
        const auto fmt_it = t.query.find("format");
        const std::string format = fmt_it == t.query.end() ? "rows" : fmt_it->second;
        if (format != "rows" && format != "structured")
          throw Error(ErrorCode::InvalidArgument, "format must be 'rows' or 'structured'");
        const auto states = export_trace(*snap, from, to, stride);
        if (format == "rows") return reply(req, http::status::ok, write_trace(states, TraceFormat::rows), "text/csv");
        return reply(req, http::status::ok, write_trace(states, TraceFormat::structured));
      }
    }
    return reply_json(req, http::status::not_found,
                      {{"error", {{"code", "NotFound"}, {"message", std::string(req.target().data(), req.target().size())}}}});
  } catch (const std::exception& e) {
    return reply_error(req, e);
  }
}

// ---------------------------------------------------------------------------

Server::Server(SessionManager& sessions, ServerOptions options)
    : impl_(std::make_unique<Impl>(sessions, std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  Impl& s = *impl_;
  beast::error_code ec;
  const auto address = net::ip::make_address(s.options.address, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, fmt::format("bad address '{}'", s.options.address));
  const tcp::endpoint endpoint(address, s.options.port);
  s.acceptor.open(endpoint.protocol(), ec);
  if (!ec) s.acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) s.acceptor.bind(endpoint, ec);
  if (!ec) s.acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    if (ec == net::error::address_in_use)
      throw Error(ErrorCode::PortInUse, fmt::format("port {} is already in use", s.options.port));
    throw Error(ErrorCode::IoError, fmt::format("cannot listen on {}:{}: {}", s.options.address, s.options.port, ec.message()));
  }
  s.bound = s.acceptor.local_endpoint().port();
  s.accept();
  for (int i = 0; i < std::max(1, s.options.threads); ++i) s.threads.emplace_back([&s] { s.ioc.run(); });
}

void Server::stop() {
  Impl& s = *impl_;
  if (s.threads.empty()) return;
  net::post(s.ioc, [&s] {
    beast::error_code ignored;
    s.acceptor.close(ignored);
  });
  s.ioc.stop();
  for (auto& t : s.threads)
    if (t.joinable()) t.join();
  s.threads.clear();
  {
    std::lock_guard lock(s.stop_mu);
    s.stopped = true;
  }
  s.stop_cv.notify_all();
}

void Server::wait() {
  Impl& s = *impl_;
  std::unique_lock lock(s.stop_mu);
  s.stop_cv.wait(lock, [&s] { return s.stopped; });
}

unsigned short Server::port() const { return impl_->bound; }

}  // namespace reenact::service
