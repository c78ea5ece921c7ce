#pragma once

// HTTP + WebSocket front end for a LiveSession.
//
//   GET /health   JSON with version and the running configuration
//   GET /ws       WebSocket upgrade speaking the wire protocol
//   GET /*        static files from the UI directory
//
// The first client to say hello becomes the operator; everyone else
// observes. Telemetry to observers goes through a drop-oldest queue, so a
// slow reader never holds up the simulation thread.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/asio/dispatch.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/version.hpp>
#include <boost/beast/websocket.hpp>

#include "dtmfsim/live_session.hpp"
#include "dtmfsim/telemetry_io.hpp"
#include "dtmfsim/version.hpp"
#include "dtmfsim/wire.hpp"

namespace dtmfsim::service {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using json = nlohmann::json;

class ServiceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ServiceOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::filesystem::path ui_dir;
  std::size_t decimation = 3;
  double time_scale = 1.0;  // simulated seconds per wall-clock second
  std::size_t observer_queue = 64;
  std::size_t io_threads = 2;
};

inline std::string_view mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json" || ext == ".map") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".wasm") return "application/wasm";
  return "application/octet-stream";
}

/// Maps a request target onto a file below `root`; empty when the target
/// is malformed or escapes the root.
inline std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root, std::string_view target) {
  if (root.empty() || target.empty() || target.front() != '/') {
    return std::nullopt;
  }
  const auto query = target.find_first_of("?#");
  std::string path(target.substr(0, query));
  if (path.find("..") != std::string::npos || path.find('\\') != std::string::npos) {
    return std::nullopt;
  }
  if (path.back() == '/') {
    path += "index.html";
  }
  return root / std::filesystem::path(path.substr(1));
}

class Service;

namespace detail {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, Service& service, live::ClientId id, std::size_t observer_capacity)
      : ws_(std::move(socket)),
        service_(service),
        id_(id),
        telemetry_(live::FanoutQueue<wire::WireMessage>::Policy::DropOldest, observer_capacity),
        operator_telemetry_(live::FanoutQueue<wire::WireMessage>::Policy::Lossless) {}

  void run(http::request<http::string_body> req);

  /// Thread-safe. Control messages are never dropped.
  void send_control(wire::WireMessage m) {
    control_.push(std::move(m));
    notify();
  }

  /// Thread-safe. Lossless for the operator, drop-oldest otherwise.
  void send_telemetry(const wire::WireMessage& m) {
    if (is_operator_.load()) {
      operator_telemetry_.push(m);
    } else {
      telemetry_.push(m);
    }
    notify();
  }

  /// Drops the connection without a close handshake. Only safe once the
  /// I/O threads have stopped.
  void abort() {
    closed_ = true;
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ignored);
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

  live::ClientId id() const { return id_; }
  std::uint64_t dropped() const { return telemetry_.dropped(); }

 private:
  void notify() {
    net::post(ws_.get_executor(), [self = shared_from_this()] { self->maybe_write(); });
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec);
  void handle(const std::string& text);

  void maybe_write() {
    if (writing_ || closed_) {
      return;
    }
    auto next = control_.try_pop();
    if (!next) next = operator_telemetry_.try_pop();
    if (!next) next = telemetry_.try_pop();
    if (!next) {
      return;
    }
    next->seq = outbound_.next();
    out_ = wire::encode(*next);
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(out_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      if (ec) {
        self->closed_ = true;
        return;
      }
      self->maybe_write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Service& service_;
  live::ClientId id_;
  beast::flat_buffer buffer_;
  std::string out_;
  bool writing_ = false;
  bool closed_ = false;
  std::atomic<bool> is_operator_{false};
  wire::Sequencer outbound_;
  wire::SeqGuard inbound_;
  live::FanoutQueue<wire::WireMessage> control_;
  live::FanoutQueue<wire::WireMessage> telemetry_;
  live::FanoutQueue<wire::WireMessage> operator_telemetry_;

  friend class dtmfsim::service::Service;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Service& service) : stream_(std::move(socket)), service_(service) {}

  void run() {
    net::dispatch(stream_.get_executor(), [self = shared_from_this()] { self->do_read(); });
  }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec);

  void send(http::response<http::string_body> res) {
    auto sp = std::make_shared<http::response<http::string_body>>(std::move(res));
    http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
      if (ec || sp->need_eof()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->do_read();
    });
  }

  beast::tcp_stream stream_;
  Service& service_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

}  // namespace detail

class Service {
 public:
  Service(sim::SimConfig config, ServiceOptions options)
      : options_(std::move(options)),
        session_(std::move(config), live::LiveSession::Options{options_.decimation, true}),
        acceptor_(ioc_) {
    if (!(options_.time_scale > 0.0)) {
      throw std::invalid_argument("time_scale must be positive");
    }
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ~Service() { stop(); }

  /// Binds, listens and starts the I/O and simulation threads.
  void start() {
    beast::error_code ec;
    const auto address = net::ip::make_address(options_.address, ec);
    if (ec) {
      throw ServiceError("invalid bind address '" + options_.address + "'");
    }
    const tcp::endpoint endpoint(address, options_.port);
    acceptor_.open(endpoint.protocol(), ec);
    if (!ec) acceptor_.set_option(net::socket_base::reuse_address(true), ec);
    if (!ec) acceptor_.bind(endpoint, ec);
    if (ec == net::error::address_in_use) {
      throw ServiceError("port " + std::to_string(options_.port) + " is already in use on " + options_.address);
    }
    if (!ec) acceptor_.listen(net::socket_base::max_listen_connections, ec);
    if (ec) {
      throw ServiceError("cannot listen on " + options_.address + ":" + std::to_string(options_.port) + ": " +
                         ec.message());
    }
    port_ = acceptor_.local_endpoint().port();
    do_accept();
    for (std::size_t i = 0; i < std::max<std::size_t>(1, options_.io_threads); ++i) {
      io_threads_.emplace_back([this] { ioc_.run(); });
    }
    sim_thread_ = std::jthread([this](std::stop_token stop) {
      session_.run(stop, [this](const live::LiveSession::StepResult& r) { publish(r); }, options_.time_scale);
    });
    running_ = true;
  }

  void stop() {
    if (!running_.exchange(false)) {
      return;
    }
    sim_thread_.request_stop();
    if (sim_thread_.joinable()) {
      sim_thread_.join();
    }
    ioc_.stop();
    for (auto& t : io_threads_) {
      t.join();
    }
    io_threads_.clear();
    beast::error_code ignored;
    acceptor_.close(ignored);
    std::lock_guard lock(clients_mutex_);
    for (auto& [id, weak] : clients_) {
      if (auto s = weak.lock()) {
        s->abort();
      }
    }
    clients_.clear();
  }

  unsigned short port() const { return port_; }
  const ServiceOptions& options() const { return options_; }
  live::LiveSession& session() { return session_; }
  double sim_time() const { return sim_time_.load(); }

  json health() {
    std::size_t clients = 0;
    {
      std::lock_guard lock(clients_mutex_);
      clients = clients_.size();
    }
    return json{{"status", "ok"},
                {"name", "dtmfsim"},
                {"version", kVersion},
                {"sim_time", sim_time()},
                {"clients", clients},
                {"config", io::config_to_json(session_.config())}};
  }

  json hello_payload(live::Role role, live::ClientId id) {
    return json{{"role", live::to_string(role)},
                {"client_id", id},
                {"version", kVersion},
                {"decimation", options_.decimation},
                {"config", io::config_to_json(session_.config())}};
  }

  // Connection bookkeeping, called from the session classes.
  live::ClientId register_client(const std::shared_ptr<detail::WsSession>& s) {
    std::lock_guard lock(clients_mutex_);
    clients_[s->id()] = s;
    return s->id();
  }

  void unregister_client(live::ClientId id) {
    session_.leave(id);
    std::lock_guard lock(clients_mutex_);
    clients_.erase(id);
  }

  live::ClientId next_client_id() { return ++last_client_; }

 private:
  void do_accept() {
    acceptor_.async_accept(net::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
      if (!ec) {
        std::make_shared<detail::HttpSession>(std::move(socket), *this)->run();
      }
      if (acceptor_.is_open()) {
        do_accept();
      }
    });
  }

  void publish(const live::LiveSession::StepResult& r) {
    sim_time_.store(r.snapshot.t);
    std::vector<std::shared_ptr<detail::WsSession>> targets;
    {
      std::lock_guard lock(clients_mutex_);
      for (auto it = clients_.begin(); it != clients_.end();) {
        if (auto s = it->second.lock()) {
          targets.push_back(std::move(s));
          ++it;
        } else {
          it = clients_.erase(it);
        }
      }
    }
    for (const auto& e : r.errors) {
      for (const auto& s : targets) {
        if (s->id() == e.client) {
          s->send_control(wire::make_error(0, e.message, e.seq));
        }
      }
    }
    if (!r.publish) {
      return;
    }
    const wire::WireMessage msg{wire::MessageType::Telemetry, 0, io::to_json(r.snapshot)};
    for (const auto& s : targets) {
      s->send_telemetry(msg);
    }
  }

  ServiceOptions options_;
  live::LiveSession session_;
  net::io_context ioc_;
  tcp::acceptor acceptor_;
  std::vector<std::thread> io_threads_;
  std::jthread sim_thread_;
  std::atomic<bool> running_{false};
  std::atomic<double> sim_time_{0.0};
  std::atomic<live::ClientId> last_client_{0};
  unsigned short port_ = 0;
  std::mutex clients_mutex_;
  std::map<live::ClientId, std::weak_ptr<detail::WsSession>> clients_;

  friend class detail::WsSession;
  friend class detail::HttpSession;
};

namespace detail {

inline void WsSession::run(http::request<http::string_body> req) {
  ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
  ws_.set_option(websocket::stream_base::decorator([](websocket::response_type& res) {
    res.set(http::field::server, std::string("dtmfsim/") + kVersion);
  }));
  ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
    if (ec) {
      return;
    }
    self->service_.register_client(self);
    self->do_read();
  });
}

inline void WsSession::on_read(beast::error_code ec) {
  if (ec) {
    closed_ = true;
    service_.unregister_client(id_);
    return;
  }
  handle(beast::buffers_to_string(buffer_.data()));
  buffer_.consume(buffer_.size());
  do_read();
}

inline void WsSession::handle(const std::string& text) {
  wire::WireMessage m;
  try {
    m = wire::decode(text);
    inbound_.accept(m.seq);
  } catch (const wire::WireError& e) {
    send_control(wire::make_error(0, e.what()));
    return;
  }
  if (!wire::client_may_send(m.type)) {
    send_control(wire::make_error(0, std::string(wire::to_string(m.type)) + " is server-to-client only", m.seq));
    return;
  }
  if (m.type == wire::MessageType::Hello) {
    const auto role = service_.session().join(id_);
    is_operator_.store(role == live::Role::Operator);
    send_control({wire::MessageType::Hello, 0, service_.hello_payload(role, id_)});
    return;
  }
  if (auto err = service_.session().post({id_, m})) {
    send_control(wire::make_error(0, *err, m.seq));
  }
}

inline void HttpSession::on_read(beast::error_code ec) {
  if (ec == http::error::end_of_stream) {
    beast::error_code ignored;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    return;
  }
  if (ec) {
    return;
  }
  const std::string target(req_.target());
  if (websocket::is_upgrade(req_)) {
    if (target == "/ws" || target.rfind("/ws?", 0) == 0) {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), service_, service_.next_client_id(),
                                  service_.options().observer_queue)
          ->run(std::move(req_));
      return;
    }
  }
  auto make = [this](http::status status, std::string_view type, std::string body) {
    http::response<http::string_body> res{status, req_.version()};
    res.set(http::field::server, std::string("dtmfsim/") + kVersion);
    res.set(http::field::content_type, std::string(type));
    res.keep_alive(req_.keep_alive());
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  };
  if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
    send(make(http::status::method_not_allowed, "text/plain", "method not allowed\n"));
    return;
  }
  if (target == "/health") {
    send(make(http::status::ok, "application/json", service_.health().dump()));
    return;
  }
  const auto path = resolve_static(service_.options().ui_dir, target);
  if (!path) {
    send(make(http::status::not_found, "text/plain", "not found\n"));
    return;
  }
  std::ifstream file(*path, std::ios::binary);
  if (!file || std::filesystem::is_directory(*path)) {
    send(make(http::status::not_found, "text/plain", "not found\n"));
    return;
  }
  std::ostringstream body;
  body << file.rdbuf();
  auto res = make(http::status::ok, mime_type(*path), body.str());
  if (req_.method() == http::verb::head) {
    res.body().clear();
  }
  send(std::move(res));
}

}  // namespace detail

}  // namespace dtmfsim::service
