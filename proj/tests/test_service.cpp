#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "dtmfsim/service.hpp"

using namespace dtmfsim;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using wire::json;

namespace {

service::ServiceOptions fast_options() {
  service::ServiceOptions o;
  o.port = 0;
  o.decimation = 1;
  o.time_scale = 4.0;
  return o;
}

struct HttpReply {
  unsigned status = 0;
  std::string content_type;
  std::string body;
};

HttpReply http_get(unsigned short port, const std::string& target, http::verb verb = http::verb::get) {
  net::io_context ioc;
  tcp::resolver resolver(ioc);
  beast::tcp_stream stream(ioc);
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  if (verb == http::verb::head) {
    http::response_parser<http::string_body> parser;
    parser.skip(true);
    http::read(stream, buffer, parser);
    res = parser.release();
  } else {
    http::read(stream, buffer, res);
  }
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {res.result_int(), std::string(res[http::field::content_type]), res.body()};
}

class Client {
 public:
  explicit Client(unsigned short port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/ws");
  }

  ~Client() {
    beast::error_code ec;
    ws_.close(websocket::close_code::normal, ec);
  }

  void send_raw(const std::string& text) { ws_.write(net::buffer(text)); }

  void send(wire::MessageType type, json payload = json::object()) {
    send_raw(wire::encode({type, ++seq_, std::move(payload)}));
  }

  std::uint64_t last_seq() const { return seq_; }

  wire::WireMessage read() {
    beast::flat_buffer buffer;
    ws_.read(buffer);
    return wire::decode(beast::buffers_to_string(buffer.data()));
  }

  /// Reads until a message of `type` arrives or `limit` messages pass.
  std::optional<wire::WireMessage> read_until(wire::MessageType type, int limit = 2000) {
    for (int i = 0; i < limit; ++i) {
      auto m = read();
      if (m.type == type) return m;
    }
    return std::nullopt;
  }

  std::string hello() {
    send(wire::MessageType::Hello);
    const auto m = read_until(wire::MessageType::Hello);
    return m ? m->payload.at("role").get<std::string>() : "";
  }

 private:
  net::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
  std::uint64_t seq_ = 0;
};

}  // namespace

TEST(StaticFiles, ResolveStaysUnderRoot) {
  const std::filesystem::path root = "/srv/ui";
  EXPECT_EQ(service::resolve_static(root, "/"), root / "index.html");
  EXPECT_EQ(service::resolve_static(root, "/app.js?v=2"), root / "app.js");
  EXPECT_FALSE(service::resolve_static(root, "/../etc/passwd"));
  EXPECT_FALSE(service::resolve_static(root, "/a\\b"));
  EXPECT_FALSE(service::resolve_static({}, "/index.html"));
  EXPECT_EQ(service::mime_type("x.js"), "application/javascript");
  EXPECT_EQ(service::mime_type("x.bin"), "application/octet-stream");
}

TEST(Service, RolesAndTelemetry) {
  service::Service svc(sim::SimConfig{}, fast_options());
  svc.start();
  Client op(svc.port());
  EXPECT_EQ(op.hello(), "operator");
  Client watcher(svc.port());
  EXPECT_EQ(watcher.hello(), "observer");

  watcher.send(wire::MessageType::KeyDown, {{"key", "6"}});
  const auto rejected = watcher.read_until(wire::MessageType::Error);
  ASSERT_TRUE(rejected);
  EXPECT_EQ(rejected->payload.at("message"), "observer may not command");
  EXPECT_EQ(rejected->payload.at("in_reply_to"), watcher.last_seq());

  // Let the call connect before pressing.
  for (;;) {
    const auto t = op.read_until(wire::MessageType::Telemetry);
    ASSERT_TRUE(t);
    if (t->payload.at("session") == "Connected") break;
  }
  op.send(wire::MessageType::KeyDown, {{"key", "6"}});
  const double sent_at = svc.sim_time();
  const auto cfg = svc.session().config();
  const double budget = steering::t_rec(cfg.detector, cfg.steering, cfg.tick()) + cfg.channel.latency;
  std::optional<double> latched_at;
  std::uint64_t last_seq = 0;
  while (!latched_at) {
    const auto t = op.read_until(wire::MessageType::Telemetry);
    ASSERT_TRUE(t);
    EXPECT_GT(t->seq, last_seq);
    last_seq = t->seq;
    if (t->payload.at("latched") == "0110") latched_at = t->payload.at("t").get<double>();
    ASSERT_LT(t->payload.at("t").get<double>(), sent_at + 2.0);
  }
  // One tick of slack for the command landing mid-tick, one for pacing.
  EXPECT_LE(*latched_at - sent_at, budget + 2 * cfg.tick());
  svc.stop();
}

TEST(Service, MalformedInputGetsErrorAndSessionContinues) {
  service::Service svc(sim::SimConfig{}, fast_options());
  svc.start();
  Client c(svc.port());
  c.send_raw("{not json");
  auto e = c.read_until(wire::MessageType::Error);
  ASSERT_TRUE(e);
  c.send_raw(R"({"type":"telemetry","seq":1,"payload":{}})");
  e = c.read_until(wire::MessageType::Error);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->payload.at("message"), "telemetry is server-to-client only");
  c.send_raw(R"({"type":"hello","seq":2})");
  const auto h = c.read_until(wire::MessageType::Hello);
  ASSERT_TRUE(h);
  c.send_raw(R"({"type":"key_down","seq":2,"payload":{"key":"6"}})");
  e = c.read_until(wire::MessageType::Error);
  ASSERT_TRUE(e);  // repeated sequence number
  c.send_raw(R"({"type":"key_down","seq":3,"payload":{"key":"Z"}})");
  e = c.read_until(wire::MessageType::Error);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->payload.at("in_reply_to"), 3u);
  EXPECT_TRUE(c.read_until(wire::MessageType::Telemetry));
  svc.stop();
}

TEST(Service, HealthAndStaticHosting) {
  const auto dir = std::filesystem::temp_directory_path() / "dtmfsim_ui_test";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "index.html") << "<html>keypad</html>";
  auto opt = fast_options();
  opt.ui_dir = dir;
  service::Service svc(sim::SimConfig{}, opt);
  svc.start();

  const auto health = http_get(svc.port(), "/health");
  EXPECT_EQ(health.status, 200u);
  EXPECT_EQ(health.content_type, "application/json");
  const auto j = json::parse(health.body);
  EXPECT_EQ(j.at("status"), "ok");
  EXPECT_EQ(j.at("version"), kVersion);
  EXPECT_TRUE(j.at("config").contains("channel"));

  const auto index = http_get(svc.port(), "/");
  EXPECT_EQ(index.status, 200u);
  EXPECT_EQ(index.content_type, "text/html");
  EXPECT_EQ(index.body, "<html>keypad</html>");
  EXPECT_EQ(http_get(svc.port(), "/", http::verb::head).status, 200u);
  EXPECT_EQ(http_get(svc.port(), "/missing.js").status, 404u);
  EXPECT_EQ(http_get(svc.port(), "/../secret").status, 404u);
  EXPECT_EQ(http_get(svc.port(), "/health", http::verb::post).status, 405u);
  svc.stop();
  std::filesystem::remove_all(dir);
}

TEST(Service, PortInUseIsReported) {
  service::Service first(sim::SimConfig{}, fast_options());
  first.start();
  auto opt = fast_options();
  opt.port = first.port();
  service::Service second(sim::SimConfig{}, opt);
  try {
    second.start();
    FAIL() << "second bind succeeded";
  } catch (const service::ServiceError& e) {
    EXPECT_NE(std::string(e.what()).find("already in use"), std::string::npos);
  }
  first.stop();
}

TEST(Service, StopDisconnectsClients) {
  service::Service svc(sim::SimConfig{}, fast_options());
  svc.start();
  Client c(svc.port());
  EXPECT_EQ(c.hello(), "operator");
  svc.stop();
  EXPECT_THROW(
      {
        for (;;) c.read();
      },
      boost::system::system_error);
}
