#pragma once

// JSON text-frame protocol between the service and its UI clients.
//
//   {"type": "key_down", "seq": 7, "payload": {"key": "6"}}
//
// Client to server: hello, key_down, key_up, dial, hangup, configure.
// Server to client: hello, telemetry, error. Every message carries a
// 64-bit sequence number that increases strictly per sender; fields the
// receiver does not know are ignored.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace dtmfsim::wire {

using json = nlohmann::json;

enum class MessageType { KeyDown, KeyUp, Dial, Hangup, Configure, Telemetry, Error, Hello };

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::string_view to_string(MessageType t) noexcept {
  switch (t) {
    case MessageType::KeyDown: return "key_down";
    case MessageType::KeyUp: return "key_up";
    case MessageType::Dial: return "dial";
    case MessageType::Hangup: return "hangup";
    case MessageType::Configure: return "configure";
    case MessageType::Telemetry: return "telemetry";
    case MessageType::Error: return "error";
    case MessageType::Hello: break;
  }
  return "hello";
}

inline std::optional<MessageType> parse_type(std::string_view s) {
  for (auto t : {MessageType::KeyDown, MessageType::KeyUp, MessageType::Dial, MessageType::Hangup,
                 MessageType::Configure, MessageType::Telemetry, MessageType::Error, MessageType::Hello}) {
    if (to_string(t) == s) {
      return t;
    }
  }
  return std::nullopt;
}

constexpr bool client_may_send(MessageType t) noexcept {
  return t != MessageType::Telemetry && t != MessageType::Error;
}

constexpr bool server_may_send(MessageType t) noexcept {
  return t == MessageType::Telemetry || t == MessageType::Error || t == MessageType::Hello;
}

/// Commands that change the simulation and need the operator role.
constexpr bool is_command(MessageType t) noexcept {
  return t == MessageType::KeyDown || t == MessageType::KeyUp || t == MessageType::Dial ||
         t == MessageType::Hangup || t == MessageType::Configure;
}

struct WireMessage {
  MessageType type = MessageType::Hello;
  std::uint64_t seq = 0;
  json payload = json::object();

  bool operator==(const WireMessage&) const = default;
};

inline std::string encode(const WireMessage& m) {
  return json{{"type", to_string(m.type)}, {"seq", m.seq}, {"payload", m.payload}}.dump();
}

inline WireMessage decode(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw WireError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw WireError("message must be a JSON object");
  }
  if (!j.contains("type") || !j["type"].is_string()) {
    throw WireError("missing string field 'type'");
  }
  const auto type = parse_type(j["type"].get<std::string>());
  if (!type) {
    throw WireError("unknown message type '" + j["type"].get<std::string>() + "'");
  }
  if (!j.contains("seq") || !j["seq"].is_number_unsigned()) {
    throw WireError("missing unsigned integer field 'seq'");
  }
  WireMessage m;
  m.type = *type;
  m.seq = j["seq"].get<std::uint64_t>();
  if (j.contains("payload") && !j["payload"].is_null()) {
    if (!j["payload"].is_object()) {
      throw WireError("field 'payload' must be an object");
    }
    m.payload = j["payload"];
  }
  return m;
}

/// Outbound numbering for one sender.
class Sequencer {
 public:
  std::uint64_t next() { return ++last_; }
  std::uint64_t last() const { return last_; }

 private:
  std::uint64_t last_ = 0;
};

/// Inbound check: each message must carry a larger seq than the one before.
class SeqGuard {
 public:
  void accept(std::uint64_t seq) {
    if (seen_ && seq <= last_) {
      throw WireError("sequence number " + std::to_string(seq) + " does not follow " + std::to_string(last_));
    }
    last_ = seq;
    seen_ = true;
  }

 private:
  std::uint64_t last_ = 0;
  bool seen_ = false;
};

inline WireMessage make_error(std::uint64_t seq, const std::string& message,
                              std::optional<std::uint64_t> in_reply_to = std::nullopt) {
  WireMessage m{MessageType::Error, seq, json{{"message", message}}};
  if (in_reply_to) {
    m.payload["in_reply_to"] = *in_reply_to;
  }
  return m;
}

}  // namespace dtmfsim::wire
