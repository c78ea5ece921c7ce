#include <gtest/gtest.h>

#include <sstream>

#include "dtmfsim/tables.hpp"
#include "dtmfsim/telemetry_io.hpp"
#include "dtmfsim/wire.hpp"

using namespace dtmfsim;
using io::json;

TEST(Csv, HeaderAndRowLayout) {
  sim::TelemetrySnapshot s;
  s.t = 0.14;
  s.session = channel::Phase::Connected;
  s.est = true;
  s.std_edge = true;
  s.latched = tone::Nibble::parse("0110");
  s.drive = {driver::MotorAction::Forward, driver::MotorAction::Forward};
  s.motion = driver::Motion::Forward;
  s.motor_volts = {4.8, 4.8};
  s.pose = {0.25, -0.5, 1.0 / 3.0};
  EXPECT_EQ(io::csv_row(s), "0.140,Connected,1,1,0110,Forward,Forward,Forward,4.80,4.80,0.250000,-0.500000,0.333333");
  EXPECT_EQ(std::string(io::kCsvHeader),
            "t,session,est,std_edge,latched,drive_left,drive_right,motion,motor_left_v,motor_right_v,x,y,theta");
  std::ostringstream out;
  io::write_csv(out, {sim::TelemetrySnapshot{}});
  EXPECT_EQ(out.str(), std::string(io::kCsvHeader) +
                           "\n0.000,Idle,0,0,,Stop,Stop,Stop,0.00,0.00,0.000000,0.000000,0.000000\n");
}

TEST(TelemetryJson, Fields) {
  sim::TelemetrySnapshot s;
  s.latched = tone::Nibble::parse("1001");
  const auto j = io::to_json(s);
  EXPECT_EQ(j["latched"], "1001");
  EXPECT_EQ(j["session"], "Idle");
  EXPECT_EQ(j["drive"]["left"], "Stop");
  EXPECT_TRUE(j["pose"].contains("theta"));
  EXPECT_TRUE(io::to_json(sim::TelemetrySnapshot{})["latched"].is_null());
}

TEST(ScenarioFile, ParsesEvents) {
  const auto events = io::parse_scenario(
      "{\"t\": 0, \"kind\": \"dial\"}\n"
      "\n"
      "{\"t\": 0.5, \"kind\": \"down\", \"key\": \"6\", \"note\": \"ignored\"}\n"
      "{\"t\": 0.7, \"kind\": \"up\"}\n"
      "{\"t\": 1.0, \"kind\": \"hangup\"}\n");
  ASSERT_EQ(events.size(), 4u);
  EXPECT_EQ(events[1], sim::Event::down(0.5, tone::ToneKey::parse('6')));
  EXPECT_EQ(events[2].kind, sim::EventKind::Up);
  for (const auto& e : events) {
    EXPECT_EQ(io::event_from_json(io::event_to_json(e)), e);
  }
}

TEST(ScenarioFile, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      io::parse_scenario(text);
    } catch (const io::ScenarioParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("{\"t\":0,\"kind\":\"down\",\"key\":\"6\"}\n\n{\"t\":0.1,\"kind\":\"down\",\"key\":\"4\"}\n"), 3u);
  EXPECT_EQ(line_of("{\"t\":0,\"kind\":\"down\",\"key\":\"6\"}\nnot json\n"), 2u);
  EXPECT_EQ(line_of("{\"t\":0,\"kind\":\"jump\"}\n"), 1u);
  EXPECT_EQ(line_of("{\"kind\":\"up\"}\n"), 1u);
  EXPECT_EQ(line_of("{\"t\":0,\"kind\":\"down\",\"key\":\"X\"}\n"), 1u);
  EXPECT_EQ(line_of("{\"t\":1,\"kind\":\"dial\"}\n{\"t\":0.5,\"kind\":\"hangup\"}\n"), 2u);
  EXPECT_EQ(line_of("{\"t\":0,\"kind\":\"down\"}\n"), 1u);
  EXPECT_EQ(line_of(""), 0u);
}

TEST(ConfigJson, OverridesAndIgnoresUnknown) {
  sim::SimConfig c;
  io::apply_config(json::parse(R"({
    "sample_rate_hz": 16000,
    "steering": {"guard_time": 0.05},
    "channel": {"snr_db": 25, "latency_ms": 200, "rng_seed": 9},
    "vehicle": {"v0": 0.8},
    "code_mode": "datasheet",
    "electrical": "microcontroller",
    "future_field": {"anything": true}
  })"),
                   c);
  EXPECT_EQ(c.detector.sample_rate_hz, 16000.0);
  EXPECT_EQ(c.detector.frame_len, 320u);
  EXPECT_NEAR(steering::guard_time(c.steering), 0.05, 1e-12);
  EXPECT_EQ(c.channel.snr_db, 25.0);
  EXPECT_DOUBLE_EQ(c.channel.latency, 0.2);
  EXPECT_EQ(c.channel.rng_seed, 9u);
  EXPECT_EQ(c.vehicle.v0, 0.8);
  EXPECT_EQ(c.code_mode, tone::CodeMode::Datasheet);
  EXPECT_EQ(c.electrical.v_motor_moving, 4.20);
  EXPECT_THROW(io::apply_config(json::parse(R"({"channel": {"dropout_rate": 2}})"), c), std::invalid_argument);
  EXPECT_THROW(io::apply_config(json::parse("[1]"), c), std::invalid_argument);
}

TEST(ConfigJson, EchoRoundTrips) {
  sim::SimConfig c;
  c.channel.latency = 0.123;
  const auto j = io::config_to_json(c);
  EXPECT_TRUE(j["channel"]["snr_db"].is_null());
  EXPECT_NEAR(j["steering"]["t_rec"].get<double>(), 0.0629, 1e-4);
  sim::SimConfig back;
  io::apply_config(j, back);
  EXPECT_EQ(io::config_to_json(back), j);
}

TEST(Wire, EncodeDecode) {
  const wire::WireMessage m{wire::MessageType::KeyDown, 42, json{{"key", "6"}}};
  const auto text = wire::encode(m);
  EXPECT_EQ(wire::decode(text), m);
  const auto extra = wire::decode(R"({"type":"hangup","seq":3,"payload":{},"future":1})");
  EXPECT_EQ(extra.type, wire::MessageType::Hangup);
  EXPECT_EQ(wire::decode(R"({"type":"dial","seq":18446744073709551615})").seq, 18446744073709551615ull);
}

TEST(Wire, RejectsMalformed) {
  EXPECT_THROW(wire::decode("{"), wire::WireError);
  EXPECT_THROW(wire::decode("[]"), wire::WireError);
  EXPECT_THROW(wire::decode(R"({"seq":1})"), wire::WireError);
  EXPECT_THROW(wire::decode(R"({"type":"teleport","seq":1})"), wire::WireError);
  EXPECT_THROW(wire::decode(R"({"type":"dial"})"), wire::WireError);
  EXPECT_THROW(wire::decode(R"({"type":"dial","seq":-1})"), wire::WireError);
  EXPECT_THROW(wire::decode(R"({"type":"dial","seq":1,"payload":3})"), wire::WireError);
}

TEST(Wire, Directions) {
  using T = wire::MessageType;
  EXPECT_FALSE(wire::client_may_send(T::Telemetry));
  EXPECT_FALSE(wire::client_may_send(T::Error));
  EXPECT_TRUE(wire::client_may_send(T::KeyDown));
  EXPECT_TRUE(wire::server_may_send(T::Telemetry));
  EXPECT_FALSE(wire::server_may_send(T::KeyDown));
  EXPECT_FALSE(wire::server_may_send(T::Configure));
  EXPECT_TRUE(wire::is_command(T::Configure));
  EXPECT_FALSE(wire::is_command(T::Hello));
}

TEST(Wire, SequenceNumbersIncrease) {
  wire::Sequencer out;
  EXPECT_EQ(out.next(), 1u);
  EXPECT_EQ(out.next(), 2u);
  wire::SeqGuard in;
  in.accept(5);
  in.accept(9);
  EXPECT_THROW(in.accept(9), wire::WireError);
  EXPECT_THROW(in.accept(3), wire::WireError);
}

TEST(Tables, ContainsReferenceRows) {
  std::ostringstream out;
  tables::render_all(out);
  const auto text = out.str();
  EXPECT_NE(text.find("\n6 | 0110 | Forward\n"), std::string::npos);
  EXPECT_NE(text.find("\n9 | 1001 | Reverse\n"), std::string::npos);
  EXPECT_NE(text.find("\n0 | 0000 | Stop\n"), std::string::npos);
  EXPECT_NE(text.find("\n0 | 1010 | SpinRight\n"), std::string::npos);  // datasheet mode
  EXPECT_NE(text.find("\n0100 | Stop | Forward | Left\n"), std::string::npos);
  EXPECT_NE(text.find("\n0010 | Forward | Stop | Right\n"), std::string::npos);
  EXPECT_NE(text.find("\n697 | 1 | 2 | 3 | A\n"), std::string::npos);
  EXPECT_NE(text.find("Hz | 1209 | 1336 | 1477 | 1633\n"), std::string::npos);
  EXPECT_NE(text.find("dtmf_decoder | 4.80 | 0.09 | 4.80 | 0.09"), std::string::npos);
  EXPECT_NE(text.find("20.00 | 40.00 | 22.87 | 62.87 | 80.00"), std::string::npos);
}
