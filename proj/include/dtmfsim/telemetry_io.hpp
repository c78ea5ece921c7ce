#pragma once

// Text formats around the simulation: telemetry CSV and JSON, JSON-lines
// scenario files, and JSON configuration overrides.

#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtmfsim/sim_engine.hpp"

namespace dtmfsim::io {

using json = nlohmann::json;

inline constexpr const char* kCsvHeader =
    "t,session,est,std_edge,latched,drive_left,drive_right,motion,motor_left_v,motor_right_v,x,y,theta";

inline std::string csv_row(const sim::TelemetrySnapshot& s) {
  char head[64];
  std::snprintf(head, sizeof head, "%.3f", s.t);
  char tail[160];
  std::snprintf(tail, sizeof tail, "%.2f,%.2f,%.6f,%.6f,%.6f", s.motor_volts.first, s.motor_volts.second, s.pose.x,
                s.pose.y, s.pose.theta);
  std::string row = head;
  row += ',';
  row += channel::to_string(s.session);
  row += s.est ? ",1" : ",0";
  row += s.std_edge ? ",1," : ",0,";
  row += s.latched ? s.latched->str() : "";
  row += ',';
  row += driver::to_string(s.drive.left);
  row += ',';
  row += driver::to_string(s.drive.right);
  row += ',';
  row += driver::to_string(s.motion);
  row += ',';
  row += tail;
  return row;
}

inline void write_csv(std::ostream& out, const std::vector<sim::TelemetrySnapshot>& snaps) {
  out << kCsvHeader << '\n';
  for (const auto& s : snaps) {
    out << csv_row(s) << '\n';
  }
}

inline json to_json(const sim::TelemetrySnapshot& s) {
  return json{
      {"t", s.t},
      {"session", channel::to_string(s.session)},
      {"est", s.est},
      {"std_edge", s.std_edge},
      {"latched", s.latched ? json(s.latched->str()) : json(nullptr)},
      {"drive", {{"left", driver::to_string(s.drive.left)}, {"right", driver::to_string(s.drive.right)}}},
      {"motion", driver::to_string(s.motion)},
      {"motor_volts", {{"left", s.motor_volts.first}, {"right", s.motor_volts.second}}},
      {"pose", {{"x", s.pose.x}, {"y", s.pose.y}, {"theta", s.pose.theta}}},
  };
}

// ---------------------------------------------------------------------------
// Scenario files

class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline sim::EventKind parse_event_kind(const std::string& s) {
  if (s == "down") return sim::EventKind::Down;
  if (s == "up") return sim::EventKind::Up;
  if (s == "dial") return sim::EventKind::Dial;
  if (s == "hangup") return sim::EventKind::Hangup;
  throw std::invalid_argument("unknown event kind '" + s + "'");
}

inline sim::Event event_from_json(const json& j) {
  if (!j.is_object()) {
    throw std::invalid_argument("event must be a JSON object");
  }
  if (!j.contains("t") || !j["t"].is_number()) {
    throw std::invalid_argument("missing numeric field 't'");
  }
  if (!j.contains("kind") || !j["kind"].is_string()) {
    throw std::invalid_argument("missing string field 'kind'");
  }
  sim::Event e;
  e.at = j["t"].get<double>();
  e.kind = parse_event_kind(j["kind"].get<std::string>());
  if (j.contains("key") && !j["key"].is_null()) {
    if (!j["key"].is_string()) {
      throw std::invalid_argument("field 'key' must be a string");
    }
    e.key = tone::ToneKey::parse(std::string_view(j["key"].get_ref<const std::string&>()));
  }
  if (e.kind == sim::EventKind::Down && !e.key) {
    throw std::invalid_argument("'down' needs a key");
  }
  return e;
}

inline json event_to_json(const sim::Event& e) {
  json j{{"t", e.at}, {"kind", sim::to_string(e.kind)}};
  if (e.key) {
    j["key"] = std::string(1, e.key->symbol());
  }
  return j;
}

/// One JSON object per line; blank lines are skipped. Both syntax and
/// sequencing errors report the 1-based line number.
inline std::vector<sim::Event> parse_scenario(std::istream& in) {
  std::vector<sim::Event> events;
  std::vector<std::size_t> lines;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      events.push_back(event_from_json(json::parse(text)));
    } catch (const json::exception& e) {
      throw ScenarioParseError(line, std::string("invalid JSON: ") + e.what());
    } catch (const std::exception& e) {
      throw ScenarioParseError(line, e.what());
    }
    lines.push_back(line);
  }
  try {
    sim::validate_events(events);
  } catch (const sim::ScenarioError& e) {
    throw ScenarioParseError(lines.at(e.index()), e.what());
  }
  return events;
}

inline std::vector<sim::Event> parse_scenario(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

// ---------------------------------------------------------------------------
// Configuration

namespace detail {

template <typename T>
void take(const json& j, const char* name, T& field) {
  if (j.contains(name) && !j[name].is_null()) {
    field = j[name].get<T>();
  }
}

}  // namespace detail

inline tone::CodeMode code_mode_from_json(const json& j) {
  return tone::parse_code_mode(j.get<std::string>());
}

inline driver::ElectricalConstants electrical_from_json(const json& j, driver::ElectricalConstants base) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "dtmf_decoder") return driver::ElectricalConstants::dtmf_decoder();
    if (name == "microcontroller") return driver::ElectricalConstants::microcontroller();
    if (name == "theoretical") return driver::ElectricalConstants::theoretical();
    throw std::invalid_argument("unknown electrical preset '" + name + "'");
  }
  detail::take(j, "v_high_decoder", base.v_high_decoder);
  detail::take(j, "v_low_decoder", base.v_low_decoder);
  detail::take(j, "v_motor_moving", base.v_motor_moving);
  detail::take(j, "v_motor_rest", base.v_motor_rest);
  return base;
}

/// Channel overrides. A null snr_db means a noiseless channel.
inline void apply_channel(const json& j, channel::ChannelConfig& c) {
  if (j.contains("snr_db")) {
    c.snr_db = j["snr_db"].is_null() ? std::numeric_limits<double>::infinity() : j["snr_db"].get<double>();
  }
  detail::take(j, "freq_offset_ratio", c.freq_offset_ratio);
  detail::take(j, "gain_db", c.gain_db);
  detail::take(j, "latency", c.latency);
  if (j.contains("latency_ms") && !j["latency_ms"].is_null()) {
    c.latency = j["latency_ms"].get<double>() / 1000.0;
  }
  detail::take(j, "dropout_rate", c.dropout_rate);
  detail::take(j, "rng_seed", c.rng_seed);
}

/// Applies a JSON object of overrides to `config`. Unknown fields are ignored.
inline void apply_config(const json& j, sim::SimConfig& config) {
  if (!j.is_object()) {
    throw std::invalid_argument("configuration must be a JSON object");
  }
  if (j.contains("sample_rate_hz")) {
    const auto fs = j["sample_rate_hz"].get<double>();
    const auto keep = config.detector;
    config.detector = detect::DetectorConfig::for_sample_rate(fs);
    config.detector.energy_floor = keep.energy_floor;
    config.detector.twist_limit_db = keep.twist_limit_db;
    config.detector.accept_bandwidth_hz = keep.accept_bandwidth_hz;
    config.detector.confirm_frames = keep.confirm_frames;
    config.detector.dominance_ratio = keep.dominance_ratio;
    config.detector.min_tone_power_fraction = keep.min_tone_power_fraction;
  }
  if (j.contains("detector")) {
    const auto& d = j["detector"];
    detail::take(d, "frame_len", config.detector.frame_len);
    detail::take(d, "energy_floor", config.detector.energy_floor);
    detail::take(d, "twist_limit_db", config.detector.twist_limit_db);
    detail::take(d, "accept_bandwidth_hz", config.detector.accept_bandwidth_hz);
    detail::take(d, "confirm_frames", config.detector.confirm_frames);
    detail::take(d, "dominance_ratio", config.detector.dominance_ratio);
    detail::take(d, "min_tone_power_fraction", config.detector.min_tone_power_fraction);
  }
  if (j.contains("steering")) {
    const auto& s = j["steering"];
    if (s.contains("guard_time") && !s["guard_time"].is_null()) {
      config.steering = steering::SteeringConfig::for_guard_time(s["guard_time"].get<double>());
    }
    detail::take(s, "r_ohms", config.steering.r_ohms);
    detail::take(s, "c_farads", config.steering.c_farads);
    detail::take(s, "vdd", config.steering.vdd);
    detail::take(s, "v_threshold", config.steering.v_threshold);
    if (s.contains("t_gta")) {
      config.steering.t_gta =
          s["t_gta"].is_null() ? std::nullopt : std::optional<double>(s["t_gta"].get<double>());
    }
  }
  if (j.contains("channel")) {
    apply_channel(j["channel"], config.channel);
  }
  if (j.contains("vehicle")) {
    detail::take(j["vehicle"], "v0", config.vehicle.v0);
    detail::take(j["vehicle"], "track_width", config.vehicle.track_width);
  }
  if (j.contains("code_mode")) {
    config.code_mode = code_mode_from_json(j["code_mode"]);
  }
  if (j.contains("electrical")) {
    config.electrical = electrical_from_json(j["electrical"], config.electrical);
  }
  detail::take(j, "amplitude", config.amplitude);
  if (j.contains("duration_limit")) {
    config.duration_limit =
        j["duration_limit"].is_null() ? std::nullopt : std::optional<double>(j["duration_limit"].get<double>());
  }
  config.validate();
}

inline json channel_to_json(const channel::ChannelConfig& c) {
  return json{
      {"snr_db", std::isfinite(c.snr_db) ? json(c.snr_db) : json(nullptr)},
      {"freq_offset_ratio", c.freq_offset_ratio},
      {"gain_db", c.gain_db},
      {"latency", c.latency},
      {"dropout_rate", c.dropout_rate},
      {"rng_seed", c.rng_seed},
  };
}

inline json config_to_json(const sim::SimConfig& c) {
  const auto& d = c.detector;
  const auto& s = c.steering;
  return json{
      {"sample_rate_hz", d.sample_rate_hz},
      {"tick", c.tick()},
      {"detector",
       {{"frame_len", d.frame_len},
        {"energy_floor", d.energy_floor},
        {"twist_limit_db", d.twist_limit_db},
        {"accept_bandwidth_hz", d.accept_bandwidth_hz},
        {"confirm_frames", d.confirm_frames},
        {"dominance_ratio", d.dominance_ratio},
        {"min_tone_power_fraction", d.min_tone_power_fraction}}},
      {"steering",
       {{"r_ohms", s.r_ohms},
        {"c_farads", s.c_farads},
        {"vdd", s.vdd},
        {"v_threshold", s.v_threshold},
        {"t_gta", steering::tone_absent_guard(s)},
        {"guard_time", steering::guard_time(s)},
        {"t_rec", steering::t_rec(d, s, d.frame_seconds())}}},
      {"channel", channel_to_json(c.channel)},
      {"vehicle", {{"v0", c.vehicle.v0}, {"track_width", c.vehicle.track_width}}},
      {"code_mode", tone::to_string(c.code_mode)},
      {"electrical",
       {{"v_high_decoder", c.electrical.v_high_decoder},
        {"v_low_decoder", c.electrical.v_low_decoder},
        {"v_motor_moving", c.electrical.v_motor_moving},
        {"v_motor_rest", c.electrical.v_motor_rest}}},
      {"amplitude", c.amplitude},
      {"duration_limit", c.duration_limit ? json(*c.duration_limit) : json(nullptr)},
  };
}

}  // namespace dtmfsim::io
