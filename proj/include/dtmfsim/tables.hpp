#pragma once

// Reference tables computed from the live modules, one " | "-separated
// row per entry.

#include <cstdio>
#include <ostream>
#include <string>

#include "dtmfsim/driver_model.hpp"
#include "dtmfsim/sim_engine.hpp"
#include "dtmfsim/steering.hpp"
#include "dtmfsim/tone_codec.hpp"

namespace dtmfsim::tables {

namespace detail {

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string hz(double v) { return fixed(v, 0); }

}  // namespace detail

inline void frequency_grid(std::ostream& out) {
  out << "# Frequency grid (row Hz x column Hz -> key)\n";
  out << "Hz";
  for (double c : tone::kColFrequencies) {
    out << " | " << detail::hz(c);
  }
  out << '\n';
  for (std::size_t r = 0; r < 4; ++r) {
    out << detail::hz(tone::kRowFrequencies[r]);
    for (std::size_t c = 0; c < 4; ++c) {
      out << " | " << tone::pair_to_key({tone::kRowFrequencies[r], tone::kColFrequencies[c]}).symbol();
    }
    out << '\n';
  }
}

inline void code_table(std::ostream& out, tone::CodeMode mode) {
  out << "# Key codes (" << tone::to_string(mode) << " mode)\n";
  out << "key | code | motion\n";
  for (auto key : tone::ToneKey::all()) {
    const auto code = tone::key_to_code(key, mode);
    out << key.symbol() << " | " << code.str() << " | "
        << driver::to_string(driver::resultant_motion(driver::drive_state(code))) << '\n';
  }
}

inline void driver_table(std::ostream& out) {
  out << "# Driver truth table (IN1..IN4 = Q1..Q4, enables high)\n";
  out << "input | left | right | motion\n";
  for (int v = 0; v < 16; ++v) {
    const tone::Nibble n(static_cast<std::uint8_t>(v));
    const auto s = driver::drive_state(n);
    out << n.str() << " | " << driver::to_string(s.left) << " | " << driver::to_string(s.right) << " | "
        << driver::to_string(driver::resultant_motion(s)) << '\n';
  }
}

inline void electrical_table(std::ostream& out) {
  out << "# Electrical constants (V)\n";
  out << "preset | decoder high | decoder low | motor moving | motor rest\n";
  const std::pair<const char*, driver::ElectricalConstants> presets[] = {
      {"dtmf_decoder", driver::ElectricalConstants::dtmf_decoder()},
      {"microcontroller", driver::ElectricalConstants::microcontroller()},
      {"theoretical", driver::ElectricalConstants::theoretical()},
  };
  for (const auto& [name, c] : presets) {
    out << name << " | " << detail::fixed(c.v_high_decoder, 2) << " | " << detail::fixed(c.v_low_decoder, 2) << " | "
        << detail::fixed(c.v_motor_moving, 2) << " | " << detail::fixed(c.v_motor_rest, 2) << '\n';
  }
}

inline void timing_table(std::ostream& out, const sim::SimConfig& config) {
  const double frame = config.detector.frame_seconds();
  out << "# Decoder timing (ms)\n";
  out << "frame | t_dp | guard | t_rec | latency\n";
  out << detail::fixed(frame * 1e3, 2) << " | "
      << detail::fixed(static_cast<double>(config.detector.confirm_frames) * frame * 1e3, 2) << " | "
      << detail::fixed(steering::guard_time(config.steering) * 1e3, 2) << " | "
      << detail::fixed(steering::t_rec(config.detector, config.steering, frame) * 1e3, 2) << " | "
      << detail::fixed(config.channel.latency * 1e3, 2) << '\n';
}

inline void render_all(std::ostream& out, const sim::SimConfig& config = {}) {
  frequency_grid(out);
  out << '\n';
  code_table(out, tone::CodeMode::PaperTable3);
  out << '\n';
  code_table(out, tone::CodeMode::Datasheet);
  out << '\n';
  driver_table(out);
  out << '\n';
  electrical_table(out);
  out << '\n';
  timing_table(out, config);
}

}  // namespace dtmfsim::tables
