#pragma once

// Quad half-H driver truth table and the breadboard wiring: Q1..Q4 feed
// IN1..IN4 directly, both enables are tied high. Drivers 1/2 run the left
// motor, drivers 3/4 the right.

#include <string_view>

#include "dtmfsim/tone_codec.hpp"

namespace dtmfsim::driver {

using tone::Nibble;

struct DriverInputs {
  bool in1 = false;
  bool in2 = false;
  bool in3 = false;
  bool in4 = false;
  bool en1 = true;
  bool en2 = true;

  constexpr bool operator==(const DriverInputs&) const = default;
};

enum class MotorAction { Forward, Reverse, Stop };

// AB: forward when (in_a, in_b) = (1, 0). BA: forward when (0, 1).
enum class Polarity { AB, BA };

struct DriveState {
  MotorAction left = MotorAction::Stop;
  MotorAction right = MotorAction::Stop;

  constexpr bool operator==(const DriveState&) const = default;
};

enum class Motion { Forward, Reverse, Left, Right, Stop, SpinLeft, SpinRight, Mixed };

inline constexpr Polarity kLeftPolarity = Polarity::BA;
inline constexpr Polarity kRightPolarity = Polarity::AB;

struct ElectricalConstants {
  double v_high_decoder = 4.80;
  double v_low_decoder = 0.09;
  double v_motor_moving = 4.80;
  double v_motor_rest = 0.09;

  // Measured with the decoder driving the L293D directly.
  static constexpr ElectricalConstants dtmf_decoder() { return {4.80, 0.09, 4.80, 0.09}; }
  // Measured with a microcontroller between decoder and driver.
  static constexpr ElectricalConstants microcontroller() { return {4.80, 0.09, 4.20, 0.01}; }
  // Datasheet logic levels.
  static constexpr ElectricalConstants theoretical() { return {4.97, 0.03, 5.0, 0.0}; }
};

constexpr DriverInputs wire(Nibble code) noexcept {
  return {code.q(1), code.q(2), code.q(3), code.q(4), true, true};
}

constexpr MotorAction motor_action(bool in_a, bool in_b, bool enable, Polarity forward) noexcept {
  if (!enable || in_a == in_b) {
    return MotorAction::Stop;
  }
  const bool ab = in_a && !in_b;
  return (ab == (forward == Polarity::AB)) ? MotorAction::Forward : MotorAction::Reverse;
}

constexpr DriveState drive_state(const DriverInputs& in) noexcept {
  return {motor_action(in.in1, in.in2, in.en1, kLeftPolarity), motor_action(in.in3, in.in4, in.en2, kRightPolarity)};
}

constexpr DriveState drive_state(Nibble code) noexcept { return drive_state(wire(code)); }

constexpr Motion resultant_motion(DriveState s) noexcept {
  using A = MotorAction;
  if (s.left == s.right) {
    switch (s.left) {
      case A::Forward: return Motion::Forward;
      case A::Reverse: return Motion::Reverse;
      case A::Stop: return Motion::Stop;
    }
  }
  if (s.left == A::Stop && s.right == A::Forward) return Motion::Left;
  if (s.left == A::Forward && s.right == A::Stop) return Motion::Right;
  if (s.left == A::Reverse && s.right == A::Forward) return Motion::SpinLeft;
  if (s.left == A::Forward && s.right == A::Reverse) return Motion::SpinRight;
  // One track reversing against a stopped one.
  return Motion::Mixed;
}

constexpr double motor_voltage(MotorAction action, const ElectricalConstants& c) noexcept {
  switch (action) {
    case MotorAction::Forward: return c.v_motor_moving;
    case MotorAction::Reverse: return -c.v_motor_moving;
    case MotorAction::Stop: break;
  }
  return c.v_motor_rest;
}

constexpr std::string_view to_string(MotorAction a) noexcept {
  switch (a) {
    case MotorAction::Forward: return "Forward";
    case MotorAction::Reverse: return "Reverse";
    case MotorAction::Stop: break;
  }
  return "Stop";
}

constexpr std::string_view to_string(Motion m) noexcept {
  switch (m) {
    case Motion::Forward: return "Forward";
    case Motion::Reverse: return "Reverse";
    case Motion::Left: return "Left";
    case Motion::Right: return "Right";
    case Motion::Stop: return "Stop";
    case Motion::SpinLeft: return "SpinLeft";
    case Motion::SpinRight: return "SpinRight";
    case Motion::Mixed: break;
  }
  return "Mixed";
}

}  // namespace dtmfsim::driver
