#pragma once

// Two-track (skid-steer) kinematics with exact arc integration.

#include <cmath>
#include <numbers>
#include <utility>

#include "dtmfsim/driver_model.hpp"

namespace dtmfsim::vehicle {

struct VehicleParams {
  double v0 = 0.5;            // m/s per driven track
  double track_width = 0.15;  // m
};

struct VehiclePose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // rad, CCW from +x, in (-pi, pi]

  constexpr bool operator==(const VehiclePose&) const = default;
};

inline double normalize_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double t = std::remainder(theta, two_pi);  // [-pi, pi]
  if (t <= -std::numbers::pi) {
    t += two_pi;
  }
  return t;
}

constexpr double track_speed(driver::MotorAction action, double v0) noexcept {
  switch (action) {
    case driver::MotorAction::Forward: return v0;
    case driver::MotorAction::Reverse: return -v0;
    case driver::MotorAction::Stop: break;
  }
  return 0.0;
}

inline std::pair<double, double> track_speeds(driver::DriveState state, const VehicleParams& params) {
  return {track_speed(state.left, params.v0), track_speed(state.right, params.v0)};
}

inline VehiclePose step_pose(VehiclePose pose, driver::DriveState state, const VehicleParams& params, double dt) {
  const auto [vl, vr] = track_speeds(state, params);
  const double v = 0.5 * (vl + vr);
  const double omega = (vr - vl) / params.track_width;
  if (omega == 0.0) {
    pose.x += v * dt * std::cos(pose.theta);
    pose.y += v * dt * std::sin(pose.theta);
    return pose;
  }
  // Chord form of the arc about the instantaneous centre of rotation. Using
  // the half-angle keeps sub-step results consistent to rounding error.
  const double dtheta = omega * dt;
  const double chord = 2.0 * (v / omega) * std::sin(0.5 * dtheta);
  const double mid = pose.theta + 0.5 * dtheta;
  pose.x += chord * std::cos(mid);
  pose.y += chord * std::sin(mid);
  pose.theta = normalize_angle(pose.theta + dtheta);
  return pose;
}

}  // namespace dtmfsim::vehicle
