#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>

#include "dtmfsim/steering.hpp"
#include "dtmfsim/tone_detector.hpp"

namespace dtmfsim {

struct LatchEvent {
  tone::ToneKey key;
  tone::Nibble code;
  double time = 0.0;  // absolute threshold-crossing time
  double t_rec = 0.0;
};

/// Detector followed by the steering circuit, one audio frame per call.
///
/// The condition decided from frame k is known at the end of frame k and
/// drives the RC network during the following frame interval, so the first
/// latch of a clean tone lands at onset + tDP + tGTP. The steering network
/// is integrated in sub-steps no longer than 1 ms (and never longer than a
/// quarter of the guard time).
class Receiver {
 public:
  struct FrameResult {
    detect::SignalCondition applied;  // condition that drove the RC network
    detect::SignalCondition decided;  // verdict on the frame just pushed
    steering::ReceiverOutput output;  // output of the final sub-step
    std::optional<LatchEvent> latch;
  };

  Receiver(detect::DetectorConfig detector, steering::SteeringConfig steering, tone::CodeMode mode)
      : detector_(detector), steering_config_(steering), mode_(mode) {
    steering_config_.validate();
    const double frame = detector.frame_seconds();
    const double max_dt = std::min(1e-3, steering::guard_time(steering_config_) / 4.0);
    substeps_ = static_cast<std::size_t>(std::ceil(frame / max_dt - 1e-9));
    dt_ = frame / static_cast<double>(substeps_);
  }

  FrameResult push(std::span<const double> samples) {
    FrameResult result;
    result.applied = pending_;
    for (std::size_t i = 0; i < substeps_; ++i) {
      auto [next, out] = steering::step(state_, pending_, mode_, dt_, steering_config_);
      state_ = next;
      if (out.std_rising_edge) {
        result.latch = LatchEvent{*state_.latched_key, *state_.latched,
                                  time_ + static_cast<double>(i) * dt_ + out.edge_offset,
                                  out.t_rec_measured.value_or(0.0)};
        result.output.std_rising_edge = true;
        result.output.t_rec_measured = out.t_rec_measured;
        result.output.edge_offset = static_cast<double>(i) * dt_ + out.edge_offset;
      }
      result.output.latched_code = out.latched_code;
    }
    result.decided = detector_.push(samples);
    pending_ = result.decided;
    ++frames_;
    time_ = static_cast<double>(frames_) * detector_.config().frame_seconds();
    return result;
  }

  double time() const { return time_; }
  const steering::SteeringState& state() const { return state_; }
  const detect::DetectorConfig& detector_config() const { return detector_.config(); }
  const steering::SteeringConfig& steering_config() const { return steering_config_; }
  tone::CodeMode code_mode() const { return mode_; }
  void set_code_mode(tone::CodeMode mode) { mode_ = mode; }
  double substep() const { return dt_; }

 private:
  detect::ToneDetector detector_;
  steering::SteeringConfig steering_config_;
  tone::CodeMode mode_;
  steering::SteeringState state_;
  detect::SignalCondition pending_;
  std::size_t substeps_ = 1;
  double dt_ = 1e-3;
  std::size_t frames_ = 0;
  double time_ = 0.0;
};

}  // namespace dtmfsim
