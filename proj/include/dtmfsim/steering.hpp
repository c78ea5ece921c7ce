#pragma once

// Delayed-steering circuit as a discrete-time state machine. ESt drives an
// RC network; the capacitor crossing the comparator threshold latches the
// current candidate's code and raises StD.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>

#include "dtmfsim/tone_codec.hpp"
#include "dtmfsim/tone_detector.hpp"

namespace dtmfsim::steering {

using tone::Nibble;
using tone::ToneKey;

struct SteeringConfig {
  double r_ohms = 330e3;
  double c_farads = 0.1e-6;
  double vdd = 5.0;
  double v_threshold = 2.5;
  // Tone-absent time that re-arms the latch; defaults to the guard time.
  std::optional<double> t_gta;

  double tau() const { return r_ohms * c_farads; }

  void validate() const {
    if (!(r_ohms > 0.0) || !(c_farads > 0.0) || !(vdd > 0.0) || !(v_threshold > 0.0)) {
      throw std::invalid_argument("steering R, C, Vdd and threshold must be positive");
    }
    if (!(v_threshold < vdd)) {
      throw std::invalid_argument("steering threshold must be below Vdd");
    }
    if (t_gta && !(*t_gta > 0.0)) {
      throw std::invalid_argument("tone-absent guard time must be positive");
    }
  }

  /// Keeps C and the threshold, picks R so the guard time equals `seconds`.
  static SteeringConfig for_guard_time(double seconds) {
    SteeringConfig config;
    if (!(seconds > 0.0)) {
      throw std::invalid_argument("guard time must be positive");
    }
    config.r_ohms = seconds / (config.c_farads * std::log(config.vdd / (config.vdd - config.v_threshold)));
    return config;
  }
};

/// Time for the capacitor to charge from 0 V to the threshold.
inline double guard_time(const SteeringConfig& config) {
  config.validate();
  return config.tau() * std::log(config.vdd / (config.vdd - config.v_threshold));
}

inline double tone_absent_guard(const SteeringConfig& config) {
  return config.t_gta ? *config.t_gta : guard_time(config);
}

inline double t_rec(const detect::DetectorConfig& detector, const SteeringConfig& steering,
                    double frame_len_seconds) {
  return static_cast<double>(detector.confirm_frames) * frame_len_seconds + guard_time(steering);
}

struct SteeringState {
  double vc = 0.0;
  std::optional<Nibble> latched;
  std::optional<ToneKey> latched_key;
  bool std_high = false;
  std::optional<ToneKey> current_candidate;
  bool armed = true;
  double inactive_elapsed = 0.0;
  double since_onset = 0.0;  // tone time seen for the current candidate
};

struct ReceiverOutput {
  std::optional<Nibble> latched_code;
  bool std_rising_edge = false;
  std::optional<double> t_rec_measured;
  double edge_offset = 0.0;  // threshold crossing time within the step
};

inline std::pair<SteeringState, ReceiverOutput> step(SteeringState state, const detect::SignalCondition& cond,
                                                     tone::CodeMode mode, double dt, const SteeringConfig& config) {
  const double guard = guard_time(config);
  if (!(dt > 0.0) || dt > guard / 4.0 + 1e-15) {
    throw std::invalid_argument("steering step must satisfy 0 < dt <= guard_time / 4");
  }
  const double tau = config.tau();
  const double decay = std::exp(-dt / tau);
  ReceiverOutput out;

  if (cond.est_active && cond.candidate) {
    state.inactive_elapsed = 0.0;
    if (state.current_candidate && *state.current_candidate != *cond.candidate) {
      // A different key while charging starts the guard interval over.
      state.vc = 0.0;
      state.armed = true;
      state.since_onset = cond.lead_seconds;
    } else if (!state.current_candidate) {
      state.since_onset = cond.lead_seconds;
    }
    state.current_candidate = cond.candidate;

    const double v0 = state.vc;
    state.vc = std::clamp(config.vdd + (v0 - config.vdd) * decay, 0.0, config.vdd);
    if (state.armed && state.vc >= config.v_threshold) {
      const double offset =
          v0 >= config.v_threshold ? 0.0
                                   : tau * std::log((config.vdd - v0) / (config.vdd - config.v_threshold));
      state.latched = tone::key_to_code(*cond.candidate, mode);
      state.latched_key = cond.candidate;
      state.armed = false;
      out.std_rising_edge = true;
      out.edge_offset = std::clamp(offset, 0.0, dt);
      out.t_rec_measured = state.since_onset + out.edge_offset;
    }
    state.since_onset += dt;
    state.std_high = !state.armed && state.latched && state.vc >= config.v_threshold;
  } else {
    state.vc = std::clamp(state.vc * decay, 0.0, config.vdd);
    state.inactive_elapsed += dt;
    state.std_high = false;
    if (state.inactive_elapsed >= tone_absent_guard(config) - 1e-12) {
      state.armed = true;
      state.current_candidate.reset();
    }
  }
  out.latched_code = state.latched;
  return {state, out};
}

}  // namespace dtmfsim::steering
