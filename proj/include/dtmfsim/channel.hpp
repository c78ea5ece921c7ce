#pragma once

// Voice path between the two phones: level, playback-rate, noise and
// dropout impairments on audio frames, plus the call-session state machine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dtmfsim/tone_codec.hpp"

namespace dtmfsim::channel {

using tone::AudioFrame;

using Rng = std::mt19937_64;

struct ChannelConfig {
  double snr_db = std::numeric_limits<double>::infinity();
  double freq_offset_ratio = 1.0;
  double gain_db = 0.0;
  double latency = 0.08;  // seconds, applied by the simulation's delay line
  double dropout_rate = 0.0;
  std::uint64_t rng_seed = 0;

  static ChannelConfig clean() {
    ChannelConfig c;
    c.latency = 0.0;
    return c;
  }

  void validate() const {
    if (!(dropout_rate >= 0.0 && dropout_rate <= 1.0)) {
      throw std::invalid_argument("dropout_rate must lie in [0, 1]");
    }
    if (!(latency >= 0.0)) {
      throw std::invalid_argument("latency must be non-negative");
    }
    if (!(freq_offset_ratio > 0.0)) {
      throw std::invalid_argument("freq_offset_ratio must be positive");
    }
    if (std::isnan(snr_db) || std::isnan(gain_db)) {
      throw std::invalid_argument("snr_db and gain_db must be numbers");
    }
  }
};

namespace detail {

// Windowed-sinc (Lanczos, a = 8) read of x at fractional index `pos`;
// samples outside the frame read as zero.
inline double interpolate(std::span<const double> x, double pos) {
  constexpr int a = 8;
  const auto base = static_cast<std::int64_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(base);
  if (frac == 0.0) {
    return (base >= 0 && base < static_cast<std::int64_t>(x.size())) ? x[static_cast<std::size_t>(base)] : 0.0;
  }
  double acc = 0.0;
  for (int k = -a + 1; k <= a; ++k) {
    const std::int64_t idx = base + k;
    if (idx < 0 || idx >= static_cast<std::int64_t>(x.size())) {
      continue;
    }
    const double d = static_cast<double>(k) - frac;
    const double pd = std::numbers::pi * d;
    const double w = std::sin(pd) / pd * std::sin(pd / a) / (pd / a);
    acc += x[static_cast<std::size_t>(idx)] * w;
  }
  return acc;
}

}  // namespace detail

/// Applies gain, playback-rate scaling, white noise and dropout, in that
/// order. The noise level is set against this frame's own power, so silent
/// frames stay silent. Consumes randomness only from `rng`.
inline AudioFrame transmit(const AudioFrame& frame, const ChannelConfig& config, Rng& rng) {
  AudioFrame out = frame;
  if (config.gain_db != 0.0) {
    const double g = std::pow(10.0, config.gain_db / 20.0);
    for (double& s : out.samples) {
      s *= g;
    }
  }
  if (config.freq_offset_ratio != 1.0) {
    // Reading the frame at `ratio` x speed scales every frequency by `ratio`.
    const std::vector<double> src = out.samples;
    for (std::size_t n = 0; n < out.samples.size(); ++n) {
      out.samples[n] = detail::interpolate(src, static_cast<double>(n) * config.freq_offset_ratio);
    }
  }
  if (std::isfinite(config.snr_db)) {
    const double power = tone::mean_power(out.samples);
    if (power > 0.0) {
      std::normal_distribution<double> noise(0.0, std::sqrt(power / std::pow(10.0, config.snr_db / 10.0)));
      for (double& s : out.samples) {
        s += noise(rng);
      }
    }
  }
  if (config.dropout_rate > 0.0) {
    std::bernoulli_distribution drop(config.dropout_rate);
    if (drop(rng)) {
      std::fill(out.samples.begin(), out.samples.end(), 0.0);
    }
  }
  return out;
}

/// Fixed transport delay, in samples.
class DelayLine {
 public:
  explicit DelayLine(std::size_t delay_samples = 0) : buffer_(delay_samples, 0.0) {}

  std::vector<double> push(std::span<const double> in) {
    buffer_.insert(buffer_.end(), in.begin(), in.end());
    std::vector<double> out(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(in.size()));
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(in.size()));
    return out;
  }

  // Changing the delay keeps queued audio; growing pads with silence,
  // shrinking discards the oldest samples.
  void resize(std::size_t delay_samples) {
    while (buffer_.size() < delay_samples) {
      buffer_.push_front(0.0);
    }
    while (buffer_.size() > delay_samples) {
      buffer_.pop_front();
    }
  }

  std::size_t delay() const { return buffer_.size(); }

 private:
  std::deque<double> buffer_;
};

enum class Phase { Idle, Dialing, Ringing, Connected, Ended };

enum class SessionEvent { Dial, RingTick, Hangup };

struct SessionState {
  Phase phase = Phase::Idle;
  int ring_count = 0;

  constexpr bool operator==(const SessionState&) const = default;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

constexpr std::string_view to_string(Phase p) noexcept {
  switch (p) {
    case Phase::Idle: return "Idle";
    case Phase::Dialing: return "Dialing";
    case Phase::Ringing: return "Ringing";
    case Phase::Connected: return "Connected";
    case Phase::Ended: break;
  }
  return "Ended";
}

inline constexpr int kAutoAnswerRings = 1;

/// Dial starts a call (Idle or Ended -> Dialing); each ring tick advances
/// Dialing/Ringing and the receiver auto-answers on the first ring.
inline SessionState session_step(SessionState state, SessionEvent event) {
  switch (event) {
    case SessionEvent::Dial:
      if (state.phase != Phase::Idle && state.phase != Phase::Ended) {
        throw ProtocolError("dial while call is " + std::string(to_string(state.phase)));
      }
      return {Phase::Dialing, 0};
    case SessionEvent::RingTick:
      if (state.phase != Phase::Dialing && state.phase != Phase::Ringing) {
        throw ProtocolError("ring with no call in progress (" + std::string(to_string(state.phase)) + ")");
      }
      state.phase = Phase::Ringing;
      ++state.ring_count;
      if (state.ring_count >= kAutoAnswerRings) {
        state.phase = Phase::Connected;
      }
      return state;
    case SessionEvent::Hangup:
      state.phase = Phase::Ended;
      return state;
  }
  return state;
}

}  // namespace dtmfsim::channel
