#pragma once

// Fixed-tick pipeline: keypad -> tone synthesis -> channel -> delay line ->
// decoder (detector + steering) -> driver -> vehicle. One audio frame per
// tick.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dtmfsim/channel.hpp"
#include "dtmfsim/driver_model.hpp"
#include "dtmfsim/receiver.hpp"
#include "dtmfsim/steering.hpp"
#include "dtmfsim/tone_codec.hpp"
#include "dtmfsim/tone_detector.hpp"
#include "dtmfsim/vehicle.hpp"

namespace dtmfsim::sim {

using tone::ToneKey;

enum class EventKind { Down, Up, Dial, Hangup };

constexpr std::string_view to_string(EventKind k) noexcept {
  switch (k) {
    case EventKind::Down: return "down";
    case EventKind::Up: return "up";
    case EventKind::Dial: return "dial";
    case EventKind::Hangup: break;
  }
  return "hangup";
}

/// Keypad or call-session event at simulation time `at`.
struct Event {
  double at = 0.0;
  EventKind kind = EventKind::Down;
  std::optional<ToneKey> key;  // required for Down; optional check for Up

  static Event down(double at, ToneKey key) { return {at, EventKind::Down, key}; }
  static Event up(double at, std::optional<ToneKey> key = std::nullopt) { return {at, EventKind::Up, key}; }
  static Event dial(double at) { return {at, EventKind::Dial, std::nullopt}; }
  static Event hangup(double at) { return {at, EventKind::Hangup, std::nullopt}; }

  bool operator==(const Event&) const = default;
};

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::size_t index, const std::string& message)
      : std::runtime_error(message), index_(index) {}

  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

struct SimConfig {
  detect::DetectorConfig detector;
  steering::SteeringConfig steering;
  channel::ChannelConfig channel;
  vehicle::VehicleParams vehicle;
  tone::CodeMode code_mode = tone::CodeMode::PaperTable3;
  driver::ElectricalConstants electrical = driver::ElectricalConstants::dtmf_decoder();
  double amplitude = tone::kDefaultAmplitude;
  std::optional<double> duration_limit;

  double sample_rate() const { return detector.sample_rate_hz; }
  double tick() const { return detector.frame_seconds(); }

  void validate() const {
    detector.validate();
    steering.validate();
    channel.validate();
    tone::check_amplitude(amplitude);
    if (!(vehicle.v0 > 0.0) || !(vehicle.track_width > 0.0)) {
      throw std::invalid_argument("vehicle v0 and track_width must be positive");
    }
    if (duration_limit && !(*duration_limit >= 0.0)) {
      throw std::invalid_argument("duration_limit must be non-negative");
    }
  }
};

struct TelemetrySnapshot {
  double t = 0.0;
  channel::Phase session = channel::Phase::Idle;
  bool est = false;
  bool std_edge = false;
  std::optional<tone::Nibble> latched;
  driver::DriveState drive;
  driver::Motion motion = driver::Motion::Stop;
  std::pair<double, double> motor_volts{0.0, 0.0};  // (left, right)
  vehicle::VehiclePose pose;

  bool operator==(const TelemetrySnapshot&) const = default;
};

/// Rejects unsorted streams, overlapping key presses, unmatched releases
/// and impossible call sequences. Errors carry the event index.
inline void validate_events(std::span<const Event> events, channel::Phase start = channel::Phase::Idle) {
  std::optional<ToneKey> held;
  bool in_call = start != channel::Phase::Idle && start != channel::Phase::Ended;
  double last = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!std::isfinite(e.at) || e.at < 0.0) {
      throw ScenarioError(i, "event time must be a finite, non-negative number");
    }
    if (e.at < last) {
      throw ScenarioError(i, "events are not sorted by time");
    }
    last = e.at;
    switch (e.kind) {
      case EventKind::Down:
        if (!e.key) {
          throw ScenarioError(i, "key down without a key");
        }
        if (held) {
          throw ScenarioError(i, std::string("key down '") + e.key->symbol() + "' while '" + held->symbol() +
                                     "' is still held");
        }
        held = e.key;
        break;
      case EventKind::Up:
        if (!held) {
          throw ScenarioError(i, "key up with no key held");
        }
        if (e.key && *e.key != *held) {
          throw ScenarioError(i, std::string("key up '") + e.key->symbol() + "' but '" + held->symbol() +
                                     "' is held");
        }
        held.reset();
        break;
      case EventKind::Dial:
        if (in_call) {
          throw ScenarioError(i, "dial while a call is already up");
        }
        in_call = true;
        break;
      case EventKind::Hangup:
        in_call = false;
        break;
    }
  }
}

/// Diagnostics for the most recent tick.
struct TickTrace {
  std::optional<LatchEvent> latch;
  std::optional<ToneKey> audio_key;  // key whose tones were sent this tick
  std::size_t keys_in_audio = 0;  // distinct keys sounded during the tick
  detect::SignalCondition applied;
  std::vector<double> source;  // audio sent into the channel
};

class SimEngine {
 public:
  explicit SimEngine(SimConfig config)
      : config_(std::move(config)),
        receiver_((config_.validate(), config_.detector), config_.steering, config_.code_mode),
        rng_(config_.channel.rng_seed),
        delay_(latency_samples(config_.channel.latency)) {}

  const SimConfig& config() const { return config_; }
  double time() const { return static_cast<double>(ticks_) * config_.tick(); }
  std::uint64_t ticks() const { return ticks_; }
  const channel::SessionState& session() const { return session_; }
  std::optional<ToneKey> held_key() const { return held_; }
  const TickTrace& last_trace() const { return trace_; }
  const vehicle::VehiclePose& pose() const { return pose_; }

  /// Queues an event. Events must arrive in time order and not before the
  /// current tick; violations throw ScenarioError (index 0).
  void schedule(const Event& e) {
    if (e.at < time() - 1e-12) {
      throw ScenarioError(0, "event is in the past");
    }
    if (!queue_.empty() && e.at < queue_.back().at) {
      throw ScenarioError(0, "events are not sorted by time");
    }
    // Validate against the state the queue will leave behind.
    std::vector<Event> probe(queue_.begin(), queue_.end());
    probe.push_back(e);
    std::vector<Event> replay;
    replay.reserve(probe.size() + 1);
    if (held_) {
      replay.push_back(Event::down(0.0, *held_));
    }
    replay.insert(replay.end(), probe.begin(), probe.end());
    try {
      validate_events(replay, session_.phase);
    } catch (const ScenarioError& err) {
      throw ScenarioError(0, err.what());
    }
    queue_.push_back(e);
  }

  void set_channel(const channel::ChannelConfig& c) {
    c.validate();
    config_.channel = c;
    delay_.resize(latency_samples(c.latency));
  }

  void set_code_mode(tone::CodeMode mode) {
    config_.code_mode = mode;
    receiver_.set_code_mode(mode);
  }

  TelemetrySnapshot tick() {
    const std::size_t frame_len = config_.detector.frame_len;
    const double fs = config_.sample_rate();
    const auto s0 = static_cast<std::int64_t>(ticks_ * frame_len);
    const auto s1 = s0 + static_cast<std::int64_t>(frame_len);
    const double t1 = static_cast<double>(ticks_ + 1) * config_.tick();
    trace_ = TickTrace{};

    // Session events take effect at the tick start; key edges are placed
    // on their own sample.
    struct Edge {
      std::int64_t sample;
      std::optional<ToneKey> key;  // empty = release
    };
    std::vector<Edge> edges;
    while (!queue_.empty() && sample_of(queue_.front().at) < s1) {
      const Event e = queue_.front();
      queue_.pop_front();
      switch (e.kind) {
        case EventKind::Dial: session_ = channel::session_step(session_, channel::SessionEvent::Dial); break;
        case EventKind::Hangup: session_ = channel::session_step(session_, channel::SessionEvent::Hangup); break;
        case EventKind::Down: edges.push_back({std::max(sample_of(e.at), s0), e.key}); break;
        case EventKind::Up: edges.push_back({std::max(sample_of(e.at), s0), std::nullopt}); break;
      }
    }
    if (session_.phase == channel::Phase::Dialing || session_.phase == channel::Phase::Ringing) {
      session_ = channel::session_step(session_, channel::SessionEvent::RingTick);
    }
    const bool connected = session_.phase == channel::Phase::Connected;

    tone::AudioFrame source{std::vector<double>(frame_len, 0.0), fs};
    std::size_t next_edge = 0;
    for (std::int64_t s = s0; s < s1; ++s) {
      while (next_edge < edges.size() && edges[next_edge].sample <= s) {
        held_ = edges[next_edge].key;
        if (held_) {
          held_since_ = edges[next_edge].sample;
        }
        ++next_edge;
      }
      if (held_ && connected) {
        source.samples[static_cast<std::size_t>(s - s0)] =
            tone::tone_sample(tone::key_to_pair(*held_), config_.amplitude, fs, s - held_since_);
        if (trace_.audio_key != held_) {
          trace_.audio_key = held_;
          ++trace_.keys_in_audio;
        }
      }
    }
    while (next_edge < edges.size()) {
      held_ = edges[next_edge].key;
      if (held_) {
        held_since_ = edges[next_edge].sample;
      }
      ++next_edge;
    }

    const auto sent = channel::transmit(source, config_.channel, rng_);
    trace_.source = source.samples;
    const auto received = delay_.push(sent.samples);
    const auto result = receiver_.push(received);
    trace_.latch = result.latch;
    trace_.applied = result.applied;

    // Drive changes take effect at tick boundaries.
    pose_ = vehicle::step_pose(pose_, drive_, config_.vehicle, config_.tick());
    const auto& latched = receiver_.state().latched;
    drive_ = latched ? driver::drive_state(*latched) : driver::DriveState{};

    TelemetrySnapshot snap;
    snap.t = t1;
    snap.session = session_.phase;
    snap.est = result.applied.est_active;
    snap.std_edge = result.output.std_rising_edge;
    snap.latched = latched;
    snap.drive = drive_;
    snap.motion = driver::resultant_motion(drive_);
    snap.motor_volts = {driver::motor_voltage(drive_.left, config_.electrical),
                        driver::motor_voltage(drive_.right, config_.electrical)};
    snap.pose = pose_;
    ++ticks_;
    return snap;
  }

 private:
  std::size_t latency_samples(double latency) const {
    return static_cast<std::size_t>(std::llround(latency * config_.sample_rate()));
  }

  std::int64_t sample_of(double at) const { return std::llround(at * config_.sample_rate()); }

  SimConfig config_;
  Receiver receiver_;
  channel::Rng rng_;
  channel::DelayLine delay_;
  channel::SessionState session_;
  std::deque<Event> queue_;
  std::optional<ToneKey> held_;
  std::int64_t held_since_ = 0;
  driver::DriveState drive_;
  vehicle::VehiclePose pose_;
  std::uint64_t ticks_ = 0;
  TickTrace trace_;
};

inline constexpr double kSettleSeconds = 1.0;

/// Scenario duration: the configured limit, else one second past the last
/// event (at least one second).
inline double scenario_duration(std::span<const Event> events, const SimConfig& config) {
  if (config.duration_limit) {
    return *config.duration_limit;
  }
  double last = 0.0;
  for (const auto& e : events) {
    last = std::max(last, e.at);
  }
  return last + kSettleSeconds;
}

/// Prepends a dial at t = 0 when the scenario carries no session events.
inline std::vector<Event> with_auto_dial(std::span<const Event> events) {
  const bool has_session = std::any_of(events.begin(), events.end(), [](const Event& e) {
    return e.kind == EventKind::Dial || e.kind == EventKind::Hangup;
  });
  std::vector<Event> out;
  out.reserve(events.size() + 1);
  if (!has_session) {
    out.push_back(Event::dial(0.0));
  }
  out.insert(out.end(), events.begin(), events.end());
  return out;
}

inline std::vector<TelemetrySnapshot> run_scenario(std::span<const Event> events, const SimConfig& config) {
  validate_events(events);
  const auto full = with_auto_dial(events);
  SimEngine engine(config);
  for (const auto& e : full) {
    engine.schedule(e);
  }
  const double duration = scenario_duration(events, config);
  const auto ticks = static_cast<std::size_t>(std::ceil(duration / config.tick() - 1e-9));
  std::vector<TelemetrySnapshot> out;
  out.reserve(ticks);
  for (std::size_t i = 0; i < ticks; ++i) {
    out.push_back(engine.tick());
  }
  return out;
}

}  // namespace dtmfsim::sim
