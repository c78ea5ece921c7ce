#pragma once

// Interactive simulation: commands arrive through an ordered queue from
// any thread, the engine thread drains it at each tick start, and
// snapshots leave through per-client queues.

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dtmfsim/sim_engine.hpp"
#include "dtmfsim/telemetry_io.hpp"
#include "dtmfsim/wire.hpp"

namespace dtmfsim::live {

using ClientId = std::uint64_t;

enum class Role { Operator, Observer };

constexpr std::string_view to_string(Role r) noexcept { return r == Role::Operator ? "operator" : "observer"; }

inline constexpr const char* kObserverRejected = "observer may not command";

struct Command {
  ClientId client = 0;
  wire::WireMessage message;
};

struct CommandError {
  ClientId client = 0;
  std::uint64_t seq = 0;
  std::string message;
};

/// Queue between the engine and one consumer. DropOldest keeps at most
/// `capacity` items and discards from the front; Lossless never discards.
template <typename T>
class FanoutQueue {
 public:
  enum class Policy { Lossless, DropOldest };

  explicit FanoutQueue(Policy policy = Policy::Lossless, std::size_t capacity = 64)
      : policy_(policy), capacity_(capacity == 0 ? 1 : capacity) {}

  void push(T item) {
    std::lock_guard lock(mutex_);
    if (policy_ == Policy::DropOldest && items_.size() >= capacity_) {
      items_.pop_front();
      ++dropped_;
    }
    items_.push_back(std::move(item));
  }

  std::optional<T> try_pop() {
    std::lock_guard lock(mutex_);
    if (items_.empty()) {
      return std::nullopt;
    }
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

  std::uint64_t dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
  }

  Policy policy() const { return policy_; }

 private:
  mutable std::mutex mutex_;
  std::deque<T> items_;
  Policy policy_;
  std::size_t capacity_;
  std::uint64_t dropped_ = 0;
};

class LiveSession {
 public:
  struct Options {
    std::size_t decimation = 3;  // publish every Nth tick
    bool auto_dial = true;       // place the call at t = 0
  };

  struct StepResult {
    sim::TelemetrySnapshot snapshot;
    bool publish = false;
    std::vector<CommandError> errors;
  };

  LiveSession(sim::SimConfig config, Options options) : engine_(std::move(config)), options_(options) {
    if (options_.decimation == 0) {
      throw std::invalid_argument("decimation must be at least 1");
    }
    if (options_.auto_dial) {
      engine_.schedule(sim::Event::dial(0.0));
    }
  }

  explicit LiveSession(sim::SimConfig config) : LiveSession(std::move(config), Options{}) {}

  // ---- any thread -------------------------------------------------------

  /// Grants the operator role if it is free.
  Role join(ClientId client) {
    std::lock_guard lock(mutex_);
    if (!operator_ || *operator_ == client) {
      operator_ = client;
      return Role::Operator;
    }
    return Role::Observer;
  }

  /// Frees the role; a departing operator's held key is released.
  void leave(ClientId client) {
    std::lock_guard lock(mutex_);
    if (operator_ && *operator_ == client) {
      operator_.reset();
      release_pending_ = true;
    }
  }

  Role role(ClientId client) const {
    std::lock_guard lock(mutex_);
    return operator_ && *operator_ == client ? Role::Operator : Role::Observer;
  }

  /// Queues a command. Returns an error message when the sender may not
  /// command; engine-level problems are reported from step().
  std::optional<std::string> post(Command command) {
    std::lock_guard lock(mutex_);
    if (!operator_ || *operator_ != command.client) {
      return std::string(kObserverRejected);
    }
    commands_.push_back(std::move(command));
    return std::nullopt;
  }

  sim::SimConfig config() const {
    std::lock_guard lock(mutex_);
    return config_snapshot_;
  }

  // ---- engine thread ----------------------------------------------------

  StepResult step() {
    std::deque<Command> batch;
    bool release = false;
    {
      std::lock_guard lock(mutex_);
      batch.swap(commands_);
      release = std::exchange(release_pending_, false);
    }
    StepResult result;
    if (release && engine_.held_key()) {
      try_schedule(sim::Event::up(engine_.time()), 0, 0, result.errors);
    }
    for (auto& c : batch) {
      apply(c, result.errors);
    }
    result.snapshot = engine_.tick();
    result.publish = engine_.ticks() % options_.decimation == 0;
    {
      std::lock_guard lock(mutex_);
      config_snapshot_ = engine_.config();
    }
    return result;
  }

  /// Steps at the tick rate, scaled by `time_scale` (2 = twice real time),
  /// handing every result to `sink` until stop is requested.
  void run(std::stop_token stop, const std::function<void(const StepResult&)>& sink, double time_scale = 1.0) {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(engine_.config().tick() / time_scale));
    auto next = clock::now();
    while (!stop.stop_requested()) {
      sink(step());
      next += period;
      std::this_thread::sleep_until(next);
    }
  }

  const sim::SimEngine& engine() const { return engine_; }
  const Options& options() const { return options_; }

 private:
  double event_time(const wire::json& payload) const {
    const double now = engine_.time();
    if (payload.contains("t") && payload["t"].is_number()) {
      return std::max(now, payload["t"].get<double>());
    }
    return now;
  }

  void try_schedule(const sim::Event& e, ClientId client, std::uint64_t seq, std::vector<CommandError>& errors) {
    try {
      engine_.schedule(e);
    } catch (const std::exception& ex) {
      errors.push_back({client, seq, ex.what()});
    }
  }

  void apply(const Command& c, std::vector<CommandError>& errors) {
    const auto& m = c.message;
    const auto& p = m.payload;
    try {
      switch (m.type) {
        case wire::MessageType::KeyDown: {
          if (!p.contains("key") || !p["key"].is_string()) {
            throw std::invalid_argument("key_down needs a string 'key'");
          }
          const auto key = tone::ToneKey::parse(std::string_view(p["key"].get_ref<const std::string&>()));
          try_schedule(sim::Event::down(event_time(p), key), c.client, m.seq, errors);
          break;
        }
        case wire::MessageType::KeyUp: {
          std::optional<tone::ToneKey> key;
          if (p.contains("key") && p["key"].is_string()) {
            key = tone::ToneKey::parse(std::string_view(p["key"].get_ref<const std::string&>()));
          }
          try_schedule(sim::Event::up(event_time(p), key), c.client, m.seq, errors);
          break;
        }
        case wire::MessageType::Dial:
          try_schedule(sim::Event::dial(event_time(p)), c.client, m.seq, errors);
          break;
        case wire::MessageType::Hangup:
          try_schedule(sim::Event::hangup(event_time(p)), c.client, m.seq, errors);
          break;
        case wire::MessageType::Configure: {
          // Only the channel and the code table change while running.
          if (p.contains("channel")) {
            auto ch = engine_.config().channel;
            io::apply_channel(p["channel"], ch);
            engine_.set_channel(ch);
          }
          if (p.contains("code_mode")) {
            engine_.set_code_mode(io::code_mode_from_json(p["code_mode"]));
          }
          break;
        }
        case wire::MessageType::Hello:
        case wire::MessageType::Telemetry:
        case wire::MessageType::Error:
          throw std::invalid_argument("not a command: " + std::string(wire::to_string(m.type)));
      }
    } catch (const std::exception& ex) {
      errors.push_back({c.client, m.seq, ex.what()});
    }
  }

  sim::SimEngine engine_;
  Options options_;
  mutable std::mutex mutex_;
  std::deque<Command> commands_;
  std::optional<ClientId> operator_;
  bool release_pending_ = false;
  sim::SimConfig config_snapshot_ = engine_.config();
};

}  // namespace dtmfsim::live
