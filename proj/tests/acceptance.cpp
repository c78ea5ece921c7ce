// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Runs headless against the core library only.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dtmfsim/dtmfsim.hpp"

using namespace dtmfsim;
using driver::Motion;
using driver::MotorAction;
using tone::Nibble;
using tone::ToneKey;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void report(const char* name, const std::function<Outcome()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++g_failures;
  std::printf("%s %s (%.2f s) %s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.c_str());
  std::fflush(stdout);
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct EngineRun {
  std::vector<sim::TelemetrySnapshot> snaps;
  std::vector<LatchEvent> latches;
};

EngineRun run_engine(const std::vector<sim::Event>& events, const sim::SimConfig& config, double seconds) {
  sim::SimEngine engine(config);
  for (const auto& e : sim::with_auto_dial(events)) engine.schedule(e);
  EngineRun r;
  const auto ticks = static_cast<int>(std::ceil(seconds / config.tick() - 1e-9));
  for (int i = 0; i < ticks; ++i) {
    r.snaps.push_back(engine.tick());
    if (engine.last_trace().latch) r.latches.push_back(*engine.last_trace().latch);
  }
  return r;
}

std::vector<sim::Event> press(char key, double at, double length) {
  return {sim::Event::down(at, ToneKey::parse(key)), sim::Event::up(at + length)};
}

std::vector<double> two_tone(double f1, double f2, double amplitude, double fs, std::size_t n) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    x[i] = amplitude * (std::sin(2 * std::numbers::pi * f1 * t) + std::sin(2 * std::numbers::pi * f2 * t));
  }
  return x;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Published key code table and the narrative motion for each key.
struct CodeRow {
  char key;
  const char* code;
  Motion motion;
};
const CodeRow kCodeRows[] = {
    {'6', "0110", Motion::Forward}, {'9', "1001", Motion::Reverse}, {'4', "0100", Motion::Left},
    {'2', "0010", Motion::Right},   {'0', "0000", Motion::Stop},
};

// Published driver table, columns in print order: input, right, left, motion.
struct DriverRow {
  const char* input;
  MotorAction right;
  MotorAction left;
  Motion motion;
};
const DriverRow kDriverRows[] = {
    {"0110", MotorAction::Forward, MotorAction::Forward, Motion::Forward},
    {"1001", MotorAction::Reverse, MotorAction::Reverse, Motion::Reverse},
    {"0100", MotorAction::Forward, MotorAction::Stop, Motion::Left},
    {"0010", MotorAction::Stop, MotorAction::Forward, Motion::Right},
    {"0000", MotorAction::Stop, MotorAction::Stop, Motion::Stop},
};

Outcome code_table_end_to_end() {
  const auto t0 = std::chrono::steady_clock::now();
  sim::SimConfig config;
  config.channel = channel::ChannelConfig::clean();
  for (const auto& row : kCodeRows) {
    const auto r = run_engine(press(row.key, 0.5, 0.2), config, 1.0);
    if (r.latches.size() != 1 || r.latches[0].code.str() != row.code) {
      return {false, std::string("key ") + row.key + " latched " +
                         (r.latches.empty() ? "nothing" : r.latches[0].code.str())};
    }
    const auto& last = r.snaps.back();
    const auto in = driver::wire(*last.latched);
    const bool identity = in.in1 == last.latched->q(1) && in.in2 == last.latched->q(2) &&
                          in.in3 == last.latched->q(3) && in.in4 == last.latched->q(4) && in.en1 && in.en2;
    if (!identity || last.drive != driver::drive_state(in)) {
      return {false, std::string("driver inputs differ from decoder outputs for key ") + row.key};
    }
  }
  const double secs = elapsed_since(t0);
  return {secs < 1.0, "5 keys, runtime " + fmt("%.3f s", secs)};
}

Outcome driver_table_and_narrative() {
  for (const auto& row : kDriverRows) {
    const auto s = driver::drive_state(Nibble::parse(row.input));
    if (s.left != row.left || s.right != row.right || driver::resultant_motion(s) != row.motion) {
      return {false, std::string("row ") + row.input};
    }
  }
  sim::SimConfig config;
  config.channel = channel::ChannelConfig::clean();
  for (const auto& row : kCodeRows) {
    const auto r = run_engine(press(row.key, 0.5, 0.2), config, 1.0);
    if (r.snaps.back().motion != row.motion) {
      return {false, std::string("key ") + row.key + " gave " + std::string(driver::to_string(r.snaps.back().motion))};
    }
  }
  return {true, "5 rows, 5 keys"};
}

Outcome measured_tone_fixture() {
  struct Fixture {
    double low, high;
    char key;
  };
  const Fixture fixtures[] = {{731, 1201, '4'}, {731, 1475, '6'}, {855, 1322, '8'}, {735, 1325, '5'}};
  const double fs = tone::kDefaultSampleRate;
  if (detect::DetectorConfig{}.accept_bandwidth_hz != 50.0) {
    return {false, "default accept bandwidth is not 50 Hz"};
  }
  std::string got;
  for (const auto& f : fixtures) {
    const auto audio = two_tone(f.low, f.high, 0.35, fs, static_cast<std::size_t>(0.2 * fs));
    const auto keys = offline::keys_of(offline::decode_audio({audio, fs}));
    if (keys != std::string(1, f.key)) {
      return {false, fmt("%.0f Hz pair decoded as '", f.low) + keys + "'"};
    }
    got += f.key;
  }
  return {true, "keys " + got};
}

Outcome round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  for (auto key : ToneKey::all()) {
    const std::string s(1, key.symbol());
    if (offline::keys_of(offline::decode_audio(offline::encode_keys(s))) != s) {
      return {false, "single key " + s};
    }
  }
  static const std::string alphabet = "123A456B789C*0#D";
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> len(1, 10);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int i = 0; i < 200; ++i) {
    std::string keys;
    for (std::size_t n = len(rng); n > 0; --n) keys += alphabet[pick(rng)];
    const auto got = offline::keys_of(offline::decode_audio(offline::encode_keys(keys)));
    if (got != keys) {
      return {false, "sequence " + keys + " decoded as " + got};
    }
  }
  const double secs = elapsed_since(t0);
  return {secs < 30.0, "16 keys + 200 sequences, runtime " + fmt("%.2f s", secs)};
}

Outcome timing_law() {
  double worst = 0.0;
  for (double guard : {0.010, 0.0229, 0.050}) {
    for (double latency : {0.0, 0.080, 0.200}) {
      sim::SimConfig config;
      config.channel = channel::ChannelConfig::clean();
      config.channel.latency = latency;
      config.steering = steering::SteeringConfig::for_guard_time(guard);
      const double onset = 0.5;
      const auto r = run_engine(press('5', onset, 0.3), config, 1.5);
      if (r.latches.size() != 1) {
        return {false, fmt("guard %.4f: ", guard) + std::to_string(r.latches.size()) + " latches"};
      }
      // tDP is the confirmation run of whole frames.
      const double t_dp = static_cast<double>(config.detector.confirm_frames) * config.detector.frame_seconds();
      const double predicted = onset + t_dp + guard + latency;
      const double err = std::abs(r.latches[0].time - predicted);
      worst = std::max(worst, err);
      if (err > config.tick()) {
        return {false, fmt("guard %.4f", guard) + fmt(" latency %.3f", latency) + fmt(" off by %.4f s", err)};
      }
    }
  }
  return {true, "9 combinations, worst error " + fmt("%.2f ms", worst * 1e3)};
}

Outcome guard_rejection() {
  const sim::SimConfig base;
  const double guard = steering::guard_time(base.steering);
  const double frame = base.detector.frame_seconds();
  const double t_rec = static_cast<double>(base.detector.confirm_frames) * frame + guard;
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> jitter(0.0, frame);
  int short_latches = 0;
  int long_latches = 0;
  for (int trial = 0; trial < 100; ++trial) {
    sim::SimConfig config = base;
    config.channel.snr_db = 30.0;
    config.channel.rng_seed = static_cast<std::uint64_t>(trial) + 1;
    const double onset = 0.5 + jitter(rng);
    short_latches += static_cast<int>(run_engine(press('8', onset, 0.25 * guard), config, 1.0).latches.size());
    long_latches += run_engine(press('8', onset, t_rec + 0.040), config, 1.0).latches.size() == 1 ? 1 : 0;
  }
  return {short_latches == 0 && long_latches == 100,
          "short " + std::to_string(short_latches) + "/100 latched, long " + std::to_string(long_latches) +
              "/100 latched"};
}

Outcome talk_off() {
  const double fs = tone::kDefaultSampleRate;
  const auto n_chirp = static_cast<std::size_t>(2.0 * fs);
  std::vector<double> chirp(n_chirp);
  const double f0 = 200.0;
  const double f1 = 3800.0;
  const double dur = 2.0;
  for (std::size_t i = 0; i < n_chirp; ++i) {
    const double t = static_cast<double>(i) / fs;
    chirp[i] = 0.7 * std::sin(2 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) / dur * t * t));
  }
  const auto chirp_latches = offline::decode_audio({chirp, fs}).size();

  std::mt19937_64 rng(4242);
  std::normal_distribution<double> gauss(0.0, 0.3);
  std::vector<double> noise(static_cast<std::size_t>(10.0 * fs));
  for (auto& v : noise) v = gauss(rng);
  const auto noise_latches = offline::decode_audio({noise, fs}).size();
  return {chirp_latches == 0 && noise_latches == 0,
          "chirp " + std::to_string(chirp_latches) + " latches, noise " + std::to_string(noise_latches) + " latches"};
}

Outcome kinematics() {
  const vehicle::VehicleParams params{1.0, 0.2};
  const driver::DriveState left_turn{MotorAction::Stop, MotorAction::Forward};
  const double t = std::numbers::pi / 10.0;  // quarter turn at 5 rad/s
  const auto p = vehicle::step_pose({}, left_turn, params, t);
  const double arc_err =
      std::max({std::abs(p.x - 0.1), std::abs(p.y - 0.1), std::abs(p.theta - std::numbers::pi / 2.0)});

  // Same drive sequence at dt and dt/2.
  const driver::DriveState seq[] = {
      {MotorAction::Forward, MotorAction::Forward}, left_turn, {MotorAction::Forward, MotorAction::Stop},
      {MotorAction::Reverse, MotorAction::Forward}, {MotorAction::Reverse, MotorAction::Reverse}};
  vehicle::VehiclePose coarse{};
  vehicle::VehiclePose fine{};
  const double dt = 0.02;
  for (const auto& d : seq) {
    for (int i = 0; i < 25; ++i) coarse = vehicle::step_pose(coarse, d, params, dt);
    for (int i = 0; i < 50; ++i) fine = vehicle::step_pose(fine, d, params, dt / 2.0);
  }
  const double halving_err = std::max(
      {std::abs(coarse.x - fine.x), std::abs(coarse.y - fine.y),
       std::abs(vehicle::normalize_angle(coarse.theta - fine.theta))});
  return {arc_err <= 1e-9 && halving_err <= 1e-12,
          "arc error " + fmt("%.1e", arc_err) + ", dt-halving error " + fmt("%.1e", halving_err)};
}

Outcome determinism() {
  std::vector<sim::Event> events = {sim::Event::dial(0.0)};
  for (const auto& [key, at] : std::vector<std::pair<char, double>>{{'6', 0.5}, {'4', 1.5}, {'2', 2.5}, {'0', 3.5}}) {
    const auto p = press(key, at, 0.2);
    events.insert(events.end(), p.begin(), p.end());
  }
  sim::SimConfig config;
  config.channel.snr_db = 18.0;
  config.channel.freq_offset_ratio = 1.01;
  config.channel.dropout_rate = 0.01;
  config.channel.rng_seed = 99;
  auto csv = [&] {
    std::ostringstream out;
    io::write_csv(out, sim::run_scenario(events, config));
    return out.str();
  };
  const auto a = csv();
  const auto b = csv();
  return {a == b && !a.empty(), std::to_string(a.size()) + " bytes, identical=" + (a == b ? "yes" : "no")};
}

}  // namespace

int main() {
  report("code-table-end-to-end", code_table_end_to_end);
  report("driver-table-and-narrative", driver_table_and_narrative);
  report("measured-tone-fixture", measured_tone_fixture);
  report("sixteen-key-round-trip", round_trip);
  report("timing-law-sweep", timing_law);
  report("guard-time-rejection", guard_rejection);
  report("talk-off", talk_off);
  report("kinematics-oracle", kinematics);
  report("determinism", determinism);
  std::printf("%d of 9 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
