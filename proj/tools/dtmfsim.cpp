// dtmfsim command line: encode, decode, simulate, tables, serve.

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dtmfsim/dtmfsim.hpp"
#include "dtmfsim/service.hpp"

namespace {

using namespace dtmfsim;

struct CommonFlags {
  std::optional<double> sample_rate;
  std::optional<std::string> code_mode;
  std::optional<double> snr_db;
  std::optional<double> freq_offset;
  std::optional<double> latency_ms;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> config_path;

  bool impairs_channel() const { return snr_db || freq_offset || latency_ms || seed; }
};

void add_common(CLI::App& app, CommonFlags& f) {
  app.add_option("--sample-rate", f.sample_rate, "Audio sample rate in Hz")->check(CLI::PositiveNumber);
  app.add_option("--code-mode", f.code_mode, "Key code table")->check(CLI::IsMember({"paper", "datasheet"}));
  app.add_option("--snr-db", f.snr_db, "Channel signal-to-noise ratio in dB");
  app.add_option("--freq-offset", f.freq_offset, "Channel frequency scaling ratio")->check(CLI::PositiveNumber);
  app.add_option("--latency-ms", f.latency_ms, "Channel latency in milliseconds")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", f.seed, "Channel RNG seed");
  app.add_option("--config", f.config_path, "JSON configuration overrides")->check(CLI::ExistingFile);
}

sim::SimConfig build_config(const CommonFlags& f) {
  sim::SimConfig c;
  if (f.config_path) {
    std::ifstream in(*f.config_path);
    io::json j;
    try {
      j = io::json::parse(in);
    } catch (const io::json::parse_error& e) {
      throw std::runtime_error(*f.config_path + ": " + e.what());
    }
    io::apply_config(j, c);
  }
  io::json flags = io::json::object();
  if (f.sample_rate) flags["sample_rate_hz"] = *f.sample_rate;
  if (f.code_mode) flags["code_mode"] = *f.code_mode;
  if (f.snr_db) flags["channel"]["snr_db"] = *f.snr_db;
  if (f.freq_offset) flags["channel"]["freq_offset_ratio"] = *f.freq_offset;
  if (f.latency_ms) flags["channel"]["latency_ms"] = *f.latency_ms;
  if (f.seed) flags["channel"]["rng_seed"] = *f.seed;
  io::apply_config(flags, c);
  return c;
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::atomic<bool> g_interrupted{false};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DTMF remote-control vehicle simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kVersion);
  CommonFlags flags;
  add_common(app, flags);

  // encode
  auto* encode = app.add_subcommand("encode", "Write a key sequence as a PCM WAV file");
  std::string enc_keys;
  std::string enc_out;
  double tone_ms = 100.0;
  double gap_ms = 100.0;
  double amplitude = tone::kDefaultAmplitude;
  encode->add_option("keys", enc_keys, "Keys to encode, e.g. 690")->required();
  encode->add_option("-o,--output", enc_out, "Output WAV path")->required();
  encode->add_option("--tone-ms", tone_ms, "Tone duration per key")->check(CLI::PositiveNumber);
  encode->add_option("--gap-ms", gap_ms, "Silence between keys")->check(CLI::NonNegativeNumber);
  encode->add_option("--amplitude", amplitude, "Per-tone amplitude, at most 0.5");

  // decode
  auto* decode = app.add_subcommand("decode", "Decode latched digits from a WAV file");
  std::string dec_in;
  decode->add_option("input", dec_in, "Input WAV path")->required();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write telemetry CSV");
  std::string scenario_path;
  std::string csv_out;
  std::optional<double> duration;
  simulate->add_option("scenario", scenario_path, "Scenario file (JSON lines)")->required();
  simulate->add_option("-o,--output", csv_out, "CSV output path (default stdout)");
  simulate->add_option("--duration", duration, "Simulated seconds (default: last event + 1 s)")
      ->check(CLI::NonNegativeNumber);

  // tables
  auto* tables_cmd = app.add_subcommand("tables", "Print the frequency, code, driver and timing tables");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the live simulation service");
  service::ServiceOptions sopt;
  serve->add_option("--bind", sopt.address, "Bind address");
  serve->add_option("--port", sopt.port, "TCP port (0 picks one)");
  serve->add_option("--ui-dir", sopt.ui_dir, "Directory of static UI assets");
  serve->add_option("--decimation", sopt.decimation, "Publish every Nth tick")->check(CLI::PositiveNumber);
  serve->add_option("--time-scale", sopt.time_scale, "Simulated seconds per wall-clock second")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (encode->parsed()) {
      offline::EncodeOptions opt;
      opt.tone_seconds = tone_ms / 1000.0;
      opt.gap_seconds = gap_ms / 1000.0;
      opt.amplitude = amplitude;
      if (flags.sample_rate) opt.sample_rate_hz = *flags.sample_rate;
      if (flags.impairs_channel() || flags.config_path) {
        auto ch = build_config(flags).channel;
        if (!flags.latency_ms) ch.latency = 0.0;
        opt.channel = ch;
      }
      const auto audio = offline::encode_keys(enc_keys, opt);
      wav::write_file(enc_out, audio);
      std::cerr << "wrote " << audio.samples.size() << " samples (" << fmt(audio.duration(), 3) << " s) to "
                << enc_out << '\n';
      return 0;
    }
    if (decode->parsed()) {
      const auto config = build_config(flags);
      const auto audio = wav::read_file(dec_in);
      offline::DecodeOptions opt;
      opt.steering = config.steering;
      opt.code_mode = config.code_mode;
      opt.detector = config.detector;
      std::cout << "key,onset_s,duration_s,code\n";
      for (const auto& t : offline::decode_audio(audio, opt)) {
        std::cout << t.key.symbol() << ',' << fmt(t.onset, 4) << ',' << fmt(t.duration, 3) << ','
                  << tone::key_to_code(t.key, opt.code_mode).str() << '\n';
      }
      return 0;
    }
    if (simulate->parsed()) {
      auto config = build_config(flags);
      if (duration) config.duration_limit = *duration;
      std::ifstream in(scenario_path);
      if (!in) {
        throw std::runtime_error("cannot open scenario '" + scenario_path + "'");
      }
      std::vector<sim::Event> events;
      try {
        events = io::parse_scenario(in);
      } catch (const io::ScenarioParseError& e) {
        std::cerr << scenario_path << ": " << e.what() << '\n';
        return 1;
      }
      const auto snaps = sim::run_scenario(events, config);
      if (csv_out.empty()) {
        io::write_csv(std::cout, snaps);
      } else {
        std::ofstream out(csv_out);
        if (!out) {
          throw std::runtime_error("cannot write '" + csv_out + "'");
        }
        io::write_csv(out, snaps);
      }
      return 0;
    }
    if (tables_cmd->parsed()) {
      tables::render_all(std::cout, build_config(flags));
      return 0;
    }
    if (serve->parsed()) {
      service::Service svc(build_config(flags), sopt);
      svc.start();
      std::cerr << "dtmfsim " << kVersion << " serving on http://" << sopt.address << ":" << svc.port()
                << " (WebSocket /ws, health /health)\n";
      std::signal(SIGINT, [](int) { g_interrupted = true; });
      std::signal(SIGTERM, [](int) { g_interrupted = true; });
      while (!g_interrupted) {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
      }
      svc.stop();
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
