#pragma once

// Offline audio tooling: key strings to tone sequences and recorded audio
// back to latched digits.

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dtmfsim/channel.hpp"
#include "dtmfsim/receiver.hpp"
#include "dtmfsim/tone_codec.hpp"
#include "dtmfsim/tone_detector.hpp"

namespace dtmfsim::offline {

struct EncodeOptions {
  double tone_seconds = 0.1;
  double gap_seconds = 0.1;
  double amplitude = tone::kDefaultAmplitude;
  double sample_rate_hz = tone::kDefaultSampleRate;
  // Impairments, applied in 20 ms blocks; latency becomes leading silence.
  std::optional<channel::ChannelConfig> channel;
};

/// Tones for each key separated by gaps; no trailing gap.
inline tone::AudioFrame encode_keys(std::string_view keys, const EncodeOptions& opt = {}) {
  if (keys.empty()) {
    throw std::invalid_argument("no keys to encode");
  }
  if (!(opt.tone_seconds > 0.0) || !(opt.gap_seconds >= 0.0)) {
    throw std::invalid_argument("tone duration must be positive and gap non-negative");
  }
  tone::check_sample_rate(opt.sample_rate_hz);
  tone::check_amplitude(opt.amplitude);
  std::vector<tone::ToneKey> parsed;
  for (char c : keys) {
    const auto k = tone::ToneKey::from_char(c);
    if (!k) {
      throw tone::InvalidKey(std::string("invalid key character '") + c + "'");
    }
    parsed.push_back(*k);
  }
  const double fs = opt.sample_rate_hz;
  const auto tone_len = static_cast<std::size_t>(std::llround(opt.tone_seconds * fs));
  const auto gap_len = static_cast<std::size_t>(std::llround(opt.gap_seconds * fs));
  tone::AudioFrame out{{}, fs};
  out.samples.reserve(parsed.size() * (tone_len + gap_len));
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (i > 0) {
      out.samples.insert(out.samples.end(), gap_len, 0.0);
    }
    tone::append_tone(out.samples, parsed[i], opt.amplitude, fs, 0, tone_len);
  }
  if (opt.channel) {
    const auto& cfg = *opt.channel;
    cfg.validate();
    channel::Rng rng(cfg.rng_seed);
    const auto block = static_cast<std::size_t>(std::llround(0.02 * fs));
    std::vector<double> impaired(static_cast<std::size_t>(std::llround(cfg.latency * fs)), 0.0);
    for (std::size_t i = 0; i < out.samples.size(); i += block) {
      const auto end = std::min(out.samples.size(), i + block);
      tone::AudioFrame piece{{out.samples.begin() + static_cast<std::ptrdiff_t>(i),
                              out.samples.begin() + static_cast<std::ptrdiff_t>(end)},
                             fs};
      const auto sent = channel::transmit(piece, cfg, rng);
      impaired.insert(impaired.end(), sent.samples.begin(), sent.samples.end());
    }
    out.samples = std::move(impaired);
  }
  return out;
}

struct DecodedTone {
  tone::ToneKey key;
  double onset = 0.0;     // latch time
  double duration = 0.0;  // validated tone length around the latch

  bool operator==(const DecodedTone&) const = default;
};

struct DecodeOptions {
  steering::SteeringConfig steering;
  tone::CodeMode code_mode = tone::CodeMode::PaperTable3;
  // Detector overrides; the frame length always follows the file's rate.
  std::optional<detect::DetectorConfig> detector;
};

/// Runs detector and steering over `audio`. One entry per StD latch.
inline std::vector<DecodedTone> decode_audio(const tone::AudioFrame& audio, const DecodeOptions& opt = {}) {
  auto det = detect::DetectorConfig::for_sample_rate(audio.sample_rate_hz);
  if (opt.detector) {
    const auto frame_len = det.frame_len;
    det = *opt.detector;
    det.sample_rate_hz = audio.sample_rate_hz;
    det.frame_len = frame_len;
  }
  det.validate();
  Receiver rx(det, opt.steering, opt.code_mode);
  const std::size_t n = det.frame_len;
  const double frame_s = det.frame_seconds();

  // Pad to whole frames, then flush so the last frame's verdict is applied.
  std::vector<double> samples = audio.samples;
  samples.resize((samples.size() + n - 1) / n * n + 2 * n, 0.0);

  std::vector<DecodedTone> out;
  std::optional<std::size_t> open;  // entry still accumulating its run
  for (std::size_t i = 0; i + n <= samples.size(); i += n) {
    const auto r = rx.push(std::span<const double>(samples).subspan(i, n));
    if (r.latch) {
      out.push_back({r.latch->key, r.latch->time, 0.0});
      open = out.size() - 1;
      // The run that produced the latch is the verdict applied this frame.
      out.back().duration = static_cast<double>(r.applied.run_frames) * frame_s;
    }
    if (open) {
      const auto& d = r.decided;
      if (d.validated && *d.validated == out[*open].key) {
        out[*open].duration = static_cast<double>(d.run_frames) * frame_s;
      } else {
        open.reset();
      }
    }
  }
  return out;
}

inline std::string keys_of(const std::vector<DecodedTone>& tones) {
  std::string s;
  for (const auto& t : tones) {
    s += t.key.symbol();
  }
  return s;
}

}  // namespace dtmfsim::offline
