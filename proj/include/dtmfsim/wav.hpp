#pragma once

// 16-bit PCM mono WAV reader/writer. Amplitude 1.0 maps to 32767.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtmfsim/tone_codec.hpp"

namespace dtmfsim::wav {

inline constexpr double kMinDecodeRate = 4000.0;

class WavError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<std::uint8_t>((v >> shift) & 0xff));
  }
}

inline void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

inline std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

inline std::int16_t to_pcm16(double x) {
  const double scaled = std::round(x * 32767.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

inline std::vector<std::uint8_t> encode(const tone::AudioFrame& audio) {
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate_hz));
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  detail::put_tag(out, "RIFF");
  detail::put_u32(out, 36 + data_bytes);
  detail::put_tag(out, "WAVE");
  detail::put_tag(out, "fmt ");
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);  // PCM
  detail::put_u16(out, 1);  // mono
  detail::put_u32(out, rate);
  detail::put_u32(out, rate * 2);
  detail::put_u16(out, 2);
  detail::put_u16(out, 16);
  detail::put_tag(out, "data");
  detail::put_u32(out, data_bytes);
  for (double s : audio.samples) {
    detail::put_u16(out, static_cast<std::uint16_t>(to_pcm16(s)));
  }
  return out;
}

inline tone::AudioFrame decode(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw WavError("not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = detail::get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size() && std::memcmp(chunk, "data", 4) != 0) {
      throw WavError("truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) {
        throw WavError("fmt chunk too short");
      }
      format = detail::get_u16(bytes.data() + body);
      channels = detail::get_u16(bytes.data() + body + 2);
      rate = detail::get_u32(bytes.data() + body + 4);
      bits = detail::get_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) {
        throw WavError("data chunk before fmt chunk");
      }
      if (format != 1 || bits != 16) {
        throw WavError("only 16-bit PCM is supported");
      }
      if (channels != 1) {
        throw WavError("unsupported channel count " + std::to_string(channels) + " (mono only)");
      }
      if (rate < kMinDecodeRate) {
        throw WavError("sample rate " + std::to_string(rate) + " Hz below 4000 Hz");
      }
      // Tolerate writers that leave the data size at zero or overlong.
      const std::size_t available = bytes.size() - body;
      const std::size_t usable = (size == 0 || size > available) ? available : size;
      tone::AudioFrame audio{{}, static_cast<double>(rate)};
      audio.samples.reserve(usable / 2);
      for (std::size_t i = 0; i + 1 < usable; i += 2) {
        const auto raw = static_cast<std::int16_t>(detail::get_u16(bytes.data() + body + i));
        audio.samples.push_back(static_cast<double>(raw) / 32767.0);
      }
      return audio;
    }
    pos = body + size + (size & 1U);
  }
  throw WavError(have_fmt ? "missing data chunk" : "missing fmt chunk");
}

inline void write_file(const std::string& path, const tone::AudioFrame& audio) {
  const auto bytes = encode(audio);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw WavError("cannot open '" + path + "' for writing");
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw WavError("failed writing '" + path + "'");
  }
}

inline tone::AudioFrame read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw WavError("cannot open '" + path + "'");
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode(bytes);
}

}  // namespace dtmfsim::wav
