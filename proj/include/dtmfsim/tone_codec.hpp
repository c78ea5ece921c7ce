#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dtmfsim::tone {

inline constexpr std::array<double, 4> kRowFrequencies{697.0, 770.0, 852.0, 941.0};
inline constexpr std::array<double, 4> kColFrequencies{1209.0, 1336.0, 1477.0, 1633.0};

inline constexpr double kDefaultSampleRate = 8000.0;
inline constexpr double kDefaultAmplitude = 0.35;

// Lowest sample rate that still carries the 1633 Hz column tone.
inline constexpr double kNyquistBound = 2.0 * 1633.0;

class InvalidPair : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidKey : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One of the 16 keypad symbols, stored as its row-major grid index.
class ToneKey {
 public:
  // Row-major 4x4 keypad layout; row = low tone, column = high tone.
  static constexpr std::string_view kLayout = "123A456B789C*0#D";

  constexpr ToneKey() = default;

  static constexpr std::optional<ToneKey> from_char(char symbol) noexcept {
    if (symbol >= 'a' && symbol <= 'd') {
      symbol = static_cast<char>(symbol - 'a' + 'A');
    }
    const auto pos = kLayout.find(symbol);
    if (pos == std::string_view::npos) {
      return std::nullopt;
    }
    return ToneKey(static_cast<std::uint8_t>(pos));
  }

  static ToneKey parse(char symbol) {
    if (auto key = from_char(symbol)) {
      return *key;
    }
    throw InvalidKey(std::string("invalid DTMF key '") + symbol + "'");
  }

  static ToneKey parse(std::string_view text) {
    if (text.size() != 1) {
      throw InvalidKey("DTMF key must be a single character, got '" + std::string(text) + "'");
    }
    return parse(text.front());
  }

  static constexpr ToneKey at(std::size_t row, std::size_t col) {
    if (row >= 4 || col >= 4) {
      throw InvalidKey("grid position out of range");
    }
    return ToneKey(static_cast<std::uint8_t>(row * 4 + col));
  }

  static constexpr std::array<ToneKey, 16> all() noexcept {
    std::array<ToneKey, 16> keys{};
    for (std::uint8_t i = 0; i < 16; ++i) {
      keys[i] = ToneKey(i);
    }
    return keys;
  }

  constexpr char symbol() const noexcept { return kLayout[index_]; }
  constexpr std::size_t row() const noexcept { return index_ / 4; }
  constexpr std::size_t col() const noexcept { return index_ % 4; }
  constexpr std::size_t index() const noexcept { return index_; }

  constexpr auto operator<=>(const ToneKey&) const = default;

 private:
  constexpr explicit ToneKey(std::uint8_t index) : index_(index) {}

  std::uint8_t index_ = 0;
};

struct FrequencyPair {
  double low_hz = 0.0;
  double high_hz = 0.0;

  constexpr bool operator==(const FrequencyPair&) const = default;
};

/// Four-bit decoder output. Bit 0 is Q1, bit 3 is Q4; text is MSB first.
class Nibble {
 public:
  constexpr Nibble() = default;
  constexpr explicit Nibble(std::uint8_t value) : value_(static_cast<std::uint8_t>(value & 0x0f)) {}

  static Nibble parse(std::string_view bits) {
    if (bits.size() != 4) {
      throw std::invalid_argument("nibble must be four binary digits, got '" + std::string(bits) + "'");
    }
    std::uint8_t value = 0;
    for (char c : bits) {
      if (c != '0' && c != '1') {
        throw std::invalid_argument("nibble must be four binary digits, got '" + std::string(bits) + "'");
      }
      value = static_cast<std::uint8_t>((value << 1) | (c == '1' ? 1 : 0));
    }
    return Nibble(value);
  }

  constexpr std::uint8_t value() const noexcept { return value_; }

  // q(1) .. q(4), matching the decoder's Q1..Q4 pins.
  constexpr bool q(int pin) const noexcept { return ((value_ >> (pin - 1)) & 1U) != 0; }

  std::string str() const {
    std::string out(4, '0');
    for (int pin = 4; pin >= 1; --pin) {
      out[static_cast<std::size_t>(4 - pin)] = q(pin) ? '1' : '0';
    }
    return out;
  }

  constexpr auto operator<=>(const Nibble&) const = default;

 private:
  std::uint8_t value_ = 0;
};

enum class CodeMode { PaperTable3, Datasheet };

inline std::string_view to_string(CodeMode mode) {
  return mode == CodeMode::PaperTable3 ? "paper" : "datasheet";
}

inline CodeMode parse_code_mode(std::string_view text) {
  if (text == "paper") {
    return CodeMode::PaperTable3;
  }
  if (text == "datasheet") {
    return CodeMode::Datasheet;
  }
  throw std::invalid_argument("code mode must be 'paper' or 'datasheet', got '" + std::string(text) + "'");
}

struct AudioFrame {
  std::vector<double> samples;
  double sample_rate_hz = kDefaultSampleRate;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate_hz; }
};

inline void check_sample_rate(double sample_rate_hz) {
  if (!(sample_rate_hz > kNyquistBound)) {
    throw std::invalid_argument("sample rate must exceed " + std::to_string(kNyquistBound) + " Hz");
  }
}

constexpr FrequencyPair key_to_pair(ToneKey key) noexcept {
  return {kRowFrequencies[key.row()], kColFrequencies[key.col()]};
}

inline ToneKey pair_to_key(FrequencyPair pair) {
  for (std::size_t r = 0; r < 4; ++r) {
    if (kRowFrequencies[r] != pair.low_hz) {
      continue;
    }
    for (std::size_t c = 0; c < 4; ++c) {
      if (kColFrequencies[c] == pair.high_hz) {
        return ToneKey::at(r, c);
      }
    }
  }
  throw InvalidPair("(" + std::to_string(pair.low_hz) + ", " + std::to_string(pair.high_hz) +
                    ") Hz is not a DTMF grid pair");
}

inline double tone_sample(FrequencyPair pair, double amplitude, double sample_rate_hz, std::int64_t n) {
  const double t = static_cast<double>(n) / sample_rate_hz;
  return amplitude * std::sin(2.0 * std::numbers::pi * pair.low_hz * t) +
         amplitude * std::sin(2.0 * std::numbers::pi * pair.high_hz * t);
}

inline void check_amplitude(double amplitude) {
  if (!(amplitude > 0.0 && amplitude <= 0.5)) {
    throw std::invalid_argument("per-tone amplitude must be in (0, 0.5] so the pair cannot clip");
  }
}

/// Appends `count` samples of the key's tone pair, starting at tone sample
/// index `first` (so consecutive blocks stay phase-continuous).
inline void append_tone(std::vector<double>& out, ToneKey key, double amplitude, double sample_rate_hz,
                        std::int64_t first, std::size_t count) {
  const auto pair = key_to_pair(key);
  out.reserve(out.size() + count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(tone_sample(pair, amplitude, sample_rate_hz, first + static_cast<std::int64_t>(i)));
  }
}

inline AudioFrame synthesize(ToneKey key, double duration_s, double amplitude = kDefaultAmplitude,
                             double sample_rate_hz = kDefaultSampleRate) {
  check_amplitude(amplitude);
  check_sample_rate(sample_rate_hz);
  if (!(duration_s > 0.0)) {
    throw std::invalid_argument("tone duration must be positive");
  }
  const auto length = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  if (length == 0) {
    throw std::invalid_argument("tone duration shorter than one sample");
  }
  AudioFrame frame{{}, sample_rate_hz};
  append_tone(frame.samples, key, amplitude, sample_rate_hz, 0, length);
  return frame;
}

inline AudioFrame silence(double duration_s, double sample_rate_hz = kDefaultSampleRate) {
  const auto length = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  return AudioFrame{std::vector<double>(length, 0.0), sample_rate_hz};
}

inline double mean_power(std::span<const double> samples) {
  if (samples.empty()) {
    return 0.0;
  }
  double acc = 0.0;
  for (double s : samples) {
    acc += s * s;
  }
  return acc / static_cast<double>(samples.size());
}

// Keys 1-9 carry their binary value in both modes. The datasheet encoding
// puts '0' at 10 and 'D' at 0; the published vehicle code table uses 0000
// for '0', so PaperTable3 swaps those two codes and leaves the rest alone.
inline Nibble key_to_code(ToneKey key, CodeMode mode) {
  std::uint8_t code = 0;
  switch (key.symbol()) {
    case '1': case '2': case '3': case '4': case '5':
    case '6': case '7': case '8': case '9':
      code = static_cast<std::uint8_t>(key.symbol() - '0');
      break;
    case '0': code = 10; break;
    case '*': code = 11; break;
    case '#': code = 12; break;
    case 'A': code = 13; break;
    case 'B': code = 14; break;
    case 'C': code = 15; break;
    case 'D': code = 0; break;
    default: break;
  }
  if (mode == CodeMode::PaperTable3) {
    if (key.symbol() == '0') {
      code = 0;
    } else if (key.symbol() == 'D') {
      code = 10;
    }
  }
  return Nibble(code);
}

inline ToneKey code_to_key(Nibble code, CodeMode mode) {
  for (auto key : ToneKey::all()) {
    if (key_to_code(key, mode) == code) {
      return key;
    }
  }
  // Both modes are bijections over the 16 codes.
  throw std::logic_error("code table is not bijective");
}

}  // namespace dtmfsim::tone
