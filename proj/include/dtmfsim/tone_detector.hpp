#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "dtmfsim/tone_codec.hpp"

namespace dtmfsim::detect {

using tone::AudioFrame;
using tone::ToneKey;

struct DetectorConfig {
  double sample_rate_hz = tone::kDefaultSampleRate;
  std::size_t frame_len = 160;
  double energy_floor = 1e-4;
  double twist_limit_db = 8.0;
  double accept_bandwidth_hz = 50.0;
  std::size_t confirm_frames = 2;
  // Talk-off guards: the winning tone must beat the sum of the other three
  // nominal-bin energies in its group by this ratio...
  double dominance_ratio = 4.0;
  // ...and the two tones together must carry this share of the frame power.
  double min_tone_power_fraction = 0.6;

  /// Same thresholds, 20 ms frames at the given rate.
  static DetectorConfig for_sample_rate(double sample_rate_hz) {
    DetectorConfig config;
    config.sample_rate_hz = sample_rate_hz;
    config.frame_len = static_cast<std::size_t>(std::lround(0.02 * sample_rate_hz));
    return config;
  }

  double frame_seconds() const { return static_cast<double>(frame_len) / sample_rate_hz; }

  void validate() const {
    if (!(sample_rate_hz > tone::kNyquistBound)) {
      throw std::invalid_argument("detector sample rate must exceed 3266 Hz");
    }
    if (static_cast<double>(frame_len) < 0.01 * sample_rate_hz - 1e-9) {
      throw std::invalid_argument("detector frame must span at least 10 ms");
    }
    if (!(energy_floor > 0.0) || !(twist_limit_db > 0.0) || !(accept_bandwidth_hz > 0.0) || confirm_frames < 1 ||
        !(dominance_ratio > 0.0) || min_tone_power_fraction < 0.0) {
      throw std::invalid_argument("detector thresholds must be positive and confirm_frames >= 1");
    }
    if (tone::kColFrequencies.back() + accept_bandwidth_hz >= sample_rate_hz / 2.0) {
      throw std::invalid_argument("accept window of 1633 Hz reaches Nyquist");
    }
  }
};

/// Squared single-bin DTFT magnitude at `target_hz`, normalised by N^2 so a
/// unit sinusoid on the target frequency reads 0.25 for any frame length.
inline double goertzel_energy(std::span<const double> samples, double sample_rate_hz, double target_hz) {
  if (samples.size() < 2) {
    throw std::invalid_argument("goertzel needs at least two samples");
  }
  if (!(target_hz > 0.0 && target_hz < sample_rate_hz / 2.0)) {
    throw std::invalid_argument("goertzel target must lie in (0, fs/2)");
  }
  const double omega = 2.0 * std::numbers::pi * target_hz / sample_rate_hz;
  const double coeff = 2.0 * std::cos(omega);
  double s1 = 0.0;
  double s2 = 0.0;
  for (double x : samples) {
    const double s0 = x + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  const double power = s1 * s1 + s2 * s2 - coeff * s1 * s2;
  const auto n = static_cast<double>(samples.size());
  return std::max(power, 0.0) / (n * n);
}

inline double goertzel_energy(const AudioFrame& frame, double target_hz) {
  return goertzel_energy(frame.samples, frame.sample_rate_hz, target_hz);
}

struct GroupMetrics {
  std::array<double, 4> energies{};  // at the nominal grid frequencies
  double peak_hz = 0.0;
  double peak_energy = 0.0;
  std::optional<std::size_t> best;  // grid tone whose accept window holds the peak
};

struct ToneMetrics {
  GroupMetrics row;
  GroupMetrics col;
  double twist_db = 0.0;
  double frame_power = 0.0;

  const std::array<double, 4>& row_energies() const { return row.energies; }
  const std::array<double, 4>& col_energies() const { return col.energies; }
  std::optional<std::size_t> best_row() const { return row.best; }
  std::optional<std::size_t> best_col() const { return col.best; }
};

namespace detail {

// Accept windows overlap where the grid spacing is under twice the
// bandwidth; the upper tone takes the overlap.
inline std::optional<std::size_t> attribute(const std::array<double, 4>& grid, double hz, double bandwidth) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (std::abs(hz - grid[i]) <= bandwidth + 1e-9) {
      best = i;
    }
  }
  return best;
}

inline GroupMetrics analyze_group(std::span<const double> samples, double fs, const std::array<double, 4>& grid,
                                  double bandwidth) {
  GroupMetrics out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.energies[i] = goertzel_energy(samples, fs, grid[i]);
  }
  const double lo = grid.front() - bandwidth;
  const double hi = grid.back() + bandwidth;
  // Probe spacing of 1/16 of the bin width keeps the peak energy within 0.3%.
  const double step = fs / (16.0 * static_cast<double>(samples.size()));
  const auto probes = static_cast<std::size_t>(std::floor((hi - lo) / step)) + 1;
  out.peak_energy = -1.0;
  for (std::size_t k = 0; k <= probes; ++k) {
    const double hz = std::min(lo + static_cast<double>(k) * step, hi);
    const double e = goertzel_energy(samples, fs, hz);
    if (e > out.peak_energy) {
      out.peak_energy = e;
      out.peak_hz = hz;
    }
  }
  out.best = attribute(grid, out.peak_hz, bandwidth);
  return out;
}

}  // namespace detail

inline ToneMetrics analyze_frame(std::span<const double> samples, const DetectorConfig& config) {
  if (samples.size() != config.frame_len) {
    throw std::invalid_argument("frame length does not match detector frame_len");
  }
  const double fs = config.sample_rate_hz;
  ToneMetrics m;
  m.row = detail::analyze_group(samples, fs, tone::kRowFrequencies, config.accept_bandwidth_hz);
  m.col = detail::analyze_group(samples, fs, tone::kColFrequencies, config.accept_bandwidth_hz);
  constexpr double kTiny = 1e-300;
  m.twist_db = 10.0 * std::log10(std::max(m.col.peak_energy, kTiny) / std::max(m.row.peak_energy, kTiny));
  m.frame_power = tone::mean_power(samples);
  return m;
}

inline ToneMetrics analyze_frame(const AudioFrame& frame, const DetectorConfig& config) {
  if (frame.sample_rate_hz != config.sample_rate_hz) {
    throw std::invalid_argument("frame sample rate does not match detector config");
  }
  return analyze_frame(frame.samples, config);
}

inline std::optional<ToneKey> validate(const ToneMetrics& m, const DetectorConfig& config) {
  if (!m.row.best || !m.col.best) {
    return std::nullopt;
  }
  if (m.row.peak_energy < config.energy_floor || m.col.peak_energy < config.energy_floor) {
    return std::nullopt;
  }
  if (std::abs(m.twist_db) > config.twist_limit_db) {
    return std::nullopt;
  }
  auto others = [](const GroupMetrics& g) {
    double sum = 0.0;
    for (std::size_t i = 0; i < g.energies.size(); ++i) {
      if (i != *g.best) {
        sum += g.energies[i];
      }
    }
    return sum;
  };
  if (m.row.peak_energy <= config.dominance_ratio * others(m.row) ||
      m.col.peak_energy <= config.dominance_ratio * others(m.col)) {
    return std::nullopt;
  }
  // A sinusoid of energy E carries 2E of mean power.
  const double tone_power = 2.0 * (m.row.peak_energy + m.col.peak_energy);
  if (!(m.frame_power > 0.0) || tone_power < config.min_tone_power_fraction * m.frame_power) {
    return std::nullopt;
  }
  return ToneKey::at(*m.row.best, *m.col.best);
}

struct SignalCondition {
  bool est_active = false;
  std::optional<ToneKey> candidate;  // present iff est_active
  std::optional<ToneKey> validated;  // this frame's raw verdict
  std::size_t run_frames = 0;        // consecutive frames validating to `validated`
  double lead_seconds = 0.0;         // tone time already elapsed when this frame ended
  ToneMetrics metrics;
};

/// Per-stream early-steering state: ESt rises once `confirm_frames`
/// consecutive frames agree and falls on the first frame that does not.
class ToneDetector {
 public:
  explicit ToneDetector(DetectorConfig config) : config_(config) { config_.validate(); }

  SignalCondition push(std::span<const double> samples) {
    SignalCondition cond;
    cond.metrics = analyze_frame(samples, config_);
    cond.validated = validate(cond.metrics, config_);
    if (cond.validated && cond.validated == last_) {
      ++run_;
    } else {
      run_ = cond.validated ? 1 : 0;
    }
    last_ = cond.validated;
    cond.run_frames = run_;
    cond.lead_seconds = static_cast<double>(run_) * config_.frame_seconds();
    cond.est_active = run_ >= config_.confirm_frames;
    if (cond.est_active) {
      cond.candidate = cond.validated;
    }
    return cond;
  }

  SignalCondition push(const AudioFrame& frame) {
    if (frame.sample_rate_hz != config_.sample_rate_hz) {
      throw std::invalid_argument("frame sample rate does not match detector config");
    }
    return push(frame.samples);
  }

  void reset() {
    last_.reset();
    run_ = 0;
  }

  const DetectorConfig& config() const { return config_; }

 private:
  DetectorConfig config_;
  std::optional<ToneKey> last_;
  std::size_t run_ = 0;
};

inline std::vector<SignalCondition> process_stream(std::span<const AudioFrame> frames, const DetectorConfig& config) {
  ToneDetector detector(config);
  std::vector<SignalCondition> out;
  out.reserve(frames.size());
  for (const auto& frame : frames) {
    out.push_back(detector.push(frame));
  }
  return out;
}

}  // namespace dtmfsim::detect
