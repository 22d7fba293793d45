#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace nbscan {

class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Channel-hopping parameters: dwell time T_d, hop count T_h, the channel
/// list cycled through, and the console refresh interval p.
struct ScanConfig {
  int dwell_time_s = 30;
  int hops = 13;
  std::vector<int> channels = wifi_channels();
  int refresh_interval_s = 5;

  static std::vector<int> wifi_channels() {
    std::vector<int> ch(13);
    std::iota(ch.begin(), ch.end(), 1);
    return ch;
  }

  static std::vector<int> zigbee_channels() {
    std::vector<int> ch(16);
    std::iota(ch.begin(), ch.end(), 11);
    return ch;
  }

  static ScanConfig wifi_default() { return ScanConfig{}; }

  static ScanConfig zigbee_default() {
    ScanConfig c;
    c.channels = zigbee_channels();
    c.hops = 16;
    return c;
  }

  std::int64_t total_observation_s() const {
    return static_cast<std::int64_t>(dwell_time_s) * hops;
  }

  void validate() const {
    if (dwell_time_s < 1) throw InvalidConfig("dwell time must be at least 1 s");
    if (hops < 1) throw InvalidConfig("hops must be at least 1");
    if (channels.empty()) throw InvalidConfig("channel list is empty");
    if (refresh_interval_s < 1) throw InvalidConfig("refresh interval must be at least 1 s");
  }

  bool operator==(const ScanConfig&) const = default;
};

struct HopSegment {
  int channel = 0;
  std::int64_t start_s = 0;
  std::int64_t end_s = 0;

  bool operator==(const HopSegment&) const = default;
};

/// Contiguous dwell segments, offsets in seconds from the start of the scan.
struct HopSchedule {
  std::vector<HopSegment> segments;

  std::int64_t total_s() const { return segments.empty() ? 0 : segments.back().end_s; }

  /// True when the interceptor is tuned to `channel` at `offset_us`
  /// (half-open segments).
  bool listening(int channel, std::int64_t offset_us) const {
    if (offset_us < 0) return false;
    const std::int64_t s = offset_us / 1000000;
    if (segments.empty() || s >= total_s()) return false;
    // Segments are equal length, so the covering one is found directly.
    const std::int64_t seg_len = segments.front().end_s - segments.front().start_s;
    const auto& seg = segments[static_cast<std::size_t>(s / seg_len)];
    return seg.channel == channel;
  }
};

inline HopSchedule build_hop_schedule(const ScanConfig& config) {
  if (config.dwell_time_s < 1 || config.hops < 1 || config.channels.empty())
    throw InvalidConfig("dwell and hops must be positive and the channel list non-empty");
  HopSchedule s;
  s.segments.reserve(static_cast<std::size_t>(config.hops));
  for (int i = 0; i < config.hops; ++i) {
    const std::int64_t start = static_cast<std::int64_t>(i) * config.dwell_time_s;
    s.segments.push_back(
        {config.channels[static_cast<std::size_t>(i) % config.channels.size()], start,
         start + config.dwell_time_s});
  }
  return s;
}

}  // namespace nbscan
