#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "nbscan/frame.hpp"
#include "nbscan/parse.hpp"
#include "nbscan/pcap.hpp"
#include "nbscan/scan_config.hpp"

namespace nbscan {

/// A single-consumer sequential stream of captured frames.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::optional<RawFrame> next() = 0;
};

struct ReplayOptions {
  std::optional<HopSchedule> schedule;
  // Wall time of schedule offset 0; defaults to the first frame's timestamp.
  std::optional<std::int64_t> schedule_origin_us;
  // Pace emission to the capture clock instead of replaying at full speed.
  bool realtime = false;
  double speed = 1.0;
};

struct ReplayStats {
  std::size_t packets = 0;
  std::size_t emitted = 0;
  std::size_t out_of_order = 0;
  std::size_t filtered = 0;
  std::size_t bad_pseudo_header = 0;
};

class ReplaySource : public FrameSource {
 public:
  ReplaySource(const std::string& path, ReplayOptions options = {}) : options_(std::move(options)) {
    PcapReader reader(path);
    protocol_ = reader.protocol();
    std::int64_t high_water = INT64_MIN;
    while (auto p = reader.next()) {
      ++stats_.packets;
      if (p->timestamp_us < high_water) ++stats_.out_of_order;
      high_water = std::max(high_water, p->timestamp_us);
      auto f = decapsulate(reader.link_type(), *p);
      if (!f) {
        ++stats_.bad_pseudo_header;
        continue;
      }
      frames_.push_back(std::move(*f));
    }
    std::stable_sort(frames_.begin(), frames_.end(), [](const RawFrame& a, const RawFrame& b) {
      return a.meta.timestamp_us < b.meta.timestamp_us;
    });
    if (!frames_.empty()) origin_us_ = options_.schedule_origin_us.value_or(frames_.front().meta.timestamp_us);
  }

  Protocol protocol() const { return protocol_; }
  const ReplayStats& stats() const { return stats_; }

  std::optional<RawFrame> next() override {
    while (pos_ < frames_.size()) {
      RawFrame& f = frames_[pos_++];
      if (options_.schedule) {
        const bool heard = f.meta.channel &&
                           options_.schedule->listening(*f.meta.channel, f.meta.timestamp_us - origin_us_);
        if (!heard) {
          ++stats_.filtered;
          continue;
        }
      }
      if (options_.realtime) pace(f.meta.timestamp_us);
      ++stats_.emitted;
      return std::move(f);
    }
    return std::nullopt;
  }

 private:
  void pace(std::int64_t ts) {
    using clock = std::chrono::steady_clock;
    if (!started_) {
      started_ = clock::now();
      first_ts_ = ts;
    }
    const auto offset = std::chrono::microseconds(
        static_cast<std::int64_t>(static_cast<double>(ts - first_ts_) / options_.speed));
    std::this_thread::sleep_until(*started_ + offset);
  }

  ReplayOptions options_;
  Protocol protocol_ = Protocol::wifi;
  std::vector<RawFrame> frames_;
  std::size_t pos_ = 0;
  std::int64_t origin_us_ = 0;
  ReplayStats stats_;
  std::optional<std::chrono::steady_clock::time_point> started_;
  std::int64_t first_ts_ = 0;
};

struct ParseFailure {
  std::size_t index = 0;  // position in the emitted stream
  ParseErrc code = ParseErrc::truncated_frame;
};

struct ReplayResult {
  std::vector<FrameRecord> records;
  std::vector<ParseFailure> failures;
  ReplayStats stats;
};

/// Drains a capture file into parsed records; frames that fail to parse
/// are tallied in `failures`, never dropped silently.
inline ReplayResult replay_capture(const std::string& path,
                                   const std::optional<HopSchedule>& schedule = std::nullopt) {
  ReplayOptions opt;
  opt.schedule = schedule;
  ReplaySource src(path, opt);
  ReplayResult out;
  std::size_t i = 0;
  while (auto f = src.next()) {
    auto r = try_parse_frame(*f);
    if (auto* rec = std::get_if<FrameRecord>(&r)) out.records.push_back(std::move(*rec));
    else out.failures.push_back({i, std::get<ParseErrc>(r)});
    ++i;
  }
  out.stats = src.stats();
  return out;
}

}  // namespace nbscan
