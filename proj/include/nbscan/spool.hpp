#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "nbscan/pcap.hpp"
#include "nbscan/replay.hpp"

namespace nbscan {

class VectorSource : public FrameSource {
 public:
  explicit VectorSource(std::vector<RawFrame> frames) : frames_(std::move(frames)) {}
  std::optional<RawFrame> next() override {
    if (pos_ >= frames_.size()) return std::nullopt;
    return frames_[pos_++];
  }

 private:
  std::vector<RawFrame> frames_;
  std::size_t pos_ = 0;
};

/// Writes a frame stream to a classic pcap file, one protocol per file.
/// `protocol` fixes the link type up front; otherwise the first frame
/// decides it and an empty stream produces an empty WiFi capture. On a
/// protocol change the partial file is removed.
inline std::size_t spool_raw(FrameSource& source, const std::string& path,
                             std::optional<Protocol> protocol = std::nullopt) {
  std::optional<RawFrame> first = source.next();
  const Protocol p = protocol.value_or(first ? first->protocol : Protocol::wifi);
  std::size_t n = 0;
  try {
    PcapWriter w(path, spool_link_type(p));
    for (auto f = std::move(first); f; f = source.next()) {
      if (f->protocol != p)
        throw CaptureError(CaptureErrc::mixed_link_types, std::string(to_string(f->protocol)) + " frame in a " +
                                                              std::string(to_string(p)) + " capture");
      w.write(*f);
      ++n;
    }
    w.flush();
  } catch (const CaptureError& e) {
    if (e.code() == CaptureErrc::mixed_link_types) std::remove(path.c_str());
    throw;
  }
  return n;
}

inline std::size_t spool_raw(const std::vector<RawFrame>& frames, const std::string& path,
                             std::optional<Protocol> protocol = std::nullopt) {
  VectorSource src(frames);
  return spool_raw(src, path, protocol);
}

}  // namespace nbscan
