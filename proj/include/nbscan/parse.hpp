#pragma once

#include <optional>
#include <variant>

#include "nbscan/ble.hpp"
#include "nbscan/frame.hpp"
#include "nbscan/wifi.hpp"
#include "nbscan/zigbee.hpp"

namespace nbscan {

inline FrameRecord parse_frame(Protocol protocol, ByteView raw, const CaptureMeta& meta) {
  switch (protocol) {
    case Protocol::wifi: return parse_wifi_frame(raw, meta);
    case Protocol::ble: return parse_ble_frame(raw, meta);
    case Protocol::zigbee: return parse_zigbee_frame(raw, meta);
  }
  throw ParseError(ParseErrc::unknown_type, "protocol");
}

inline FrameRecord parse_frame(const RawFrame& f) { return parse_frame(f.protocol, f.bytes, f.meta); }

/// Non-throwing variant for bulk paths that tally failures.
inline std::variant<FrameRecord, ParseErrc> try_parse_frame(const RawFrame& f) {
  try {
    return parse_frame(f);
  } catch (const ParseError& e) {
    return e.code();
  }
}

}  // namespace nbscan
