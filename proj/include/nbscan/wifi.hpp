#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "nbscan/address.hpp"
#include "nbscan/bytes.hpp"
#include "nbscan/frame.hpp"

namespace nbscan {

namespace wifi_detail {

inline constexpr std::size_t kMinFrame = 10;
inline constexpr std::size_t kMgmtHeader = 24;
inline constexpr std::size_t kBeaconFixed = 12;  // timestamp, interval, capabilities
inline constexpr std::size_t kMaxSsid = 32;

struct FrameControl {
  std::uint8_t type;
  std::uint8_t subtype;
  bool to_ds;
  bool from_ds;
  bool is_protected;
  bool order;
};

inline FrameControl read_frame_control(ByteView raw) {
  return FrameControl{
      static_cast<std::uint8_t>((raw[0] >> 2) & 0x3), static_cast<std::uint8_t>(raw[0] >> 4),
      (raw[1] & 0x01) != 0, (raw[1] & 0x02) != 0, (raw[1] & 0x40) != 0, (raw[1] & 0x80) != 0};
}

// Header length implied by the frame control field, and whether it
// carries a transmitter address (Address 2).
inline std::pair<std::size_t, bool> header_layout(const FrameControl& fc) {
  switch (fc.type) {
    case 0: return {kMgmtHeader + (fc.order ? 4 : 0), true};
    case 1:
      if (fc.subtype == wifi_subtype::ack || fc.subtype == wifi_subtype::cts) return {10, false};
      if (fc.subtype == wifi_subtype::ctrl_wrapper) return {16, false};
      return {16, true};
    default: {
      std::size_t len = 24;
      if (fc.to_ds && fc.from_ds) len += 6;
      const bool qos = (fc.subtype & 0x08) != 0;
      if (qos) len += 2;
      if (qos && fc.order) len += 4;
      return {len, true};
    }
  }
}

// Returns the SSID element payload, if any, from a tagged-element list.
inline std::optional<ByteView> find_ssid_element(ByteView elements) {
  std::size_t pos = 0;
  while (pos < elements.size()) {
    if (elements.size() - pos < 2)
      throw ParseError(ParseErrc::malformed_element, "dangling element header");
    const std::uint8_t id = elements[pos];
    const std::size_t len = elements[pos + 1];
    if (pos + 2 + len > elements.size())
      throw ParseError(ParseErrc::malformed_element,
                       "element " + std::to_string(id) + " length exceeds body");
    if (id == 0) {
      if (len > kMaxSsid) throw ParseError(ParseErrc::malformed_element, "SSID longer than 32 bytes");
      return elements.subspan(pos + 2, len);
    }
    pos += 2 + len;
  }
  return std::nullopt;
}

}  // namespace wifi_detail

/// Dissects an 802.11 MAC frame. Address 1 is reported as the destination
/// and Address 2 (when the frame type carries one) as the source; no
/// ToDS/FromDS remapping is applied.
inline FrameRecord parse_wifi_frame(ByteView raw, const CaptureMeta& meta) {
  using namespace wifi_detail;
  if (raw.size() < kMinFrame)
    throw ParseError(ParseErrc::truncated_frame, std::to_string(raw.size()) + " bytes");
  const FrameControl fc = read_frame_control(raw);
  if (fc.type == 3) throw ParseError(ParseErrc::unknown_type, "type 3");

  const std::size_t trailer = meta.has_fcs ? 4 : 0;
  if (raw.size() < trailer + kMinFrame)
    throw ParseError(ParseErrc::truncated_frame, "no room for FCS");
  const std::size_t end = raw.size() - trailer;
  const auto [header_len, has_addr2] = header_layout(fc);
  if (end < header_len)
    throw ParseError(ParseErrc::truncated_frame,
                     std::to_string(end) + " < header " + std::to_string(header_len));

  FrameRecord rec;
  rec.protocol = Protocol::wifi;
  rec.timestamp_us = meta.timestamp_us;
  rec.channel = meta.channel;
  rec.rssi_dbm = meta.rssi_dbm;
  rec.length_bytes = static_cast<std::uint32_t>(raw.size());
  rec.kind = fc.type == 0 ? FrameKind::management : fc.type == 1 ? FrameKind::control : FrameKind::data;
  rec.subtype = fc.subtype;
  rec.dst = MacAddress::from_wire(raw, 4);
  if (has_addr2) rec.src = MacAddress::from_wire(raw, 10);

  if (rec.kind == FrameKind::management && !fc.is_protected) {
    const ByteView body = raw.subspan(header_len, end - header_len);
    const bool ap_originated =
        fc.subtype == wifi_subtype::beacon || fc.subtype == wifi_subtype::probe_resp;
    if (ap_originated) {
      if (body.size() < kBeaconFixed)
        throw ParseError(ParseErrc::truncated_frame, "beacon fixed fields");
      if (auto ssid = find_ssid_element(body.subspan(kBeaconFixed))) {
        const bool hidden = ssid->empty() ||
                            std::all_of(ssid->begin(), ssid->end(), [](auto b) { return b == 0; });
        rec.ssid = hidden ? std::string(kHiddenSsid) : sanitize_utf8(*ssid);
      }
    } else if (fc.subtype == wifi_subtype::probe_req) {
      // Zero-length SSID in a probe request is the wildcard, not a network.
      if (auto ssid = find_ssid_element(body); ssid && !ssid->empty()) rec.ssid = sanitize_utf8(*ssid);
    }
  }
  return rec;
}

// Frame builders used by the scenario generator and tests.
namespace wifi_build {

inline void put_mac(Bytes& out, const MacAddress& a) {
  out.insert(out.end(), a.octets.begin(), a.octets.end());
}

inline void put_header(Bytes& out, std::uint8_t type, std::uint8_t subtype, std::uint8_t flags,
                       const MacAddress& a1, const MacAddress& a2, const MacAddress& a3,
                       std::uint16_t seq) {
  out.push_back(static_cast<std::uint8_t>((subtype << 4) | (type << 2)));
  out.push_back(flags);
  put_le16(out, type == 0 ? 0 : 44);
  put_mac(out, a1);
  put_mac(out, a2);
  put_mac(out, a3);
  put_le16(out, static_cast<std::uint16_t>((seq & 0x0fff) << 4));
}

inline void put_element(Bytes& out, std::uint8_t id, ByteView payload) {
  out.push_back(id);
  out.push_back(static_cast<std::uint8_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
}

inline void put_ssid(Bytes& out, std::string_view ssid) {
  put_element(out, 0, ByteView(reinterpret_cast<const std::uint8_t*>(ssid.data()), ssid.size()));
}

inline void put_ap_elements(Bytes& out, std::string_view ssid, int channel) {
  static constexpr std::uint8_t kRates[] = {0x82, 0x84, 0x8b, 0x96, 0x0c, 0x12, 0x18, 0x24};
  put_ssid(out, ssid);
  put_element(out, 1, kRates);
  const std::uint8_t ds[] = {static_cast<std::uint8_t>(channel)};
  put_element(out, 3, ds);
}

inline Bytes beacon(const MacAddress& bssid, std::string_view ssid, int channel, std::uint16_t seq,
                    std::uint64_t tsf) {
  Bytes out;
  put_header(out, 0, wifi_subtype::beacon, 0, MacAddress::broadcast(), bssid, bssid, seq);
  put_le64(out, tsf);
  put_le16(out, 0x0064);
  put_le16(out, 0x0411);
  put_ap_elements(out, ssid, channel);
  return out;
}

inline Bytes probe_request(const MacAddress& sta, std::string_view ssid, std::uint16_t seq) {
  Bytes out;
  put_header(out, 0, wifi_subtype::probe_req, 0, MacAddress::broadcast(), sta,
             MacAddress::broadcast(), seq);
  put_ssid(out, ssid);
  static constexpr std::uint8_t kRates[] = {0x02, 0x04, 0x0b, 0x16};
  put_element(out, 1, kRates);
  return out;
}

inline Bytes probe_response(const MacAddress& bssid, const MacAddress& sta, std::string_view ssid,
                            int channel, std::uint16_t seq, std::uint64_t tsf) {
  Bytes out;
  put_header(out, 0, wifi_subtype::probe_resp, 0, sta, bssid, bssid, seq);
  put_le64(out, tsf);
  put_le16(out, 0x0064);
  put_le16(out, 0x0411);
  put_ap_elements(out, ssid, channel);
  return out;
}

inline Bytes ack(const MacAddress& ra) {
  Bytes out = {0xd4, 0x00};
  put_le16(out, 0);
  put_mac(out, ra);
  return out;
}

inline Bytes cts(const MacAddress& ra, std::uint16_t duration) {
  Bytes out = {0xc4, 0x00};
  put_le16(out, duration);
  put_mac(out, ra);
  return out;
}

// RTS, PS-Poll and CF-End: frame control, duration/AID, RA, TA.
inline Bytes control_with_ta(std::uint8_t subtype, const MacAddress& ra, const MacAddress& ta,
                             std::uint16_t duration) {
  Bytes out = {static_cast<std::uint8_t>((subtype << 4) | (1 << 2)), 0x00};
  put_le16(out, duration);
  put_mac(out, ra);
  put_mac(out, ta);
  return out;
}

/// A data frame padded with opaque payload bytes to exactly `total_len`
/// bytes. `flags` carries ToDS/FromDS/Protected; QoS subtypes add the
/// QoS control field.
inline Bytes data(std::uint8_t subtype, std::uint8_t flags, const MacAddress& a1,
                  const MacAddress& a2, const MacAddress& a3, std::uint16_t seq,
                  std::size_t total_len, std::uint64_t fill_seed) {
  Bytes out;
  out.reserve(total_len);
  put_header(out, 2, subtype, flags, a1, a2, a3, seq);
  if ((flags & 0x03) == 0x03) put_mac(out, a3);
  if (subtype & 0x08) put_le16(out, 0x0000);
  std::uint64_t x = fill_seed | 1;
  while (out.size() < total_len) {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    out.push_back(static_cast<std::uint8_t>(x >> 24));
  }
  return out;
}

inline std::size_t data_header_len(std::uint8_t subtype, std::uint8_t flags) {
  std::size_t len = 24;
  if ((flags & 0x03) == 0x03) len += 6;
  if (subtype & 0x08) len += 2;
  return len;
}

}  // namespace wifi_build

}  // namespace nbscan
