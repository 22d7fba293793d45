#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "nbscan/address.hpp"
#include "nbscan/bytes.hpp"
#include "nbscan/frame.hpp"

namespace nbscan {

namespace zigbee_detail {

inline constexpr std::size_t kMinFrame = 5;  // frame control, sequence, FCS
inline constexpr std::size_t kFcsLen = 2;

enum AddrMode : std::uint8_t { none = 0, reserved = 1, short_addr = 2, extended = 3 };

class Cursor {
 public:
  Cursor(ByteView raw, std::size_t pos, std::size_t end) : raw_(raw), pos_(pos), end_(end) {}

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > end_) throw ParseError(ParseErrc::truncated_frame, what);
  }

  std::uint16_t u16(const char* what) {
    need(2, what);
    const auto v = load_le16(raw_, pos_);
    pos_ += 2;
    return v;
  }

  std::uint64_t u64(const char* what) {
    need(8, what);
    const auto v = load_le64(raw_, pos_);
    pos_ += 8;
    return v;
  }

  Address address(std::uint8_t mode, const char* what) {
    if (mode == short_addr) return ZigbeeShort{u16(what)};
    return ZigbeeExtended{u64(what)};
  }

 private:
  ByteView raw_;
  std::size_t pos_;
  std::size_t end_;
};

}  // namespace zigbee_detail

/// Dissects an IEEE 802.15.4 MAC frame including its 2-byte FCS trailer.
inline FrameRecord parse_zigbee_frame(ByteView raw, const CaptureMeta& meta) {
  using namespace zigbee_detail;
  if (raw.size() < kMinFrame)
    throw ParseError(ParseErrc::truncated_frame, std::to_string(raw.size()) + " bytes");
  const std::uint16_t fc = load_le16(raw, 0);
  const std::uint8_t type = fc & 0x7;
  if (type >= 4) throw ParseError(ParseErrc::reserved_frame_type, "frame type " + std::to_string(type));
  const bool pan_compression = (fc & 0x40) != 0;
  const auto dst_mode = static_cast<std::uint8_t>((fc >> 10) & 0x3);
  const auto src_mode = static_cast<std::uint8_t>((fc >> 14) & 0x3);
  if (dst_mode == reserved || src_mode == reserved)
    throw ParseError(ParseErrc::reserved_address_mode, "addressing mode 1");

  FrameRecord rec;
  rec.protocol = Protocol::zigbee;
  rec.timestamp_us = meta.timestamp_us;
  rec.channel = meta.channel;
  rec.rssi_dbm = meta.rssi_dbm;
  rec.length_bytes = static_cast<std::uint32_t>(raw.size());
  static constexpr FrameKind kKinds[] = {FrameKind::beacon, FrameKind::data, FrameKind::ack,
                                         FrameKind::mac_command};
  rec.kind = kKinds[type];
  rec.subtype = type;

  Cursor cur(raw, 3, raw.size() - kFcsLen);
  std::optional<std::uint16_t> dst_pan, src_pan;
  if (dst_mode != none) {
    dst_pan = cur.u16("destination PAN");
    rec.dst = cur.address(dst_mode, "destination address");
  }
  if (src_mode != none) {
    if (!(pan_compression && dst_mode != none)) src_pan = cur.u16("source PAN");
    rec.src = cur.address(src_mode, "source address");
  }
  rec.pan_id = dst_pan ? dst_pan : src_pan;
  return rec;
}

/// CRC-16/KERMIT as used for the 802.15.4 FCS.
inline std::uint16_t ieee802154_fcs(ByteView data) {
  std::uint16_t crc = 0;
  for (std::uint8_t b : data) {
    crc ^= b;
    for (int i = 0; i < 8; ++i) crc = (crc & 1) ? static_cast<std::uint16_t>((crc >> 1) ^ 0x8408) : crc >> 1;
  }
  return crc;
}

namespace zigbee_build {

struct Header {
  std::uint8_t type = 1;
  bool ack_request = false;
  bool pan_compression = true;
  std::uint8_t seq = 0;
  std::optional<std::uint16_t> dst_pan;
  std::optional<Address> dst;
  std::optional<std::uint16_t> src_pan;
  std::optional<Address> src;
};

inline std::uint8_t mode_of(const std::optional<Address>& a) {
  if (!a) return 0;
  return std::holds_alternative<ZigbeeExtended>(*a) ? 3 : 2;
}

inline void put_addr(Bytes& out, const Address& a) {
  if (const auto* s = std::get_if<ZigbeeShort>(&a)) put_le16(out, s->value);
  else if (const auto* e = std::get_if<ZigbeeExtended>(&a)) put_le64(out, e->value);
}

inline Bytes frame(const Header& h, ByteView payload) {
  const std::uint8_t dm = mode_of(h.dst), sm = mode_of(h.src);
  const bool compress = h.pan_compression && h.dst && h.src;
  const auto fc = static_cast<std::uint16_t>(h.type | (h.ack_request ? 0x20 : 0) | (compress ? 0x40 : 0) |
                                             (dm << 10) | (1 << 12) | (sm << 14));
  Bytes out;
  put_le16(out, fc);
  out.push_back(h.seq);
  if (h.dst) {
    put_le16(out, h.dst_pan.value_or(0xffff));
    put_addr(out, *h.dst);
  }
  if (h.src) {
    if (!compress) put_le16(out, h.src_pan.value_or(h.dst_pan.value_or(0xffff)));
    put_addr(out, *h.src);
  }
  out.insert(out.end(), payload.begin(), payload.end());
  put_le16(out, ieee802154_fcs(out));
  return out;
}

inline Bytes ack(std::uint8_t seq) {
  Bytes out;
  put_le16(out, 0x0002);
  out.push_back(seq);
  put_le16(out, ieee802154_fcs(out));
  return out;
}

}  // namespace zigbee_build

}  // namespace nbscan
