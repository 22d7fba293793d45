#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nbscan/address.hpp"
#include "nbscan/bytes.hpp"
#include "nbscan/frame.hpp"

namespace nbscan {

inline constexpr std::uint32_t kBleAdvertisingAccessAddress = 0x8e89bed6;
inline constexpr std::uint32_t kBleAdvertisingCrcInit = 0x555555;
inline constexpr int kBleDataChannels = 37;

inline bool is_ble_advertising_channel(int ch) { return ch >= 37 && ch <= 39; }

namespace ble_detail {

inline constexpr std::size_t kAccessAddressLen = 4;
inline constexpr std::size_t kHeaderLen = 2;
inline constexpr std::size_t kCrcLen = 3;
inline constexpr std::size_t kConnectReqPayload = 34;

inline std::size_t min_adv_payload(std::uint8_t type) {
  switch (type) {
    case ble_pdu::adv_ind:
    case ble_pdu::adv_nonconn_ind:
    case ble_pdu::adv_scan_ind:
    case ble_pdu::scan_rsp: return 6;
    case ble_pdu::adv_direct_ind:
    case ble_pdu::scan_req: return 12;
    case ble_pdu::connect_req: return kConnectReqPayload;
    default: return 0;
  }
}

// Walks AD structures; prefers the complete local name (0x09) over the
// shortened one (0x08). A zero length octet ends the significant part.
inline std::optional<std::string> local_name(ByteView ad) {
  std::optional<std::string> shortened, complete;
  std::size_t pos = 0;
  while (pos < ad.size()) {
    const std::size_t len = ad[pos];
    if (len == 0) break;
    if (pos + 1 + len > ad.size())
      throw ParseError(ParseErrc::bad_length, "AD structure overruns advertising data");
    const std::uint8_t type = ad[pos + 1];
    const ByteView value = ad.subspan(pos + 2, len - 1);
    if (type == 0x09 && !complete) complete = sanitize_utf8(value);
    if (type == 0x08 && !shortened) shortened = sanitize_utf8(value);
    pos += 1 + len;
  }
  return complete ? complete : shortened;
}

}  // namespace ble_detail

/// Dissects a BLE link-layer packet: access address, PDU header, payload
/// and 3-byte CRC. Advertising versus data channel comes from the capture
/// channel (37-39 advertising); when the channel is unknown the
/// advertising access address decides.
inline FrameRecord parse_ble_frame(ByteView raw, const CaptureMeta& meta) {
  using namespace ble_detail;
  if (raw.size() < kAccessAddressLen + kHeaderLen + kCrcLen)
    throw ParseError(ParseErrc::truncated_frame, std::to_string(raw.size()) + " bytes");
  const std::uint32_t aa = load_le32(raw, 0);
  const std::uint8_t h0 = raw[4];
  const std::size_t len = raw[5];
  if (raw.size() != kAccessAddressLen + kHeaderLen + len + kCrcLen)
    throw ParseError(ParseErrc::bad_length, "header length " + std::to_string(len) + " but " +
                                                std::to_string(raw.size()) + " bytes captured");
  const ByteView payload = raw.subspan(kAccessAddressLen + kHeaderLen, len);

  const bool advertising = meta.channel ? is_ble_advertising_channel(*meta.channel)
                                        : aa == kBleAdvertisingAccessAddress;
  FrameRecord rec;
  rec.protocol = Protocol::ble;
  rec.timestamp_us = meta.timestamp_us;
  rec.channel = meta.channel;
  rec.rssi_dbm = meta.rssi_dbm;
  rec.length_bytes = static_cast<std::uint32_t>(raw.size());

  if (!advertising) {
    const std::uint8_t llid = h0 & 0x03;
    rec.kind = llid == ble_pdu::llid_control ? FrameKind::data_control : FrameKind::data;
    rec.subtype = llid;
    rec.ble_access_address = aa;
    return rec;
  }

  const std::uint8_t type = h0 & 0x0f;
  rec.kind = FrameKind::advertising;
  rec.subtype = type;
  rec.ble_addr_type = (h0 & 0x40) ? BleAddrType::random_addr : BleAddrType::public_addr;
  if (payload.size() < min_adv_payload(type))
    throw ParseError(ParseErrc::truncated_frame, std::string(subtype_name(Protocol::ble, rec.kind, type)) +
                                                     " payload of " + std::to_string(payload.size()) +
                                                     " bytes");
  switch (type) {
    case ble_pdu::adv_ind:
    case ble_pdu::adv_nonconn_ind:
    case ble_pdu::adv_scan_ind:
    case ble_pdu::scan_rsp:
      rec.src = MacAddress::from_reversed(payload, 0);
      rec.ble_local_name = local_name(payload.subspan(6));
      break;
    case ble_pdu::adv_direct_ind:
      rec.src = MacAddress::from_reversed(payload, 0);
      rec.dst = MacAddress::from_reversed(payload, 6);
      break;
    case ble_pdu::scan_req:
    case ble_pdu::connect_req:
      rec.src = MacAddress::from_reversed(payload, 0);
      rec.dst = MacAddress::from_reversed(payload, 6);
      if (type == ble_pdu::connect_req) {
        ConnectionParams p;
        p.access_address = load_le32(payload, 12);
        p.crc_init = load_le24(payload, 16);
        p.win_size = payload[19];
        p.win_offset = load_le16(payload, 20);
        p.interval = load_le16(payload, 22);
        p.latency = load_le16(payload, 24);
        p.timeout = load_le16(payload, 26);
        p.channel_map = (static_cast<std::uint64_t>(load_le32(payload, 28)) |
                         (static_cast<std::uint64_t>(payload[32]) << 32)) &
                        ((1ull << 37) - 1);
        p.hop_increment = payload[33] & 0x1f;
        p.sca = payload[33] >> 5;
        rec.connection = p;
      }
      break;
    case ble_pdu::adv_ext_ind:
      // Common extended header: length/mode octet, flags, then AdvA if flagged.
      if (!payload.empty()) {
        const std::size_t ext_len = payload[0] & 0x3f;
        if (1 + ext_len > payload.size())
          throw ParseError(ParseErrc::bad_length, "extended header overruns payload");
        if (ext_len >= 1 && (payload[1] & 0x01)) {
          if (ext_len < 7) throw ParseError(ParseErrc::bad_length, "extended header too short for AdvA");
          rec.src = MacAddress::from_reversed(payload, 2);
        }
      }
      break;
    default: break;
  }
  return rec;
}

/// CRC-24/BLE (poly 0x00065b, reflected, CRCInit loaded bit-reversed).
/// The 3 CRC octets go on the air as the little-endian packing of the
/// returned value.
inline std::uint32_t ble_crc24(ByteView pdu, std::uint32_t crc_init) {
  std::uint32_t state = 0;
  for (int i = 0; i < 24; ++i) state |= ((crc_init >> i) & 1u) << (23 - i);
  for (std::uint8_t cur : pdu) {
    for (int j = 0; j < 8; ++j) {
      const bool next = ((state ^ cur) & 1) != 0;
      cur >>= 1;
      state >>= 1;
      if (next) state ^= 0xda6000;
    }
  }
  return state;
}

/// Channel selection algorithm #1: next data channel for a connection.
class BleChannelHopper {
 public:
  BleChannelHopper(std::uint64_t channel_map, std::uint8_t hop_increment)
      : map_(channel_map), hop_(hop_increment) {
    for (int c = 0; c < kBleDataChannels; ++c)
      if (map_ & (1ull << c)) used_.push_back(c);
  }

  int next() {
    unmapped_ = (unmapped_ + hop_) % kBleDataChannels;
    if (map_ & (1ull << unmapped_)) return unmapped_;
    return used_.empty() ? unmapped_ : used_[static_cast<std::size_t>(unmapped_) % used_.size()];
  }

 private:
  std::uint64_t map_;
  int hop_;
  int unmapped_ = 0;
  std::vector<int> used_;
};

namespace ble_build {

inline void put_mac_reversed(Bytes& out, const MacAddress& a) {
  for (int i = 5; i >= 0; --i) out.push_back(a.octets[static_cast<std::size_t>(i)]);
}

inline Bytes packet(std::uint32_t aa, std::uint32_t crc_init, std::uint8_t header0,
                    ByteView payload) {
  Bytes out;
  out.reserve(4 + 2 + payload.size() + 3);
  put_le32(out, aa);
  out.push_back(header0);
  out.push_back(static_cast<std::uint8_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  const std::uint32_t crc = ble_crc24(ByteView(out).subspan(4), crc_init);
  put_le24(out, crc);
  return out;
}

inline std::uint8_t adv_header(std::uint8_t type, bool tx_random, bool rx_random) {
  return static_cast<std::uint8_t>(type | (tx_random ? 0x40 : 0) | (rx_random ? 0x80 : 0));
}

inline Bytes adv_ind(const MacAddress& adv, bool random, std::string_view name) {
  Bytes p;
  put_mac_reversed(p, adv);
  p.insert(p.end(), {0x02, 0x01, 0x06});
  if (!name.empty()) {
    p.push_back(static_cast<std::uint8_t>(name.size() + 1));
    p.push_back(0x09);
    p.insert(p.end(), name.begin(), name.end());
  }
  return packet(kBleAdvertisingAccessAddress, kBleAdvertisingCrcInit,
                adv_header(ble_pdu::adv_ind, random, false), p);
}

inline Bytes scan_req(const MacAddress& scanner, bool scanner_random, const MacAddress& adv,
                      bool adv_random) {
  Bytes p;
  put_mac_reversed(p, scanner);
  put_mac_reversed(p, adv);
  return packet(kBleAdvertisingAccessAddress, kBleAdvertisingCrcInit,
                adv_header(ble_pdu::scan_req, scanner_random, adv_random), p);
}

inline Bytes scan_rsp(const MacAddress& adv, bool random, std::string_view name) {
  Bytes p;
  put_mac_reversed(p, adv);
  if (!name.empty()) {
    p.push_back(static_cast<std::uint8_t>(name.size() + 1));
    p.push_back(0x08);
    p.insert(p.end(), name.begin(), name.end());
  }
  return packet(kBleAdvertisingAccessAddress, kBleAdvertisingCrcInit,
                adv_header(ble_pdu::scan_rsp, random, false), p);
}

inline Bytes connect_req(const MacAddress& init, bool init_random, const MacAddress& adv,
                         bool adv_random, const ConnectionParams& c) {
  Bytes p;
  put_mac_reversed(p, init);
  put_mac_reversed(p, adv);
  put_le32(p, c.access_address);
  put_le24(p, c.crc_init);
  p.push_back(c.win_size);
  put_le16(p, c.win_offset);
  put_le16(p, c.interval);
  put_le16(p, c.latency);
  put_le16(p, c.timeout);
  put_le32(p, static_cast<std::uint32_t>(c.channel_map));
  p.push_back(static_cast<std::uint8_t>((c.channel_map >> 32) & 0x1f));
  p.push_back(static_cast<std::uint8_t>((c.hop_increment & 0x1f) | (c.sca << 5)));
  return packet(kBleAdvertisingAccessAddress, kBleAdvertisingCrcInit,
                adv_header(ble_pdu::connect_req, init_random, adv_random), p);
}

inline Bytes data_pdu(std::uint32_t aa, std::uint32_t crc_init, std::uint8_t llid, bool nesn,
                      bool sn, ByteView payload) {
  const auto h0 = static_cast<std::uint8_t>((llid & 0x3) | (nesn ? 0x04 : 0) | (sn ? 0x08 : 0));
  return packet(aa, crc_init, h0, payload);
}

}  // namespace ble_build

}  // namespace nbscan
