#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "nbscan/address.hpp"
#include "nbscan/bytes.hpp"

namespace nbscan {

enum class Protocol { wifi, ble, zigbee };

inline std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::wifi: return "wifi";
    case Protocol::ble: return "ble";
    case Protocol::zigbee: return "zigbee";
  }
  return "wifi";
}

inline std::optional<Protocol> parse_protocol(std::string_view s) {
  if (s == "wifi") return Protocol::wifi;
  if (s == "ble") return Protocol::ble;
  if (s == "zigbee") return Protocol::zigbee;
  return std::nullopt;
}

// WiFi: management/control/data. BLE: advertising/data/data_control.
// Zigbee: beacon/data/ack/mac_command.
enum class FrameKind { management, control, data, advertising, data_control, beacon, ack, mac_command };

inline std::string_view to_string(FrameKind k) {
  switch (k) {
    case FrameKind::management: return "management";
    case FrameKind::control: return "control";
    case FrameKind::data: return "data";
    case FrameKind::advertising: return "advertising";
    case FrameKind::data_control: return "data_control";
    case FrameKind::beacon: return "beacon";
    case FrameKind::ack: return "ack";
    case FrameKind::mac_command: return "mac_command";
  }
  return "data";
}

inline std::optional<FrameKind> parse_kind(std::string_view s) {
  for (auto k : {FrameKind::management, FrameKind::control, FrameKind::data, FrameKind::advertising,
                 FrameKind::data_control, FrameKind::beacon, FrameKind::ack, FrameKind::mac_command}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

inline bool kind_valid_for(Protocol p, FrameKind k) {
  switch (p) {
    case Protocol::wifi:
      return k == FrameKind::management || k == FrameKind::control || k == FrameKind::data;
    case Protocol::ble:
      return k == FrameKind::advertising || k == FrameKind::data || k == FrameKind::data_control;
    case Protocol::zigbee:
      return k == FrameKind::beacon || k == FrameKind::data || k == FrameKind::ack ||
             k == FrameKind::mac_command;
  }
  return false;
}

/// The management/control/data split used by the per-node metrics.
/// BLE advertising and 802.15.4 beacon/MAC-command frames count as
/// management; BLE data-control and 802.15.4 acks count as control.
enum class KindClass { management, control, data };

inline KindClass kind_class(FrameKind k) {
  switch (k) {
    case FrameKind::management:
    case FrameKind::advertising:
    case FrameKind::beacon:
    case FrameKind::mac_command: return KindClass::management;
    case FrameKind::control:
    case FrameKind::data_control:
    case FrameKind::ack: return KindClass::control;
    case FrameKind::data: return KindClass::data;
  }
  return KindClass::data;
}

namespace wifi_subtype {
// Management
inline constexpr std::uint8_t assoc_req = 0, assoc_resp = 1, reassoc_req = 2, reassoc_resp = 3,
                              probe_req = 4, probe_resp = 5, beacon = 8, disassoc = 10, auth = 11,
                              deauth = 12, action = 13;
// Control
inline constexpr std::uint8_t ctrl_wrapper = 7, block_ack_req = 8, block_ack = 9, ps_poll = 10,
                              rts = 11, cts = 12, ack = 13, cf_end = 14, cf_end_ack = 15;
// Data
inline constexpr std::uint8_t data = 0, null = 4, qos_data = 8, qos_null = 12;
}  // namespace wifi_subtype

namespace ble_pdu {
inline constexpr std::uint8_t adv_ind = 0, adv_direct_ind = 1, adv_nonconn_ind = 2, scan_req = 3,
                              scan_rsp = 4, connect_req = 5, adv_scan_ind = 6, adv_ext_ind = 7;
// Data-channel LLID values
inline constexpr std::uint8_t llid_reserved = 0, llid_continuation = 1, llid_start = 2,
                              llid_control = 3;
}  // namespace ble_pdu

inline std::string_view subtype_name(Protocol p, FrameKind k, std::uint8_t code) {
  static constexpr std::array<std::string_view, 16> kMgmt = {
      "assoc_req", "assoc_resp", "reassoc_req", "reassoc_resp", "probe_req", "probe_resp",
      "timing_adv", "mgmt_reserved_7", "beacon", "atim", "disassoc", "auth",
      "deauth", "action", "action_no_ack", "mgmt_reserved_15"};
  static constexpr std::array<std::string_view, 16> kCtrl = {
      "ctrl_reserved_0", "ctrl_reserved_1", "trigger", "tack", "beamforming_report_poll",
      "vht_ndp_announcement", "ctrl_frame_extension", "ctrl_wrapper", "block_ack_req",
      "block_ack", "ps_poll", "rts", "cts", "ack", "cf_end", "cf_end_ack"};
  static constexpr std::array<std::string_view, 16> kData = {
      "data", "data_cf_ack", "data_cf_poll", "data_cf_ack_cf_poll", "null", "cf_ack", "cf_poll",
      "cf_ack_cf_poll", "qos_data", "qos_data_cf_ack", "qos_data_cf_poll",
      "qos_data_cf_ack_cf_poll", "qos_null", "data_reserved_13", "qos_cf_poll",
      "qos_cf_ack_cf_poll"};
  static constexpr std::array<std::string_view, 16> kAdv = {
      "adv_ind", "adv_direct_ind", "adv_nonconn_ind", "scan_req", "scan_rsp", "connect_req",
      "adv_scan_ind", "adv_ext_ind", "aux_connect_rsp", "adv_reserved_9", "adv_reserved_10",
      "adv_reserved_11", "adv_reserved_12", "adv_reserved_13", "adv_reserved_14",
      "adv_reserved_15"};
  static constexpr std::array<std::string_view, 4> kLlid = {"ll_reserved", "ll_data_continuation",
                                                            "ll_data_start", "ll_control"};
  code &= 0x0f;
  switch (p) {
    case Protocol::wifi:
      if (k == FrameKind::management) return kMgmt[code];
      if (k == FrameKind::control) return kCtrl[code];
      return kData[code];
    case Protocol::ble:
      if (k == FrameKind::advertising) return kAdv[code];
      return kLlid[code & 0x3];
    case Protocol::zigbee:
      return to_string(k);
  }
  return "unknown";
}

inline std::optional<std::uint8_t> parse_subtype(Protocol p, FrameKind k, std::string_view name) {
  const unsigned n = (p == Protocol::ble && k != FrameKind::advertising) ? 4u : 16u;
  if (p == Protocol::zigbee) {
    if (name != to_string(k)) return std::nullopt;
    switch (k) {
      case FrameKind::beacon: return 0;
      case FrameKind::data: return 1;
      case FrameKind::ack: return 2;
      case FrameKind::mac_command: return 3;
      default: return std::nullopt;
    }
  }
  for (unsigned c = 0; c < n; ++c) {
    if (subtype_name(p, k, static_cast<std::uint8_t>(c)) == name) return static_cast<std::uint8_t>(c);
  }
  return std::nullopt;
}

enum class BleAddrType { public_addr, random_addr };

inline std::string_view to_string(BleAddrType t) {
  return t == BleAddrType::public_addr ? "public" : "random";
}

/// Per-frame metadata supplied by the capture source.
struct CaptureMeta {
  std::int64_t timestamp_us = 0;
  std::optional<int> channel;
  std::optional<int> rssi_dbm;
  // Frame is followed by its FCS/CRC trailer (WiFi only; 802.15.4 and
  // BLE link-layer frames always carry it).
  bool has_fcs = false;

  bool operator==(const CaptureMeta&) const = default;
};

/// One captured frame exactly as received: protocol, metadata and the
/// link-layer bytes with any capture pseudo-header already removed.
struct RawFrame {
  Protocol protocol = Protocol::wifi;
  CaptureMeta meta;
  Bytes bytes;

  bool operator==(const RawFrame&) const = default;
};

/// LLData carried by a BLE CONNECT_REQ.
struct ConnectionParams {
  std::uint32_t access_address = 0;
  std::uint32_t crc_init = 0;
  std::uint8_t win_size = 0;
  std::uint16_t win_offset = 0;
  std::uint16_t interval = 0;
  std::uint16_t latency = 0;
  std::uint16_t timeout = 0;
  std::uint64_t channel_map = 0;  // 37 bits, bit i = data channel i
  std::uint8_t hop_increment = 0;
  std::uint8_t sca = 0;

  int used_channel_count() const { return __builtin_popcountll(channel_map & ((1ull << 37) - 1)); }

  bool operator==(const ConnectionParams&) const = default;
};

struct FrameRecord {
  Protocol protocol = Protocol::wifi;
  std::int64_t timestamp_us = 0;
  std::optional<int> channel;
  std::optional<int> rssi_dbm;
  std::uint32_t length_bytes = 0;
  FrameKind kind = FrameKind::data;
  std::uint8_t subtype = 0;
  std::optional<Address> src;
  std::optional<Address> dst;
  std::optional<std::string> ssid;
  std::optional<BleAddrType> ble_addr_type;
  std::optional<std::string> ble_local_name;
  std::optional<std::uint32_t> ble_access_address;
  std::optional<ConnectionParams> connection;
  std::optional<std::uint16_t> pan_id;

  std::string_view subtype_name() const { return nbscan::subtype_name(protocol, kind, subtype); }

  bool operator==(const FrameRecord&) const = default;
};

inline constexpr std::string_view kHiddenSsid = "<hidden>";

enum class ParseErrc {
  truncated_frame,
  unknown_type,
  malformed_element,
  bad_length,
  reserved_frame_type,
  reserved_address_mode,
};

inline std::string_view to_string(ParseErrc e) {
  switch (e) {
    case ParseErrc::truncated_frame: return "TruncatedFrame";
    case ParseErrc::unknown_type: return "UnknownType";
    case ParseErrc::malformed_element: return "MalformedElement";
    case ParseErrc::bad_length: return "BadLength";
    case ParseErrc::reserved_frame_type: return "ReservedFrameType";
    case ParseErrc::reserved_address_mode: return "ReservedAddressMode";
  }
  return "ParseError";
}

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ParseErrc code() const noexcept { return code_; }

 private:
  ParseErrc code_;
};

}  // namespace nbscan
