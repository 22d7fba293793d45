#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nbscan/address.hpp"
#include "nbscan/bytes.hpp"
#include "nbscan/frame.hpp"

namespace nbscan {

using json = nlohmann::json;

/// Flat, wire-serializable projection of a FrameRecord.
struct FrameInfo {
  Protocol protocol = Protocol::wifi;
  std::int64_t timestamp_us = 0;
  std::optional<int> channel;
  std::optional<int> rssi_dbm;
  std::uint32_t length_bytes = 0;
  FrameKind kind = FrameKind::data;
  std::string subtype;
  std::optional<std::string> src;
  std::optional<std::string> dst;
  std::optional<std::string> ssid;
  std::optional<std::string> ble_addr_type;
  std::optional<std::string> ble_local_name;
  std::optional<std::string> ble_access_address;
  std::optional<std::string> pan_id;

  bool operator==(const FrameInfo&) const = default;
};

/// Projection of the extraction fields. For a CONNECT_REQ the access
/// address is the one the new connection will use.
inline FrameInfo extract(const FrameRecord& r) {
  FrameInfo f;
  f.protocol = r.protocol;
  f.timestamp_us = r.timestamp_us;
  f.channel = r.channel;
  f.rssi_dbm = r.rssi_dbm;
  f.length_bytes = r.length_bytes;
  f.kind = r.kind;
  f.subtype = std::string(r.subtype_name());
  if (r.src) f.src = to_string(*r.src);
  if (r.dst) f.dst = to_string(*r.dst);
  f.ssid = r.ssid;
  if (r.ble_addr_type) f.ble_addr_type = std::string(to_string(*r.ble_addr_type));
  f.ble_local_name = r.ble_local_name;
  if (r.ble_access_address) f.ble_access_address = hex_string(*r.ble_access_address, 8);
  else if (r.connection) f.ble_access_address = hex_string(r.connection->access_address, 8);
  if (r.pan_id) f.pan_id = hex_string(*r.pan_id, 4);
  return f;
}

inline json to_json(const FrameInfo& f) {
  json j = json::object();
  j["protocol"] = to_string(f.protocol);
  j["timestamp_us"] = f.timestamp_us;
  if (f.channel) j["channel"] = *f.channel;
  if (f.rssi_dbm) j["rssi_dbm"] = *f.rssi_dbm;
  j["length_bytes"] = f.length_bytes;
  j["kind"] = to_string(f.kind);
  j["subtype"] = f.subtype;
  const auto opt = [&](const char* k, const std::optional<std::string>& v) {
    if (v) j[k] = *v;
  };
  opt("src", f.src);
  opt("dst", f.dst);
  opt("ssid", f.ssid);
  opt("ble_addr_type", f.ble_addr_type);
  opt("ble_local_name", f.ble_local_name);
  opt("ble_access_address", f.ble_access_address);
  opt("pan_id", f.pan_id);
  return j;
}

class InvalidFrameInfo : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace frame_info_detail {

inline bool is_lower_hex(const std::string& s, std::size_t n) {
  if (s.size() != n) return false;
  for (char c : s)
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  return true;
}

inline std::optional<std::string> opt_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw InvalidFrameInfo(std::string(key) + " must be a string");
  return it->get<std::string>();
}

inline std::optional<std::int64_t> opt_int(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number_integer()) throw InvalidFrameInfo(std::string(key) + " must be an integer");
  return it->get<std::int64_t>();
}

inline void check_address(Protocol p, const std::optional<std::string>& a, const char* key) {
  if (!a) return;
  auto parsed = parse_address(*a);
  if (!parsed || to_string(*parsed) != *a)
    throw InvalidFrameInfo(std::string(key) + " is not a canonical address: " + *a);
  const bool mac = std::holds_alternative<MacAddress>(*parsed);
  if (mac != (p != Protocol::zigbee))
    throw InvalidFrameInfo(std::string(key) + " has the wrong address form for " + std::string(to_string(p)));
}

}  // namespace frame_info_detail

/// Strict decoding of one wire object; rejects unknown enumerations,
/// non-canonical addresses and protocol-gated fields on the wrong protocol.
inline FrameInfo frame_info_from_json(const json& j) {
  using namespace frame_info_detail;
  if (!j.is_object()) throw InvalidFrameInfo("record is not an object");
  FrameInfo f;
  const auto proto = opt_string(j, "protocol");
  if (!proto) throw InvalidFrameInfo("protocol is required");
  auto p = parse_protocol(*proto);
  if (!p) throw InvalidFrameInfo("unknown protocol " + *proto);
  f.protocol = *p;

  const auto ts = opt_int(j, "timestamp_us");
  if (!ts) throw InvalidFrameInfo("timestamp_us is required");
  f.timestamp_us = *ts;
  if (auto ch = opt_int(j, "channel")) {
    if (*ch < 0 || *ch > 1000) throw InvalidFrameInfo("channel out of range");
    f.channel = static_cast<int>(*ch);
  }
  if (auto r = opt_int(j, "rssi_dbm")) {
    if (*r < -255 || *r > 255) throw InvalidFrameInfo("rssi_dbm out of range");
    f.rssi_dbm = static_cast<int>(*r);
  }
  const auto len = opt_int(j, "length_bytes");
  if (!len || *len < 1 || *len > 0xffffff) throw InvalidFrameInfo("length_bytes must be a positive integer");
  f.length_bytes = static_cast<std::uint32_t>(*len);

  const auto kind = opt_string(j, "kind");
  if (!kind) throw InvalidFrameInfo("kind is required");
  auto k = parse_kind(*kind);
  if (!k || !kind_valid_for(f.protocol, *k)) throw InvalidFrameInfo("invalid kind " + *kind + " for " + *proto);
  f.kind = *k;
  const auto sub = opt_string(j, "subtype");
  if (!sub || !parse_subtype(f.protocol, f.kind, *sub)) throw InvalidFrameInfo("invalid subtype");
  f.subtype = *sub;

  f.src = opt_string(j, "src");
  f.dst = opt_string(j, "dst");
  check_address(f.protocol, f.src, "src");
  check_address(f.protocol, f.dst, "dst");
  f.ssid = opt_string(j, "ssid");
  f.ble_addr_type = opt_string(j, "ble_addr_type");
  f.ble_local_name = opt_string(j, "ble_local_name");
  f.ble_access_address = opt_string(j, "ble_access_address");
  f.pan_id = opt_string(j, "pan_id");

  if (f.ssid && (f.protocol != Protocol::wifi || f.ssid->size() > 32))
    throw InvalidFrameInfo("ssid is only valid on WiFi frames, at most 32 bytes");
  if (f.protocol != Protocol::ble && (f.ble_addr_type || f.ble_local_name || f.ble_access_address))
    throw InvalidFrameInfo("ble_* fields on a non-BLE frame");
  if (f.ble_addr_type && *f.ble_addr_type != "public" && *f.ble_addr_type != "random")
    throw InvalidFrameInfo("ble_addr_type must be public or random");
  if (f.ble_access_address && !is_lower_hex(*f.ble_access_address, 8))
    throw InvalidFrameInfo("ble_access_address must be 8 lowercase hex digits");
  if (f.pan_id && (f.protocol != Protocol::zigbee || !is_lower_hex(*f.pan_id, 4)))
    throw InvalidFrameInfo("pan_id must be 4 lowercase hex digits on a Zigbee frame");
  return f;
}

/// A FrameInfo as posted by an analyzer, with its optional idempotency key.
struct WireFrame {
  FrameInfo info;
  std::optional<std::string> source_id;
  std::optional<std::int64_t> sequence_number;

  bool operator==(const WireFrame&) const = default;
};

inline json to_json(const WireFrame& w) {
  json j = to_json(w.info);
  if (w.source_id) j["source_id"] = *w.source_id;
  if (w.sequence_number) j["sequence_number"] = *w.sequence_number;
  return j;
}

inline WireFrame wire_frame_from_json(const json& j) {
  WireFrame w;
  w.info = frame_info_from_json(j);
  w.source_id = frame_info_detail::opt_string(j, "source_id");
  w.sequence_number = frame_info_detail::opt_int(j, "sequence_number");
  if (w.source_id.has_value() != w.sequence_number.has_value())
    throw InvalidFrameInfo("source_id and sequence_number must be given together");
  return w;
}

}  // namespace nbscan
