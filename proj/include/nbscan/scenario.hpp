#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nbscan/ble.hpp"
#include "nbscan/frame.hpp"
#include "nbscan/replay.hpp"
#include "nbscan/wifi.hpp"
#include "nbscan/zigbee.hpp"

namespace nbscan {

class InvalidSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class RoleProfile {
  camera_streaming,
  camera_idle,
  audio_streamer,
  browser_station,
  access_point,
  gateway,
  ble_lock,
  ble_tracker,
  zigbee_bridge,
  zigbee_bulb,
};

inline constexpr RoleProfile kAllRoles[] = {
    RoleProfile::camera_streaming, RoleProfile::camera_idle,   RoleProfile::audio_streamer,
    RoleProfile::browser_station,  RoleProfile::access_point,  RoleProfile::gateway,
    RoleProfile::ble_lock,         RoleProfile::ble_tracker,   RoleProfile::zigbee_bridge,
    RoleProfile::zigbee_bulb};

inline std::string_view to_string(RoleProfile r) {
  switch (r) {
    case RoleProfile::camera_streaming: return "camera_streaming";
    case RoleProfile::camera_idle: return "camera_idle";
    case RoleProfile::audio_streamer: return "audio_streamer";
    case RoleProfile::browser_station: return "browser_station";
    case RoleProfile::access_point: return "access_point";
    case RoleProfile::gateway: return "gateway";
    case RoleProfile::ble_lock: return "ble_lock";
    case RoleProfile::ble_tracker: return "ble_tracker";
    case RoleProfile::zigbee_bridge: return "zigbee_bridge";
    case RoleProfile::zigbee_bulb: return "zigbee_bulb";
  }
  return "unknown";
}

inline std::optional<RoleProfile> parse_role(std::string_view s) {
  for (auto r : kAllRoles)
    if (to_string(r) == s) return r;
  return std::nullopt;
}

inline Protocol protocol_of(RoleProfile r) {
  switch (r) {
    case RoleProfile::ble_lock:
    case RoleProfile::ble_tracker: return Protocol::ble;
    case RoleProfile::zigbee_bridge:
    case RoleProfile::zigbee_bulb: return Protocol::zigbee;
    default: return Protocol::wifi;
  }
}

/// Mean traffic targets for a device; sizes are whole-frame bytes, rates
/// are frames per second. "up" is sent by the device, "down" received.
struct TrafficProfile {
  double up_size = 0;
  double up_rate = 0;
  double down_size = 0;
  double down_rate = 0;
  double ps_poll_rate = 0;
  bool rts = false;
  int sessions = 0;

  bool operator==(const TrafficProfile&) const = default;
};

inline TrafficProfile default_profile(RoleProfile r) {
  TrafficProfile p;
  switch (r) {
    case RoleProfile::camera_streaming: p = {1400, 60, 400, 15}; break;
    case RoleProfile::camera_idle: p = {100, 1, 90, 1, 10.5, true}; break;
    case RoleProfile::audio_streamer: p = {120, 10, 1400, 40}; break;
    case RoleProfile::browser_station: p = {200, 15, 500, 3}; break;
    case RoleProfile::ble_lock: p = {24, 0, 24, 0}; p.sessions = 3; break;
    case RoleProfile::ble_tracker: p = {60, 0, 40, 0}; p.sessions = 3; break;
    case RoleProfile::zigbee_bridge: p = {40, 0.2, 0, 0}; break;
    case RoleProfile::zigbee_bulb: p = {48, 0.2, 52, 0.1}; break;
    default: break;
  }
  return p;
}

struct DeviceSpec {
  std::string name;
  RoleProfile role = RoleProfile::browser_station;
  Protocol protocol = Protocol::wifi;
  int channel = 6;
  std::optional<std::string> address;
  std::string ap;       // WiFi stations and gateways: the AP they attach to
  std::string bridge;   // Zigbee bulbs: controlling bridge
  std::string ssid;     // access points
  std::optional<std::uint16_t> pan_id;
  std::string local_name;
  TrafficProfile traffic;

  bool operator==(const DeviceSpec&) const = default;
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  std::int64_t duration_s = 60;
  std::int64_t start_us = 1700000000000000;
  std::vector<DeviceSpec> devices;

  bool operator==(const ScenarioSpec&) const = default;
};

struct ExpectedBleConnection {
  std::uint32_t access_address = 0;
  std::set<std::string> participants;
  bool connect_req = false;
  std::set<int> channels;
};

struct GroundTruth {
  std::map<std::string, std::string> roles;  // address -> role name
  std::map<std::string, std::string> names;  // address -> device name
  std::set<std::pair<std::string, std::string>> links;
  std::vector<ExpectedBleConnection> ble_connections;

  std::set<std::string> addresses_with_role(std::string_view role) const {
    std::set<std::string> out;
    for (const auto& [a, r] : roles)
      if (r == role) out.insert(a);
    return out;
  }
};

struct GeneratedFrame {
  RawFrame raw;
  FrameRecord expected;
};

struct ScenarioOutput {
  std::vector<GeneratedFrame> frames;
  GroundTruth truth;
};

namespace scenario_detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// mt19937_64 output is fully specified by the standard; the conversions
// below avoid the implementation-defined <random> distributions so
// streams are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : g_(seed) {}
  std::uint64_t bits() { return g_(); }
  double uniform() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }
  double jitter(double mean) { return mean * (0.8 + 0.4 * uniform()); }
  std::uint64_t below(std::uint64_t n) { return n ? g_() % n : 0; }

 private:
  std::mt19937_64 g_;
};

inline MacAddress random_mac(Rng& rng, std::uint8_t first_mask, std::uint8_t first_set) {
  MacAddress m;
  const std::uint64_t b = rng.bits();
  for (std::size_t i = 0; i < 6; ++i) m.octets[i] = static_cast<std::uint8_t>(b >> (8 * i));
  m.octets[0] = static_cast<std::uint8_t>((m.octets[0] & first_mask) | first_set);
  return m;
}

inline bool valid_wifi_channel(int ch) { return (ch >= 1 && ch <= 14) || (ch >= 32 && ch <= 177); }

// Links land in the ground-truth table as ordered (min, max) pairs.
inline std::pair<std::string, std::string> link_key(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return {a, b};
}

class Generator {
 public:
  explicit Generator(const ScenarioSpec& spec) : spec_(spec), duration_us_(spec.duration_s * 1000000) {}

  ScenarioOutput run() {
    validate();
    assign_addresses();
    for (const auto& d : spec_.devices) {
      switch (d.role) {
        case RoleProfile::access_point: gen_access_point(d); break;
        case RoleProfile::gateway: break;  // driven by its AP's stations
        case RoleProfile::ble_lock: gen_ble_lock(d); break;
        case RoleProfile::ble_tracker: gen_ble_tracker(d); break;
        case RoleProfile::zigbee_bridge: gen_zigbee_bridge(d); break;
        case RoleProfile::zigbee_bulb: gen_zigbee_bulb(d); break;
        default: gen_wifi_station(d); break;
      }
    }
    std::stable_sort(out_.frames.begin(), out_.frames.end(), [](const auto& a, const auto& b) {
      return a.raw.meta.timestamp_us < b.raw.meta.timestamp_us;
    });
    finish_truth();
    return std::move(out_);
  }

 private:
  struct Node {
    const DeviceSpec* spec = nullptr;
    Address addr;
    MacAddress mac;    // WiFi/BLE
    int rssi = -60;
    std::uint16_t seq = 0;
  };

  void validate() const {
    if (spec_.duration_s < 0) throw InvalidSpec("duration_s must be non-negative");
    std::set<std::string> names;
    for (const auto& d : spec_.devices) {
      if (d.name.empty()) throw InvalidSpec("device without a name");
      if (!names.insert(d.name).second) throw InvalidSpec("duplicate device name " + d.name);
      if (d.protocol != protocol_of(d.role))
        throw InvalidSpec(d.name + ": role " + std::string(to_string(d.role)) + " is not a " +
                          std::string(to_string(d.protocol)) + " profile");
      const auto& t = d.traffic;
      if (t.up_size < 0 || t.up_rate < 0 || t.down_size < 0 || t.down_rate < 0 || t.ps_poll_rate < 0 ||
          t.sessions < 0)
        throw InvalidSpec(d.name + ": traffic parameters must be non-negative");
      if (d.protocol == Protocol::wifi && !valid_wifi_channel(d.channel))
        throw InvalidSpec(d.name + ": invalid WiFi channel " + std::to_string(d.channel));
      if (d.protocol == Protocol::zigbee && (d.channel < 11 || d.channel > 26))
        throw InvalidSpec(d.name + ": Zigbee channel must be 11..26");
    }
    for (const auto& d : spec_.devices) {
      if (d.protocol == Protocol::wifi && d.role != RoleProfile::access_point && !find_ap(d))
        throw InvalidSpec(d.name + ": no access point to attach to");
      if (d.role == RoleProfile::zigbee_bulb && !find_bridge(d))
        throw InvalidSpec(d.name + ": no zigbee bridge");
    }
  }

  const DeviceSpec* find_by_role(const std::string& name, RoleProfile role) const {
    for (const auto& d : spec_.devices)
      if (d.role == role && (name.empty() || d.name == name)) return &d;
    return nullptr;
  }
  const DeviceSpec* find_ap(const DeviceSpec& d) const { return find_by_role(d.ap, RoleProfile::access_point); }
  const DeviceSpec* find_bridge(const DeviceSpec& d) const {
    return find_by_role(d.bridge, RoleProfile::zigbee_bridge);
  }
  const DeviceSpec* gateway_of(const DeviceSpec& ap) const {
    for (const auto& d : spec_.devices)
      if (d.role == RoleProfile::gateway && find_ap(d) == &ap) return &d;
    return nullptr;
  }

  Rng device_rng(const DeviceSpec& d, std::string_view salt = {}) const {
    return Rng(spec_.seed ^ fnv1a(d.name) ^ (fnv1a(salt) * 31));
  }

  void assign_addresses() {
    std::set<std::string> seen;
    for (const auto& d : spec_.devices) {
      Rng rng = device_rng(d, "address");
      Node n;
      n.spec = &d;
      n.rssi = -35 - static_cast<int>(rng.below(45));
      if (d.protocol == Protocol::zigbee) {
        if (d.address) {
          auto a = parse_address(*d.address);
          if (!a || std::holds_alternative<MacAddress>(*a))
            throw InvalidSpec(d.name + ": bad zigbee address " + *d.address);
          n.addr = *a;
        } else if (d.role == RoleProfile::zigbee_bridge) {
          n.addr = ZigbeeShort{0x0000};
        } else {
          n.addr = ZigbeeShort{static_cast<std::uint16_t>(1 + rng.below(0xfff0))};
        }
      } else {
        if (d.address) {
          auto m = MacAddress::parse(*d.address);
          if (!m) throw InvalidSpec(d.name + ": bad address " + *d.address);
          n.mac = *m;
        } else {
          n.mac = random_mac(rng, 0xfc, 0x02);
        }
        if (d.protocol == Protocol::wifi && classify_address(n.mac) != AddressClass::unicast)
          throw InvalidSpec(d.name + ": address must be unicast");
        n.addr = n.mac;
      }
      if (!seen.insert(to_string(n.addr)).second) throw InvalidSpec(d.name + ": duplicate address");
      nodes_[d.name] = n;
    }
  }

  void emit(std::int64_t t_us, Protocol proto, int channel, int rssi, Bytes raw, FrameRecord rec) {
    if (t_us < 0 || t_us >= duration_us_) return;
    GeneratedFrame g;
    g.raw.protocol = proto;
    g.raw.meta.timestamp_us = spec_.start_us + t_us;
    g.raw.meta.channel = channel;
    g.raw.meta.rssi_dbm = rssi;
    rec.protocol = proto;
    rec.timestamp_us = g.raw.meta.timestamp_us;
    rec.channel = channel;
    rec.rssi_dbm = rssi;
    rec.length_bytes = static_cast<std::uint32_t>(raw.size());
    g.raw.bytes = std::move(raw);
    g.expected = std::move(rec);
    for (const auto& a : {g.expected.src, g.expected.dst})
      if (a) observed_.insert(to_string(*a));
    out_.frames.push_back(std::move(g));
  }

  static FrameRecord wifi_expect(FrameKind kind, std::uint8_t subtype, std::optional<Address> src,
                                 Address dst) {
    FrameRecord r;
    r.kind = kind;
    r.subtype = subtype;
    r.src = std::move(src);
    r.dst = std::move(dst);
    return r;
  }

  // Calls fn(t) for a jittered constant-rate process over the run.
  template <typename Fn>
  void periodic(Rng& rng, double rate, Fn&& fn) const {
    if (rate <= 0) return;
    const double mean_us = 1e6 / rate;
    double t = rng.uniform() * mean_us;
    while (t < static_cast<double>(duration_us_)) {
      fn(static_cast<std::int64_t>(t));
      t += rng.jitter(mean_us);
    }
  }

  static std::size_t frame_size(Rng& rng, double mean, std::size_t floor) {
    const auto s = static_cast<std::size_t>(rng.jitter(mean) + 0.5);
    return std::max(s, floor);
  }

  void gen_access_point(const DeviceSpec& d) {
    Node& ap = nodes_[d.name];
    Rng rng = device_rng(d, "beacon");
    const std::string ssid = d.ssid.empty() ? d.name : d.ssid;
    const std::int64_t interval = 102400;
    for (std::int64_t t = static_cast<std::int64_t>(rng.below(interval)); t < duration_us_; t += interval) {
      FrameRecord r = wifi_expect(FrameKind::management, wifi_subtype::beacon, ap.mac, MacAddress::broadcast());
      r.ssid = ssid;
      emit(t, Protocol::wifi, d.channel, ap.rssi,
           wifi_build::beacon(ap.mac, ssid, d.channel, ap.seq++, static_cast<std::uint64_t>(t)), std::move(r));
    }
  }

  void gen_wifi_station(const DeviceSpec& d) {
    Node& sta = nodes_[d.name];
    const DeviceSpec& ap_spec = *find_ap(d);
    Node& ap = nodes_[ap_spec.name];
    const DeviceSpec* gw_spec = gateway_of(ap_spec);
    Node* gw = gw_spec ? &nodes_[gw_spec->name] : nullptr;
    const int ch = ap_spec.channel;
    const TrafficProfile& tp = d.traffic;
    const std::string ssid = ap_spec.ssid.empty() ? ap_spec.name : ap_spec.ssid;
    constexpr std::uint8_t kToDs = 0x01, kFromDs = 0x02, kProtected = 0x40;
    const std::size_t floor = wifi_build::data_header_len(wifi_subtype::qos_data, kToDs) + 8;
    const MacAddress far_end = gw ? gw->mac : ap.mac;

    out_.truth.links.insert(link_key(to_string(sta.addr), to_string(ap.addr)));
    if (gw) out_.truth.links.insert(link_key(to_string(ap.addr), to_string(gw->addr)));

    Rng up_rng = device_rng(d, "up");
    periodic(up_rng, tp.up_rate, [&](std::int64_t t) {
      const std::size_t len = frame_size(up_rng, tp.up_size, floor);
      if (tp.rts) {
        emit(t, Protocol::wifi, ch, sta.rssi, wifi_build::control_with_ta(wifi_subtype::rts, ap.mac, sta.mac, 300),
             wifi_expect(FrameKind::control, wifi_subtype::rts, sta.mac, ap.mac));
        emit(t + 30, Protocol::wifi, ch, ap.rssi, wifi_build::cts(sta.mac, 250),
             wifi_expect(FrameKind::control, wifi_subtype::cts, std::nullopt, sta.mac));
      }
      const std::uint64_t fill = up_rng.bits();
      emit(t + 60, Protocol::wifi, ch, sta.rssi,
           wifi_build::data(wifi_subtype::qos_data, kToDs | kProtected, ap.mac, sta.mac, far_end, sta.seq++, len, fill),
           wifi_expect(FrameKind::data, wifi_subtype::qos_data, sta.mac, ap.mac));
      emit(t + 160, Protocol::wifi, ch, ap.rssi, wifi_build::ack(sta.mac),
           wifi_expect(FrameKind::control, wifi_subtype::ack, std::nullopt, sta.mac));
      if (gw) {
        emit(t + 260, Protocol::wifi, ch, ap.rssi,
             wifi_build::data(wifi_subtype::data, kFromDs, gw->mac, ap.mac, sta.mac, ap.seq++, len, fill),
             wifi_expect(FrameKind::data, wifi_subtype::data, ap.mac, gw->mac));
      }
    });

    Rng down_rng = device_rng(d, "down");
    periodic(down_rng, tp.down_rate, [&](std::int64_t t) {
      const std::size_t len = frame_size(down_rng, tp.down_size, floor);
      const std::uint64_t fill = down_rng.bits();
      if (gw) {
        emit(t, Protocol::wifi, ch, gw->rssi,
             wifi_build::data(wifi_subtype::data, kToDs, ap.mac, gw->mac, sta.mac, gw->seq++, len, fill),
             wifi_expect(FrameKind::data, wifi_subtype::data, gw->mac, ap.mac));
      }
      if (tp.rts) {
        emit(t + 40, Protocol::wifi, ch, ap.rssi, wifi_build::control_with_ta(wifi_subtype::rts, sta.mac, ap.mac, 300),
             wifi_expect(FrameKind::control, wifi_subtype::rts, ap.mac, sta.mac));
        emit(t + 70, Protocol::wifi, ch, sta.rssi, wifi_build::cts(ap.mac, 250),
             wifi_expect(FrameKind::control, wifi_subtype::cts, std::nullopt, ap.mac));
      }
      emit(t + 100, Protocol::wifi, ch, ap.rssi,
           wifi_build::data(wifi_subtype::qos_data, kFromDs | kProtected, sta.mac, ap.mac, far_end, ap.seq++, len, fill),
           wifi_expect(FrameKind::data, wifi_subtype::qos_data, ap.mac, sta.mac));
      emit(t + 200, Protocol::wifi, ch, sta.rssi, wifi_build::ack(ap.mac),
           wifi_expect(FrameKind::control, wifi_subtype::ack, std::nullopt, ap.mac));
    });

    Rng ps_rng = device_rng(d, "ps-poll");
    periodic(ps_rng, tp.ps_poll_rate, [&](std::int64_t t) {
      emit(t, Protocol::wifi, ch, sta.rssi,
           wifi_build::control_with_ta(wifi_subtype::ps_poll, ap.mac, sta.mac, 0xc001),
           wifi_expect(FrameKind::control, wifi_subtype::ps_poll, sta.mac, ap.mac));
      emit(t + 100, Protocol::wifi, ch, ap.rssi, wifi_build::ack(sta.mac),
           wifi_expect(FrameKind::control, wifi_subtype::ack, std::nullopt, sta.mac));
    });

    if (d.role == RoleProfile::browser_station) {
      Rng probe_rng = device_rng(d, "probe");
      periodic(probe_rng, 0.1, [&](std::int64_t t) {
        FrameRecord req = wifi_expect(FrameKind::management, wifi_subtype::probe_req, sta.mac, MacAddress::broadcast());
        req.ssid = ssid;
        emit(t, Protocol::wifi, ch, sta.rssi, wifi_build::probe_request(sta.mac, ssid, sta.seq++), std::move(req));
        FrameRecord rsp = wifi_expect(FrameKind::management, wifi_subtype::probe_resp, ap.mac, sta.mac);
        rsp.ssid = ssid;
        emit(t + 500, Protocol::wifi, ch, ap.rssi,
             wifi_build::probe_response(ap.mac, sta.mac, ssid, ch, ap.seq++, static_cast<std::uint64_t>(t)),
             std::move(rsp));
        emit(t + 600, Protocol::wifi, ch, sta.rssi, wifi_build::ack(ap.mac),
             wifi_expect(FrameKind::control, wifi_subtype::ack, std::nullopt, ap.mac));
      });
    }
  }

  static FrameRecord ble_adv_expect(std::uint8_t type, bool random, Address src, std::optional<Address> dst) {
    FrameRecord r;
    r.kind = FrameKind::advertising;
    r.subtype = type;
    r.ble_addr_type = random ? BleAddrType::random_addr : BleAddrType::public_addr;
    r.src = std::move(src);
    r.dst = std::move(dst);
    return r;
  }

  static FrameRecord ble_data_expect(std::uint32_t aa, std::uint8_t llid) {
    FrameRecord r;
    r.kind = llid == ble_pdu::llid_control ? FrameKind::data_control : FrameKind::data;
    r.subtype = llid;
    r.ble_access_address = aa;
    return r;
  }

  // One central/peripheral connection: a stream of connection events on
  // hopped data channels, opened and closed with LL control PDUs.
  void gen_ble_connection(Rng& rng, std::int64_t start, std::int64_t length, const ConnectionParams& cp,
                          int central_rssi, int peripheral_rssi, double data_rate, const TrafficProfile& tp,
                          ExpectedBleConnection& truth) {
    BleChannelHopper hopper(cp.channel_map, cp.hop_increment);
    const std::int64_t interval_us = static_cast<std::int64_t>(cp.interval) * 1250;
    const std::int64_t events = std::max<std::int64_t>(1, length / interval_us);
    const double data_p = std::min(1.0, data_rate * static_cast<double>(interval_us) / 1e6);
    bool sn_m = false, sn_s = false;
    for (std::int64_t e = 0; e < events; ++e) {
      const std::int64_t t = start + e * interval_us;
      const int ch = hopper.next();
      std::uint8_t llid_m = ble_pdu::llid_continuation, llid_s = ble_pdu::llid_continuation;
      Bytes pm, ps;
      if (e == 0) {
        llid_m = ble_pdu::llid_control;
        pm = {0x0c, 0x09, 0x0f, 0x00, 0x0d, 0x41};  // LL_VERSION_IND
        llid_s = ble_pdu::llid_control;
        ps = {0x0c, 0x09, 0x0f, 0x00, 0x5f, 0x00};
      } else if (e == 1) {
        llid_m = ble_pdu::llid_control;
        pm = {0x08, 0xff, 0x00, 0, 0, 0, 0, 0, 0};  // LL_FEATURE_REQ
        llid_s = ble_pdu::llid_control;
        ps = {0x09, 0x01, 0x00, 0, 0, 0, 0, 0, 0};
      } else if (e + 1 == events) {
        llid_m = ble_pdu::llid_control;
        pm = {0x02, 0x13};  // LL_TERMINATE_IND
      } else if (rng.uniform() < data_p) {
        llid_m = ble_pdu::llid_start;
        pm.assign(std::min<std::size_t>(251, frame_size(rng, tp.down_size, 4) ), 0);
        llid_s = ble_pdu::llid_start;
        ps.assign(std::min<std::size_t>(251, frame_size(rng, tp.up_size, 4)), 0);
        for (auto& b : pm) b = static_cast<std::uint8_t>(rng.bits());
        for (auto& b : ps) b = static_cast<std::uint8_t>(rng.bits());
      }
      emit(t, Protocol::ble, ch, central_rssi,
           ble_build::data_pdu(cp.access_address, cp.crc_init, llid_m, sn_s, sn_m, pm),
           ble_data_expect(cp.access_address, llid_m));
      emit(t + 150 + static_cast<std::int64_t>(pm.size()) * 8, Protocol::ble, ch, peripheral_rssi,
           ble_build::data_pdu(cp.access_address, cp.crc_init, llid_s, !sn_m, sn_s, ps),
           ble_data_expect(cp.access_address, llid_s));
      sn_m = !sn_m;
      sn_s = !sn_s;
      if (t < duration_us_) truth.channels.insert(ch);
    }
  }

  static std::uint64_t pick_channel_map(Rng& rng, int count) {
    std::uint64_t map = 0;
    while (__builtin_popcountll(map) < count) map |= 1ull << rng.below(kBleDataChannels);
    return map;
  }

  void gen_ble_lock(const DeviceSpec& d) {
    Node& lock = nodes_[d.name];
    Rng rng = device_rng(d, "lock");
    const MacAddress phone = random_mac(rng, 0xff, 0xc0);  // random static
    peers_[to_string(Address{phone})] = {d.name + "-central", "ble_central"};
    const std::string name = d.local_name.empty() ? d.name : d.local_name;
    const int sessions = std::max(1, d.traffic.sessions);
    const std::int64_t period = duration_us_ / sessions;
    const int phone_rssi = lock.rssi + 6;
    for (int s = 0; s < sessions && period > 0; ++s) {
      const std::int64_t t0 = s * period;
      const std::int64_t adv_phase = std::min<std::int64_t>(2000000, period / 4);
      for (std::int64_t t = t0; t < t0 + adv_phase; t += 100000) {
        for (int k = 0; k < 3; ++k)
          emit(t + k * 400, Protocol::ble, 37 + k, lock.rssi, ble_build::adv_ind(lock.mac, false, name),
               [&] {
                 auto r = ble_adv_expect(ble_pdu::adv_ind, false, lock.mac, std::nullopt);
                 r.ble_local_name = name;
                 return r;
               }());
      }
      const std::int64_t ts = t0 + adv_phase / 2 + 1500;
      emit(ts, Protocol::ble, 37, phone_rssi, ble_build::scan_req(phone, true, lock.mac, false),
           ble_adv_expect(ble_pdu::scan_req, true, phone, lock.mac));
      {
        auto r = ble_adv_expect(ble_pdu::scan_rsp, false, lock.mac, std::nullopt);
        r.ble_local_name = name;
        emit(ts + 150, Protocol::ble, 37, lock.rssi, ble_build::scan_rsp(lock.mac, false, name), std::move(r));
      }
      ConnectionParams cp;
      cp.access_address = static_cast<std::uint32_t>(rng.bits());
      cp.crc_init = static_cast<std::uint32_t>(rng.bits()) & 0xffffff;
      cp.win_size = 2;
      cp.win_offset = 0;
      cp.interval = 24;
      cp.latency = 0;
      cp.timeout = 72;
      cp.channel_map = pick_channel_map(rng, 4);
      cp.hop_increment = static_cast<std::uint8_t>(5 + rng.below(12));
      cp.sca = 0;
      const std::int64_t tc = t0 + adv_phase + 1700;
      {
        auto r = ble_adv_expect(ble_pdu::connect_req, true, phone, lock.mac);
        r.connection = cp;
        emit(tc, Protocol::ble, 37, phone_rssi, ble_build::connect_req(phone, true, lock.mac, false, cp), std::move(r));
      }
      ExpectedBleConnection truth;
      truth.access_address = cp.access_address;
      truth.participants = {to_string(Address{phone}), to_string(lock.addr)};
      truth.connect_req = tc < duration_us_;
      const std::int64_t conn_len = std::min<std::int64_t>(10000000, period - adv_phase - 10000);
      // Lock/unlock commands: a handful per session.
      gen_ble_connection(rng, tc + 1250 * (cp.win_offset + 1), conn_len, cp, phone_rssi, lock.rssi, 0.4,
                         d.traffic, truth);
      if (truth.connect_req) out_.truth.ble_connections.push_back(std::move(truth));
    }
    out_.truth.links.insert(link_key(to_string(Address{phone}), to_string(lock.addr)));
  }

  void gen_ble_tracker(const DeviceSpec& d) {
    Node& tracker = nodes_[d.name];
    Rng rng = device_rng(d, "tracker");
    ConnectionParams cp;
    cp.access_address = static_cast<std::uint32_t>(rng.bits());
    cp.crc_init = static_cast<std::uint32_t>(rng.bits()) & 0xffffff;
    cp.interval = 12;
    cp.channel_map = (1ull << kBleDataChannels) - 1;
    cp.hop_increment = static_cast<std::uint8_t>(5 + rng.below(12));
    const int sessions = std::max(1, d.traffic.sessions);
    const std::int64_t period = duration_us_ / sessions;
    ExpectedBleConnection truth;
    truth.access_address = cp.access_address;
    for (int s = 0; s < sessions && period > 0; ++s) {
      // Sync sessions on an already-established link: no CONNECT_REQ is
      // ever on air, the sniffer only sees the data channels.
      gen_ble_connection(rng, s * period + 5000, period * 3 / 4, cp, tracker.rssi + 4, tracker.rssi, 20.0,
                         d.traffic, truth);
    }
    if (!truth.channels.empty()) out_.truth.ble_connections.push_back(std::move(truth));
  }

  void gen_zigbee_bridge(const DeviceSpec& d) {
    Node& br = nodes_[d.name];
    Rng rng = device_rng(d, "bridge");
    const std::uint16_t pan = pan_of(d);
    const Address bcast = ZigbeeShort{0xffff};
    periodic(rng, d.traffic.up_rate, [&](std::int64_t t) {
      zigbee_build::Header h;
      h.seq = static_cast<std::uint8_t>(br.seq++);
      h.dst_pan = pan;
      h.dst = bcast;
      h.src = br.addr;
      Bytes payload(static_cast<std::size_t>(std::max(4.0, rng.jitter(d.traffic.up_size) - 11)), 0x08);
      FrameRecord r;
      r.kind = FrameKind::data;
      r.subtype = 1;
      r.src = br.addr;
      r.dst = bcast;
      r.pan_id = pan;
      emit(t, Protocol::zigbee, d.channel, br.rssi, zigbee_build::frame(h, payload), std::move(r));
    });
  }

  std::uint16_t pan_of(const DeviceSpec& bridge) const {
    if (bridge.pan_id) return *bridge.pan_id;
    return static_cast<std::uint16_t>(fnv1a(bridge.name) ^ spec_.seed);
  }

  void zigbee_unicast(std::int64_t t, int ch, Node& from, Node& to, std::uint16_t pan, std::size_t len, Rng& rng) {
    zigbee_build::Header h;
    h.ack_request = true;
    h.seq = static_cast<std::uint8_t>(from.seq++);
    h.dst_pan = pan;
    h.dst = to.addr;
    h.src = from.addr;
    const std::size_t payload_len = len > 11 ? len - 11 : 1;
    Bytes payload(payload_len);
    for (auto& b : payload) b = static_cast<std::uint8_t>(rng.bits());
    FrameRecord r;
    r.kind = FrameKind::data;
    r.subtype = 1;
    r.src = from.addr;
    r.dst = to.addr;
    r.pan_id = pan;
    emit(t, Protocol::zigbee, ch, from.rssi, zigbee_build::frame(h, payload), std::move(r));
    FrameRecord a;
    a.kind = FrameKind::ack;
    a.subtype = 2;
    emit(t + 900, Protocol::zigbee, ch, to.rssi, zigbee_build::ack(h.seq), std::move(a));
  }

  void gen_zigbee_bulb(const DeviceSpec& d) {
    Node& bulb = nodes_[d.name];
    const DeviceSpec& br_spec = *find_bridge(d);
    Node& br = nodes_[br_spec.name];
    const std::uint16_t pan = pan_of(br_spec);
    const int ch = br_spec.channel;
    out_.truth.links.insert(link_key(to_string(bulb.addr), to_string(br.addr)));
    Rng cmd_rng = device_rng(d, "commands");
    periodic(cmd_rng, d.traffic.down_rate, [&](std::int64_t t) {
      zigbee_unicast(t, ch, br, bulb, pan, frame_size(cmd_rng, d.traffic.down_size, 12), cmd_rng);
    });
    Rng rep_rng = device_rng(d, "reports");
    periodic(rep_rng, d.traffic.up_rate, [&](std::int64_t t) {
      zigbee_unicast(t, ch, bulb, br, pan, frame_size(rep_rng, d.traffic.up_size, 12), rep_rng);
    });
  }

  void finish_truth() {
    for (const auto& [name, n] : nodes_) {
      const std::string a = to_string(n.addr);
      if (!observed_.count(a)) continue;
      out_.truth.roles[a] = std::string(to_string(n.spec->role));
      out_.truth.names[a] = name;
    }
    for (const auto& [a, peer] : peers_) {
      if (!observed_.count(a)) continue;
      out_.truth.names[a] = peer.first;
      out_.truth.roles[a] = peer.second;
    }
    // Drop expected links whose endpoints never appeared (e.g. zero rates).
    std::erase_if(out_.truth.links, [&](const auto& l) {
      return !observed_.count(l.first) || !observed_.count(l.second) || !linked(l);
    });
  }

  bool linked(const std::pair<std::string, std::string>& l) const {
    for (const auto& f : out_.frames) {
      if (!f.expected.src || !f.expected.dst) continue;
      const auto k = link_key(to_string(*f.expected.src), to_string(*f.expected.dst));
      if (k == l) return true;
    }
    return false;
  }

  const ScenarioSpec& spec_;
  std::int64_t duration_us_;
  std::map<std::string, Node> nodes_;
  std::map<std::string, std::pair<std::string, std::string>> peers_;
  std::set<std::string> observed_;
  ScenarioOutput out_;
};

}  // namespace scenario_detail

/// Deterministic synthetic capture: the same spec and seed always yield
/// a byte-identical frame stream, plus the ground-truth tables.
inline ScenarioOutput generate_scenario(const ScenarioSpec& spec) {
  return scenario_detail::Generator(spec).run();
}

class ScenarioSource : public FrameSource {
 public:
  explicit ScenarioSource(ScenarioOutput out) : out_(std::move(out)) {}

  std::optional<RawFrame> next() override {
    if (pos_ >= out_.frames.size()) return std::nullopt;
    return out_.frames[pos_++].raw;
  }

  const GroundTruth& truth() const { return out_.truth; }

 private:
  ScenarioOutput out_;
  std::size_t pos_ = 0;
};

}  // namespace nbscan
