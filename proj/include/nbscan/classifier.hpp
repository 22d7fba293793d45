#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "nbscan/ble.hpp"
#include "nbscan/frame.hpp"
#include "nbscan/metrics.hpp"
#include "nbscan/rational.hpp"
#include "nbscan/scan_config.hpp"

namespace nbscan {

struct CameraBand {
  Rational r_sr_min{4};
  Rational r_sr_max{20};
  Rational r_bf_min{500};
  Rational r_bf_max{1500};

  void validate() const {
    if (r_sr_max < r_sr_min || r_bf_max < r_bf_min) throw InvalidConfig("camera band min exceeds max");
    if (r_sr_min < Rational(0) || r_bf_min < Rational(0)) throw InvalidConfig("camera band must be non-negative");
  }
  bool operator==(const CameraBand&) const = default;
};

inline json to_json(const CameraBand& b) {
  const auto d = [](const Rational& r) { return json::parse(r.to_decimal(4)); };
  return json{{"r_sr_min", d(b.r_sr_min)}, {"r_sr_max", d(b.r_sr_max)}, {"r_bf_min", d(b.r_bf_min)},
              {"r_bf_max", d(b.r_bf_max)}};
}

/// Accepts numbers or decimal/fraction strings; missing keys keep `base`.
inline CameraBand camera_band_from_json(const json& j, CameraBand base = {}) {
  if (!j.is_object()) throw InvalidConfig("camera band must be an object");
  const auto field = [&](const char* key, Rational& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    std::optional<Rational> r;
    if (it->is_string()) r = Rational::parse(it->get<std::string>());
    else if (it->is_number_integer()) r = Rational(it->get<std::int64_t>());
    // Floats come through their shortest decimal form so 4.1 stays 41/10.
    else if (it->is_number()) r = Rational::parse(it->dump());
    if (!r) throw InvalidConfig(std::string("bad value for ") + key);
    out = *r;
  };
  field("r_sr_min", base.r_sr_min);
  field("r_sr_max", base.r_sr_max);
  field("r_bf_min", base.r_bf_min);
  field("r_bf_max", base.r_bf_max);
  base.validate();
  return base;
}

enum class CameraLabel { camera, others };

inline std::string_view to_string(CameraLabel l) { return l == CameraLabel::camera ? "camera" : "others"; }

inline CameraLabel classify_camera(const Ratio& r_sr, const Ratio& r_bf, const CameraBand& band = {}) {
  if (!r_sr.is_finite() || !r_bf.is_finite()) return CameraLabel::others;
  const Rational& sr = r_sr.value();
  const Rational& bf = r_bf.value();
  const bool in = band.r_sr_min <= sr && sr <= band.r_sr_max && band.r_bf_min <= bf && bf <= band.r_bf_max;
  return in ? CameraLabel::camera : CameraLabel::others;
}

/// Address -> SSIDs it advertised. Only beacon and probe-response senders
/// qualify; probe requests come from clients.
template <typename Range>
std::map<std::string, std::set<std::string>> detect_access_points(const Range& records) {
  std::map<std::string, std::set<std::string>> aps;
  for (const FrameInfo& f : records) {
    if (f.protocol != Protocol::wifi || f.kind != FrameKind::management || !f.src) continue;
    if (f.subtype != "beacon" && f.subtype != "probe_resp") continue;
    auto& ssids = aps[*f.src];
    if (f.ssid) ssids.insert(*f.ssid);
  }
  return aps;
}

/// A non-AP WiFi node with no management or control frames, data volume
/// at or above the median and a link to an AP; the largest such node wins.
inline std::optional<std::string> detect_gateway(const StatsMap& stats, const std::set<std::string>& aps,
                                                 const std::map<LinkKey, LinkStats>& links) {
  if (stats.empty()) return std::nullopt;
  std::vector<std::int64_t> volumes;
  volumes.reserve(stats.size());
  for (const auto& [_, s] : stats) volumes.push_back(s.d_bytes);
  std::sort(volumes.begin(), volumes.end());
  const std::size_t n = volumes.size();
  // Twice the median, to stay in integers for even counts.
  const std::int64_t median2 = n % 2 ? 2 * volumes[n / 2] : volumes[n / 2 - 1] + volumes[n / 2];

  std::optional<std::string> best;
  std::int64_t best_volume = -1;
  for (const auto& [addr, s] : stats) {
    if (s.protocol != Protocol::wifi || aps.count(addr)) continue;
    if (s.m_frames != 0 || s.c_frames != 0 || 2 * s.d_bytes < median2) continue;
    bool ap_link = false;
    for (const auto& ap : aps)
      if (links.count(make_link_key(addr, ap))) {
        ap_link = true;
        break;
      }
    if (!ap_link) continue;
    if (s.d_bytes > best_volume || (s.d_bytes == best_volume && addr < *best)) {
      best = addr;
      best_volume = s.d_bytes;
    }
  }
  return best;
}

struct NodeClassification {
  std::string address;
  CameraLabel label = CameraLabel::others;
  std::set<std::string> roles;
  bool operator==(const NodeClassification&) const = default;
};

struct Classification {
  std::vector<NodeClassification> nodes;  // sorted by address
  std::map<std::string, std::set<std::string>> access_points;
  std::optional<std::string> gateway;
  CameraBand band;

  std::map<std::string, CameraLabel> labels() const {
    std::map<std::string, CameraLabel> out;
    for (const auto& n : nodes) out[n.address] = n.label;
    return out;
  }
  std::set<std::string> cameras() const {
    std::set<std::string> out;
    for (const auto& n : nodes)
      if (n.label == CameraLabel::camera) out.insert(n.address);
    return out;
  }
  bool operator==(const Classification&) const = default;
};

/// Camera labels apply to WiFi nodes; BLE and Zigbee nodes are always
/// "others" because the band was derived from WiFi cameras.
inline Classification classify(const Aggregator& agg, const CameraBand& band = {}) {
  Classification c;
  c.band = band;
  c.access_points = agg.advertisers();
  std::set<std::string> ap_set;
  for (const auto& [a, _] : c.access_points) ap_set.insert(a);
  c.gateway = detect_gateway(agg.stats(), ap_set, agg.links());
  for (const auto& [addr, s] : agg.stats()) {
    NodeClassification n;
    n.address = addr;
    if (s.protocol == Protocol::wifi) {
      n.label = classify_camera(s.r_sr(), s.r_bf(), band);
      if (ap_set.count(addr)) n.roles.insert(kRoleAccessPoint);
      else if (c.gateway == addr) n.roles.insert(kRoleGateway);
      else n.roles.insert(kRoleStation);
      if (n.label == CameraLabel::camera) n.roles.insert(kRoleCameraSuspect);
    }
    c.nodes.push_back(std::move(n));
  }
  return c;
}

inline void apply_roles(NetworkGraph& g, const Classification& c) {
  for (const auto& n : c.nodes)
    if (auto* node = g.find(n.address)) node->roles = n.roles;
}

inline json to_json(const Classification& c) {
  json labels = json::array();
  for (const auto& n : c.nodes) labels.push_back({{"address", n.address}, {"label", to_string(n.label)}, {"roles", n.roles}});
  json aps = json::array();
  for (const auto& [a, ssids] : c.access_points) aps.push_back({{"address", a}, {"ssids", ssids}});
  return json{{"labels", labels},
              {"access_points", aps},
              {"gateway", c.gateway ? json(*c.gateway) : json(nullptr)},
              {"band", to_json(c.band)}};
}

struct BleConnection {
  std::uint32_t access_address = 0;
  std::set<std::string> participants;
  std::optional<std::uint8_t> hop_increment;
  std::optional<std::uint64_t> channel_map;
  std::int64_t connect_requests = 0;
  std::int64_t data_frames = 0, data_bytes = 0;
  std::int64_t control_frames = 0, control_bytes = 0;
  std::set<int> channels_seen;

  bool operator==(const BleConnection&) const = default;
};

/// Groups data-channel traffic by access address. A CONNECT_REQ seen in
/// the window contributes participants and hopping parameters.
template <typename Range>
std::vector<BleConnection> track_ble_connections(const Range& records) {
  std::map<std::uint32_t, BleConnection> by_aa;
  const auto entry = [&](std::uint32_t aa) -> BleConnection& {
    auto& c = by_aa[aa];
    c.access_address = aa;
    return c;
  };
  for (const FrameRecord& r : records) {
    if (r.protocol != Protocol::ble) continue;
    if (r.kind == FrameKind::advertising) {
      if (r.subtype != ble_pdu::connect_req || !r.connection) continue;
      BleConnection& c = entry(r.connection->access_address);
      ++c.connect_requests;
      c.hop_increment = r.connection->hop_increment;
      c.channel_map = r.connection->channel_map;
      if (r.src) c.participants.insert(to_string(*r.src));
      if (r.dst) c.participants.insert(to_string(*r.dst));
      continue;
    }
    if (!r.ble_access_address) continue;
    BleConnection& c = entry(*r.ble_access_address);
    if (r.kind == FrameKind::data_control) {
      ++c.control_frames;
      c.control_bytes += r.length_bytes;
    } else {
      ++c.data_frames;
      c.data_bytes += r.length_bytes;
    }
    if (r.channel) c.channels_seen.insert(*r.channel);
  }
  std::vector<BleConnection> out;
  out.reserve(by_aa.size());
  for (auto& [_, c] : by_aa) out.push_back(std::move(c));
  return out;
}

inline json to_json(const BleConnection& c) {
  json j{{"access_address", hex_string(c.access_address, 8)},
         {"participants", c.participants},
         {"connect_requests", c.connect_requests},
         {"data_frames", c.data_frames},
         {"data_bytes", c.data_bytes},
         {"control_frames", c.control_frames},
         {"control_bytes", c.control_bytes},
         {"channels_seen", c.channels_seen}};
  j["hop_increment"] = c.hop_increment ? json(*c.hop_increment) : json(nullptr);
  j["channel_map"] = c.channel_map ? json(hex_string(*c.channel_map, 10)) : json(nullptr);
  return j;
}

struct ConfusionMatrix {
  std::int64_t tp = 0, fn = 0, fp = 0, tn = 0;

  std::int64_t total() const { return tp + fn + fp + tn; }
  Ratio far() const { return Ratio::of(fp, fp + tn); }
  Ratio frr() const { return Ratio::of(fn, tp + fn); }
  bool operator==(const ConfusionMatrix&) const = default;
};

inline json to_json(const ConfusionMatrix& m) {
  const auto pct = [](const Ratio& r) { return r.is_finite() ? json(r.to_percent()) : json(r.to_string()); };
  return json{{"tp", m.tp}, {"fn", m.fn}, {"fp", m.fp}, {"tn", m.tn}, {"far", pct(m.far())}, {"frr", pct(m.frr())}};
}

class KeyMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline ConfusionMatrix evaluate(const std::map<std::string, CameraLabel>& predictions,
                                const std::map<std::string, CameraLabel>& truth) {
  if (predictions.size() != truth.size()) throw KeyMismatch("prediction and truth key sets differ in size");
  ConfusionMatrix m;
  auto t = truth.begin();
  for (const auto& [addr, pred] : predictions) {
    if (t->first != addr) throw KeyMismatch("no ground truth for " + addr);
    const bool actual = t->second == CameraLabel::camera;
    const bool predicted = pred == CameraLabel::camera;
    if (actual && predicted) ++m.tp;
    else if (actual) ++m.fn;
    else if (predicted) ++m.fp;
    else ++m.tn;
    ++t;
  }
  return m;
}

/// Band = mean ± one sample standard deviation of each ratio over the
/// labeled camera samples, lower bounds clamped at zero.
inline CameraBand calibrate_band(const std::vector<RatioPair>& cameras) {
  std::vector<double> sr, bf;
  for (const auto& c : cameras)
    if (c.r_sr.is_finite() && c.r_bf.is_finite()) {
      sr.push_back(c.r_sr.value().to_double());
      bf.push_back(c.r_bf.value().to_double());
    }
  if (sr.size() < 2) throw InvalidConfig("calibration needs at least two finite camera samples");
  const auto band = [](const std::vector<double>& v) {
    double mean = 0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
    const auto r = [](double x) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.4f", std::max(0.0, x));
      return *Rational::parse(buf);
    };
    return std::pair{r(mean - sd), r(mean + sd)};
  };
  CameraBand b;
  std::tie(b.r_sr_min, b.r_sr_max) = band(sr);
  std::tie(b.r_bf_min, b.r_bf_max) = band(bf);
  return b;
}

}  // namespace nbscan
