#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nbscan/frame_info.hpp"
#include "nbscan/rational.hpp"

namespace nbscan {

/// Half-open [from, to) on timestamp_us; absent bounds are open.
struct TimeWindow {
  std::optional<std::int64_t> from;
  std::optional<std::int64_t> to;

  bool contains(std::int64_t ts) const { return (!from || ts >= *from) && (!to || ts < *to); }
  bool valid() const { return !from || !to || *from <= *to; }
  bool operator==(const TimeWindow&) const = default;
};

/// Unicast/multicast/broadcast for a rendered address. BLE device
/// addresses have no group bit; Zigbee's only group address is 0xffff.
inline AddressClass address_class(Protocol p, const std::string& addr) {
  switch (p) {
    case Protocol::ble: return AddressClass::unicast;
    case Protocol::zigbee: return addr == "0xffff" ? AddressClass::broadcast : AddressClass::unicast;
    case Protocol::wifi: {
      auto m = MacAddress::parse(addr);
      return m ? classify_address(*m) : AddressClass::unicast;
    }
  }
  return AddressClass::unicast;
}

struct NodeStats {
  std::string device;
  Protocol protocol = Protocol::wifi;
  std::int64_t frames = 0, m_frames = 0, c_frames = 0, d_frames = 0;
  std::int64_t bytes = 0, m_bytes = 0, c_bytes = 0, d_bytes = 0;
  std::int64_t sent_bytes = 0, recv_bytes = 0, sent_frames = 0, recv_frames = 0;
  std::set<int> channels_seen;

  /// Sent over received data bytes.
  Ratio r_sr() const { return Ratio::of(sent_bytes, recv_bytes); }
  /// Average frame size over every kind.
  Ratio r_bf() const { return Ratio::of(bytes, frames); }

  void merge(const NodeStats& o) {
    frames += o.frames;
    m_frames += o.m_frames;
    c_frames += o.c_frames;
    d_frames += o.d_frames;
    bytes += o.bytes;
    m_bytes += o.m_bytes;
    c_bytes += o.c_bytes;
    d_bytes += o.d_bytes;
    sent_bytes += o.sent_bytes;
    recv_bytes += o.recv_bytes;
    sent_frames += o.sent_frames;
    recv_frames += o.recv_frames;
    channels_seen.insert(o.channels_seen.begin(), o.channels_seen.end());
  }

  bool operator==(const NodeStats&) const = default;
};

using StatsMap = std::map<std::string, NodeStats>;

struct RatioPair {
  Ratio r_sr;
  Ratio r_bf;
};

inline RatioPair compute_ratios(const NodeStats& s) { return {s.r_sr(), s.r_bf()}; }

inline StatsMap merge(StatsMap a, const StatsMap& b) {
  for (const auto& [k, v] : b) {
    auto [it, inserted] = a.try_emplace(k, v);
    if (!inserted) it->second.merge(v);
  }
  return a;
}

struct LinkStats {
  std::int64_t frames = 0;
  std::int64_t bytes = 0;
  bool operator==(const LinkStats&) const = default;
};

using LinkKey = std::pair<std::string, std::string>;  // first < second

inline LinkKey make_link_key(const std::string& a, const std::string& b) {
  return a < b ? LinkKey{a, b} : LinkKey{b, a};
}

/// Streaming accumulator; memory grows with the number of distinct
/// devices and links, not with the number of frames.
class Aggregator {
 public:
  explicit Aggregator(TimeWindow window = {}) : window_(window) {}

  void add(const FrameInfo& f) {
    if (!window_.contains(f.timestamp_us)) return;
    const bool src_ok = f.src && address_class(f.protocol, *f.src) == AddressClass::unicast;
    const bool dst_ok = f.dst && address_class(f.protocol, *f.dst) == AddressClass::unicast;
    const bool is_data = kind_class(f.kind) == KindClass::data;
    if (src_ok) {
      NodeStats& s = touch(*f.src, f);
      if (is_data) {
        s.sent_bytes += f.length_bytes;
        ++s.sent_frames;
      }
    }
    if (dst_ok) {
      NodeStats& s = (src_ok && *f.src == *f.dst) ? stats_[*f.dst] : touch(*f.dst, f);
      if (is_data) {
        s.recv_bytes += f.length_bytes;
        ++s.recv_frames;
      }
    }
    if (src_ok && dst_ok && *f.src != *f.dst) {
      LinkStats& l = links_[make_link_key(*f.src, *f.dst)];
      ++l.frames;
      l.bytes += f.length_bytes;
    }
    const bool advertises = f.protocol == Protocol::wifi && f.kind == FrameKind::management &&
                            (f.subtype == "beacon" || f.subtype == "probe_resp");
    if (advertises && src_ok) {
      auto& set = advertisers_[*f.src];
      if (f.ssid) set.insert(*f.ssid);
    }
    if (f.ssid) {
      ssids_.insert(*f.ssid);
      if (advertises) advertised_ssids_.insert(*f.ssid);
    }
  }

  const StatsMap& stats() const { return stats_; }
  const std::map<LinkKey, LinkStats>& links() const { return links_; }
  const std::set<std::string>& ssids() const { return ssids_; }
  const std::set<std::string>& advertised_ssids() const { return advertised_ssids_; }
  /// Beacon and probe-response senders with the SSIDs they named.
  const std::map<std::string, std::set<std::string>>& advertisers() const { return advertisers_; }

 private:
  NodeStats& touch(const std::string& addr, const FrameInfo& f) {
    NodeStats& s = stats_[addr];
    if (s.frames == 0) {
      s.device = addr;
      s.protocol = f.protocol;
    }
    ++s.frames;
    s.bytes += f.length_bytes;
    switch (kind_class(f.kind)) {
      case KindClass::management:
        ++s.m_frames;
        s.m_bytes += f.length_bytes;
        break;
      case KindClass::control:
        ++s.c_frames;
        s.c_bytes += f.length_bytes;
        break;
      case KindClass::data:
        ++s.d_frames;
        s.d_bytes += f.length_bytes;
        break;
    }
    if (f.channel) s.channels_seen.insert(*f.channel);
    return s;
  }

  TimeWindow window_;
  StatsMap stats_;
  std::map<LinkKey, LinkStats> links_;
  std::set<std::string> ssids_;
  std::set<std::string> advertised_ssids_;
  std::map<std::string, std::set<std::string>> advertisers_;
};

template <typename Range>
StatsMap aggregate(const Range& records, TimeWindow window = {}) {
  Aggregator agg(window);
  for (const FrameInfo& f : records) agg.add(f);
  return agg.stats();
}

inline constexpr const char* kRoleAccessPoint = "access_point";
inline constexpr const char* kRoleGateway = "gateway";
inline constexpr const char* kRoleCameraSuspect = "camera_suspect";
inline constexpr const char* kRoleStation = "station";

struct GraphNode {
  std::string address;
  std::set<std::string> roles;
  NodeStats stats;
  bool operator==(const GraphNode&) const = default;
};

struct GraphLink {
  std::string a;
  std::string b;
  LinkStats stats;
  bool operator==(const GraphLink&) const = default;
};

struct NetworkGraph {
  std::vector<GraphNode> nodes;  // sorted by address
  std::vector<GraphLink> links;  // sorted by (a, b)
  std::set<std::string> ssids;
  // SSIDs only ever named by clients (probe requests), never advertised.
  std::set<std::string> probed_only_ssids;

  const GraphNode* find(const std::string& addr) const {
    for (const auto& n : nodes)
      if (n.address == addr) return &n;
    return nullptr;
  }
  GraphNode* find(const std::string& addr) {
    for (auto& n : nodes)
      if (n.address == addr) return &n;
    return nullptr;
  }
  bool operator==(const NetworkGraph&) const = default;
};

inline NetworkGraph build_graph(const Aggregator& agg) {
  NetworkGraph g;
  for (const auto& [addr, s] : agg.stats()) g.nodes.push_back({addr, {}, s});
  for (const auto& [k, l] : agg.links()) g.links.push_back({k.first, k.second, l});
  g.ssids = agg.ssids();
  for (const auto& s : agg.ssids())
    if (!agg.advertised_ssids().count(s)) g.probed_only_ssids.insert(s);
  return g;
}

template <typename Range>
NetworkGraph build_graph(const Range& records, TimeWindow window = {}) {
  Aggregator agg(window);
  for (const FrameInfo& f : records) agg.add(f);
  return build_graph(agg);
}

inline json ratio_json(const Ratio& r) {
  if (r.is_infinite()) return "inf";
  if (r.is_undefined()) return nullptr;
  return json::parse(r.value().to_decimal(4));
}

inline json to_json(const NodeStats& s) {
  const auto r_sr = s.r_sr();
  const auto r_bf = s.r_bf();
  return json{{"device", s.device},
              {"protocol", to_string(s.protocol)},
              {"frames", s.frames},
              {"m_frames", s.m_frames},
              {"c_frames", s.c_frames},
              {"d_frames", s.d_frames},
              {"bytes", s.bytes},
              {"m_bytes", s.m_bytes},
              {"c_bytes", s.c_bytes},
              {"d_bytes", s.d_bytes},
              {"sent_bytes", s.sent_bytes},
              {"recv_bytes", s.recv_bytes},
              {"sent_frames", s.sent_frames},
              {"recv_frames", s.recv_frames},
              {"channels_seen", s.channels_seen},
              {"r_sr", ratio_json(r_sr)},
              {"r_bf", ratio_json(r_bf)},
              {"r_sr_exact", r_sr.is_finite() ? json(r_sr.value().to_fraction()) : ratio_json(r_sr)},
              {"r_bf_exact", r_bf.is_finite() ? json(r_bf.value().to_fraction()) : ratio_json(r_bf)}};
}

inline json to_json(const NetworkGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes) nodes.push_back({{"address", n.address}, {"roles", n.roles}, {"stats", to_json(n.stats)}});
  json links = json::array();
  for (const auto& l : g.links)
    links.push_back({{"a", l.a}, {"b", l.b}, {"frames", l.stats.frames}, {"bytes", l.stats.bytes}});
  return json{{"nodes", nodes},
              {"links", links},
              {"ssids", g.ssids},
              {"probed_only_ssids", g.probed_only_ssids}};
}

}  // namespace nbscan
