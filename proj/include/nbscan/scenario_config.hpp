#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "nbscan/scenario.hpp"

namespace nbscan {

namespace scenario_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
T parse_number(std::string_view v, int line, std::string_view key) {
  T out{};
  const char* first = v.data();
  const char* last = v.data() + v.size();
  int base = 10;
  if constexpr (std::is_integral_v<T>) {
    if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
      first += 2;
      base = 16;
    }
    auto [p, ec] = std::from_chars(first, last, out, base);
    if (ec != std::errc{} || p != last)
      throw InvalidSpec("line " + std::to_string(line) + ": bad integer for " + std::string(key));
  } else {
    // from_chars for double is not available on every toolchain we build with.
    std::string tmp(v);
    std::size_t used = 0;
    try {
      out = std::stod(tmp, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tmp.size() || tmp.empty())
      throw InvalidSpec("line " + std::to_string(line) + ": bad number for " + std::string(key));
  }
  return out;
}

inline bool parse_bool(std::string_view v, int line, std::string_view key) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw InvalidSpec("line " + std::to_string(line) + ": bad boolean for " + std::string(key));
}

}  // namespace scenario_detail

/// Parses the scenario text format: top-level `key = value` lines, then
/// one `[device NAME]` block per device. `#` starts a comment.
inline ScenarioSpec parse_scenario(std::string_view text) {
  using namespace scenario_detail;
  ScenarioSpec spec;
  DeviceSpec* dev = nullptr;
  bool traffic_seeded = false;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw_line;
  const auto err = [&](const std::string& msg) { return InvalidSpec("line " + std::to_string(line_no) + ": " + msg); };

  while (std::getline(in, raw_line)) {
    ++line_no;
    std::string_view line = raw_line;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw err("unterminated section header");
      if (dev && !traffic_seeded) throw err(dev->name + " has no role");
      std::string_view inner = trim(line.substr(1, line.size() - 2));
      if (inner.substr(0, 7) != "device " ) throw err("expected [device NAME]");
      spec.devices.emplace_back();
      dev = &spec.devices.back();
      dev->name = std::string(trim(inner.substr(7)));
      if (dev->name.empty()) throw err("device name is empty");
      traffic_seeded = false;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw err("expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view val = trim(line.substr(eq + 1));

    if (!dev) {
      if (key == "seed") spec.seed = parse_number<std::uint64_t>(val, line_no, key);
      else if (key == "duration_s") spec.duration_s = parse_number<std::int64_t>(val, line_no, key);
      else if (key == "start_us") spec.start_us = parse_number<std::int64_t>(val, line_no, key);
      else throw err("unknown key " + std::string(key));
      continue;
    }

    if (key == "role") {
      auto r = parse_role(val);
      if (!r) throw err("unknown role " + std::string(val));
      dev->role = *r;
      dev->protocol = protocol_of(*r);
      if (!traffic_seeded) dev->traffic = default_profile(*r);
      if (dev->protocol == Protocol::zigbee && dev->channel == 6) dev->channel = 15;
      traffic_seeded = true;
      continue;
    }
    // Traffic overrides apply on top of the role defaults, so require the
    // role first to keep the result independent of key order.
    if (!traffic_seeded) throw err("role must come first in a device block");
    TrafficProfile& t = dev->traffic;
    if (key == "protocol") {
      auto p = parse_protocol(val);
      if (!p) throw err("unknown protocol " + std::string(val));
      dev->protocol = *p;
    } else if (key == "channel") {
      dev->channel = parse_number<int>(val, line_no, key);
    } else if (key == "address") {
      dev->address = std::string(val);
    } else if (key == "ap") {
      dev->ap = std::string(val);
    } else if (key == "bridge") {
      dev->bridge = std::string(val);
    } else if (key == "ssid") {
      dev->ssid = std::string(val);
    } else if (key == "pan_id") {
      dev->pan_id = parse_number<std::uint16_t>(val, line_no, key);
    } else if (key == "local_name") {
      dev->local_name = std::string(val);
    } else if (key == "up_size") {
      t.up_size = parse_number<double>(val, line_no, key);
    } else if (key == "up_rate") {
      t.up_rate = parse_number<double>(val, line_no, key);
    } else if (key == "down_size") {
      t.down_size = parse_number<double>(val, line_no, key);
    } else if (key == "down_rate") {
      t.down_rate = parse_number<double>(val, line_no, key);
    } else if (key == "ps_poll_rate") {
      t.ps_poll_rate = parse_number<double>(val, line_no, key);
    } else if (key == "rts") {
      t.rts = parse_bool(val, line_no, key);
    } else if (key == "sessions") {
      t.sessions = parse_number<int>(val, line_no, key);
    } else {
      throw err("unknown device key " + std::string(key));
    }
  }
  if (dev && !traffic_seeded) throw InvalidSpec(dev->name + " has no role");
  return spec;
}

inline ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidSpec("cannot open scenario " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

namespace scenarios {

inline DeviceSpec device(std::string name, RoleProfile role, int channel = 6) {
  DeviceSpec d;
  d.name = std::move(name);
  d.role = role;
  d.protocol = protocol_of(role);
  d.channel = channel;
  d.traffic = default_profile(role);
  return d;
}

/// Three streaming cameras plus three non-camera WiFi devices behind one
/// AP and gateway.
inline ScenarioSpec high_load(std::uint64_t seed = 1, std::int64_t duration_s = 60) {
  ScenarioSpec s;
  s.seed = seed;
  s.duration_s = duration_s;
  auto ap = device("ap", RoleProfile::access_point);
  ap.ssid = "HomeNet";
  s.devices.push_back(ap);
  s.devices.push_back(device("gateway", RoleProfile::gateway));
  auto cam = [&](std::string n, double up_size, double up_rate, double down_size, double down_rate) {
    auto d = device(std::move(n), RoleProfile::camera_streaming);
    d.traffic.up_size = up_size;
    d.traffic.up_rate = up_rate;
    d.traffic.down_size = down_size;
    d.traffic.down_rate = down_rate;
    s.devices.push_back(d);
  };
  cam("cam-1", 1400, 60, 400, 15);
  cam("cam-2", 1300, 40, 400, 10);
  cam("cam-3", 1200, 25, 500, 5);
  s.devices.push_back(device("echo", RoleProfile::audio_streamer));
  s.devices.push_back(device("laptop", RoleProfile::browser_station));
  return s;
}

/// The same home with every camera idle: power-save polling and RTS/CTS
/// dominate the airtime.
inline ScenarioSpec low_load(std::uint64_t seed = 1, std::int64_t duration_s = 60) {
  ScenarioSpec s = high_load(seed, duration_s);
  for (auto& d : s.devices) {
    if (d.role == RoleProfile::camera_streaming) {
      d.role = RoleProfile::camera_idle;
      d.traffic = default_profile(RoleProfile::camera_idle);
    } else if (d.role == RoleProfile::audio_streamer || d.role == RoleProfile::browser_station) {
      d.traffic = default_profile(RoleProfile::camera_idle);
    }
  }
  return s;
}

inline ScenarioSpec ble_pairs(std::uint64_t seed = 1, std::int64_t duration_s = 60) {
  ScenarioSpec s;
  s.seed = seed;
  s.duration_s = duration_s;
  auto lock = device("lock", RoleProfile::ble_lock, 37);
  lock.local_name = "August";
  lock.traffic.sessions = 3;
  s.devices.push_back(lock);
  auto tracker = device("tracker", RoleProfile::ble_tracker, 0);
  tracker.traffic.sessions = 2;
  s.devices.push_back(tracker);
  return s;
}

inline ScenarioSpec zigbee_hue(std::uint64_t seed = 1, std::int64_t duration_s = 120) {
  ScenarioSpec s;
  s.seed = seed;
  s.duration_s = duration_s;
  auto bridge = device("bridge", RoleProfile::zigbee_bridge, 15);
  bridge.pan_id = 0x1a62;
  s.devices.push_back(bridge);
  auto bulb = [&](std::string n, double commands) {
    auto d = device(std::move(n), RoleProfile::zigbee_bulb, 15);
    d.traffic.down_rate = commands;
    s.devices.push_back(d);
  };
  bulb("bulb-1", 0.02);
  bulb("bulb-2", 0.1);
  bulb("bulb-3", 0.1);
  return s;
}

inline std::optional<ScenarioSpec> builtin(std::string_view name, std::uint64_t seed) {
  if (name == "high_load") return high_load(seed);
  if (name == "low_load") return low_load(seed);
  if (name == "ble_pairs") return ble_pairs(seed);
  if (name == "zigbee_hue") return zigbee_hue(seed);
  return std::nullopt;
}

}  // namespace scenarios

}  // namespace nbscan
