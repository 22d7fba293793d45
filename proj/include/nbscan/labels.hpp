#pragma once

#include <fstream>
#include <map>
#include <string>

#include "nbscan/classifier.hpp"
#include "nbscan/scenario.hpp"

namespace nbscan {

inline json to_json(const GroundTruth& t) {
  json links = json::array();
  for (const auto& [a, b] : t.links) links.push_back({a, b});
  json conns = json::array();
  for (const auto& c : t.ble_connections)
    conns.push_back({{"access_address", hex_string(c.access_address, 8)},
                     {"participants", c.participants},
                     {"connect_req", c.connect_req},
                     {"channels", c.channels}});
  return json{{"roles", t.roles}, {"names", t.names}, {"links", links}, {"ble_connections", conns}};
}

inline GroundTruth ground_truth_from_json(const json& j) {
  GroundTruth t;
  t.roles = j.at("roles").get<std::map<std::string, std::string>>();
  if (j.contains("names")) t.names = j.at("names").get<std::map<std::string, std::string>>();
  if (j.contains("links"))
    for (const auto& l : j.at("links")) t.links.insert({l.at(0).get<std::string>(), l.at(1).get<std::string>()});
  return t;
}

inline GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open labels file " + path);
  return ground_truth_from_json(json::parse(in));
}

/// Camera class of every labeled device: positive iff it streams.
inline std::map<std::string, CameraLabel> camera_truth(const GroundTruth& t) {
  std::map<std::string, CameraLabel> out;
  for (const auto& [addr, role] : t.roles)
    out[addr] = role == to_string(RoleProfile::camera_streaming) ? CameraLabel::camera : CameraLabel::others;
  return out;
}

}  // namespace nbscan
