#pragma once

#include <cstdio>
#include <map>
#include <string>

#include "nbscan/classifier.hpp"
#include "nbscan/metrics.hpp"

namespace nbscan {

/// Everything `analyze` prints, as one deterministic document.
inline json analysis_json(const Aggregator& agg, const Classification& c,
                          const std::optional<ConfusionMatrix>& confusion = std::nullopt) {
  NetworkGraph g = build_graph(agg);
  apply_roles(g, c);
  const auto labels = c.labels();
  json nodes = json::array();
  for (const auto& n : g.nodes) {
    json s = to_json(n.stats);
    s["label"] = to_string(labels.at(n.address));
    s["roles"] = n.roles;
    nodes.push_back(std::move(s));
  }
  json graph = to_json(g);
  json out{{"summary", {{"nodes", g.nodes.size()}, {"links", g.links.size()}, {"ssids", g.ssids.size()}}},
           {"nodes", nodes},
           {"links", graph["links"]},
           {"ssids", graph["ssids"]},
           {"cameras", c.cameras()},
           {"gateway", c.gateway ? json(*c.gateway) : json(nullptr)},
           {"classification", to_json(c)}};
  if (confusion) out["confusion"] = to_json(*confusion);
  return out;
}

inline std::string summary_line(std::size_t nodes, std::size_t links, std::size_t ssids) {
  return std::to_string(nodes) + " nodes, " + std::to_string(links) + " links, " + std::to_string(ssids) + " SSIDs";
}

/// Fixed-width table using the metric names Frames/mFrames/cFrames/dFrames.
inline std::string render_text(const Aggregator& agg, const Classification& c,
                               const std::map<std::string, std::string>& names = {},
                               const std::optional<ConfusionMatrix>& confusion = std::nullopt) {
  std::string out;
  char line[512];
  const auto labels = c.labels();
  std::map<std::string, std::set<std::string>> roles;
  for (const auto& n : c.nodes) roles[n.address] = n.roles;

  std::snprintf(line, sizeof line, "%-23s %7s %7s %7s %7s %10s %9s %9s %10s %10s %10s %9s %8s  %s\n", "Device",
                "Frames", "mFrames", "cFrames", "dFrames", "Bytes", "mBytes", "cBytes", "dBytes", "Sent", "Recv",
                "R_sr", "R_bf", "Label");
  out += line;
  for (const auto& [addr, s] : agg.stats()) {
    std::string who = addr;
    if (auto it = names.find(addr); it != names.end()) who = it->second;
    std::string label(to_string(labels.at(addr)));
    for (const auto& r : roles[addr])
      if (r != kRoleCameraSuspect && r != kRoleStation) label += " " + r;
    std::snprintf(line, sizeof line, "%-23s %7lld %7lld %7lld %7lld %10lld %9lld %9lld %10lld %10lld %10lld %9s %8s  %s\n",
                  who.c_str(), static_cast<long long>(s.frames), static_cast<long long>(s.m_frames),
                  static_cast<long long>(s.c_frames), static_cast<long long>(s.d_frames),
                  static_cast<long long>(s.bytes), static_cast<long long>(s.m_bytes),
                  static_cast<long long>(s.c_bytes), static_cast<long long>(s.d_bytes),
                  static_cast<long long>(s.sent_bytes), static_cast<long long>(s.recv_bytes),
                  s.r_sr().to_string(2).c_str(), s.r_bf().to_string(1).c_str(), label.c_str());
    out += line;
  }
  out += "\n" + summary_line(agg.stats().size(), agg.links().size(), agg.ssids().size()) + "\n";
  const auto cams = c.cameras();
  out += "cameras:";
  if (cams.empty()) out += " none";
  for (const auto& a : cams) {
    auto it = names.find(a);
    out += " " + (it == names.end() ? a : it->second + " (" + a + ")");
  }
  out += "\n";
  if (c.gateway) out += "gateway: " + *c.gateway + "\n";
  if (confusion) {
    out += "confusion: tp=" + std::to_string(confusion->tp) + " fn=" + std::to_string(confusion->fn) +
           " fp=" + std::to_string(confusion->fp) + " tn=" + std::to_string(confusion->tn) +
           " FAR=" + confusion->far().to_percent() + " FRR=" + confusion->frr().to_percent() + "\n";
  }
  return out;
}

}  // namespace nbscan
