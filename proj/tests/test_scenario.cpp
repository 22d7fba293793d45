#include <gtest/gtest.h>

#include "nbscan/metrics.hpp"
#include "nbscan/parse.hpp"
#include "nbscan/scenario.hpp"
#include "nbscan/scenario_config.hpp"

using namespace nbscan;

namespace {

std::vector<FrameInfo> infos(const ScenarioOutput& out) {
  std::vector<FrameInfo> v;
  for (const auto& g : out.frames) v.push_back(extract(g.expected));
  return v;
}

TEST(Scenario, DeterministicPerSeed) {
  const auto a = generate_scenario(scenarios::high_load(9, 10));
  const auto b = generate_scenario(scenarios::high_load(9, 10));
  const auto c = generate_scenario(scenarios::high_load(10, 10));
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) ASSERT_EQ(a.frames[i].raw, b.frames[i].raw);
  EXPECT_EQ(a.truth.roles, b.truth.roles);
  EXPECT_NE(a.truth.roles, c.truth.roles);
}

TEST(Scenario, ZeroDurationIsEmpty) {
  EXPECT_TRUE(generate_scenario(scenarios::high_load(1, 0)).frames.empty());
}

TEST(Scenario, FramesSortedAndInsideDuration) {
  const auto spec = scenarios::high_load(4, 20);
  const auto out = generate_scenario(spec);
  std::int64_t last = spec.start_us;
  for (const auto& g : out.frames) {
    ASSERT_GE(g.raw.meta.timestamp_us, last);
    ASSERT_LT(g.raw.meta.timestamp_us, spec.start_us + 20000000);
    last = g.raw.meta.timestamp_us;
  }
}

TEST(Scenario, ExpectedRecordsMatchParser) {
  for (const char* name : {"high_load", "low_load", "ble_pairs", "zigbee_hue"}) {
    auto spec = *scenarios::builtin(name, 5);
    spec.duration_s = 15;
    for (const auto& g : generate_scenario(spec).frames) ASSERT_EQ(parse_frame(g.raw), g.expected) << name;
  }
}

TEST(Scenario, ConfigFilesMatchBuiltins) {
  for (const char* name : {"high_load", "low_load", "ble_pairs", "zigbee_hue"}) {
    auto file = load_scenario(std::string(NBSCAN_SOURCE_DIR) + "/scenarios/" + name + ".cfg");
    auto built = *scenarios::builtin(name, file.seed);
    EXPECT_EQ(file, built) << name;
  }
}

TEST(Scenario, ParserRejectsBadInput) {
  const char* bad[] = {
      "bogus = 1\n",
      "[device a]\nchannel = 3\n",                          // role must come first
      "[device a]\nrole = wizard\n",
      "[device a]\n",
      "[device a\nrole = access_point\n",
      "[device ]\nrole = access_point\n",
      "duration_s = ten\n",
      "[device a]\nrole = access_point\nrts = maybe\n",
      "[device a]\nrole = access_point\ncolour = blue\n",
      "seed\n",
  };
  for (const char* t : bad) EXPECT_THROW(parse_scenario(t), InvalidSpec) << t;
  const auto ok = parse_scenario("seed = 0x10  # hex\n[device ap]\nrole = access_point\nssid = X\n");
  EXPECT_EQ(ok.seed, 16u);
  EXPECT_EQ(ok.devices.at(0).ssid, "X");
  EXPECT_THROW(load_scenario("/nonexistent.cfg"), InvalidSpec);
}

TEST(Scenario, GeneratorRejectsInvalidSpecs) {
  auto s = scenarios::high_load();
  s.duration_s = -1;
  EXPECT_THROW(generate_scenario(s), InvalidSpec);
  s = scenarios::high_load();
  s.devices[3].name = s.devices[2].name;
  EXPECT_THROW(generate_scenario(s), InvalidSpec);
  s = scenarios::high_load();
  s.devices.erase(s.devices.begin());  // no AP
  EXPECT_THROW(generate_scenario(s), InvalidSpec);
  s = scenarios::high_load();
  s.devices[2].channel = 15;
  EXPECT_THROW(generate_scenario(s), InvalidSpec);
  s = scenarios::high_load();
  s.devices[2].traffic.up_rate = -1;
  EXPECT_THROW(generate_scenario(s), InvalidSpec);
  s = scenarios::high_load();
  s.devices[2].address = "01:00:5e:00:00:01";
  EXPECT_THROW(generate_scenario(s), InvalidSpec);
  s = scenarios::high_load();
  s.devices[2].address = s.devices[3].address = "02:aa:aa:aa:aa:aa";
  EXPECT_THROW(generate_scenario(s), InvalidSpec);
  s = scenarios::zigbee_hue();
  s.devices.erase(s.devices.begin());
  EXPECT_THROW(generate_scenario(s), InvalidSpec);
  s = scenarios::zigbee_hue();
  s.devices[1].protocol = Protocol::wifi;
  EXPECT_THROW(generate_scenario(s), InvalidSpec);
}

TEST(Scenario, TruthCoversObservedDevices) {
  const auto out = generate_scenario(scenarios::high_load(2, 30));
  EXPECT_EQ(out.truth.roles.size(), 7u);
  EXPECT_EQ(out.truth.addresses_with_role("camera_streaming").size(), 3u);
  const auto stats = aggregate(infos(out));
  for (const auto& [addr, role] : out.truth.roles) EXPECT_TRUE(stats.count(addr)) << role;
  for (const auto& [a, b] : out.truth.links) {
    EXPECT_TRUE(stats.count(a));
    EXPECT_TRUE(stats.count(b));
  }
}

TEST(Scenario, HighLoadProfileShape) {
  const auto out = generate_scenario(scenarios::high_load(3, 60));
  const auto stats = aggregate(infos(out));
  for (const auto& a : out.truth.addresses_with_role("camera_streaming")) {
    const auto& s = stats.at(a);
    EXPECT_GT(s.r_sr().value(), Rational(4));
    EXPECT_GT(s.r_bf().value(), Rational(500));
  }
  const auto gw = *out.truth.addresses_with_role("gateway").begin();
  EXPECT_EQ(stats.at(gw).m_frames, 0);
  EXPECT_EQ(stats.at(gw).c_frames, 0);
  const auto ap = *out.truth.addresses_with_role("access_point").begin();
  EXPECT_GE(stats.at(ap).r_sr().value(), Rational(8, 10));
  EXPECT_LE(stats.at(ap).r_sr().value(), Rational(12, 10));
}

TEST(Scenario, LowLoadIsNotDataDominated) {
  // With every station idle, management+control frames are at least
  // twice the data frames on each non-gateway WiFi node.
  const auto out = generate_scenario(scenarios::low_load(3, 60));
  const auto stats = aggregate(infos(out));
  const auto gw = *out.truth.addresses_with_role("gateway").begin();
  for (const auto& [addr, role] : out.truth.roles) {
    if (addr == gw) continue;
    const auto& s = stats.at(addr);
    EXPECT_GE(s.m_frames + s.c_frames, 2 * s.d_frames) << role;
  }
}

TEST(Scenario, ZigbeeBridgeSendsLessThanItReceives) {
  const auto out = generate_scenario(scenarios::zigbee_hue(3));
  const auto stats = aggregate(infos(out));
  const auto bridge = *out.truth.addresses_with_role("zigbee_bridge").begin();
  EXPECT_EQ(bridge, "0x0000");
  EXPECT_LT(stats.at(bridge).r_sr().value(), Rational(1));
  for (const auto& b : out.truth.addresses_with_role("zigbee_bulb"))
    EXPECT_GT(stats.at(b).r_sr().value(), Rational(3, 2));
}

TEST(Scenario, BleTruthDescribesConnections) {
  const auto out = generate_scenario(scenarios::ble_pairs(3));
  std::size_t with_req = 0, without = 0;
  for (const auto& c : out.truth.ble_connections) {
    (c.connect_req ? with_req : without) += 1;
    // Data PDUs carry no device addresses, so only a CONNECT_REQ names them.
    EXPECT_EQ(c.participants.size(), c.connect_req ? 2u : 0u);
  }
  EXPECT_EQ(with_req, 3u);
  EXPECT_EQ(without, 1u);
}

}  // namespace
