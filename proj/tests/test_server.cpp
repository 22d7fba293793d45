#include <unistd.h>

#include <filesystem>

#include <gtest/gtest.h>

#include "nbscan/forward.hpp"
#include "nbscan/labels.hpp"
#include "nbscan/parse.hpp"
#include "nbscan/scenario.hpp"
#include "nbscan/scenario_config.hpp"
#include "nbscan/server.hpp"

using namespace nbscan;
namespace fs = std::filesystem;

namespace {

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    path_ = (fs::temp_directory_path() /
             ("nbscan_srv_" + std::to_string(getpid()) + "_" +
              ::testing::UnitTest::GetInstance()->current_test_info()->name() + ".db"))
                .string();
    cleanup();
    restart({});
  }
  void restart(StoreOptions opt) {
    client_.reset();
    server_.reset();
    store_.reset();
    store_ = std::make_unique<FrameStore>(path_, opt);
    server_ = std::make_unique<ApiServer>(*store_);
    port_ = server_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override {
    server_.reset();
    store_.reset();
    cleanup();
  }
  void cleanup() {
    for (const char* suffix : {"", "-wal", "-shm"}) fs::remove(path_ + suffix);
  }

  json post(const std::string& path, const json& body, int want_status) {
    auto res = client_->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return nullptr;
    EXPECT_EQ(res->status, want_status) << res->body;
    return json::parse(res->body);
  }
  json get(const std::string& path, int want_status = 200) {
    auto res = client_->Get(path);
    EXPECT_TRUE(res);
    if (!res) return nullptr;
    EXPECT_EQ(res->status, want_status) << res->body;
    return json::parse(res->body);
  }

  std::string path_;
  std::unique_ptr<FrameStore> store_;
  std::unique_ptr<ApiServer> server_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

json frames_body(std::size_t n, std::uint64_t seed = 1, const char* source = "t") {
  json arr = json::array();
  for (const auto& g : generate_scenario(scenarios::high_load(seed, 30)).frames) {
    if (arr.size() == n) break;
    arr.push_back(to_json(WireFrame{extract(g.expected), source, static_cast<std::int64_t>(arr.size())}));
  }
  return arr;
}

TEST_F(ServerTest, PostFramesIsIdempotent) {
  const auto body = frames_body(400);
  EXPECT_EQ(post("/api/frames", body, 200), (json{{"accepted", 400}, {"inserted", 400}}));
  EXPECT_EQ(post("/api/frames", body, 200), (json{{"accepted", 400}, {"inserted", 0}}));
  EXPECT_EQ(store_->row_count(), 400);
}

TEST_F(ServerTest, InvalidRecordRejectsWholeBatchWithIndex) {
  auto body = frames_body(50);
  body[37]["kind"] = "beacons";
  const auto err = post("/api/frames", body, 400);
  EXPECT_EQ(err["error"], "InvalidRecord");
  EXPECT_EQ(err["index"], 37);
  body = frames_body(50);
  body[3].erase("sequence_number");
  EXPECT_EQ(post("/api/frames", body, 400)["index"], 3);
  EXPECT_EQ(store_->row_count(), 0);

  auto res = client_->Post("/api/frames", "[{", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(json::parse(res->body)["error"], "MalformedJson");
  EXPECT_EQ(post("/api/frames", json::object(), 400)["error"], "MalformedJson");
}

TEST_F(ServerTest, FullStoreAnswers507) {
  restart({20000, std::nullopt});
  post("/api/frames", frames_body(19900), 200);
  EXPECT_EQ(post("/api/frames", frames_body(200, 2, "other"), 507)["error"], "StorageFull");
  EXPECT_EQ(store_->row_count(), 19900);
}

TEST_F(ServerTest, QueryFrames) {
  const auto body = frames_body(2000);
  post("/api/frames", body, 200);
  const auto all = get("/api/frames?limit=5000");
  EXPECT_EQ(all["count"], 2000);
  std::string src;
  for (const auto& f : body)
    if (f.contains("src")) src = f["src"];
  std::size_t want = 0;
  for (const auto& f : body) want += f.value("src", json()) == src;
  EXPECT_EQ(get("/api/frames?limit=5000&src=" + src)["count"], want);
  const auto page = get("/api/frames?limit=10&offset=5");
  ASSERT_EQ(page["frames"].size(), 10u);
  EXPECT_EQ(page["frames"][0]["timestamp_us"], all["frames"][5]["timestamp_us"]);
  const auto f0 = page["frames"][0];
  EXPECT_TRUE(f0.contains("id"));
  EXPECT_EQ(f0["source_id"], "t");

  EXPECT_EQ(get("/api/frames?limit=0", 400)["error"], "InvalidQuery");
  EXPECT_EQ(get("/api/frames?protocol=lora", 400)["error"], "InvalidQuery");
  EXPECT_EQ(get("/api/frames?channel=six", 400)["error"], "InvalidQuery");
  EXPECT_EQ(get("/api/frames?from=10&to=5", 400)["error"], "InvalidWindow");
  EXPECT_EQ(get("/api/frames?from=abc", 400)["error"], "InvalidWindow");
}

TEST_F(ServerTest, GraphStatsAndClassify) {
  const auto out = generate_scenario(scenarios::high_load(4, 60));
  std::vector<WireFrame> batch;
  for (const auto& g : out.frames) batch.push_back({extract(g.expected), "x", static_cast<std::int64_t>(batch.size())});
  store_->store(batch);

  const auto graph = get("/api/graph");
  EXPECT_EQ(graph["nodes"].size(), 7u);
  EXPECT_EQ(graph["ssids"], json::array({"HomeNet"}));
  std::set<std::string> suspects;
  for (const auto& n : graph["nodes"])
    for (const auto& r : n["roles"])
      if (r == "camera_suspect") suspects.insert(n["address"].get<std::string>());
  EXPECT_EQ(suspects, out.truth.addresses_with_role("camera_streaming"));

  const auto stats = get("/api/stats/nodes");
  ASSERT_EQ(stats["nodes"].size(), 7u);
  for (const auto& n : stats["nodes"])
    EXPECT_EQ(n["bytes"].get<std::int64_t>(),
              n["m_bytes"].get<std::int64_t>() + n["c_bytes"].get<std::int64_t>() + n["d_bytes"].get<std::int64_t>());

  // An empty window yields an empty graph.
  const std::int64_t t0 = out.frames.front().raw.meta.timestamp_us;
  EXPECT_TRUE(get("/api/graph?to=" + std::to_string(t0))["nodes"].empty());

  const auto r = post("/api/classify", json::object(), 200);
  EXPECT_EQ(r["kind"], "classification");
  EXPECT_EQ(r["payload"]["gateway"], *out.truth.addresses_with_role("gateway").begin());
  const auto narrow = post("/api/classify", json{{"band", {{"r_sr_max", 5}}}}, 200);
  EXPECT_EQ(narrow["payload"]["band"]["r_sr_max"], 5);
  EXPECT_EQ(get("/api/results/" + std::to_string(r["id"].get<int>()))["payload"], r["payload"]);
  EXPECT_EQ(get("/api/results?kind=classification")["results"].size(), 2u);
  EXPECT_EQ(get("/api/results?kind=bogus", 400)["error"], "InvalidQuery");
  EXPECT_EQ(get("/api/results/999", 404)["error"], "NotFound");
  EXPECT_EQ(post("/api/classify", json{{"from", 5}, {"to", 1}}, 400)["error"], "InvalidWindow");
  EXPECT_EQ(post("/api/classify", json{{"band", {{"r_sr_min", 50}}}}, 400)["error"], "InvalidConfig");
}

TEST_F(ServerTest, ConfigRoundTrip) {
  const auto c = get("/api/config");
  EXPECT_EQ(c["dwell"], 30);
  EXPECT_EQ(c["hops"], 13);
  EXPECT_EQ(c["total_observation_s"], 390);
  auto res = client_->Put("/api/config", json{{"dwell", 5}, {"camera_band", {{"r_sr_min", "4.5"}}}}.dump(),
                          "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  const auto after = get("/api/config");
  EXPECT_EQ(after["total_observation_s"], 65);
  EXPECT_EQ(after["camera_band"]["r_sr_min"], 4.5);
  res = client_->Put("/api/config", R"({"hops": -1})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(get("/api/config")["hops"], 13);
}

TEST_F(ServerTest, ForwarderDeliversOverHttp) {
  HttpSink sink("127.0.0.1", port_);
  ForwarderOptions opt;
  opt.spool_path = path_ + ".spool";
  opt.source_id = "fw";
  const auto out = generate_scenario(scenarios::high_load(5, 10));
  {
    Forwarder fw(sink, opt);
    for (const auto& g : out.frames) fw.add(extract(g.expected));
    fw.flush();
    EXPECT_EQ(fw.stats().delivered, out.frames.size());
    EXPECT_EQ(fw.stats().spooled, 0u);
  }
  EXPECT_EQ(store_->row_count(), static_cast<std::int64_t>(out.frames.size()));
  EXPECT_FALSE(fs::exists(opt.spool_path));
}

TEST_F(ServerTest, ForwarderSpoolsWhenServerIsDown) {
  server_->stop();
  HttpSink sink("127.0.0.1", port_, std::chrono::milliseconds(200));
  ForwarderOptions opt;
  opt.spool_path = path_ + ".spool";
  opt.sleep = [](std::chrono::milliseconds) {};
  {
    Forwarder fw(sink, opt);
    for (int i = 0; i < 20; ++i) {
      FrameInfo f;
      f.timestamp_us = i;
      fw.add(f);
    }
    fw.flush();
    EXPECT_EQ(fw.stats().spooled, 20u);
  }
  EXPECT_TRUE(fs::exists(opt.spool_path));
  fs::remove(opt.spool_path);
}

}  // namespace
