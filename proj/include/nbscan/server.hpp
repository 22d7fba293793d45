#pragma once

#include <atomic>
#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>

#include "nbscan/classifier.hpp"
#include "nbscan/storage.hpp"

namespace nbscan {

namespace server_detail {

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                       std::optional<std::size_t> index = std::nullopt) {
  json body{{"error", code}, {"message", message}};
  if (index) body["index"] = *index;
  send_json(res, status, body);
}

class BadRequest : public std::invalid_argument {
 public:
  BadRequest(std::string code, const std::string& message)
      : std::invalid_argument(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

inline std::optional<std::int64_t> int_param(const httplib::Request& req, const char* name,
                                             const char* code = "InvalidQuery") {
  if (!req.has_param(name)) return std::nullopt;
  const std::string v = req.get_param_value(name);
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
    throw BadRequest(code, std::string(name) + " must be an integer");
  return out;
}

inline TimeWindow window_from_query(const httplib::Request& req) {
  TimeWindow w{int_param(req, "from", "InvalidWindow"), int_param(req, "to", "InvalidWindow")};
  if (!w.valid()) throw BadRequest("InvalidWindow", "from is after to");
  return w;
}

inline TimeWindow window_from_body(const json& j) {
  TimeWindow w;
  for (const char* key : {"from", "to"}) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) continue;
    if (!it->is_number_integer()) throw BadRequest("InvalidWindow", std::string(key) + " must be an integer");
    (std::string(key) == "from" ? w.from : w.to) = it->get<std::int64_t>();
  }
  if (!w.valid()) throw BadRequest("InvalidWindow", "from is after to");
  return w;
}

}  // namespace server_detail

/// Graph with roles filled in by the classifier under `band`.
inline NetworkGraph classified_graph(const Aggregator& agg, const CameraBand& band) {
  NetworkGraph g = build_graph(agg);
  apply_roles(g, classify(agg, band));
  return g;
}

/// The REST front end of a FrameStore.
class ApiServer {
 public:
  explicit ApiServer(FrameStore& store) : store_(store) {
    using namespace server_detail;
    srv_.set_payload_max_length(64 * 1024 * 1024);

    srv_.Post("/api/frames", [this](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        return send_error(res, 400, "MalformedJson", e.what());
      }
      if (!body.is_array()) return send_error(res, 400, "MalformedJson", "body must be an array of frames");
      std::vector<WireFrame> batch;
      batch.reserve(body.size());
      for (std::size_t i = 0; i < body.size(); ++i) {
        try {
          batch.push_back(wire_frame_from_json(body[i]));
        } catch (const InvalidFrameInfo& e) {
          return send_error(res, 400, "InvalidRecord", e.what(), i);
        }
      }
      try {
        const auto r = store_.store(batch);
        send_json(res, 200, {{"accepted", r.accepted}, {"inserted", r.inserted}});
      } catch (const StorageFull& e) {
        send_error(res, 507, "StorageFull", e.what());
      }
    });

    srv_.Get("/api/frames", [this](const httplib::Request& req, httplib::Response& res) {
      FrameQuery q;
      const auto str = [&](const char* k, std::optional<std::string>& out) {
        if (req.has_param(k)) out = req.get_param_value(k);
      };
      str("src", q.src);
      str("dst", q.dst);
      str("protocol", q.protocol);
      str("kind", q.kind);
      str("ssid", q.ssid);
      if (auto c = int_param(req, "channel")) q.channel = static_cast<int>(*c);
      q.window = window_from_query(req);
      if (auto l = int_param(req, "limit")) q.limit = *l;
      if (auto o = int_param(req, "offset")) q.offset = *o;
      json frames = json::array();
      for (const auto& f : store_.query(q)) frames.push_back(to_json(f));
      send_json(res, 200, {{"frames", frames}, {"count", frames.size()}});
    });

    srv_.Get("/api/graph", [this](const httplib::Request& req, httplib::Response& res) {
      const TimeWindow w = window_from_query(req);
      const auto band = store_.load_config().band;
      send_json(res, 200, to_json(classified_graph(store_.aggregate(w), band)));
    });

    srv_.Get("/api/stats/nodes", [this](const httplib::Request& req, httplib::Response& res) {
      const auto agg = store_.aggregate(window_from_query(req));
      json nodes = json::array();
      for (const auto& [_, s] : agg.stats()) nodes.push_back(to_json(s));
      send_json(res, 200, {{"nodes", nodes}});
    });

    srv_.Post("/api/classify", [this](const httplib::Request& req, httplib::Response& res) {
      json body = json::object();
      if (!req.body.empty()) {
        try {
          body = json::parse(req.body);
        } catch (const json::exception& e) {
          return send_error(res, 400, "MalformedJson", e.what());
        }
      }
      if (!body.is_object()) return send_error(res, 400, "MalformedJson", "body must be an object");
      const TimeWindow w = window_from_body(body);
      CameraBand band = store_.load_config().band;
      if (auto it = body.find("band"); it != body.end()) band = camera_band_from_json(*it, band);
      const auto payload = to_json(classify(store_.aggregate(w), band));
      send_json(res, 200, to_json(store_.save_result("classification", w, payload)));
    });

    srv_.Get(R"(/api/results/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto r = store_.get_result(std::stoll(req.matches[1]));
      if (!r) return send_error(res, 404, "NotFound", "no result " + std::string(req.matches[1]));
      send_json(res, 200, to_json(*r));
    });

    srv_.Get("/api/results", [this](const httplib::Request& req, httplib::Response& res) {
      std::optional<std::string> kind;
      if (req.has_param("kind")) {
        kind = req.get_param_value("kind");
        if (!valid_result_kind(*kind)) throw BadRequest("InvalidQuery", "unknown result kind " + *kind);
      }
      json results = json::array();
      for (const auto& r : store_.list_results(kind)) results.push_back(to_json(r));
      send_json(res, 200, {{"results", results}});
    });

    srv_.Get("/api/config", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, to_json(store_.load_config()));
    });

    srv_.Put("/api/config", [this](const httplib::Request& req, httplib::Response& res) {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        return send_error(res, 400, "MalformedJson", e.what());
      }
      const auto updated = apply_config_update(store_.load_config(), body);
      store_.save_config(updated);
      send_json(res, 200, to_json(updated));
    });

    srv_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const BadRequest& e) {
        send_error(res, 400, e.code(), e.what());
      } catch (const InvalidQuery& e) {
        send_error(res, 400, "InvalidQuery", e.what());
      } catch (const InvalidConfig& e) {
        send_error(res, 400, "InvalidConfig", e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "InternalError", e.what());
      }
    });
  }

  ~ApiServer() { stop(); }

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    port_ = port == 0 ? srv_.bind_to_any_port(host) : (srv_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
    return port_;
  }

  /// Serves on the calling thread until stop() is called from elsewhere.
  void run(const std::string& host, int port) {
    if (!srv_.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    port_ = port;
    srv_.listen_after_bind();
  }

  void stop() {
    srv_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const { return port_; }

 private:
  FrameStore& store_;
  httplib::Server srv_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace nbscan
