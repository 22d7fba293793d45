#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

#include "nbscan/frame_info.hpp"

namespace nbscan {

class SinkUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The sink understood the request and refused it; retrying cannot help.
class BatchRejected : public std::runtime_error {
 public:
  BatchRejected(int status, const std::string& body)
      : std::runtime_error("batch rejected with status " + std::to_string(status) + ": " + body), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

class FrameSink {
 public:
  virtual ~FrameSink() = default;
  /// Returns the number of records the sink acknowledged.
  virtual std::size_t post(const std::vector<WireFrame>& batch) = 0;
};

inline std::string batch_body(const std::vector<WireFrame>& batch) {
  json arr = json::array();
  for (const auto& w : batch) arr.push_back(to_json(w));
  return arr.dump();
}

class HttpSink : public FrameSink {
 public:
  HttpSink(std::string host, int port, std::chrono::milliseconds timeout = std::chrono::seconds(5))
      : client_(std::move(host), port) {
    client_.set_connection_timeout(timeout);
    client_.set_read_timeout(timeout);
    client_.set_write_timeout(timeout);
    client_.set_keep_alive(true);
  }

  /// Accepts "host:port" or "http://host:port".
  static std::unique_ptr<HttpSink> from_url(std::string url) {
    if (url.rfind("http://", 0) == 0) url = url.substr(7);
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto colon = url.rfind(':');
    if (colon == std::string::npos) return std::make_unique<HttpSink>(url, 80);
    return std::make_unique<HttpSink>(url.substr(0, colon), std::stoi(url.substr(colon + 1)));
  }

  std::size_t post(const std::vector<WireFrame>& batch) override {
    auto res = client_.Post("/api/frames", batch_body(batch), "application/json");
    if (!res) throw SinkUnavailable("POST /api/frames: " + httplib::to_string(res.error()));
    if (res->status == 200) return json::parse(res->body).value("accepted", std::size_t{0});
    if (res->status >= 400 && res->status < 500) throw BatchRejected(res->status, res->body);
    throw SinkUnavailable("POST /api/frames returned " + std::to_string(res->status));
  }

 private:
  httplib::Client client_;
};

/// In-process sink; `fail` lets tests simulate an outage.
class LocalSink : public FrameSink {
 public:
  std::function<std::size_t(const std::vector<WireFrame>&)> handler;
  bool fail = false;
  std::vector<WireFrame> received;
  std::size_t posts = 0;

  std::size_t post(const std::vector<WireFrame>& batch) override {
    ++posts;
    if (fail) throw SinkUnavailable("local sink down");
    if (handler) return handler(batch);
    received.insert(received.end(), batch.begin(), batch.end());
    return batch.size();
  }
};

struct ForwarderOptions {
  std::size_t batch_size = 500;
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(100), std::chrono::milliseconds(500),
                                                 std::chrono::milliseconds(2500)};
  std::string spool_path = "overflow.jsonl";
  std::string source_id = "analyzer";
  std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
};

struct ForwardStats {
  std::size_t frames_in = 0;
  std::size_t delivered = 0;
  std::size_t spooled = 0;
  std::size_t posts = 0;
  std::size_t retries = 0;
  std::size_t failed_batches = 0;
};

/// Numbers each record with (source_id, sequence_number), posts batches in
/// order and, once the retries for a batch are exhausted, appends it to the
/// overflow spool. Every record ends up delivered or spooled.
class Forwarder {
 public:
  Forwarder(FrameSink& sink, ForwarderOptions options = {}) : sink_(sink), options_(std::move(options)) {
    if (options_.batch_size == 0 || options_.batch_size > 500)
      throw std::invalid_argument("batch size must be in 1..500");
    pending_.reserve(options_.batch_size);
  }

  ~Forwarder() {
    try {
      flush();
    } catch (...) {
    }
  }

  void add(const FrameInfo& info) {
    ++stats_.frames_in;
    pending_.push_back({info, options_.source_id, next_seq_++});
    if (pending_.size() >= options_.batch_size) flush();
  }

  void flush() {
    if (pending_.empty()) return;
    std::vector<WireFrame> batch;
    batch.swap(pending_);
    pending_.reserve(options_.batch_size);
    for (std::size_t attempt = 0;; ++attempt) {
      try {
        ++stats_.posts;
        sink_.post(batch);
        stats_.delivered += batch.size();
        return;
      } catch (const SinkUnavailable&) {
        if (attempt >= options_.backoff.size()) break;
        ++stats_.retries;
        options_.sleep(options_.backoff[attempt]);
      } catch (const BatchRejected&) {
        break;
      }
    }
    ++stats_.failed_batches;
    spool(batch);
  }

  const ForwardStats& stats() const { return stats_; }

 private:
  void spool(const std::vector<WireFrame>& batch) {
    std::ofstream out(options_.spool_path, std::ios::app);
    for (const auto& w : batch) out << to_json(w).dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot write overflow spool " + options_.spool_path);
    stats_.spooled += batch.size();
  }

  FrameSink& sink_;
  ForwarderOptions options_;
  std::vector<WireFrame> pending_;
  std::int64_t next_seq_ = 0;
  ForwardStats stats_;
};

}  // namespace nbscan
