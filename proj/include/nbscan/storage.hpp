#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "nbscan/classifier.hpp"
#include "nbscan/frame_info.hpp"
#include "nbscan/metrics.hpp"
#include "nbscan/scan_config.hpp"
#include "nbscan/sqlite.hpp"

namespace nbscan {

class StorageFull : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidQuery : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct StoredFrame {
  std::int64_t id = 0;
  std::optional<std::string> source_id;
  std::optional<std::int64_t> sequence_number;
  FrameInfo info;

  bool operator==(const StoredFrame&) const = default;
};

inline json to_json(const StoredFrame& s) {
  json j = to_json(s.info);
  j["id"] = s.id;
  j["source_id"] = s.source_id ? json(*s.source_id) : json(nullptr);
  j["sequence_number"] = s.sequence_number ? json(*s.sequence_number) : json(nullptr);
  return j;
}

struct FrameQuery {
  std::optional<std::string> src, dst, protocol, kind, ssid;
  std::optional<int> channel;
  TimeWindow window;
  std::int64_t limit = 1000;
  std::int64_t offset = 0;

  void validate() const {
    if (protocol && !parse_protocol(*protocol)) throw InvalidQuery("unknown protocol " + *protocol);
    if (kind && !parse_kind(*kind)) throw InvalidQuery("unknown kind " + *kind);
    if (!window.valid()) throw InvalidQuery("from is after to");
    if (limit < 1 || limit > 100000) throw InvalidQuery("limit must be in 1..100000");
    if (offset < 0) throw InvalidQuery("offset must be non-negative");
  }

  /// Reference semantics, used by tests as the linear-scan oracle.
  bool matches(const FrameInfo& f) const {
    return (!src || f.src == src) && (!dst || f.dst == dst) && (!protocol || to_string(f.protocol) == *protocol) &&
           (!kind || to_string(f.kind) == *kind) && (!ssid || f.ssid == ssid) && (!channel || f.channel == channel) &&
           window.contains(f.timestamp_us);
  }
};

struct AnalysisResult {
  std::int64_t id = 0;
  std::int64_t created_at = 0;
  TimeWindow window;
  std::string kind;
  json payload;
};

inline json to_json(const AnalysisResult& r) {
  return json{{"id", r.id},
              {"created_at", r.created_at},
              {"from", r.window.from ? json(*r.window.from) : json(nullptr)},
              {"to", r.window.to ? json(*r.window.to) : json(nullptr)},
              {"kind", r.kind},
              {"payload", r.payload}};
}

inline bool valid_result_kind(const std::string& k) {
  return k == "node_stats" || k == "graph" || k == "classification" || k == "confusion";
}

/// Scan parameters plus the camera band, as served by /api/config.
struct ServiceConfig {
  ScanConfig scan;
  CameraBand band;
  bool operator==(const ServiceConfig&) const = default;
};

inline json to_json(const ServiceConfig& c) {
  return json{{"dwell", c.scan.dwell_time_s},
              {"hops", c.scan.hops},
              {"channels", c.scan.channels},
              {"refresh_interval", c.scan.refresh_interval_s},
              {"total_observation_s", c.scan.total_observation_s()},
              {"camera_band", to_json(c.band)}};
}

/// Partial update: only the keys present in `j` change.
inline ServiceConfig apply_config_update(ServiceConfig c, const json& j) {
  if (!j.is_object()) throw InvalidConfig("config must be an object");
  const auto int_field = [&](const char* key, int& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    if (!it->is_number_integer()) throw InvalidConfig(std::string(key) + " must be an integer");
    out = it->get<int>();
  };
  int_field("dwell", c.scan.dwell_time_s);
  int_field("hops", c.scan.hops);
  int_field("refresh_interval", c.scan.refresh_interval_s);
  if (auto it = j.find("channels"); it != j.end()) {
    if (!it->is_array()) throw InvalidConfig("channels must be an array");
    std::vector<int> ch;
    for (const auto& v : *it) {
      if (!v.is_number_integer()) throw InvalidConfig("channels must be integers");
      ch.push_back(v.get<int>());
    }
    c.scan.channels = std::move(ch);
  }
  if (auto it = j.find("camera_band"); it != j.end()) c.band = camera_band_from_json(*it, c.band);
  for (const auto& [k, _] : j.items())
    if (k != "dwell" && k != "hops" && k != "refresh_interval" && k != "channels" && k != "camera_band" &&
        k != "total_observation_s")
      throw InvalidConfig("unknown config key " + k);
  c.scan.validate();
  c.band.validate();
  return c;
}

struct StoreOptions {
  std::optional<std::int64_t> max_rows;
  // Keep only frames newer than (latest timestamp - retain_us).
  std::optional<std::int64_t> retain_us;
};

struct StoreResult {
  std::size_t accepted = 0;
  std::size_t inserted = 0;
};

/// Single-file frame and result store. One connection, serialized by a
/// mutex, so every read sees whole batches.
class FrameStore {
 public:
  explicit FrameStore(const std::string& path, StoreOptions options = {}) : db_(path), options_(options) {
    db_.exec("PRAGMA journal_mode=WAL");
    db_.exec("PRAGMA synchronous=NORMAL");
    db_.exec(R"(CREATE TABLE IF NOT EXISTS frames(
      id INTEGER PRIMARY KEY AUTOINCREMENT,
      source_id TEXT, seq INTEGER,
      protocol TEXT NOT NULL, timestamp_us INTEGER NOT NULL,
      channel INTEGER, rssi_dbm INTEGER, length_bytes INTEGER NOT NULL,
      kind TEXT NOT NULL, subtype TEXT NOT NULL,
      src TEXT, dst TEXT, ssid TEXT,
      ble_addr_type TEXT, ble_local_name TEXT, ble_access_address TEXT, pan_id TEXT,
      UNIQUE(source_id, seq));
    CREATE INDEX IF NOT EXISTS frames_ts ON frames(timestamp_us, id);
    CREATE TABLE IF NOT EXISTS results(
      id INTEGER PRIMARY KEY AUTOINCREMENT, created_at INTEGER NOT NULL,
      window_from INTEGER, window_to INTEGER, kind TEXT NOT NULL, payload TEXT NOT NULL);
    CREATE TABLE IF NOT EXISTS config(key TEXT PRIMARY KEY, value TEXT NOT NULL);)");
    auto st = db_.prepare("SELECT COUNT(*) FROM frames");
    st.step();
    rows_ = st.int64(0);
  }

  StoreResult store(const std::vector<WireFrame>& batch) {
    std::lock_guard lock(mu_);
    StoreResult r;
    r.accepted = batch.size();
    if (batch.empty()) return r;
    if (options_.max_rows && rows_ + static_cast<std::int64_t>(batch.size()) > *options_.max_rows)
      throw StorageFull("store holds " + std::to_string(rows_) + " of " + std::to_string(*options_.max_rows) + " rows");
    try {
      sql::Transaction tx(db_);
      auto st = db_.prepare(R"(INSERT OR IGNORE INTO frames(source_id, seq, protocol, timestamp_us, channel,
        rssi_dbm, length_bytes, kind, subtype, src, dst, ssid, ble_addr_type, ble_local_name,
        ble_access_address, pan_id) VALUES(?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?))");
      for (const auto& w : batch) {
        const FrameInfo& f = w.info;
        st.bind(1, w.source_id).bind(2, w.sequence_number);
        st.bind(3, std::string(to_string(f.protocol))).bind(4, f.timestamp_us);
        st.bind(5, f.channel).bind(6, f.rssi_dbm).bind(7, static_cast<std::int64_t>(f.length_bytes));
        st.bind(8, std::string(to_string(f.kind))).bind(9, f.subtype);
        st.bind(10, f.src).bind(11, f.dst).bind(12, f.ssid);
        st.bind(13, f.ble_addr_type).bind(14, f.ble_local_name).bind(15, f.ble_access_address).bind(16, f.pan_id);
        st.step();
        r.inserted += static_cast<std::size_t>(db_.changes());
        st.reset();
      }
      tx.commit();
    } catch (const sql::Error& e) {
      if (e.code() == SQLITE_FULL) throw StorageFull(e.what());
      throw;
    }
    rows_ += static_cast<std::int64_t>(r.inserted);
    if (options_.retain_us) prune_locked();
    return r;
  }

  std::vector<StoredFrame> query(const FrameQuery& q) {
    q.validate();
    std::string where = " WHERE 1=1";
    if (q.src) where += " AND src = :src";
    if (q.dst) where += " AND dst = :dst";
    if (q.protocol) where += " AND protocol = :protocol";
    if (q.kind) where += " AND kind = :kind";
    if (q.ssid) where += " AND ssid = :ssid";
    if (q.channel) where += " AND channel = :channel";
    if (q.window.from) where += " AND timestamp_us >= :from";
    if (q.window.to) where += " AND timestamp_us < :to";
    std::lock_guard lock(mu_);
    auto st = db_.prepare(std::string(kSelect) + where + " ORDER BY timestamp_us, id LIMIT :limit OFFSET :offset");
    int i = 1;
    for (const auto* v : {&q.src, &q.dst, &q.protocol, &q.kind, &q.ssid})
      if (*v) st.bind(i++, **v);
    if (q.channel) st.bind(i++, static_cast<std::int64_t>(*q.channel));
    if (q.window.from) st.bind(i++, *q.window.from);
    if (q.window.to) st.bind(i++, *q.window.to);
    st.bind(i, q.limit).bind(i + 1, q.offset);
    std::vector<StoredFrame> out;
    while (st.step()) out.push_back(row(st));
    return out;
  }

  /// Streams every frame in the window, in timestamp order, under the lock.
  void for_each(const TimeWindow& w, const std::function<void(const FrameInfo&)>& fn) {
    std::string where = " WHERE 1=1";
    if (w.from) where += " AND timestamp_us >= ?";
    if (w.to) where += " AND timestamp_us < ?";
    std::lock_guard lock(mu_);
    auto st = db_.prepare(std::string(kSelect) + where + " ORDER BY timestamp_us, id");
    int i = 1;
    if (w.from) st.bind(i++, *w.from);
    if (w.to) st.bind(i++, *w.to);
    while (st.step()) fn(row(st).info);
  }

  Aggregator aggregate(const TimeWindow& w) {
    Aggregator agg(w);
    for_each(w, [&](const FrameInfo& f) { agg.add(f); });
    return agg;
  }

  std::int64_t row_count() {
    std::lock_guard lock(mu_);
    return rows_;
  }

  std::int64_t prune_before(std::int64_t cutoff_us) {
    std::lock_guard lock(mu_);
    return prune_before_locked(cutoff_us);
  }

  AnalysisResult save_result(const std::string& kind, const TimeWindow& w, const json& payload) {
    std::lock_guard lock(mu_);
    AnalysisResult r;
    r.created_at = std::chrono::duration_cast<std::chrono::microseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
    r.window = w;
    r.kind = kind;
    r.payload = payload;
    auto st = db_.prepare("INSERT INTO results(created_at, window_from, window_to, kind, payload) VALUES(?,?,?,?,?)");
    st.bind(1, r.created_at).bind(2, w.from).bind(3, w.to).bind(4, kind).bind(5, payload.dump());
    st.step();
    r.id = db_.last_insert_rowid();
    return r;
  }

  std::optional<AnalysisResult> get_result(std::int64_t id) {
    std::lock_guard lock(mu_);
    auto st = db_.prepare(std::string(kSelectResult) + " WHERE id = ?");
    st.bind(1, id);
    if (!st.step()) return std::nullopt;
    return result_row(st);
  }

  std::vector<AnalysisResult> list_results(const std::optional<std::string>& kind) {
    std::lock_guard lock(mu_);
    auto st = db_.prepare(std::string(kSelectResult) + (kind ? " WHERE kind = ?" : "") + " ORDER BY id");
    if (kind) st.bind(1, *kind);
    std::vector<AnalysisResult> out;
    while (st.step()) out.push_back(result_row(st));
    return out;
  }

  ServiceConfig load_config() {
    std::lock_guard lock(mu_);
    auto st = db_.prepare("SELECT value FROM config WHERE key = 'service'");
    if (!st.step()) return {};
    return apply_config_update({}, json::parse(st.text(0)));
  }

  void save_config(const ServiceConfig& c) {
    std::lock_guard lock(mu_);
    json j = to_json(c);
    j.erase("total_observation_s");
    auto st = db_.prepare("INSERT INTO config(key, value) VALUES('service', ?) "
                          "ON CONFLICT(key) DO UPDATE SET value = excluded.value");
    st.bind(1, j.dump());
    st.step();
  }

 private:
  static constexpr const char* kSelect =
      "SELECT id, source_id, seq, protocol, timestamp_us, channel, rssi_dbm, length_bytes, kind, subtype, "
      "src, dst, ssid, ble_addr_type, ble_local_name, ble_access_address, pan_id FROM frames";
  static constexpr const char* kSelectResult =
      "SELECT id, created_at, window_from, window_to, kind, payload FROM results";

  static StoredFrame row(const sql::Statement& st) {
    StoredFrame s;
    s.id = st.int64(0);
    s.source_id = st.opt_text(1);
    s.sequence_number = st.opt_int64(2);
    FrameInfo& f = s.info;
    f.protocol = *parse_protocol(st.text(3));
    f.timestamp_us = st.int64(4);
    if (auto c = st.opt_int64(5)) f.channel = static_cast<int>(*c);
    if (auto r = st.opt_int64(6)) f.rssi_dbm = static_cast<int>(*r);
    f.length_bytes = static_cast<std::uint32_t>(st.int64(7));
    f.kind = *parse_kind(st.text(8));
    f.subtype = st.text(9);
    f.src = st.opt_text(10);
    f.dst = st.opt_text(11);
    f.ssid = st.opt_text(12);
    f.ble_addr_type = st.opt_text(13);
    f.ble_local_name = st.opt_text(14);
    f.ble_access_address = st.opt_text(15);
    f.pan_id = st.opt_text(16);
    return s;
  }

  static AnalysisResult result_row(const sql::Statement& st) {
    AnalysisResult r;
    r.id = st.int64(0);
    r.created_at = st.int64(1);
    r.window.from = st.opt_int64(2);
    r.window.to = st.opt_int64(3);
    r.kind = st.text(4);
    r.payload = json::parse(st.text(5));
    return r;
  }

  void prune_locked() {
    auto st = db_.prepare("SELECT MAX(timestamp_us) FROM frames");
    if (!st.step() || st.is_null(0)) return;
    prune_before_locked(st.int64(0) - *options_.retain_us);
  }

  std::int64_t prune_before_locked(std::int64_t cutoff) {
    auto st = db_.prepare("DELETE FROM frames WHERE timestamp_us < ?");
    st.bind(1, cutoff);
    st.step();
    const std::int64_t n = db_.changes();
    rows_ -= n;
    return n;
  }

  sql::Database db_;
  StoreOptions options_;
  std::mutex mu_;
  std::int64_t rows_ = 0;
};

}  // namespace nbscan
