// nbscan: capture replay, scenario generation, storage server and analysis.

#include <sys/stat.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "nbscan/classifier.hpp"
#include "nbscan/forward.hpp"
#include "nbscan/frame_info.hpp"
#include "nbscan/labels.hpp"
#include "nbscan/parse.hpp"
#include "nbscan/replay.hpp"
#include "nbscan/report.hpp"
#include "nbscan/scenario_config.hpp"
#include "nbscan/server.hpp"
#include "nbscan/spool.hpp"
#include "nbscan/storage.hpp"

namespace {

using namespace nbscan;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<int> parse_channel_list(const std::string& s) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = std::min(s.find(',', pos), s.size());
    const std::string item = s.substr(pos, comma - pos);
    const auto dash = item.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoi(item));
      } else {
        const int lo = std::stoi(item.substr(0, dash)), hi = std::stoi(item.substr(dash + 1));
        if (hi < lo) throw UsageError("bad channel range " + item);
        for (int c = lo; c <= hi; ++c) out.push_back(c);
      }
    } catch (const std::logic_error&) {
      throw UsageError("bad channel list " + s);
    }
    pos = comma + 1;
  }
  return out;
}

struct ScheduleFlags {
  std::optional<int> dwell, hops;
  std::string channels;

  void add(CLI::App* cmd) {
    cmd->add_option("--dwell", dwell, "Dwell time per channel in seconds (T_d)");
    cmd->add_option("--hops", hops, "Number of channel hops (T_h)");
    cmd->add_option("--channels", channels, "Channel list, e.g. 1-13 or 1,6,11");
  }

  std::optional<HopSchedule> build(Protocol p) const {
    if (!dwell && !hops && channels.empty()) return std::nullopt;
    ScanConfig c = p == Protocol::zigbee ? ScanConfig::zigbee_default() : ScanConfig::wifi_default();
    if (dwell) c.dwell_time_s = *dwell;
    if (hops) c.hops = *hops;
    if (!channels.empty()) c.channels = parse_channel_list(channels);
    try {
      return build_hop_schedule(c);
    } catch (const InvalidConfig& e) {
      throw UsageError(e.what());
    }
  }
};

std::string default_source_id() {
  char host[256] = {};
  gethostname(host, sizeof host - 1);
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  return std::string(host) + "-" + std::to_string(getpid()) + "-" +
         std::to_string(std::chrono::duration_cast<std::chrono::microseconds>(now).count());
}

/// Where parsed frames go: JSON lines on a stream, or an HTTP sink.
class Output {
 public:
  Output(const std::string& sink_url, std::ostream& lines, const std::string& source_id, const std::string& spool)
      : lines_(lines) {
    if (!sink_url.empty()) {
      sink_ = HttpSink::from_url(sink_url);
      ForwarderOptions opt;
      // A fresh id per run, so a second run is not deduplicated against the first.
      opt.source_id = source_id.empty() ? default_source_id() : source_id;
      opt.spool_path = spool;
      forwarder_ = std::make_unique<Forwarder>(*sink_, opt);
    }
  }

  void add(const FrameInfo& f) {
    if (forwarder_) forwarder_->add(f);
    else lines_ << to_json(f).dump() << '\n';
  }

  void finish(std::size_t parse_failures) {
    std::string msg = std::to_string(parse_failures) + " parse failures";
    if (forwarder_) {
      forwarder_->flush();
      const auto& s = forwarder_->stats();
      msg = std::to_string(s.frames_in) + " frames, " + msg + ", " + std::to_string(s.delivered) + " delivered, " +
            std::to_string(s.spooled) + " spooled";
    }
    lines_.flush();
    std::cerr << msg << '\n';
  }

 private:
  std::ostream& lines_;
  std::unique_ptr<HttpSink> sink_;
  std::unique_ptr<Forwarder> forwarder_;
};

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string default_db() {
  if (const char* env = std::getenv("NEIGHBORHOOD_DB"); env && *env) return env;
  return "neighborhood.db";
}

// Filters a source through a hop schedule anchored at the first frame.
class ScheduledSource : public FrameSource {
 public:
  ScheduledSource(FrameSource& inner, std::optional<HopSchedule> schedule)
      : inner_(inner), schedule_(std::move(schedule)) {}
  std::optional<RawFrame> next() override {
    while (auto f = inner_.next()) {
      if (!schedule_) return f;
      if (!origin_) origin_ = f->meta.timestamp_us;
      if (f->meta.channel && schedule_->listening(*f->meta.channel, f->meta.timestamp_us - *origin_)) return f;
    }
    return std::nullopt;
  }

 private:
  FrameSource& inner_;
  std::optional<HopSchedule> schedule_;
  std::optional<std::int64_t> origin_;
};

std::size_t drain(FrameSource& src, Output& out) {
  std::size_t failures = 0;
  while (auto f = src.next()) {
    auto r = try_parse_frame(*f);
    if (auto* rec = std::get_if<FrameRecord>(&r)) out.add(extract(*rec));
    else ++failures;
  }
  return failures;
}

ScenarioSpec resolve_spec(const std::string& spec_path, const std::string& scenario, std::optional<std::uint64_t> seed,
                          std::optional<std::int64_t> duration) {
  ScenarioSpec spec;
  if (!spec_path.empty()) spec = load_scenario(spec_path);
  else if (auto b = scenarios::builtin(scenario.empty() ? "high_load" : scenario, 1)) spec = *b;
  else throw UsageError("unknown scenario " + scenario);
  if (seed) spec.seed = *seed;
  if (duration) spec.duration_s = *duration;
  return spec;
}

struct BandFlags {
  std::string r_sr_min, r_sr_max, r_bf_min, r_bf_max;

  void add(CLI::App* cmd) {
    cmd->add_option("--r-sr-min", r_sr_min, "Camera band lower R_sr bound");
    cmd->add_option("--r-sr-max", r_sr_max, "Camera band upper R_sr bound");
    cmd->add_option("--r-bf-min", r_bf_min, "Camera band lower R_bf bound");
    cmd->add_option("--r-bf-max", r_bf_max, "Camera band upper R_bf bound");
  }

  CameraBand build() const {
    CameraBand b;
    const auto set = [](const std::string& v, Rational& out) {
      if (v.empty()) return;
      auto r = Rational::parse(v);
      if (!r) throw UsageError("bad band value " + v);
      out = *r;
    };
    set(r_sr_min, b.r_sr_min);
    set(r_sr_max, b.r_sr_max);
    set(r_bf_min, b.r_bf_min);
    set(r_bf_max, b.r_bf_max);
    try {
      b.validate();
    } catch (const InvalidConfig& e) {
      throw UsageError(e.what());
    }
    return b;
  }
};

void read_jsonl(std::istream& in, Aggregator& agg) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      agg.add(frame_info_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("input line " + std::to_string(n) + ": " + e.what());
    }
  }
}

void read_server(const std::string& url, const TimeWindow& w, Aggregator& agg) {
  std::string hostport = url.rfind("http://", 0) == 0 ? url.substr(7) : url;
  while (!hostport.empty() && hostport.back() == '/') hostport.pop_back();
  const auto colon = hostport.rfind(':');
  httplib::Client cli(hostport.substr(0, colon), colon == std::string::npos ? 80 : std::stoi(hostport.substr(colon + 1)));
  const std::int64_t page = 10000;
  for (std::int64_t offset = 0;; offset += page) {
    httplib::Params params{{"limit", std::to_string(page)}, {"offset", std::to_string(offset)}};
    if (w.from) params.emplace("from", std::to_string(*w.from));
    if (w.to) params.emplace("to", std::to_string(*w.to));
    auto res = cli.Get("/api/frames", params, httplib::Headers{});
    if (!res) throw std::runtime_error("GET /api/frames: " + httplib::to_string(res.error()));
    if (res->status != 200) throw std::runtime_error("GET /api/frames returned " + std::to_string(res->status) + ": " + res->body);
    const json body = json::parse(res->body);
    for (const auto& f : body.at("frames")) agg.add(frame_info_from_json(f));
    if (body.at("count").get<std::int64_t>() < page) break;
  }
}

bool stdin_has_data() {
  if (isatty(STDIN_FILENO)) return false;
  struct stat st {};
  if (fstat(STDIN_FILENO, &st) != 0) return false;
  return S_ISFIFO(st.st_mode) || (S_ISREG(st.st_mode) && st.st_size > 0);
}

std::atomic<bool> g_stop{false};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passive link-layer scanner: replay, generate, serve, analyze, calibrate"};
  app.require_subcommand(1);
  std::string format = "text";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"text", "json"}));

  // replay
  auto* replay = app.add_subcommand("replay", "Replay a pcap capture through the analyzer");
  std::string replay_path, sink_url, out_path, source_id, spool_path = "overflow.jsonl";
  bool realtime = false;
  double speed = 1.0;
  ScheduleFlags replay_sched;
  replay->add_option("path", replay_path, "Capture file")->required();
  replay->add_option("--sink", sink_url, "Storage server, e.g. http://127.0.0.1:8080");
  replay->add_option("--out", out_path, "Write records as JSON lines to this file instead of stdout");
  replay->add_option("--source-id", source_id, "Idempotency source id for posted records (default: unique per run)");
  replay->add_option("--spool", spool_path, "Overflow file for undeliverable records");
  replay->add_flag("--realtime", realtime, "Pace replay to the capture clock");
  replay->add_option("--speed", speed, "Realtime speed factor")->check(CLI::PositiveNumber);
  replay_sched.add(replay);

  // generate
  auto* generate = app.add_subcommand("generate", "Generate a deterministic synthetic scenario");
  std::string spec_path, scenario_name, labels_out;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> duration;
  ScheduleFlags gen_sched;
  generate->add_option("--spec", spec_path, "Scenario config file");
  generate->add_option("--scenario", scenario_name, "Built-in scenario: high_load, low_load, ble_pairs, zigbee_hue");
  generate->add_option("--seed", seed, "Override the scenario seed");
  generate->add_option("--duration", duration, "Override the duration in seconds")->check(CLI::NonNegativeNumber);
  generate->add_option("--sink", sink_url, "Storage server to post records to");
  generate->add_option("--out", out_path, "Output file: .pcap for raw frames, anything else for JSON lines");
  generate->add_option("--labels", labels_out, "Write the ground-truth labels as JSON");
  generate->add_option("--source-id", source_id, "Idempotency source id for posted records (default: unique per run)");
  generate->add_option("--spool", spool_path, "Overflow file for undeliverable records");
  gen_sched.add(generate);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the storage and analysis HTTP API");
  std::string bind = "127.0.0.1:8080", db_path;
  std::optional<std::int64_t> retain_s, max_rows;
  serve->add_option("--bind", bind, "host:port to listen on");
  serve->add_option("--db", db_path, "Database file (default $NEIGHBORHOOD_DB or neighborhood.db)");
  serve->add_option("--retain", retain_s, "Keep only the newest N seconds of frames")->check(CLI::PositiveNumber);
  serve->add_option("--max-rows", max_rows, "Refuse inserts beyond this many rows")->check(CLI::PositiveNumber);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Aggregate, build the graph and classify devices");
  std::string input_path, server_url, truth_path;
  std::optional<std::int64_t> from, to;
  BandFlags band_flags;
  analyze->add_option("--input", input_path, "JSON lines file of records, - for stdin");
  analyze->add_option("--server", server_url, "Read frames from a running server");
  analyze->add_option("--db", db_path, "Database file");
  analyze->add_option("--from", from, "Window start, microseconds since epoch");
  analyze->add_option("--to", to, "Window end (exclusive)");
  analyze->add_option("--labels", truth_path, "Ground-truth labels for a confusion matrix");
  band_flags.add(analyze);

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Derive the camera band from labeled generated runs");
  int runs = 10;
  calibrate->add_option("--spec", spec_path, "Scenario config file");
  calibrate->add_option("--scenario", scenario_name, "Built-in scenario");
  calibrate->add_option("--seed", seed, "First seed; run i uses seed + i");
  calibrate->add_option("--duration", duration, "Duration per run in seconds")->check(CLI::PositiveNumber);
  calibrate->add_option("--runs", runs, "Number of runs")->check(CLI::Range(2, 10000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const bool as_json = format == "json";

  try {
    if (*replay) {
      std::ofstream file;
      if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot write " + out_path);
      }
      ReplayOptions opt;
      opt.realtime = realtime;
      opt.speed = speed;
      // Link type decides the default channel list, so peek at the header.
      opt.schedule = replay_sched.build(PcapReader(replay_path).protocol());
      ReplaySource src(replay_path, opt);
      Output out(sink_url, out_path.empty() ? std::cout : file, source_id, spool_path);
      const std::size_t failures = drain(src, out);
      out.finish(failures);
      const auto& s = src.stats();
      if (s.out_of_order) std::cerr << s.out_of_order << " out-of-order packets re-sorted\n";
      if (s.bad_pseudo_header) std::cerr << s.bad_pseudo_header << " packets with unusable capture headers\n";
      return 0;
    }

    if (*generate) {
      const ScenarioSpec spec = resolve_spec(spec_path, scenario_name, seed, duration);
      ScenarioOutput gen = generate_scenario(spec);
      if (!labels_out.empty()) {
        std::ofstream lf(labels_out);
        lf << to_json(gen.truth).dump(2) << '\n';
        if (!lf) throw std::runtime_error("cannot write " + labels_out);
      }
      ScenarioSource base(std::move(gen));
      const Protocol first = spec.devices.empty() ? Protocol::wifi : spec.devices.front().protocol;
      ScheduledSource src(base, gen_sched.build(first));
      if (has_suffix(out_path, ".pcap")) {
        const std::size_t n = spool_raw(src, out_path);
        std::cerr << n << " frames written to " << out_path << '\n';
        return 0;
      }
      std::ofstream file;
      if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot write " + out_path);
      }
      Output out(sink_url, out_path.empty() ? std::cout : file, source_id, spool_path);
      out.finish(drain(src, out));
      return 0;
    }

    if (*serve) {
      const auto colon = bind.rfind(':');
      if (colon == std::string::npos) throw UsageError("--bind must be host:port");
      const std::string host = bind.substr(0, colon);
      const int port = std::stoi(bind.substr(colon + 1));
      StoreOptions opt;
      if (retain_s) opt.retain_us = *retain_s * 1000000;
      opt.max_rows = max_rows;
      const std::string db = db_path.empty() ? default_db() : db_path;
      FrameStore store(db, opt);
      ApiServer server(store);
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      const int bound = server.start(host, port);
      std::cerr << "serving " << db << " on " << host << ":" << bound << '\n';
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      return 0;
    }

    if (*analyze) {
      const TimeWindow w{from, to};
      if (!w.valid()) throw UsageError("--from is after --to");
      const CameraBand band = band_flags.build();
      Aggregator agg(w);
      if (!input_path.empty() && input_path != "-") {
        std::ifstream in(input_path);
        if (!in) throw std::runtime_error("cannot open " + input_path);
        read_jsonl(in, agg);
      } else if (input_path == "-") {
        read_jsonl(std::cin, agg);
      } else if (!server_url.empty()) {
        read_server(server_url, w, agg);
      } else if (db_path.empty() && !std::getenv("NEIGHBORHOOD_DB") && stdin_has_data()) {
        read_jsonl(std::cin, agg);
      } else {
        FrameStore store(db_path.empty() ? default_db() : db_path);
        agg = store.aggregate(w);
      }
      const Classification c = classify(agg, band);
      std::optional<ConfusionMatrix> confusion;
      std::map<std::string, std::string> names;
      if (!truth_path.empty()) {
        const GroundTruth truth = load_ground_truth(truth_path);
        names = truth.names;
        // Devices the capture never saw cannot be predicted; score the rest.
        auto all = camera_truth(truth);
        std::map<std::string, CameraLabel> seen;
        for (const auto& [addr, _] : c.labels())
          if (auto it = all.find(addr); it != all.end()) seen.insert(*it);
        confusion = evaluate(c.labels(), seen);
      }
      if (as_json) std::cout << analysis_json(agg, c, confusion).dump(2) << '\n';
      else std::cout << render_text(agg, c, names, confusion);
      return 0;
    }

    if (*calibrate) {
      const ScenarioSpec base = resolve_spec(spec_path, scenario_name, seed, duration);
      std::vector<RatioPair> samples;
      for (int i = 0; i < runs; ++i) {
        ScenarioSpec spec = base;
        spec.seed = base.seed + static_cast<std::uint64_t>(i);
        const ScenarioOutput gen = generate_scenario(spec);
        Aggregator agg;
        for (const auto& f : gen.frames)
          if (auto r = try_parse_frame(f.raw); std::holds_alternative<FrameRecord>(r))
            agg.add(extract(std::get<FrameRecord>(r)));
        for (const auto& addr : gen.truth.addresses_with_role(to_string(RoleProfile::camera_streaming)))
          if (auto it = agg.stats().find(addr); it != agg.stats().end()) samples.push_back(compute_ratios(it->second));
      }
      const CameraBand b = calibrate_band(samples);
      if (as_json) {
        json j = to_json(b);
        j["samples"] = samples.size();
        std::cout << j.dump(2) << '\n';
      } else {
        std::cout << "samples: " << samples.size() << '\n'
                  << "R_sr: [" << b.r_sr_min.to_decimal(4) << ", " << b.r_sr_max.to_decimal(4) << "]\n"
                  << "R_bf: [" << b.r_bf_min.to_decimal(4) << ", " << b.r_bf_max.to_decimal(4) << "]\n";
      }
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidSpec& e) {
    std::cerr << "InvalidSpec: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
