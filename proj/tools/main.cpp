// gazeflow command-line frontend: simulate | replay | analyze | serve.
// Exit codes: 0 success, 1 usage error, 2 input error, 3 runtime failure.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gazeflow/gazeflow.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

std::atomic<bool> g_interrupted{false};

void on_sigint(int) { g_interrupted.store(true); }

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw InputError("invalid JSON in " + path);
    return j;
}

gazeflow::PipelineConfig load_config(const std::string& path) {
    if (path.empty()) {
        std::cerr << "note: no config file given, using defaults\n";
        return {};
    }
    return gazeflow::load_config_file(path);  // throws on missing/bad file
}

nlohmann::json stats_to_json(const gazeflow::PipelineStats& ps) {
    nlohmann::json j;
    j["samples_acquired"] = ps.samples_acquired;
    j["source_skipped"] = ps.source_skipped;
    j["samples_usable"] = ps.samples_usable;
    j["samples_unusable"] = ps.samples_unusable;
    j["events_emitted"] = ps.events_emitted;
    j["snapshots_emitted"] = ps.snapshots_emitted;
    j["decisions_emitted"] = ps.decisions_emitted;
    j["queue_max"] = {{"raw", ps.queue_max_raw},
                      {"pre", ps.queue_max_pre},
                      {"detect", ps.queue_max_detect},
                      {"sink", ps.queue_max_sink}};
    j["wall_time_s"] = ps.wall_time_s;
    if (ps.fixation_latency.count > 0) {
        j["fixation_latency_ms"] = {{"count", ps.fixation_latency.count},
                                    {"mean", ps.fixation_latency.mean_ms},
                                    {"p50", ps.fixation_latency.p50_ms},
                                    {"p95", ps.fixation_latency.p95_ms},
                                    {"p99", ps.fixation_latency.p99_ms},
                                    {"max", ps.fixation_latency.max_ms}};
    }
    return j;
}

nlohmann::json recorder_stats_to_json(const gazeflow::RecorderStats& rs) {
    nlohmann::json j;
    j["samples_written"] = rs.samples_written;
    j["events_written"] = rs.events_written;
    j["snapshots_written"] = rs.snapshots_written;
    j["decisions_written"] = rs.decisions_written;
    j["samples_dropped"] = rs.samples_dropped;
    j["flushes"] = rs.flushes;
    if (!rs.error.empty()) j["error"] = rs.error;
    return j;
}

/// Runs the pipeline to completion, honoring Ctrl-C.
gazeflow::PipelineStats run_to_completion(gazeflow::PipelineHandle& handle) {
    auto done = std::async(std::launch::async, [&] { return handle.join(); });
    while (done.wait_for(std::chrono::milliseconds(100)) != std::future_status::ready) {
        if (g_interrupted.load()) handle.stop();
    }
    return done.get();
}

// ----------------------------------------------------------------------------
// simulate
// ----------------------------------------------------------------------------

int cmd_simulate(const std::string& scenario_path, std::optional<std::uint64_t> seed,
                 const std::string& out_dir) {
    auto scenario = gazeflow::wire::scenario_from_json(load_json_file(scenario_path));
    if (seed) scenario.rng_seed = *seed;
    auto [samples, labels] = gazeflow::generate_samples(scenario);

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream raw(std::filesystem::path(out_dir) / "raw.csv");
        if (!raw) throw std::runtime_error("cannot write raw.csv in " + out_dir);
        raw << gazeflow::raw_csv::kHeader << '\n';
        for (const auto& s : samples) raw << gazeflow::raw_csv::format_row(s) << '\n';
    }
    {
        std::ofstream gt(std::filesystem::path(out_dir) / "ground_truth.jsonl");
        if (!gt) throw std::runtime_error("cannot write ground_truth.jsonl in " + out_dir);
        for (const auto& l : labels.intervals) gt << gazeflow::wire::label_to_json(l).dump() << '\n';
    }

    std::int64_t fix = 0, sac = 0, blink = 0, gap = 0;
    for (const auto& l : labels.intervals) {
        switch (l.kind) {
            case gazeflow::EventKind::Fixation: ++fix; break;
            case gazeflow::EventKind::Saccade: ++sac; break;
            case gazeflow::EventKind::Blink: ++blink; break;
            case gazeflow::EventKind::Gap: ++gap; break;
        }
    }
    std::cout << "samples: " << samples.size() << "\n"
              << "labels: " << labels.intervals.size() << " (fixation " << fix << ", saccade "
              << sac << ", blink " << blink << ", gap " << gap << ")\n"
              << "seed: " << scenario.rng_seed << "\n";
    return kExitOk;
}

// ----------------------------------------------------------------------------
// replay
// ----------------------------------------------------------------------------

int cmd_replay(const std::string& input_csv, const std::string& config_path,
               const std::string& out_dir, bool realtime) {
    auto config = load_config(config_path);
    config.collect_latency = realtime;

    std::unique_ptr<gazeflow::ReplaySource> source;
    try {
        source = std::make_unique<gazeflow::ReplaySource>(
            input_csv, realtime ? gazeflow::Pacing::Realtime : gazeflow::Pacing::MaxSpeed);
    } catch (const std::exception& e) {
        throw InputError(e.what());
    }
    const auto* source_ptr = source.get();

    config.recorder.output_dir = out_dir;
    config.recorder.record_raw = false;  // the input file already is the raw log
    gazeflow::Recorder recorder(config.recorder);

    gazeflow::PipelineSinks sinks;
    sinks.recorder = &recorder;
    auto handle = gazeflow::run_pipeline(std::move(source), config, sinks);
    const auto stats = run_to_completion(*handle);
    const auto rec_stats = recorder.close();

    for (const auto& issue : source_ptr->issues())
        std::cerr << "warning: " << input_csv << ":" << issue.line << ": " << issue.message
                  << " (row skipped)\n";
    if (stats.source_skipped > 0)
        std::cerr << "warning: " << stats.source_skipped << " input row(s) skipped\n";

    nlohmann::json stats_json = stats_to_json(stats);
    stats_json["recorder"] = recorder_stats_to_json(rec_stats);
    std::ofstream sf(std::filesystem::path(out_dir) / "stats.json");
    sf << stats_json.dump(2) << '\n';
    if (!sf) throw std::runtime_error("cannot write stats.json");

    std::cout << "samples: " << stats.samples_acquired << " (usable " << stats.samples_usable
              << ", unusable " << stats.samples_unusable << ", skipped rows "
              << stats.source_skipped << ")\n"
              << "events: " << stats.events_emitted << ", snapshots: " << stats.snapshots_emitted
              << ", decisions: " << stats.decisions_emitted << "\n";
    if (!rec_stats.error.empty()) {
        std::cerr << "error: recorder: " << rec_stats.error << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

// ----------------------------------------------------------------------------
// analyze
// ----------------------------------------------------------------------------

std::vector<gazeflow::GazeEvent> load_events_jsonl(const std::string& path,
                                                   std::uint64_t& skipped) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    std::vector<gazeflow::GazeEvent> events;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            ++skipped;
            continue;
        }
        if (auto ev = gazeflow::wire::event_from_json(j)) events.push_back(std::move(*ev));
        else ++skipped;
    }
    return events;
}

int cmd_analyze(const std::string& events_path, const std::string& aoi_path,
                const std::string& raw_path, double window_s, double step_s,
                double baseline_first_s, const std::string& out_dir) {
    std::uint64_t skipped = 0;
    auto events = load_events_jsonl(events_path, skipped);
    if (skipped > 0) std::cerr << "warning: " << skipped << " unparseable event line(s) skipped\n";

    gazeflow::MetricsConfig mc;
    mc.window_s = window_s;
    mc.step_s = step_s;
    if (!aoi_path.empty()) mc.aois = gazeflow::wire::aois_from_json(load_json_file(aoi_path));

    // Pupil metrics need the raw samples; without them the index is absent.
    std::vector<gazeflow::PupilTick> ticks;
    gazeflow::PupilBaseline baseline{0.0, {}, {}};
    if (!raw_path.empty()) {
        gazeflow::ReplaySource src(raw_path, gazeflow::Pacing::MaxSpeed);
        std::vector<gazeflow::GazeSample> samples;
        while (auto s = src.next()) samples.push_back(*s);
        for (const auto& s : samples)
            ticks.push_back({s.timestamp, s.validity.pupil ? s.mean_pupil_mm() : std::nullopt});
        try {
            baseline = gazeflow::pupil_baseline(samples, baseline_first_s);
        } catch (const std::exception& e) {
            std::cerr << "warning: no pupil baseline: " << e.what() << "\n";
        }
    } else if (!events.empty()) {
        // Drive the window clock from the event timeline instead.
        const auto last = events.back().end;
        for (std::int64_t t = 0; t <= last.micros; t += std::llround(step_s * 1e6))
            ticks.push_back({gazeflow::Timestamp{t}, std::nullopt});
        ticks.push_back({last, std::nullopt});
    }

    const auto snapshots = gazeflow::compute_window_metrics(events, ticks, baseline, mc);

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream jf(std::filesystem::path(out_dir) / "metrics.json");
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& s : snapshots) arr.push_back(gazeflow::wire::snapshot_to_json(s));
        jf << arr.dump(2) << '\n';
        if (!jf) throw std::runtime_error("cannot write metrics.json");
    }
    {
        std::ofstream cf(std::filesystem::path(out_dir) / "metrics.csv");
        cf << "window_start_s,window_end_s,mean_fixation_duration_s,fixation_count,"
              "mean_saccade_velocity_deg_s,peak_saccade_velocity_deg_s,saccade_count,"
              "blink_rate_per_min,pupil_dilation_index";
        for (const auto& a : mc.aois) cf << ",dwell_s:" << a.id << ",ttff_s:" << a.id;
        cf << '\n';
        char buf[64];
        auto num = [&](double v) {
            std::snprintf(buf, sizeof(buf), "%.9g", v);
            cf << buf;
        };
        for (const auto& s : snapshots) {
            num(s.window_start.seconds());
            cf << ',';
            num(s.window_end.seconds());
            cf << ',';
            num(s.mean_fixation_duration_s);
            cf << ',' << s.fixation_count << ',';
            num(s.mean_saccade_velocity_deg_s);
            cf << ',';
            num(s.peak_saccade_velocity_deg_s);
            cf << ',' << s.saccade_count << ',';
            num(s.blink_rate_per_min);
            cf << ',';
            if (s.pupil_dilation_index) num(*s.pupil_dilation_index);
            for (const auto& a : mc.aois) {
                cf << ',';
                const auto dw = s.dwell_time_s.find(a.id);
                num(dw != s.dwell_time_s.end() ? dw->second : 0.0);
                cf << ',';
                const auto tf = s.ttff_s.find(a.id);
                if (tf != s.ttff_s.end()) num(tf->second);
            }
            cf << '\n';
        }
        if (!cf) throw std::runtime_error("cannot write metrics.csv");
    }

    // Session summary over all snapshots.
    auto mean_of = [&](auto getter) {
        double sum = 0.0;
        std::int64_t n = 0;
        for (const auto& s : snapshots) {
            if (auto v = getter(s)) {
                sum += *v;
                ++n;
            }
        }
        return n > 0 ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt;
    };
    using Snap = gazeflow::MetricsSnapshot;
    auto print = [](const char* name, std::optional<double> v) {
        if (v) std::printf("%-28s %.4f\n", name, *v);
        else std::printf("%-28s -\n", name);
    };
    std::printf("windows: %zu\n", snapshots.size());
    print("mean fixation duration (s)", mean_of([](const Snap& s) {
              return s.fixation_count > 0 ? std::optional<double>(s.mean_fixation_duration_s)
                                          : std::nullopt;
          }));
    print("mean saccade velocity", mean_of([](const Snap& s) {
              return s.saccade_count > 0 ? std::optional<double>(s.mean_saccade_velocity_deg_s)
                                         : std::nullopt;
          }));
    print("peak saccade velocity", mean_of([](const Snap& s) {
              return s.saccade_count > 0 ? std::optional<double>(s.peak_saccade_velocity_deg_s)
                                         : std::nullopt;
          }));
    print("blink rate (/min)",
          mean_of([](const Snap& s) { return std::optional<double>(s.blink_rate_per_min); }));
    print("pupil dilation index",
          mean_of([](const Snap& s) { return s.pupil_dilation_index; }));
    for (const auto& a : mc.aois) {
        double dwell = 0.0;
        bool hit = false;
        for (const auto& s : snapshots) {
            const auto it = s.ttff_s.find(a.id);
            if (it != s.ttff_s.end()) hit = true;
        }
        if (!events.empty())
            dwell = gazeflow::dwell_time(events, a, gazeflow::Timestamp{0}, events.back().end);
        std::printf("dwell on %-18s %.4f s\n", a.id.c_str(), dwell);
        if (!hit) std::cerr << "warning: AOI '" << a.id << "' was never fixated\n";
    }
    return kExitOk;
}

// ----------------------------------------------------------------------------
// serve
// ----------------------------------------------------------------------------

std::unique_ptr<gazeflow::SampleSource> make_source(const std::string& spec, bool max_speed,
                                                    std::optional<std::uint64_t> seed) {
    const auto pacing = max_speed ? gazeflow::Pacing::MaxSpeed : gazeflow::Pacing::Realtime;
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon == std::string::npos ? spec.size() : colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "synthetic") {
        auto scenario = gazeflow::wire::scenario_from_json(load_json_file(rest));
        if (seed) scenario.rng_seed = *seed;
        return gazeflow::generate_synthetic(scenario, pacing).first;
    }
    if (kind == "replay") {
        try {
            return gazeflow::replay_file(rest, pacing);
        } catch (const std::exception& e) {
            throw InputError(e.what());
        }
    }
    if (kind == "listen") {
        const auto at = rest.rfind(':');
        if (at == std::string::npos) throw InputError("listen source needs HOST:PORT");
        return gazeflow::listen_stream(rest.substr(0, at),
                                       static_cast<std::uint16_t>(std::stoi(rest.substr(at + 1))));
    }
    throw InputError("unknown source spec '" + spec + "' (synthetic:|replay:|listen:)");
}

int cmd_serve(const std::string& bind, const std::string& source_spec,
              const std::string& config_path, const std::string& out_dir, bool max_speed,
              std::optional<std::uint64_t> seed) {
    auto config = load_config(config_path);
    config.collect_latency = !max_speed;

    const auto at = bind.rfind(':');
    if (at == std::string::npos) throw InputError("--bind needs HOST:PORT");
    gazeflow::ServerConfig sc;
    sc.bind_host = bind.substr(0, at);
    sc.port = static_cast<std::uint16_t>(std::stoi(bind.substr(at + 1)));
    gazeflow::EventStreamServer server(sc);
    std::cout << "listening on " << sc.bind_host << ":" << server.port() << "\n";

    std::optional<gazeflow::Recorder> recorder;
    if (!out_dir.empty()) {
        config.recorder.output_dir = out_dir;
        recorder.emplace(config.recorder);
    }

    gazeflow::PipelineSinks sinks;
    sinks.stream = &server;
    if (recorder) sinks.recorder = &*recorder;

    auto source = make_source(source_spec, max_speed, seed);
    auto handle = gazeflow::run_pipeline(std::move(source), config, sinks);
    const auto stats = run_to_completion(*handle);

    nlohmann::json stats_json = stats_to_json(stats);
    if (recorder) stats_json["recorder"] = recorder_stats_to_json(recorder->close());
    server.publish_stats(stats_json);
    server.shutdown();

    std::cout << "session done: " << stats.samples_acquired << " samples, "
              << stats.events_emitted << " events, " << stats.decisions_emitted
              << " decisions\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    std::signal(SIGINT, on_sigint);

    CLI::App app{"gazeflow - real-time gaze event detection, engagement metrics and "
                 "dynamic difficulty"};
    app.require_subcommand(1);

    // simulate
    std::string scenario_path, out_dir;
    std::optional<std::uint64_t> seed;
    auto* sim = app.add_subcommand("simulate", "render a synthetic scenario to raw CSV + labels");
    sim->add_option("scenario", scenario_path, "scenario JSON file")->required();
    sim->add_option("--seed", seed, "override the scenario RNG seed");
    sim->add_option("--out", out_dir, "output directory")->required();

    // replay
    std::string input_csv, config_path;
    bool realtime = false;
    auto* rep = app.add_subcommand("replay", "run the full pipeline over a raw CSV recording");
    rep->add_option("input", input_csv, "raw CSV file")->required();
    rep->add_option("--config", config_path, "pipeline config file");
    rep->add_option("--out", out_dir, "output directory")->required();
    rep->add_flag("--realtime", realtime, "pace samples by their timestamps");

    // analyze
    std::string events_path, aoi_path, raw_path;
    double window_s = 10.0, step_s = 1.0, baseline_s = 5.0;
    auto* ana = app.add_subcommand("analyze", "batch metrics over an events JSONL log");
    ana->add_option("events", events_path, "events JSONL file")->required();
    ana->add_option("--aoi", aoi_path, "AOI definitions JSON");
    ana->add_option("--raw", raw_path, "raw CSV (enables pupil metrics)");
    ana->add_option("--window", window_s, "window length, seconds");
    ana->add_option("--step", step_s, "window step, seconds");
    ana->add_option("--baseline-s", baseline_s, "pupil baseline interval, seconds");
    ana->add_option("--out", out_dir, "output directory")->required();

    // serve
    std::string bind = "127.0.0.1:7007", source_spec;
    bool max_speed = false;
    auto* srv = app.add_subcommand("serve", "run a session and broadcast it over TCP");
    srv->add_option("--bind", bind, "HOST:PORT to listen on");
    srv->add_option("--source", source_spec,
                    "synthetic:FILE | replay:FILE | listen:HOST:PORT")
        ->required();
    srv->add_option("--config", config_path, "pipeline config file");
    srv->add_option("--out", out_dir, "also record the session to this directory");
    srv->add_option("--seed", seed, "override a synthetic scenario's seed");
    srv->add_flag("--max-speed", max_speed, "do not pace the source in real time");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(scenario_path, seed, out_dir);
        if (rep->parsed()) return cmd_replay(input_csv, config_path, out_dir, realtime);
        if (ana->parsed())
            return cmd_analyze(events_path, aoi_path, raw_path, window_s, step_s, baseline_s,
                               out_dir);
        if (srv->parsed()) return cmd_serve(bind, source_spec, config_path, out_dir, max_speed, seed);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
