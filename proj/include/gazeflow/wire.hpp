#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gazeflow/dda.hpp"
#include "gazeflow/metrics.hpp"
#include "gazeflow/synthetic.hpp"
#include "gazeflow/types.hpp"

namespace gazeflow::wire {

using nlohmann::json;

// ============================================================================
// Samples
// ============================================================================

inline json sample_to_json(const GazeSample& s) {
    json j;
    j["t_us"] = s.timestamp.micros;
    j["dir"] = {s.gaze_direction.x, s.gaze_direction.y, s.gaze_direction.z};
    j["origin_mm"] = {s.gaze_origin_mm.x, s.gaze_origin_mm.y, s.gaze_origin_mm.z};
    if (s.pupil_left_mm) j["pupil_l_mm"] = *s.pupil_left_mm;
    if (s.pupil_right_mm) j["pupil_r_mm"] = *s.pupil_right_mm;
    if (s.openness_left) j["open_l"] = *s.openness_left;
    if (s.openness_right) j["open_r"] = *s.openness_right;
    j["validity"] = s.validity.to_mask();
    return j;
}

inline std::optional<GazeSample> sample_from_json(const json& j) {
    try {
        GazeSample s;
        s.timestamp.micros = j.at("t_us").get<std::int64_t>();
        if (s.timestamp.micros < 0) return std::nullopt;
        const auto& d = j.at("dir");
        s.gaze_direction = {d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()};
        if (j.contains("origin_mm")) {
            const auto& o = j.at("origin_mm");
            s.gaze_origin_mm = {o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()};
        }
        if (j.contains("pupil_l_mm")) s.pupil_left_mm = j.at("pupil_l_mm").get<double>();
        if (j.contains("pupil_r_mm")) s.pupil_right_mm = j.at("pupil_r_mm").get<double>();
        if (j.contains("open_l")) s.openness_left = j.at("open_l").get<double>();
        if (j.contains("open_r")) s.openness_right = j.at("open_r").get<double>();
        const int mask = j.value("validity", 0);
        if (mask < 0 || mask > 7) return std::nullopt;
        s.validity = Validity::from_mask(mask);
        const ValidityReport r = validate_sample(s);
        if (s.validity.direction && !r.direction_unit_norm) return std::nullopt;
        if (!r.pupil_in_range || !r.openness_in_range) return std::nullopt;
        return s;
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

// ============================================================================
// Events
// ============================================================================

inline json event_to_json(const GazeEvent& ev) {
    json st;
    if (const auto* f = ev.fixation()) {
        st["centroid_dir"] = {f->centroid_direction.x, f->centroid_direction.y,
                              f->centroid_direction.z};
        st["centroid_origin_mm"] = {f->centroid_origin_mm.x, f->centroid_origin_mm.y,
                                    f->centroid_origin_mm.z};
        st["dispersion_deg"] = f->dispersion_deg;
        if (f->mean_pupil_mm) st["mean_pupil_mm"] = *f->mean_pupil_mm;
        st["sample_count"] = f->sample_count;
    } else if (const auto* sc = ev.saccade()) {
        st["peak_velocity_deg_s"] = sc->peak_velocity_deg_s;
        st["mean_velocity_deg_s"] = sc->mean_velocity_deg_s;
        st["amplitude_deg"] = sc->amplitude_deg;
    } else if (const auto* b = ev.blink()) {
        st["closure_s"] = b->closure_s;
    } else if (const auto* g = ev.gap()) {
        st["samples_lost"] = g->samples_lost;
    }
    return json{{"kind", to_string(ev.kind)},
                {"start_us", ev.start.micros},
                {"end_us", ev.end.micros},
                {"stats", std::move(st)}};
}

inline std::optional<EventKind> event_kind_from_string(const std::string& s) {
    if (s == "fixation") return EventKind::Fixation;
    if (s == "saccade") return EventKind::Saccade;
    if (s == "blink") return EventKind::Blink;
    if (s == "gap") return EventKind::Gap;
    return std::nullopt;
}

inline std::optional<GazeEvent> event_from_json(const json& j) {
    try {
        const auto kind = event_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) return std::nullopt;
        const Timestamp start{j.at("start_us").get<std::int64_t>()};
        const Timestamp end{j.at("end_us").get<std::int64_t>()};
        if (end <= start) return std::nullopt;
        const json st = j.value("stats", json::object());
        switch (*kind) {
            case EventKind::Fixation: {
                FixationStats f;
                if (st.contains("centroid_dir")) {
                    const auto& d = st.at("centroid_dir");
                    f.centroid_direction = {d.at(0).get<double>(), d.at(1).get<double>(),
                                            d.at(2).get<double>()};
                }
                if (st.contains("centroid_origin_mm")) {
                    const auto& o = st.at("centroid_origin_mm");
                    f.centroid_origin_mm = {o.at(0).get<double>(), o.at(1).get<double>(),
                                            o.at(2).get<double>()};
                }
                f.dispersion_deg = st.value("dispersion_deg", 0.0);
                if (st.contains("mean_pupil_mm")) f.mean_pupil_mm = st.at("mean_pupil_mm").get<double>();
                f.sample_count = st.value("sample_count", std::int64_t{0});
                return GazeEvent::make(EventKind::Fixation, start, end, f);
            }
            case EventKind::Saccade: {
                SaccadeStats s;
                s.peak_velocity_deg_s = st.value("peak_velocity_deg_s", 0.0);
                s.mean_velocity_deg_s = st.value("mean_velocity_deg_s", 0.0);
                s.amplitude_deg = st.value("amplitude_deg", 0.0);
                return GazeEvent::make(EventKind::Saccade, start, end, s);
            }
            case EventKind::Blink:
                return GazeEvent::make(EventKind::Blink, start, end,
                                       BlinkStats{st.value("closure_s", seconds_between(start, end))});
            case EventKind::Gap:
                return GazeEvent::make(EventKind::Gap, start, end,
                                       GapStats{st.value("samples_lost", std::int64_t{0})});
        }
        return std::nullopt;
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

// ============================================================================
// Snapshots and decisions
// ============================================================================

inline json snapshot_to_json(const MetricsSnapshot& s) {
    json j;
    j["window_start_us"] = s.window_start.micros;
    j["window_end_us"] = s.window_end.micros;
    j["mean_fixation_duration_s"] = s.mean_fixation_duration_s;
    j["fixation_count"] = s.fixation_count;
    j["mean_saccade_velocity_deg_s"] = s.mean_saccade_velocity_deg_s;
    j["peak_saccade_velocity_deg_s"] = s.peak_saccade_velocity_deg_s;
    j["saccade_count"] = s.saccade_count;
    j["blink_rate_per_min"] = s.blink_rate_per_min;
    j["pupil_dilation_index"] = s.pupil_dilation_index ? json(*s.pupil_dilation_index) : json();
    j["dwell_time_s"] = json::object();
    for (const auto& [id, v] : s.dwell_time_s) j["dwell_time_s"][id] = v;
    j["ttff_s"] = json::object();
    for (const auto& [id, v] : s.ttff_s) j["ttff_s"][id] = v;
    return j;
}

inline json flow_state_to_json(const FlowState& st) {
    json c = json::object();
    for (const auto& [k, v] : st.contributing) c[k] = v;
    return json{{"label", to_string(st.label)},
                {"boredom_score", st.boredom_score},
                {"anxiety_score", st.anxiety_score},
                {"contributing", std::move(c)}};
}

inline json decision_to_json(const DifficultyDecision& d) {
    return json{{"at_us", d.at.micros},
                {"action", to_string(d.action)},
                {"new_level", d.new_level},
                {"reason", flow_state_to_json(d.reason)}};
}

// ============================================================================
// Ground-truth labels
// ============================================================================

inline json label_to_json(const LabeledInterval& l) {
    return json{{"kind", to_string(l.kind)},
                {"start_us", l.start.micros},
                {"end_us", l.end.micros}};
}

inline std::optional<LabeledInterval> label_from_json(const json& j) {
    try {
        const auto kind = event_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) return std::nullopt;
        return LabeledInterval{*kind, Timestamp{j.at("start_us").get<std::int64_t>()},
                               Timestamp{j.at("end_us").get<std::int64_t>()}};
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

// ============================================================================
// Stream envelope
// ============================================================================

/// One line of the TCP stream: {"type":...,"seq":...,"payload":{...}}.
/// seq is per-connection and strictly increasing.
inline std::string wire_line(const std::string& type, std::uint64_t seq, const json& payload) {
    json j{{"type", type}, {"seq", seq}, {"payload", payload}};
    return j.dump();
}

// ============================================================================
// Scenario and AOI files
// ============================================================================

/// Throws std::invalid_argument with a human-readable reason on bad input.
inline SyntheticScenario scenario_from_json(const json& j) {
    SyntheticScenario sc;
    try {
        sc.sample_rate_hz = j.value("sample_rate_hz", 120.0);
        sc.jitter_deg = j.value("jitter_deg", 0.0);
        sc.pupil_baseline_mm = j.value("pupil_baseline_mm", 3.5);
        sc.pupil_noise_mm = j.value("pupil_noise_mm", 0.0);
        sc.rng_seed = j.value("rng_seed", std::uint64_t{0});
        for (const auto& seg : j.at("segments")) {
            const std::string kind = seg.at("kind").get<std::string>();
            const double dur = seg.at("duration_s").get<double>();
            auto dir_of = [&]() -> Vec3 {
                const auto& d = seg.at("direction");
                return Vec3{d.at(0).get<double>(), d.at(1).get<double>(), d.at(2).get<double>()}
                    .normalized();
            };
            if (kind == "fixate") sc.segments.push_back(FixateSegment{dir_of(), dur});
            else if (kind == "saccade") sc.segments.push_back(SaccadeSegment{dir_of(), dur});
            else if (kind == "blink") sc.segments.push_back(BlinkSegment{dur});
            else if (kind == "dropout") sc.segments.push_back(DropoutSegment{dur});
            else throw std::invalid_argument("unknown segment kind: " + kind);
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad scenario: ") + e.what());
    }
    validate_scenario(sc);
    return sc;
}

inline json scenario_to_json(const SyntheticScenario& sc) {
    json j;
    j["sample_rate_hz"] = sc.sample_rate_hz;
    j["jitter_deg"] = sc.jitter_deg;
    j["pupil_baseline_mm"] = sc.pupil_baseline_mm;
    j["pupil_noise_mm"] = sc.pupil_noise_mm;
    j["rng_seed"] = sc.rng_seed;
    j["segments"] = json::array();
    for (const auto& seg : sc.segments) {
        json s;
        if (const auto* f = std::get_if<FixateSegment>(&seg)) {
            s["kind"] = "fixate";
            s["direction"] = {f->target.x, f->target.y, f->target.z};
            s["duration_s"] = f->duration_s;
        } else if (const auto* sa = std::get_if<SaccadeSegment>(&seg)) {
            s["kind"] = "saccade";
            s["direction"] = {sa->target.x, sa->target.y, sa->target.z};
            s["duration_s"] = sa->duration_s;
        } else if (const auto* b = std::get_if<BlinkSegment>(&seg)) {
            s["kind"] = "blink";
            s["duration_s"] = b->duration_s;
        } else if (const auto* d = std::get_if<DropoutSegment>(&seg)) {
            s["kind"] = "dropout";
            s["duration_s"] = d->duration_s;
        }
        j["segments"].push_back(std::move(s));
    }
    return j;
}

/// AOI file: a JSON array of {"id", "sphere"|"polygon"} objects.
inline std::vector<AreaOfInterest> aois_from_json(const json& j) {
    std::vector<AreaOfInterest> out;
    try {
        for (const auto& a : j) {
            AreaOfInterest aoi;
            aoi.id = a.at("id").get<std::string>();
            if (a.contains("sphere")) {
                const auto& s = a.at("sphere");
                const auto& c = s.at("center_mm");
                SphereAoi sp{{c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()},
                             s.at("radius_mm").get<double>()};
                if (!(sp.radius_mm > 0.0)) throw std::invalid_argument("AOI radius must be > 0");
                aoi.shape = sp;
            } else if (a.contains("polygon")) {
                PolygonAoi poly;
                for (const auto& v : a.at("polygon").at("vertices_mm"))
                    poly.vertices_mm.push_back(
                        {v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()});
                if (poly.vertices_mm.size() < 3)
                    throw std::invalid_argument("polygon AOI needs >= 3 vertices");
                aoi.shape = std::move(poly);
            } else {
                throw std::invalid_argument("AOI needs a sphere or polygon shape");
            }
            out.push_back(std::move(aoi));
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("bad AOI file: ") + e.what());
    }
    return out;
}

}  // namespace gazeflow::wire
