#pragma once

#include <charconv>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gazeflow/types.hpp"

namespace gazeflow::raw_csv {

/// Column layout of the raw sample file. Floats carry 9 significant digits;
/// absent optional fields are empty; validity is the Validity bitmask.
inline constexpr std::string_view kHeader =
    "timestamp_us,dir_x,dir_y,dir_z,origin_x_mm,origin_y_mm,origin_z_mm,"
    "pupil_l_mm,pupil_r_mm,openness_l,openness_r,validity";

inline constexpr int kColumns = 12;

inline void append_double(std::string& out, double v) {
    char buf[40];
    const int n = std::snprintf(buf, sizeof(buf), "%.9g", v);
    out.append(buf, static_cast<std::size_t>(n));
}

inline void append_optional(std::string& out, const std::optional<double>& v) {
    if (v) append_double(out, *v);
}

/// One CSV row, no trailing newline.
inline std::string format_row(const GazeSample& s) {
    std::string out;
    out.reserve(160);
    out += std::to_string(s.timestamp.micros);
    for (double v : {s.gaze_direction.x, s.gaze_direction.y, s.gaze_direction.z,
                     s.gaze_origin_mm.x, s.gaze_origin_mm.y, s.gaze_origin_mm.z}) {
        out += ',';
        append_double(out, v);
    }
    out += ',';
    append_optional(out, s.pupil_left_mm);
    out += ',';
    append_optional(out, s.pupil_right_mm);
    out += ',';
    append_optional(out, s.openness_left);
    out += ',';
    append_optional(out, s.openness_right);
    out += ',';
    out += std::to_string(s.validity.to_mask());
    return out;
}

namespace detail {

inline bool parse_double(std::string_view f, double& out) {
    const char* first = f.data();
    const char* last = f.data() + f.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

inline bool parse_optional(std::string_view f, std::optional<double>& out) {
    if (f.empty()) {
        out = std::nullopt;
        return true;
    }
    double v;
    if (!parse_double(f, v)) return false;
    out = v;
    return true;
}

}  // namespace detail

/// Parses one data row. Returns nullopt on any malformed field; the caller
/// decides how to report it (the skip-count-continue policy lives upstream).
inline std::optional<GazeSample> parse_row(std::string_view line) {
    std::string_view fields[kColumns];
    int n = 0;
    std::size_t pos = 0;
    while (n < kColumns) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            fields[n++] = line.substr(pos);
            break;
        }
        fields[n++] = line.substr(pos, comma - pos);
        pos = comma + 1;
        if (n == kColumns) return std::nullopt;  // too many columns
    }
    if (n != kColumns) return std::nullopt;

    GazeSample s;
    {
        const char* first = fields[0].data();
        const char* last = first + fields[0].size();
        auto [ptr, ec] = std::from_chars(first, last, s.timestamp.micros);
        if (ec != std::errc{} || ptr != last || s.timestamp.micros < 0) return std::nullopt;
    }
    double* dirs[6] = {&s.gaze_direction.x, &s.gaze_direction.y, &s.gaze_direction.z,
                       &s.gaze_origin_mm.x, &s.gaze_origin_mm.y, &s.gaze_origin_mm.z};
    for (int i = 0; i < 6; ++i) {
        if (!detail::parse_double(fields[1 + i], *dirs[i])) return std::nullopt;
    }
    if (!detail::parse_optional(fields[7], s.pupil_left_mm)) return std::nullopt;
    if (!detail::parse_optional(fields[8], s.pupil_right_mm)) return std::nullopt;
    if (!detail::parse_optional(fields[9], s.openness_left)) return std::nullopt;
    if (!detail::parse_optional(fields[10], s.openness_right)) return std::nullopt;
    int mask;
    {
        const char* first = fields[11].data();
        const char* last = first + fields[11].size();
        auto [ptr, ec] = std::from_chars(first, last, mask);
        if (ec != std::errc{} || ptr != last || mask < 0 || mask > 7) return std::nullopt;
    }
    s.validity = Validity::from_mask(mask);

    // Enforce the sample invariants at the format boundary: a row that claims
    // a valid signal but carries an out-of-range value is malformed.
    const ValidityReport r = validate_sample(s);
    if (s.validity.direction && !r.direction_unit_norm) return std::nullopt;
    if (!r.pupil_in_range || !r.openness_in_range) return std::nullopt;
    return s;
}

}  // namespace gazeflow::raw_csv
