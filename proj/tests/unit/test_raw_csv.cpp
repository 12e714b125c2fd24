#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gazeflow/raw_csv.hpp"
#include "oracles.hpp"

using namespace gazeflow;

namespace {

void expect_close(double a, double b) {
    EXPECT_LE(std::fabs(a - b), 1e-9 * std::max(1.0, std::fabs(a)));
}

TEST(RawCsv, HeaderIsExact) {
    EXPECT_EQ(raw_csv::kHeader,
              "timestamp_us,dir_x,dir_y,dir_z,origin_x_mm,origin_y_mm,origin_z_mm,"
              "pupil_l_mm,pupil_r_mm,openness_l,openness_r,validity");
}

TEST(RawCsv, AbsentOptionalsSerializeEmpty) {
    GazeSample s;
    s.timestamp = Timestamp{42};
    s.gaze_direction = {0, 0, 1};
    s.validity = {true, false, false};
    const auto row = raw_csv::format_row(s);
    EXPECT_EQ(row, "42,0,0,1,0,0,0,,,,,1");
    const auto back = raw_csv::parse_row(row);
    ASSERT_TRUE(back.has_value());
    EXPECT_FALSE(back->pupil_left_mm.has_value());
    EXPECT_FALSE(back->openness_right.has_value());
    EXPECT_EQ(back->validity.to_mask(), 1);
}

TEST(RawCsv, MalformedRowsRejected) {
    EXPECT_FALSE(raw_csv::parse_row("").has_value());
    EXPECT_FALSE(raw_csv::parse_row("1,2,3").has_value());                       // short
    EXPECT_FALSE(raw_csv::parse_row("x,0,0,1,0,0,0,,,,,1").has_value());         // bad int
    EXPECT_FALSE(raw_csv::parse_row("-5,0,0,1,0,0,0,,,,,1").has_value());        // negative ts
    EXPECT_FALSE(raw_csv::parse_row("1,0,0,abc,0,0,0,,,,,1").has_value());       // bad float
    EXPECT_FALSE(raw_csv::parse_row("1,0,0,1,0,0,0,,,,,9").has_value());         // bad mask
    EXPECT_FALSE(raw_csv::parse_row("1,0,0,0.5,0,0,0,,,,,1").has_value());       // non-unit dir
    EXPECT_FALSE(raw_csv::parse_row("1,0,0,1,0,0,0,12.0,,,,3").has_value());     // pupil range
    EXPECT_FALSE(raw_csv::parse_row("1,0,0,1,0,0,0,,,,,1,extra").has_value());   // extra column
}

TEST(RawCsv, RoundTripPropertyOverRandomSamples) {
    std::mt19937_64 rng(20240811);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_real_distribution<double> mm(-2000.0, 2000.0);
    std::uniform_real_distribution<double> pupil(0.5, 9.5);
    for (int i = 0; i < 500; ++i) {
        GazeSample s;
        s.timestamp = Timestamp{static_cast<std::int64_t>(u01(rng) * 1e9)};
        s.gaze_direction = oracle::random_unit(rng);
        s.gaze_origin_mm = {mm(rng), mm(rng), mm(rng)};
        s.validity = {true, u01(rng) < 0.8, u01(rng) < 0.8};
        if (s.validity.pupil) {
            s.pupil_left_mm = pupil(rng);
            if (u01(rng) < 0.9) s.pupil_right_mm = pupil(rng);
        }
        if (s.validity.openness) {
            s.openness_left = u01(rng);
            s.openness_right = u01(rng);
        }
        const auto back = raw_csv::parse_row(raw_csv::format_row(s));
        ASSERT_TRUE(back.has_value()) << raw_csv::format_row(s);
        EXPECT_EQ(back->timestamp, s.timestamp);
        expect_close(back->gaze_direction.x, s.gaze_direction.x);
        expect_close(back->gaze_direction.y, s.gaze_direction.y);
        expect_close(back->gaze_direction.z, s.gaze_direction.z);
        expect_close(back->gaze_origin_mm.x, s.gaze_origin_mm.x);
        expect_close(back->gaze_origin_mm.y, s.gaze_origin_mm.y);
        expect_close(back->gaze_origin_mm.z, s.gaze_origin_mm.z);
        EXPECT_EQ(back->pupil_left_mm.has_value(), s.pupil_left_mm.has_value());
        if (s.pupil_left_mm) expect_close(*back->pupil_left_mm, *s.pupil_left_mm);
        EXPECT_EQ(back->validity, s.validity);
    }
}

}  // namespace
