#include <gtest/gtest.h>

#include "gazeflow/types.hpp"

using namespace gazeflow;

namespace {

GazeSample valid_sample(std::int64_t us = 0) {
    GazeSample s;
    s.timestamp = Timestamp{us};
    s.gaze_direction = {0, 0, 1};
    s.validity = {true, true, true};
    s.pupil_left_mm = 3.5;
    s.pupil_right_mm = 3.3;
    s.openness_left = 1.0;
    s.openness_right = 1.0;
    return s;
}

TEST(Timestamp, SecondsConversionIsExactForMicros) {
    EXPECT_EQ(Timestamp::from_seconds(1.5).micros, 1'500'000);
    EXPECT_DOUBLE_EQ(Timestamp{250'000}.seconds(), 0.25);
    EXPECT_DOUBLE_EQ(seconds_between(Timestamp{100}, Timestamp{8433}), 8333e-6);
}

TEST(Validity, MaskRoundTrip) {
    for (int mask = 0; mask <= 7; ++mask)
        EXPECT_EQ(Validity::from_mask(mask).to_mask(), mask);
}

TEST(ValidateSample, FullyValidSamplePasses) {
    const auto r = validate_sample(valid_sample());
    EXPECT_TRUE(r.direction_flag);
    EXPECT_TRUE(r.direction_unit_norm);
    EXPECT_TRUE(r.pupil_in_range);
    EXPECT_TRUE(r.openness_in_range);
    EXPECT_TRUE(r.timestamp_monotone);
    EXPECT_TRUE(r.all_ok());
    EXPECT_TRUE(r.direction_usable());
}

TEST(ValidateSample, UnsetDirectionFlagExcludesFromVelocity) {
    auto s = valid_sample();
    s.validity.direction = false;
    const auto r = validate_sample(s);
    EXPECT_FALSE(r.direction_flag);
    EXPECT_FALSE(r.direction_usable());
}

TEST(ValidateSample, NonUnitDirectionWithFlagIsMalformed) {
    auto s = valid_sample();
    s.gaze_direction = {0, 0, 0.8};
    const auto r = validate_sample(s);
    EXPECT_TRUE(r.direction_flag);
    EXPECT_FALSE(r.direction_unit_norm);
    EXPECT_FALSE(r.direction_usable());
}

TEST(ValidateSample, RangeChecks) {
    auto s = valid_sample();
    s.pupil_left_mm = 11.0;
    EXPECT_FALSE(validate_sample(s).pupil_in_range);
    s = valid_sample();
    s.pupil_left_mm = 0.0;
    EXPECT_FALSE(validate_sample(s).pupil_in_range);
    s = valid_sample();
    s.openness_right = 1.2;
    EXPECT_FALSE(validate_sample(s).openness_in_range);
    s = valid_sample();
    s.pupil_left_mm.reset();
    s.pupil_right_mm.reset();
    EXPECT_TRUE(validate_sample(s).pupil_in_range);  // absent is fine
}

TEST(ValidateSample, MonotonicityAgainstPredecessor) {
    const auto s = valid_sample(1000);
    EXPECT_TRUE(validate_sample(s, Timestamp{999}).timestamp_monotone);
    EXPECT_FALSE(validate_sample(s, Timestamp{1000}).timestamp_monotone);
    EXPECT_FALSE(validate_sample(s, Timestamp{1001}).timestamp_monotone);
}

TEST(GazeSample, MeanPupilAcceptsOneEyedData) {
    auto s = valid_sample();
    EXPECT_DOUBLE_EQ(*s.mean_pupil_mm(), 3.4);
    s.pupil_right_mm.reset();
    EXPECT_DOUBLE_EQ(*s.mean_pupil_mm(), 3.5);
    s.pupil_left_mm.reset();
    EXPECT_FALSE(s.mean_pupil_mm().has_value());
}

TEST(GazeEvent, DurationMatchesTimestamps) {
    const auto ev = GazeEvent::make(EventKind::Blink, Timestamp{100'000}, Timestamp{250'000},
                                    BlinkStats{0.15});
    EXPECT_DOUBLE_EQ(ev.duration_s, 0.15);
    EXPECT_NE(ev.blink(), nullptr);
    EXPECT_EQ(ev.fixation(), nullptr);
}

}  // namespace
