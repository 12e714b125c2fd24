#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gazeflow/preprocess.hpp"
#include "oracles.hpp"

using namespace gazeflow;

namespace {

VelocitySample vs(std::int64_t us, double velocity, bool first = false) {
    VelocitySample v;
    v.sample.timestamp = Timestamp{us};
    v.sample.gaze_direction = {0, 0, 1};
    v.velocity_deg_per_s = velocity;
    v.theta_deg = velocity * 8333e-6;
    v.dt_s = first ? 0.0 : 8333e-6;
    v.first_of_run = first;
    return v;
}

std::vector<VelocitySample> stream_of(const std::vector<double>& velocities) {
    std::vector<VelocitySample> out;
    for (std::size_t i = 0; i < velocities.size(); ++i)
        out.push_back(vs(static_cast<std::int64_t>(i) * 8333, velocities[i], i == 0));
    return out;
}

std::vector<double> velocities_of(const std::vector<VelocitySample>& stream) {
    std::vector<double> out;
    for (const auto& v : stream) out.push_back(v.velocity_deg_per_s);
    return out;
}

// ---------------------------------------------------------------------------
// angular_velocity
// ---------------------------------------------------------------------------

TEST(AngularVelocity, IdenticalVectorsGiveZero) {
    EXPECT_DOUBLE_EQ(angular_velocity({0, 0, 1}, {0, 0, 1}, 1.0 / 120.0), 0.0);
}

TEST(AngularVelocity, OrthogonalVectorsOverHalfSecond) {
    EXPECT_NEAR(angular_velocity({1, 0, 0}, {0, 1, 0}, 0.5), 180.0, 1e-9);
}

TEST(AngularVelocity, OneDegreeAtSampleRate) {
    // p2 is one degree away from +Z by construction; the expected value was
    // cross-checked against the long-double atan2 oracle.
    const double rad = 1.0 / kDegPerRad;
    const Vec3 p1{0, 0, 1};
    const Vec3 p2{0, std::sin(rad), std::cos(rad)};
    const double v = angular_velocity(p1, p2, 1.0 / 120.0);
    EXPECT_NEAR(v, 120.0, 1e-6);
    const auto hp = static_cast<double>(oracle::hp_angular_velocity(p1, p2, 1.0L / 120.0L));
    EXPECT_NEAR(v, hp, 1e-9 * hp);
}

TEST(AngularVelocity, RejectsBadInputs) {
    EXPECT_THROW(angular_velocity({0, 0, 1}, {0, 0, 1}, 0.0), std::invalid_argument);
    EXPECT_THROW(angular_velocity({0, 0, 1}, {0, 0, 1}, -1.0), std::invalid_argument);
    EXPECT_THROW(angular_velocity({0, 0, 0.8}, {0, 0, 1}, 0.1), std::invalid_argument);
}

TEST(AngularVelocity, SymmetricInItsArguments) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const Vec3 a = oracle::random_unit(rng);
        const Vec3 b = oracle::random_unit(rng);
        EXPECT_DOUBLE_EQ(angular_velocity(a, b, 0.25), angular_velocity(b, a, 0.25));
    }
}

TEST(AngularVelocity, RotationInvariant) {
    std::mt19937_64 rng(8);
    // Fixed rigid rotation: 90 degrees about X, then 30 about Z.
    auto rotate = [](const Vec3& v) {
        const Vec3 rx{v.x, -v.z, v.y};
        const double c = std::cos(30.0 / kDegPerRad), s = std::sin(30.0 / kDegPerRad);
        return Vec3{c * rx.x - s * rx.y, s * rx.x + c * rx.y, rx.z};
    };
    for (int i = 0; i < 200; ++i) {
        const Vec3 a = oracle::random_unit(rng);
        const Vec3 b = oracle::random_unit(rng);
        const double v1 = angular_velocity(a, b, 0.1);
        const double v2 = angular_velocity(rotate(a).normalized(), rotate(b).normalized(), 0.1);
        EXPECT_NEAR(v1, v2, 1e-9 * std::max(1.0, v1));
    }
}

TEST(AngularVelocity, NearParallelClampingNeverNan) {
    // Vectors whose dot product drifts just past 1 in floating point.
    const Vec3 a{1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
    const double v = angular_velocity(a, a, 1e-3);
    EXPECT_FALSE(std::isnan(v));
    EXPECT_GE(v, 0.0);
    EXPECT_FALSE(std::isnan(angle_between_deg({0, 0, 1}, {0, 0, -1})));
}

// ---------------------------------------------------------------------------
// VelocityAnnotator
// ---------------------------------------------------------------------------

GazeSample dir_sample(std::int64_t us, const Vec3& dir) {
    GazeSample s;
    s.timestamp = Timestamp{us};
    s.gaze_direction = dir;
    s.validity = {true, false, false};
    return s;
}

TEST(VelocityAnnotator, SingleSampleHasZeroVelocity) {
    VelocityAnnotator a(PreprocessParams{});
    const auto r = a.feed(dir_sample(0, {0, 0, 1}));
    EXPECT_FALSE(r.gap.has_value());
    EXPECT_TRUE(r.sample.first_of_run);
    EXPECT_DOUBLE_EQ(r.sample.velocity_deg_per_s, 0.0);
    EXPECT_DOUBLE_EQ(r.sample.theta_deg, 0.0);
}

TEST(VelocityAnnotator, NinetyDegreesOver8333Micros) {
    VelocityAnnotator a(PreprocessParams{});
    a.feed(dir_sample(0, {0, 0, 1}));
    const auto r = a.feed(dir_sample(8333, {0, 1, 0}));
    // Oracle: exact rational 90 / (8333 / 1e6) at high precision.
    const long double expected = 90.0L / (8333.0L / 1'000'000.0L);
    EXPECT_NEAR(r.sample.velocity_deg_per_s, static_cast<double>(expected), 1e-7);
    EXPECT_NEAR(r.sample.velocity_deg_per_s, 10800.4, 0.05);
    EXPECT_DOUBLE_EQ(r.sample.theta_deg, 90.0);
}

TEST(VelocityAnnotator, HoleBeyondMaxGapEmitsMarkerAndResets) {
    PreprocessParams p;
    p.max_gap_s = 0.075;
    VelocityAnnotator a(p);
    a.feed(dir_sample(0, {0, 0, 1}));
    a.note_dropped();
    a.note_dropped();
    const auto r = a.feed(dir_sample(100'000, {0, 1, 0}));  // 100 ms hole
    ASSERT_TRUE(r.gap.has_value());
    EXPECT_EQ(r.gap->start.micros, 0);
    EXPECT_EQ(r.gap->end.micros, 100'000);
    EXPECT_EQ(r.gap->samples_lost, 2);
    EXPECT_TRUE(r.sample.first_of_run);
    EXPECT_DOUBLE_EQ(r.sample.velocity_deg_per_s, 0.0);
}

TEST(VelocityAnnotator, HoleWithinMaxGapComputesVelocityAcross) {
    VelocityAnnotator a(PreprocessParams{});
    a.feed(dir_sample(0, {0, 0, 1}));
    const auto r = a.feed(dir_sample(50'000, {0, 1, 0}));  // 50 ms < 75 ms
    EXPECT_FALSE(r.gap.has_value());
    EXPECT_FALSE(r.sample.first_of_run);
    EXPECT_NEAR(r.sample.velocity_deg_per_s, 90.0 / 0.05, 1e-9);
}

TEST(VelocityAnnotator, ForcedBreakSuppressesMarker) {
    VelocityAnnotator a(PreprocessParams{});
    a.feed(dir_sample(0, {0, 0, 1}));
    a.break_adjacency();
    const auto r = a.feed(dir_sample(200'000, {0, 1, 0}));
    EXPECT_FALSE(r.gap.has_value());  // the caller owns the explanation
    EXPECT_TRUE(r.sample.first_of_run);
}

// ---------------------------------------------------------------------------
// MedianFilter
// ---------------------------------------------------------------------------

TEST(MedianFilter, RemovesIsolatedSpike) {
    const auto out = median_filter(stream_of({5, 5, 400, 5, 5}), 3);
    EXPECT_EQ(velocities_of(out), (std::vector<double>{5, 5, 5, 5, 5}));
}

TEST(MedianFilter, ConstantStreamUnchanged) {
    const auto in = stream_of({7, 7, 7, 7, 7, 7});
    EXPECT_EQ(velocities_of(median_filter(in, 3)), velocities_of(in));
}

TEST(MedianFilter, TwoSampleSpikeSurvives) {
    const auto out = median_filter(stream_of({10, 200, 200, 10}), 3);
    EXPECT_EQ(velocities_of(out), (std::vector<double>{10, 200, 200, 10}));
    // Matches the direct sliding-window oracle as well.
    EXPECT_EQ(velocities_of(out), oracle::sliding_median({10, 200, 200, 10}, 3));
}

TEST(MedianFilter, MatchesOracleOnRandomStreams) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 300.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(1 + rng() % 40);
        for (auto& x : v) x = u(rng);
        const int window = (trial % 3 == 0) ? 5 : 3;
        const auto got = velocities_of(median_filter(stream_of(v), window));
        EXPECT_EQ(got, oracle::sliding_median(v, window));
    }
}

TEST(MedianFilter, PreservesLengthTimestampsAndTheta) {
    const auto in = stream_of({1, 50, 900, 2, 60, 3, 3, 800, 4});
    const auto out = median_filter(in, 3);
    ASSERT_EQ(out.size(), in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        EXPECT_EQ(out[i].sample.timestamp, in[i].sample.timestamp);
        EXPECT_DOUBLE_EQ(out[i].theta_deg, in[i].theta_deg);
        EXPECT_EQ(out[i].first_of_run, in[i].first_of_run);
    }
}

TEST(MedianFilter, IdempotentOnSpikeFreeRegions) {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<double> v(60);
    for (auto& x : v) x = u(rng);
    const auto once = median_filter(stream_of(v), 3);
    const auto twice = median_filter(once, 3);
    // Window 3 over already-median-filtered data: interior values repeat.
    EXPECT_EQ(velocities_of(median_filter(stream_of(oracle::sliding_median(v, 3)), 3)),
              oracle::sliding_median(oracle::sliding_median(v, 3), 3));
    ASSERT_EQ(twice.size(), once.size());
}

TEST(MedianFilter, RunBoundariesRestartTheWindow) {
    // Two runs; the spike at a run edge passes through unchanged.
    std::vector<VelocitySample> in;
    for (int i = 0; i < 4; ++i) in.push_back(vs(i * 8333, 5, i == 0));
    in.push_back(vs(200'000, 400, true));  // new run starts at the spike
    for (int i = 1; i < 4; ++i) in.push_back(vs(200'000 + i * 8333, 5, false));
    const auto out = median_filter(in, 3);
    EXPECT_EQ(velocities_of(out), (std::vector<double>{5, 5, 5, 5, 400, 5, 5, 5}));
}

TEST(MedianFilter, EvenWindowRejected) {
    EXPECT_THROW(MedianFilter(2), std::invalid_argument);
    EXPECT_THROW((PreprocessParams{4, 0.075}).validate(), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// calibration_error
// ---------------------------------------------------------------------------

std::vector<GazeSample> calibration_stream(const std::vector<Vec3>& targets, double interval_s,
                                           double offset_deg, std::uint64_t seed = 0,
                                           double jitter_deg = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, jitter_deg / kDegPerRad);
    std::vector<GazeSample> samples;
    const double rate = 120.0;
    const auto total = static_cast<std::int64_t>(targets.size() * interval_s * rate);
    for (std::int64_t k = 0; k < total; ++k) {
        const double t = static_cast<double>(k) / rate;
        const auto idx = std::min(targets.size() - 1,
                                  static_cast<std::size_t>(t / interval_s));
        Vec3 dir = targets[idx];
        if (offset_deg != 0.0 || jitter_deg != 0.0) {
            const Vec3 axis = std::fabs(dir.z) < 0.9 ? Vec3{0, 0, 1} : Vec3{1, 0, 0};
            const Vec3 u = dir.cross(axis).normalized();
            const double a = (offset_deg + n(rng) * kDegPerRad) / kDegPerRad;
            dir = (dir * std::cos(a) + u * std::sin(a)).normalized();
        }
        samples.push_back(dir_sample(static_cast<std::int64_t>(t * 1e6), dir));
    }
    return samples;
}

const std::vector<Vec3> kTargets = {
    Vec3{0, 0, 1},
    Vec3{0.1736481776669304, 0, 0.984807753012208},    // 10 deg right
    Vec3{-0.1736481776669304, 0, 0.984807753012208},   // 10 deg left
    Vec3{0, 0.1736481776669304, 0.984807753012208},    // 10 deg up
    Vec3{0, -0.1736481776669304, 0.984807753012208},   // 10 deg down
};

TEST(CalibrationError, ExactGazeScoresZero) {
    const auto samples = calibration_stream(kTargets, 1.0, 0.0);
    const auto score = calibration_error(samples, kTargets, 1.0);
    ASSERT_EQ(score.per_target_mean_deg.size(), 5u);
    for (double d : score.per_target_mean_deg) EXPECT_NEAR(d, 0.0, 1e-9);
    EXPECT_NEAR(score.overall_mean_deg, 0.0, 1e-9);
}

TEST(CalibrationError, ConstantOneDegreeOffset) {
    const auto samples = calibration_stream(kTargets, 1.0, 1.0);
    const auto score = calibration_error(samples, kTargets, 1.0);
    for (double d : score.per_target_mean_deg) EXPECT_NEAR(d, 1.0, 1e-9);
    EXPECT_NEAR(score.overall_mean_deg, 1.0, 1e-9);
}

TEST(CalibrationError, JitteredGazeMatchesIndependentRecomputation) {
    const auto samples = calibration_stream(kTargets, 1.0, 0.0, 42, 0.5);
    const auto score = calibration_error(samples, kTargets, 1.0);

    // Oracle: recompute per-target means directly over the same samples.
    double overall = 0.0;
    for (std::size_t i = 0; i < kTargets.size(); ++i) {
        long double sum = 0.0L;
        std::int64_t n = 0;
        for (const auto& s : samples) {
            const double t = s.timestamp.seconds();
            if (t < static_cast<double>(i) || t >= static_cast<double>(i + 1)) continue;
            sum += static_cast<long double>(
                oracle::hp_angular_velocity(s.gaze_direction, kTargets[i], 1.0L));
            ++n;
        }
        const double mean = static_cast<double>(sum / n);
        EXPECT_NEAR(score.per_target_mean_deg[i], mean, 1e-9);
        overall += mean;
    }
    EXPECT_NEAR(score.overall_mean_deg, overall / 5.0, 1e-9);
}

TEST(CalibrationError, ExcludesInvalidSamplesAndFailsOnEmptyInterval) {
    auto samples = calibration_stream(kTargets, 1.0, 0.0);
    // Poison target 2's interval with an off-target but invalid sample.
    for (auto& s : samples) {
        const double t = s.timestamp.seconds();
        if (t >= 2.0 && t < 3.0 && s.timestamp.micros % 2 == 0) {
            s.gaze_direction = {1, 0, 0};
            s.validity.direction = false;
        }
    }
    const auto score = calibration_error(samples, kTargets, 1.0);
    EXPECT_NEAR(score.per_target_mean_deg[2], 0.0, 1e-9);

    // All of target 4 invalid: error.
    for (auto& s : samples)
        if (s.timestamp.seconds() >= 4.0) s.validity.direction = false;
    EXPECT_THROW(calibration_error(samples, kTargets, 1.0), std::runtime_error);
}

}  // namespace
