// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "wrsim/noise.hpp"
#include "wrsim/stability.hpp"

using namespace wrsim;

namespace {

NoiseSpec single(NoiseType type, double amp_s, std::uint64_t seed, std::size_t n = 100000) {
    NoiseSpec spec;
    spec.components = {{type, amp_s}};
    spec.seed = seed;
    spec.n_samples = n;
    spec.tau0_s = 1.0;
    return spec;
}

double fitted_slope(const TimeErrorSeries& series, int m_lo = 4, int m_hi = 512) {
    std::vector<int> windows;
    for (int m = m_lo; m <= m_hi; m *= 2)
        windows.push_back(m);
    return loglog_slope(stability_curve(series, Statistic::tdev, windows));
}

}  // namespace

TEST_CASE("zero amplitudes give the all-zero series") {
    NoiseSpec spec;
    spec.components = {{NoiseType::white_pm, 0.0}, {NoiseType::flicker_pm, 0.0}};
    spec.seed = 9;
    spec.n_samples = 1000;
    auto series = synthesize(spec);
    for (auto v : series.samples_ps)
        CHECK(v == 0);
}

TEST_CASE("synthesis is deterministic for a fixed seed") {
    auto spec = single(NoiseType::flicker_pm, 4e-12, 77, 20000);
    spec.components.push_back({NoiseType::white_pm, 2e-12});
    auto a = synthesize(spec);
    auto b = synthesize(spec);
    CHECK(a.samples_ps == b.samples_ps);

    spec.seed = 78;
    auto c = synthesize(spec);
    CHECK(a.samples_ps != c.samples_ps);
}

TEST_CASE("invalid specs are rejected") {
    NoiseSpec spec;
    spec.n_samples = 0;
    CHECK_THROWS_AS(synthesize(spec), invalid_argument);
    spec.n_samples = 10;
    spec.tau0_s = 0.0;
    CHECK_THROWS_AS(synthesize(spec), invalid_argument);
    spec.tau0_s = 1.0;
    spec.components = {{NoiseType::white_pm, -1e-12}};
    CHECK_THROWS_AS(synthesize(spec), invalid_argument);
}

TEST_CASE("white PM synthesis hits its amplitude and -1/2 slope") {
    auto series = synthesize(single(NoiseType::white_pm, 10e-12, 21));
    CHECK(tdev(series, 1) == doctest::Approx(10e-12).epsilon(0.05));
    CHECK(fitted_slope(series) == doctest::Approx(-0.5).epsilon(0.3));
}

TEST_CASE("flicker PM plateaus near its amplitude") {
    auto series = synthesize(single(NoiseType::flicker_pm, 4e-12, 22));
    CHECK(std::abs(fitted_slope(series)) < 0.15);
    for (int m : {16, 64, 256}) {
        const double v = tdev(series, m);
        CHECK(v > 2e-12);
        CHECK(v < 8e-12);
    }
}

TEST_CASE("white FM rises at +1/2 slope") {
    auto series = synthesize(single(NoiseType::white_fm, 1e-12, 23));
    CHECK(std::abs(fitted_slope(series) - 0.5) < 0.15);
}

TEST_CASE("random walk FM rises at +3/2 slope") {
    auto series = synthesize(single(NoiseType::random_walk_fm, 1e-13, 24));
    CHECK(std::abs(fitted_slope(series, 4, 256) - 1.5) < 0.25);
}

TEST_CASE("mixture variance is close to the sum of component variances") {
    NoiseSpec mix;
    mix.components = {{NoiseType::white_pm, 5e-12}, {NoiseType::flicker_pm, 4e-12}};
    mix.seed = 31;
    mix.n_samples = 100000;
    auto mixture = synthesize(mix);
    auto white = synthesize(single(NoiseType::white_pm, 5e-12, 31));
    auto flicker = synthesize(single(NoiseType::flicker_pm, 4e-12, 31));
    for (int m : {1, 8, 64}) {
        const double lhs = std::pow(tdev(mixture, m), 2);
        const double rhs = std::pow(tdev(white, m), 2) + std::pow(tdev(flicker, m), 2);
        CHECK(lhs == doctest::Approx(rhs).epsilon(0.25));
    }
}

TEST_CASE("fit recovers a pure white PM amplitude within 20%") {
    auto series = synthesize(single(NoiseType::white_pm, 6e-12, 41));
    auto curve = stability_curve(series, Statistic::tdev, {1, 2, 4, 8, 16, 32, 64, 128});
    auto fit = fit_noise_mixture(curve);
    CHECK(fit.amplitude(NoiseType::white_pm) == doctest::Approx(6e-12).epsilon(0.2));
    CHECK(fit.amplitude(NoiseType::random_walk_fm) < 1e-12);
}

TEST_CASE("a flat 4 ps curve between 20 s and 1000 s reads as flicker PM") {
    StabilityCurve curve;
    curve.statistic = Statistic::tdev;
    for (double tau : {20.0, 50.0, 100.0, 200.0, 500.0, 1000.0})
        curve.points.push_back({tau, 4e-12, static_cast<int>(tau), 1000});
    auto fit = fit_noise_mixture(curve);
    CHECK(fit.amplitude(NoiseType::flicker_pm) == doctest::Approx(4e-12).epsilon(0.02));
    CHECK(fit.amplitude(NoiseType::white_pm) < 4e-13);
    CHECK(fit.amplitude(NoiseType::white_fm) < 4e-13);
    CHECK(fit.amplitude(NoiseType::random_walk_fm) < 4e-13);
    CHECK(fit.residual < 1e-6);
}

TEST_CASE("the all-zero curve fits to zero amplitudes") {
    StabilityCurve curve;
    curve.statistic = Statistic::tdev;
    for (double tau : {1.0, 4.0, 16.0, 64.0, 256.0})
        curve.points.push_back({tau, 0.0, static_cast<int>(tau), 100});
    auto fit = fit_noise_mixture(curve);
    for (double a : fit.amplitudes_s)
        CHECK(a == 0.0);
}

TEST_CASE("fitting preconditions") {
    StabilityCurve few;
    few.statistic = Statistic::tdev;
    for (double tau : {1.0, 2.0, 4.0, 8.0})
        few.points.push_back({tau, 1e-12, static_cast<int>(tau), 10});
    CHECK_THROWS_AS(fit_noise_mixture(few), ill_conditioned);

    StabilityCurve narrow;
    narrow.statistic = Statistic::tdev;
    for (double tau : {10.0, 12.0, 14.0, 16.0, 18.0, 20.0})
        narrow.points.push_back({tau, 1e-12, static_cast<int>(tau), 10});
    CHECK_THROWS_AS(fit_noise_mixture(narrow), ill_conditioned);

    StabilityCurve wrong;
    wrong.statistic = Statistic::mtie;
    CHECK_THROWS_AS(fit_noise_mixture(wrong), invalid_argument);
}

TEST_CASE("synthesize-fit round trip per component, ten seeds each") {
    struct Case {
        NoiseType type;
        double amp;
    };
    for (const auto& c : {Case{NoiseType::white_pm, 3e-12}, Case{NoiseType::flicker_pm, 4e-12},
                          Case{NoiseType::white_fm, 5e-13},
                          Case{NoiseType::random_walk_fm, 1e-13}}) {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            auto series = synthesize(single(c.type, c.amp, seed));
            auto curve = stability_curve(series, Statistic::tdev,
                                         {1, 2, 4, 8, 16, 32, 64, 128, 256});
            auto fit = fit_noise_mixture(curve);
            CHECK(fit.amplitude(c.type) == doctest::Approx(c.amp).epsilon(0.2));
        }
    }
}
