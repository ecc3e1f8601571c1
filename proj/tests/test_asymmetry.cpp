// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <random>

#include "wrsim/asymmetry.hpp"
#include "wrsim/optical.hpp"

using namespace wrsim;

TEST_CASE("alpha from latencies") {
    CHECK(alpha_from_latencies(1e-3, 1e-3) == 0.0);
    CHECK(alpha_from_latencies(4.2e-7, 4.2e-7) == 0.0);

    // 300 km against 100 km of identical fibre: ratio 3, alpha 2
    const double per_km = default_group_delay_us_per_km * 1e-6;
    CHECK(alpha_from_latencies(300.0 * per_km, 100.0 * per_km) == doctest::Approx(2.0));

    CHECK(alpha_from_latencies(1.0005e-3, 1e-3) == doctest::Approx(5e-4).epsilon(1e-9));
    CHECK_THROWS_AS(alpha_from_latencies(0.0, 1e-3), invalid_argument);
    CHECK_THROWS_AS(alpha_from_latencies(1e-3, -1.0), invalid_argument);
}

TEST_CASE("alpha_n encoding basics") {
    CHECK(alpha_to_alpha_n(0.0) == 0);
    CHECK(alpha_to_alpha_n(0.0, AlphaMode::calibration) == 0);
    CHECK_THROWS_AS(encode_alpha(2.0), pole_error);
    CHECK_THROWS_AS(encode_alpha(-2.0, AlphaMode::calibration), pole_error);

    // out-of-range carries the computed raw value
    try {
        alpha_to_alpha_n(0.1);
        FAIL("expected out_of_range");
    } catch (const out_of_range& e) {
        CHECK(e.value == encode_alpha(0.1));
        CHECK_FALSE(alpha_n_in_range(e.value));
    }

    // the two conventions mirror each other near zero, up to the quadratic
    // term of the encodings (relative size ~alpha)
    const std::int64_t a = encode_alpha(1e-4, AlphaMode::wr_len);
    const std::int64_t b = encode_alpha(1e-4, AlphaMode::calibration);
    CHECK(a < 0);
    CHECK(b > 0);
    CHECK(std::abs(static_cast<double>(a + b)) <
          2e-4 * std::abs(static_cast<double>(a)));
}

TEST_CASE("supported alpha range is roughly +-7.8e-3") {
    for (auto mode : {AlphaMode::wr_len, AlphaMode::calibration}) {
        const auto [lo, hi] = alpha_supported_range(mode);
        CHECK(lo == doctest::Approx(-7.8e-3).epsilon(0.05));
        CHECK(hi == doctest::Approx(7.8e-3).epsilon(0.05));
        CHECK(alpha_n_in_range(encode_alpha(lo * 0.999, mode)));
        CHECK(alpha_n_in_range(encode_alpha(hi * 0.999, mode)));
        CHECK_FALSE(alpha_n_in_range(encode_alpha(lo * 1.01, mode)));
        CHECK_FALSE(alpha_n_in_range(encode_alpha(hi * 1.01, mode)));
    }
}

TEST_CASE("encoding is strictly monotonic over the supported interval") {
    for (auto mode : {AlphaMode::wr_len, AlphaMode::calibration}) {
        const auto [lo, hi] = alpha_supported_range(mode);
        std::int64_t prev = encode_alpha(lo, mode);
        bool decreasing = mode == AlphaMode::wr_len;
        for (int i = 1; i <= 200; ++i) {
            const double alpha = lo + (hi - lo) * i / 200.0;
            const std::int64_t cur = encode_alpha(alpha, mode);
            if (decreasing)
                CHECK(cur < prev);
            else
                CHECK(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("alpha_n round trip stays within ten quantization steps") {
    std::mt19937_64 rng(1234);
    for (auto mode : {AlphaMode::wr_len, AlphaMode::calibration}) {
        const auto [lo, hi] = alpha_supported_range(mode);
        std::uniform_real_distribution<double> dist(lo * 0.999, hi * 0.999);
        for (int i = 0; i < 1000; ++i) {
            const double alpha = dist(rng);
            const std::int64_t n = alpha_to_alpha_n(alpha, mode);
            const double back = alpha_n_to_alpha(n, mode);
            CHECK(std::abs(back - alpha) <= 10.0 * alpha_quantization_step(alpha, mode));
        }
    }
    CHECK(alpha_n_to_alpha(0) == 0.0);
    CHECK(std::abs(alpha_n_to_alpha(alpha_n_max)) == doctest::Approx(7.8e-3).epsilon(0.05));
    CHECK_THROWS_AS(alpha_n_to_alpha(std::int64_t{1} << 32), out_of_range);
}

TEST_CASE("predicted skew closed forms") {
    const double per_km = default_group_delay_us_per_km * 1e-6;
    auto config = make_asymmetry(300.0 * per_km, 100.0 * per_km);
    CHECK(config.alpha == doctest::Approx(2.0));
    CHECK_FALSE(config.alpha_n.has_value());  // at the encoding pole

    // true alpha applied: zero residual
    CHECK(predicted_skew(config, config.alpha) == doctest::Approx(0.0).epsilon(1e-15));

    // nothing applied: half the latency difference, about 490 us here
    const double half_diff = (config.delta_ms_s - config.delta_sm_s) / 2.0;
    CHECK(predicted_skew(config, 0.0) == half_diff);
    CHECK(half_diff == doctest::Approx(489.672e-6).epsilon(1e-4));

    // symmetric link: zero either way
    auto sym = make_asymmetry(7e-4, 7e-4);
    CHECK(predicted_skew(sym, 0.0) == 0.0);
    CHECK(predicted_skew(sym, sym.alpha) == 0.0);

    CHECK_THROWS_AS(predicted_skew(AsymmetryConfig{}, 0.0), invalid_argument);
}

TEST_CASE("predicted skew vanishes at the true alpha for random latency pairs") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> dist(1e-6, 5e-3);
    for (int i = 0; i < 500; ++i) {
        const double dms = dist(rng), dsm = dist(rng);
        auto config = make_asymmetry(dms, dsm);
        CHECK(std::abs(predicted_skew(config, config.alpha)) <= 1e-12 * (dms + dsm));
        CHECK(predicted_skew(config, 0.0) == (dms - dsm) / 2.0);
    }
}
