// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "wrsim/core.hpp"
#include "wrsim/stability.hpp"

namespace wrsim {

enum class NoiseType { white_pm, flicker_pm, white_fm, random_walk_fm };

inline const char* noise_type_name(NoiseType t) {
    switch (t) {
        case NoiseType::white_pm: return "white_pm";
        case NoiseType::flicker_pm: return "flicker_pm";
        case NoiseType::white_fm: return "white_fm";
        case NoiseType::random_walk_fm: return "random_walk_fm";
    }
    return "?";
}

struct NoiseComponent {
    NoiseType type = NoiseType::white_pm;
    double amplitude_s = 0.0;  // component TDEV at tau = 1 s (nearest grid point)
};

struct NoiseSpec {
    std::vector<NoiseComponent> components;
    std::uint64_t seed = 0;
    std::size_t n_samples = 0;
    double tau0_s = 1.0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Box-Muller on top of mt19937_64, so streams do not depend on the standard
/// library's distribution implementations.
class Gaussian {
public:
    explicit Gaussian(std::uint64_t seed) : engine_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

private:
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;  // [0, 1)
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// In-place iterative radix-2 FFT; inverse = true applies 1/n scaling.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const std::size_t n = a.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw invalid_argument("fft_radix2: length must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) *
                           (inverse ? 1.0 : -1.0);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = a[i + k];
                const auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& x : a)
            x /= static_cast<double>(n);
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n)
        p <<= 1;
    return p;
}

/// Colored noise by spectral shaping: white Gaussian spectrum weighted by
/// f^(-spectral_slope/2), Hermitian-symmetrized, inverse transformed. 10% of
/// the block is discarded at each end against wrap-around edge effects.
inline std::vector<double> shaped_noise(std::size_t n, double spectral_slope, Gaussian& gauss) {
    const std::size_t m = std::max<std::size_t>(16, next_pow2((n * 5 + 3) / 4));
    std::vector<std::complex<double>> spec(m, {0.0, 0.0});
    for (std::size_t k = 1; k <= m / 2; ++k) {
        const double f = static_cast<double>(k) / static_cast<double>(m);
        const double mag = std::pow(f, -spectral_slope / 2.0);
        const double re = gauss() * mag;
        const double im = (k == m / 2) ? 0.0 : gauss() * mag;
        spec[k] = {re, im};
        if (k != m / 2)
            spec[m - k] = std::conj(spec[k]);
    }
    fft_radix2(spec, true);
    const std::size_t trim = m / 10;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = spec[trim + i].real();
    return out;
}

/// Double-precision TDEV used to calibrate component amplitudes before the
/// series is quantized to integer picoseconds.
inline double tdev_double(const std::vector<double>& x, std::size_t m) {
    const std::size_t n = x.size();
    if (m < 1 || n < 3 * m)
        throw insufficient_data("tdev_double: need N >= 3m");
    std::vector<double> prefix(n - 2 * m + 1, 0.0);
    for (std::size_t i = 0; i + 2 * m < n; ++i)
        prefix[i + 1] = prefix[i] + (x[i + 2 * m] - 2.0 * x[i + m] + x[i]);
    const std::size_t terms = n - 3 * m + 1;
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < terms; ++j) {
        const double s = prefix[j + m] - prefix[j];
        sum_sq += s * s;
    }
    return std::sqrt(sum_sq / (6.0 * static_cast<double>(m) * static_cast<double>(m) *
                               static_cast<double>(terms)));
}

/// One unit-scale component realization in arbitrary units.
inline std::vector<double> unit_component(NoiseType type, std::size_t n, Gaussian& gauss) {
    std::vector<double> out(n);
    switch (type) {
        case NoiseType::white_pm:
            for (auto& v : out)
                v = gauss();
            break;
        case NoiseType::white_fm: {
            double acc = 0.0;
            for (auto& v : out) {
                acc += gauss();
                v = acc;
            }
            break;
        }
        case NoiseType::flicker_pm:
            out = shaped_noise(n, 1.0, gauss);  // S_x ~ 1/f
            break;
        case NoiseType::random_walk_fm:
            out = shaped_noise(n, 4.0, gauss);  // S_x ~ 1/f^4
            break;
    }
    return out;
}

}  // namespace detail

/// Window index used as the amplitude reference: tau = 1 s when the sampling
/// grid contains it, otherwise the closest multiple of tau0.
inline std::size_t amplitude_reference_window(double tau0_s) {
    const auto m = static_cast<std::size_t>(std::llround(std::max(1.0, 1.0 / tau0_s)));
    return std::max<std::size_t>(1, m);
}

/// Theoretical TDEV log-log exponent per component type.
inline double tdev_exponent(NoiseType t) {
    switch (t) {
        case NoiseType::white_pm: return -0.5;
        case NoiseType::flicker_pm: return 0.0;
        case NoiseType::white_fm: return 0.5;
        case NoiseType::random_walk_fm: return 1.5;
    }
    return 0.0;
}

/// Deterministic synthesis of the summed noise mixture. Components draw from
/// independent sub-seeded streams, so the result does not depend on
/// generation order.
///
/// Each component is rescaled so its TDEV power law, referenced to tau = 1 s
/// through the component's theoretical exponent, equals the requested
/// amplitude. Calibration happens on the asymptotic branch (16x the reference
/// window when the series allows) because the discrete small-m statistics of
/// the integrating types sit a constant factor above the continuum law.
inline TimeErrorSeries synthesize(const NoiseSpec& spec) {
    if (spec.n_samples < 1)
        throw invalid_argument("synthesize: n_samples must be >= 1");
    if (!(spec.tau0_s > 0.0))
        throw invalid_argument("synthesize: tau0 must be > 0");
    for (const auto& c : spec.components)
        if (c.amplitude_s < 0.0)
            throw invalid_argument("synthesize: amplitudes must be >= 0");

    const std::size_t n = spec.n_samples;
    std::vector<double> sum(n, 0.0);
    const std::size_t m_ref = amplitude_reference_window(spec.tau0_s);

    for (std::size_t ci = 0; ci < spec.components.size(); ++ci) {
        // sub-seed depends only on (seed, component index), not generation order
        std::uint64_t state = spec.seed + 0x100 * (ci + 1);
        const std::uint64_t sub_seed = detail::splitmix64(state);
        const auto& comp = spec.components[ci];
        if (comp.amplitude_s == 0.0)
            continue;
        detail::Gaussian gauss(sub_seed);
        std::vector<double> unit = detail::unit_component(comp.type, n, gauss);
        std::size_t m_cal = 16 * m_ref;
        while (m_cal > m_ref && n < 3 * m_cal)
            m_cal /= 2;
        double scale = comp.amplitude_s;
        if (n >= 3 * m_cal) {
            const double unit_tdev = detail::tdev_double(unit, m_cal);
            const double level = comp.amplitude_s *
                                 std::pow(static_cast<double>(m_cal) * spec.tau0_s,
                                          tdev_exponent(comp.type));
            if (unit_tdev > 0.0)
                scale = level / unit_tdev;
        }
        for (std::size_t i = 0; i < n; ++i)
            sum[i] += unit[i] * scale;
    }

    std::vector<std::int64_t> ps(n);
    for (std::size_t i = 0; i < n; ++i)
        ps[i] = ps_from_seconds(sum[i]);
    return TimeErrorSeries{std::move(ps), spec.tau0_s, std::nullopt};
}

// ---------------------------------------------------------------------------
// Mixture fitting
// ---------------------------------------------------------------------------

struct MixtureFit {
    // Amplitudes indexed white_pm, flicker_pm, white_fm, random_walk_fm.
    std::array<double, 4> amplitudes_s{};
    double residual = 0.0;  // weighted RMS relative misfit of TDEV^2

    double amplitude(NoiseType t) const { return amplitudes_s[static_cast<std::size_t>(t)]; }
};

namespace detail {

// TDEV^2 exponents per component type, tau in seconds.
inline constexpr std::array<double, 4> tdev_sq_exponents{-1.0, 0.0, 1.0, 3.0};

inline bool solve_linear(std::array<std::array<double, 4>, 4>& a, std::array<double, 4>& b,
                         int n) {
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col]))
                pivot = r;
        if (std::abs(a[pivot][col]) < 1e-300)
            return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = 0; r < n; ++r) {
            if (r == col)
                continue;
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c)
                a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (int i = 0; i < n; ++i)
        b[i] /= a[i][i];
    return true;
}

}  // namespace detail

/// Non-negative least squares of component TDEV^2 amplitudes against the
/// measured curve, using the theoretical tau exponents. Exact over the 16
/// possible active sets (the optimal support's unconstrained solution is
/// feasible and minimal). Weighted relative to the measured values.
inline MixtureFit fit_noise_mixture(const StabilityCurve& curve) {
    if (curve.statistic != Statistic::tdev)
        throw invalid_argument("fit_noise_mixture: expects a TDEV curve");
    std::vector<double> taus, values, dof;
    for (const auto& p : curve.points) {
        if (p.tau_s > 0.0 && p.value_s >= 0.0) {
            taus.push_back(p.tau_s);
            values.push_back(p.value_s);
            // overlapping estimates are correlated across a window: the
            // effective degrees of freedom scale as num_terms / window
            dof.push_back(static_cast<double>(std::max<std::size_t>(1, p.num_terms)) /
                          std::max(1, p.window));
        }
    }
    if (taus.size() < 5)
        throw ill_conditioned("fit_noise_mixture: need at least 5 points");
    const auto [mn, mx] = std::minmax_element(taus.begin(), taus.end());
    if (*mx / *mn < std::pow(10.0, 1.5))
        throw ill_conditioned("fit_noise_mixture: tau span below 1.5 decades");

    MixtureFit fit;
    bool all_zero = true;
    for (double v : values)
        if (v > 0.0)
            all_zero = false;
    if (all_zero)
        return fit;

    const std::size_t npts = taus.size();
    std::vector<std::array<double, 4>> basis(npts);
    std::vector<double> target(npts), weight(npts);
    for (std::size_t i = 0; i < npts; ++i) {
        for (std::size_t k = 0; k < 4; ++k)
            basis[i][k] = std::pow(taus[i], detail::tdev_sq_exponents[k]);
        target[i] = values[i] * values[i];
        // relative residuals, weighted by effective degrees of freedom so
        // poorly averaged large-tau estimates do not dominate
        weight[i] = target[i] > 0.0 ? dof[i] / (target[i] * target[i]) : 0.0;
    }

    double best_residual = std::numeric_limits<double>::infinity();
    std::array<double, 4> best_c{};
    for (int mask = 0; mask < 16; ++mask) {
        std::array<int, 4> idx{};
        int k = 0;
        for (int j = 0; j < 4; ++j)
            if (mask & (1 << j))
                idx[k++] = j;
        std::array<double, 4> c{};
        if (k > 0) {
            std::array<std::array<double, 4>, 4> ata{};
            std::array<double, 4> atb{};
            for (std::size_t i = 0; i < npts; ++i)
                for (int r = 0; r < k; ++r) {
                    atb[r] += weight[i] * basis[i][idx[r]] * target[i];
                    for (int cc = 0; cc < k; ++cc)
                        ata[r][cc] += weight[i] * basis[i][idx[r]] * basis[i][idx[cc]];
                }
            if (!detail::solve_linear(ata, atb, k))
                continue;
            bool feasible = true;
            for (int r = 0; r < k; ++r) {
                if (atb[r] < 0.0) {
                    feasible = false;
                    break;
                }
                c[idx[r]] = atb[r];
            }
            if (!feasible)
                continue;
        }
        double res = 0.0;
        for (std::size_t i = 0; i < npts; ++i) {
            double model = 0.0;
            for (int j = 0; j < 4; ++j)
                model += c[j] * basis[i][j];
            res += weight[i] * (target[i] - model) * (target[i] - model);
        }
        if (res < best_residual) {
            best_residual = res;
            best_c = c;
        }
    }

    for (std::size_t j = 0; j < 4; ++j)
        fit.amplitudes_s[j] = std::sqrt(std::max(0.0, best_c[j]));
    double norm = 0.0;
    for (std::size_t i = 0; i < npts; ++i)
        norm += weight[i] * target[i] * target[i];
    fit.residual = norm > 0.0 ? std::sqrt(best_residual / norm) : 0.0;
    return fit;
}

}  // namespace wrsim
