#pragma once

// Pulse-trace metrology (rise/fall times, extinction ratio, ripple) and the
// steady-state acousto-optic Bragg reflectance model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace nvlex::pulse {

struct PulseTrace {
    double sample_period = 0.0;  // ns
    std::vector<double> samples;
    std::optional<double> nominal_pulse_width;  // ns
};

inline void validate(const PulseTrace& t) {
    if (!(t.sample_period > 0.0)) throw std::invalid_argument("pulse trace: sample_period must be > 0");
    if (t.samples.size() < 50) throw std::invalid_argument("pulse trace: need at least 50 samples");
    for (double v : t.samples)
        if (!std::isfinite(v)) throw std::invalid_argument("pulse trace: non-finite sample");
}

struct PulseMetrics {
    double rise_time = 0.0;  // ns, 10% -> 90%
    double fall_time = 0.0;  // ns, 90% -> 10%
    double on_level = 0.0;
    double off_level = 0.0;
    double extinction_ratio = 0.0;  // on/off; +inf with flag when off <= 0
    double ripple_rms_fraction = 0.0;
    std::optional<double> transmittance;  // on_level / input reference, when given
    bool extinction_unbounded = false;
};

namespace detail {

// Interpolated sample-index times of threshold crossings. Each helper walks
// from a start index known to be on one side of `level` toward the crossing
// and interpolates linearly between the bracketing samples.

// upward crossing at or left of i (s[i] >= level)
inline double cross_up_left(const std::vector<double>& s, std::size_t i, double level) {
    while (i > 0 && s[i - 1] >= level) --i;
    if (i == 0) return 0.0;
    return static_cast<double>(i - 1) + (level - s[i - 1]) / (s[i] - s[i - 1]);
}
// upward crossing at or right of i (approaching from below)
inline double cross_up_right(const std::vector<double>& s, std::size_t i, double level) {
    while (i + 1 < s.size() && s[i] < level) ++i;
    if (i == 0 || s[i] == s[i - 1]) return static_cast<double>(i);
    return static_cast<double>(i - 1) + (level - s[i - 1]) / (s[i] - s[i - 1]);
}
// downward crossing at or left of i (s[i] <= level)
inline double cross_down_left(const std::vector<double>& s, std::size_t i, double level) {
    while (i > 0 && s[i - 1] <= level) --i;
    if (i == 0 || s[i] == s[i - 1]) return 0.0;
    return static_cast<double>(i - 1) + (level - s[i - 1]) / (s[i] - s[i - 1]);
}
// downward crossing at or right of i (approaching from above)
inline double cross_down_right(const std::vector<double>& s, std::size_t i, double level) {
    while (i + 1 < s.size() && s[i] > level) ++i;
    if (i == 0 || s[i] == s[i - 1]) return static_cast<double>(i);
    return static_cast<double>(i - 1) + (level - s[i - 1]) / (s[i] - s[i - 1]);
}

struct EdgeTimes {
    double t10 = 0.0, t50 = 0.0, t90 = 0.0;  // sample-index units
};

inline EdgeTimes rising_edge(const std::vector<double>& s, std::size_t idx50, double l10,
                             double l50, double l90) {
    EdgeTimes e;
    e.t50 = s[idx50] >= l50 ? cross_up_left(s, idx50, l50) : cross_up_right(s, idx50, l50);
    const auto anchor = static_cast<std::size_t>(std::ceil(e.t50));
    e.t10 = cross_up_left(s, anchor, l10);
    e.t90 = cross_up_right(s, anchor, l90);
    return e;
}

inline EdgeTimes falling_edge(const std::vector<double>& s, std::size_t idx50, double l10,
                              double l50, double l90) {
    EdgeTimes e;
    e.t50 = s[idx50] > l50 ? cross_down_right(s, idx50, l50) : cross_down_left(s, idx50, l50);
    const auto anchor = static_cast<std::size_t>(std::ceil(e.t50));
    e.t90 = cross_down_left(s, anchor, l90);
    e.t10 = cross_down_right(s, anchor, l10);
    return e;
}

}  // namespace detail

// Single-pulse metrology. The trace must contain exactly one rising and one
// falling 50% crossing. The plateau between the 50% crossings must be >= 20
// samples; the pre-rise baseline must keep >= 5 usable samples.
//
// off_level is the mean of the pre-rise baseline: everything before the
// rising edge, excluding the 10 samples nearest the edge and, for analog
// edges, an additional settling margin of 1.7 rise times below the 10%
// crossing so the edge foot does not leak into the baseline.
inline PulseMetrics analyze_pulse(const PulseTrace& trace,
                                  std::optional<double> input_power = std::nullopt) {
    validate(trace);
    const auto& s = trace.samples;
    const double dt = trace.sample_period;

    double lo = s[0], hi = s[0];
    for (double v : s) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!(hi > lo)) throw std::invalid_argument("analyze_pulse: trace is constant (no pulse)");

    // locate the pulse with provisional levels from the raw extremes
    const double mid = 0.5 * (lo + hi);
    std::size_t rise_idx = 0, fall_idx = 0;
    int n_rise = 0, n_fall = 0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i] < mid && s[i + 1] >= mid) {
            ++n_rise;
            rise_idx = i + 1;
        }
        if (s[i] >= mid && s[i + 1] < mid) {
            ++n_fall;
            fall_idx = i;
        }
    }
    if (n_rise == 0 || n_fall == 0) throw std::invalid_argument("analyze_pulse: no 50% crossings found");
    if (n_rise > 1 || n_fall > 1)
        throw std::invalid_argument("analyze_pulse: multiple pulses in trace");
    if (fall_idx <= rise_idx) throw std::invalid_argument("analyze_pulse: malformed pulse");

    const std::size_t plateau_len = fall_idx - rise_idx + 1;
    if (plateau_len < 20) throw std::invalid_argument("analyze_pulse: plateau shorter than 20 samples");

    // on level: mean of the central 50% of the plateau
    const std::size_t q = plateau_len / 4;
    double on = 0.0;
    std::size_t n_on = 0;
    for (std::size_t i = rise_idx + q; i <= fall_idx - q; ++i) {
        on += s[i];
        ++n_on;
    }
    on /= static_cast<double>(n_on);

    // provisional rising-edge timing (levels from raw extremes) fixes the
    // baseline window before off_level is known
    const double span0 = hi - lo;
    const auto edge0 = detail::rising_edge(s, rise_idx, lo + 0.1 * span0, lo + 0.5 * span0,
                                           lo + 0.9 * span0);
    const double settle = 1.7 * std::max(edge0.t90 - edge0.t10, 1.0);
    const auto baseline_end = static_cast<long long>(
        std::floor(std::min(edge0.t10 - settle, static_cast<double>(rise_idx) - 10.0)));
    if (baseline_end < 5)
        throw std::invalid_argument("analyze_pulse: pre-rise baseline too short");
    double off = 0.0;
    for (long long i = 0; i <= baseline_end; ++i) off += s[static_cast<std::size_t>(i)];
    off /= static_cast<double>(baseline_end + 1);
    if (!(on > off)) throw std::invalid_argument("analyze_pulse: on level not above baseline");

    // final edge timing with refined levels
    const double span = on - off;
    const double l10 = off + 0.10 * span;
    const double l50 = off + 0.50 * span;
    const double l90 = off + 0.90 * span;
    const auto rise = detail::rising_edge(s, rise_idx, l10, l50, l90);
    const auto fall = detail::falling_edge(s, fall_idx, l10, l50, l90);

    PulseMetrics m;
    m.on_level = on;
    m.off_level = off;
    m.rise_time = (rise.t90 - rise.t10) * dt;
    m.fall_time = (fall.t10 - fall.t90) * dt;

    if (off > 0.0) {
        m.extinction_ratio = on / off;
    } else {
        m.extinction_ratio = std::numeric_limits<double>::infinity();
        m.extinction_unbounded = true;
    }

    // ripple: RMS deviation over the first quarter of the plateau, entered
    // only after the rising edge has settled (1.5 rise times past the 90%
    // crossing) so edge samples do not masquerade as ripple
    std::size_t rip_begin = static_cast<std::size_t>(
        std::ceil(rise.t90 + 1.5 * std::max(rise.t90 - rise.t10, 1.0)));
    const std::size_t rip_end = rise_idx + std::max<std::size_t>(q, 1);
    if (rip_begin >= rip_end) rip_begin = rise_idx;
    double ss = 0.0;
    std::size_t n_rip = 0;
    for (std::size_t i = rip_begin; i < rip_end; ++i) {
        const double d = s[i] - on;
        ss += d * d;
        ++n_rip;
    }
    m.ripple_rms_fraction = std::sqrt(ss / static_cast<double>(n_rip)) / on;

    if (input_power) {
        if (!(*input_power > 0.0))
            throw std::invalid_argument("analyze_pulse: input power reference must be > 0");
        m.transmittance = on / *input_power;
    }
    return m;
}

// ---------------------------------------------------------------------------
// Acousto-optic Bragg reflectance
// ---------------------------------------------------------------------------

struct AomConfig {
    double acoustic_wavelength = 0.0;  // Lambda, m
    double acoustic_frequency = 0.0;   // Omega, rad/s
    double optical_wavelength = 0.0;   // lambda, m
    double optical_wavenumber = 0.0;   // k = 2 pi / lambda
    double acoustic_wavenumber = 0.0;  // q = 2 pi / Lambda
    double interaction_length = 0.0;   // L, m
    double max_reflectance = 0.0;      // r0 in (0, 1]
};

inline AomConfig make_aom_config(double acoustic_wavelength, double acoustic_frequency,
                                 double optical_wavelength, double interaction_length,
                                 double max_reflectance) {
    if (!(acoustic_wavelength > 0.0 && acoustic_frequency > 0.0 && optical_wavelength > 0.0 &&
          interaction_length > 0.0))
        throw std::invalid_argument("aom config: lengths and frequency must be > 0");
    if (!(max_reflectance > 0.0 && max_reflectance <= 1.0))
        throw std::invalid_argument("aom config: r0 must be in (0, 1]");
    AomConfig c;
    c.acoustic_wavelength = acoustic_wavelength;
    c.acoustic_frequency = acoustic_frequency;
    c.optical_wavelength = optical_wavelength;
    c.optical_wavenumber = 2.0 * std::numbers::pi / optical_wavelength;
    c.acoustic_wavenumber = 2.0 * std::numbers::pi / acoustic_wavelength;
    c.interaction_length = interaction_length;
    c.max_reflectance = max_reflectance;
    return c;
}

// normalized sinc: sin(pi u)/(pi u), exactly 1 at u=0 and exactly 0 at
// nonzero integers (phase-matching nulls)
inline double sinc(double u) {
    if (u == 0.0) return 1.0;
    if (u == std::nearbyint(u)) return 0.0;
    return std::sin(std::numbers::pi * u) / (std::numbers::pi * u);
}

// Bragg condition 2 Lambda sin(theta_B) = lambda.
inline double bragg_angle(double acoustic_wavelength, double optical_wavelength) {
    if (!(acoustic_wavelength > 0.0 && optical_wavelength > 0.0))
        throw std::invalid_argument("bragg_angle: wavelengths must be > 0");
    const double ratio = optical_wavelength / (2.0 * acoustic_wavelength);
    if (ratio > 1.0) throw std::invalid_argument("bragg_angle: lambda > 2 Lambda, no Bragg solution");
    return std::asin(ratio);
}

enum class Branch { plus, minus };

// |r+-| = r0 |sinc((2 k sin(theta) -+ q) L / (2 pi))|; the e^{i Omega t}
// frequency-shift phase carries no magnitude and is dropped.
inline double reflectance_magnitude(const AomConfig& cfg, double theta, Branch branch) {
    if (!(cfg.optical_wavenumber > 0.0 && cfg.acoustic_wavenumber > 0.0 &&
          cfg.interaction_length > 0.0 && cfg.max_reflectance > 0.0))
        throw std::invalid_argument("reflectance_magnitude: invalid AOM config");
    const double sign = branch == Branch::plus ? -1.0 : 1.0;
    const double mismatch = 2.0 * cfg.optical_wavenumber * std::sin(theta) +
                            sign * cfg.acoustic_wavenumber;
    const double u = mismatch * cfg.interaction_length / (2.0 * std::numbers::pi);
    return cfg.max_reflectance * std::abs(sinc(u));
}

}  // namespace nvlex::pulse
