#pragma once

// Seeded synthetic-data generators: every fitted model can be forward-run
// with known ground truth so the analyzers are testable against oracles.
// All generators are pure functions of (parameters, seed); the RNG is
// SplitMix64 (see rng.hpp), fixed across platforms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "nvlex/beam.hpp"
#include "nvlex/odmr.hpp"
#include "nvlex/photonstats.hpp"
#include "nvlex/photophys.hpp"
#include "nvlex/pulse.hpp"
#include "nvlex/rng.hpp"

namespace nvlex::synth {

enum class NoiseModel { multiplicative, poisson };

// P(x) = (P0/2) erfc(sqrt2 (x - center)/W(z)) x (1 + N(0, noise)), clipped at 0.
inline beam::KnifeEdgeScan gen_knife_edge(const beam::BeamGeometry& geom, double z,
                                          const std::vector<double>& x_grid, double total_power,
                                          double noise_fraction, std::uint64_t seed,
                                          double center = 0.0) {
    if (!geom.valid()) throw std::invalid_argument("gen_knife_edge: invalid beam geometry");
    if (!(total_power > 0.0)) throw std::invalid_argument("gen_knife_edge: P0 must be > 0");
    if (!(noise_fraction >= 0.0)) throw std::invalid_argument("gen_knife_edge: negative noise");
    const double w = beam::width_at(geom, z);
    rng::Rng r(seed);
    beam::KnifeEdgeScan scan;
    scan.z = z;
    scan.samples.reserve(x_grid.size());
    for (double x : x_grid) {
        double p = beam::knife_edge_model(x, w, total_power, center, +1);
        if (noise_fraction > 0.0) p *= 1.0 + noise_fraction * r.gaussian();
        scan.samples.push_back({x, std::max(0.0, p)});
    }
    return scan;
}

// W(z) x (1 + N(0, noise)) at each stage position; the reported per-point
// uncertainty is the true 1-sigma of the applied noise.
inline std::vector<beam::CausticPoint> gen_caustic(const beam::BeamGeometry& geom,
                                                   const std::vector<double>& z_grid,
                                                   double noise_fraction, std::uint64_t seed) {
    if (!geom.valid()) throw std::invalid_argument("gen_caustic: invalid beam geometry");
    if (!(noise_fraction >= 0.0)) throw std::invalid_argument("gen_caustic: negative noise");
    rng::Rng r(seed);
    std::vector<beam::CausticPoint> out;
    out.reserve(z_grid.size());
    for (double z : z_grid) {
        const double w = beam::width_at(geom, z);
        beam::CausticPoint p;
        p.z = z;
        p.width = noise_fraction > 0.0 ? w * (1.0 + noise_fraction * r.gaussian()) : w;
        if (noise_fraction > 0.0) p.width_error = noise_fraction * w;
        out.push_back(p);
    }
    return out;
}

// Two-level emission cycle per emitter: exponential wait to excite
// (excitation_rate), exponential wait to emit (decay_rate). Emissions of all
// emitters are merged and routed to the two channels by a fair coin
// (beam-splitter model). Channel ids are 0 and 1, span (0, duration).
inline std::pair<photonstats::TimestampSeries, photonstats::TimestampSeries> gen_photon_stream(
    int n_emitters, double excitation_rate, double decay_rate, double duration,
    std::uint64_t seed) {
    if (n_emitters < 1) throw std::invalid_argument("gen_photon_stream: need >= 1 emitter");
    if (!(excitation_rate > 0.0 && decay_rate > 0.0))
        throw std::invalid_argument("gen_photon_stream: rates must be > 0");
    if (!(duration > 0.0)) throw std::invalid_argument("gen_photon_stream: duration must be > 0");

    std::vector<double> emissions;
    for (int e = 0; e < n_emitters; ++e) {
        rng::Rng r(rng::child_seed(seed, static_cast<std::uint64_t>(e)));
        double t = 0.0;
        while (true) {
            t += r.exponential(excitation_rate);  // ground -> excited
            t += r.exponential(decay_rate);       // excited -> ground, photon out
            if (t > duration) break;
            emissions.push_back(t);
        }
    }
    std::sort(emissions.begin(), emissions.end());

    photonstats::TimestampSeries a, b;
    a.channel_id = 0;
    b.channel_id = 1;
    a.t_start = b.t_start = 0.0;
    a.t_end = b.t_end = duration;
    rng::Rng coin(rng::child_seed(seed, static_cast<std::uint64_t>(n_emitters)));
    for (double t : emissions)
        (coin.next_u64() & 1ULL ? a : b).arrival_times.push_back(t);
    return {std::move(a), std::move(b)};
}

// Homogeneous Poisson arrivals at `rate` over (0, duration), one channel.
inline photonstats::TimestampSeries gen_poisson_stream(double rate, double duration,
                                                       std::uint64_t seed, int channel_id = 0) {
    if (!(rate > 0.0 && duration > 0.0))
        throw std::invalid_argument("gen_poisson_stream: rate and duration must be > 0");
    rng::Rng r(seed);
    photonstats::TimestampSeries s;
    s.channel_id = channel_id;
    s.t_start = 0.0;
    s.t_end = duration;
    double t = r.exponential(rate);
    while (t <= duration) {
        s.arrival_times.push_back(t);
        t += r.exponential(rate);
    }
    return s;
}

inline photophys::SaturationCurve gen_saturation(double a, double p_sat, double b,
                                                 const std::vector<double>& powers,
                                                 double noise_fraction, std::uint64_t seed,
                                                 NoiseModel noise = NoiseModel::multiplicative) {
    if (!(a > 0.0 && p_sat > 0.0)) throw std::invalid_argument("gen_saturation: a, p_sat must be > 0");
    if (!(noise_fraction >= 0.0)) throw std::invalid_argument("gen_saturation: negative noise");
    rng::Rng r(seed);
    photophys::SaturationCurve c;
    c.points.reserve(powers.size());
    for (double p : powers) {
        double counts = photophys::saturation_model(p, a, p_sat, b);
        if (noise == NoiseModel::poisson)
            counts = static_cast<double>(r.poisson(std::max(0.0, counts)));
        else if (noise_fraction > 0.0)
            counts *= 1.0 + noise_fraction * r.gaussian();
        c.points.push_back({p, counts});
    }
    return c;
}

// I = (C0 + C1 cos(4 (a' - max_angle) pi/180)) x (1 + N(0, noise)); maxima at
// max_angle + k*90 degrees.
inline photophys::PolarizationSweep gen_polarization(double c0, double c1, double max_angle_deg,
                                                     const std::vector<double>& angles_deg,
                                                     double noise_fraction, std::uint64_t seed) {
    if (!(c0 > c1 && c1 >= 0.0)) throw std::invalid_argument("gen_polarization: need C0 > C1 >= 0");
    if (!(noise_fraction >= 0.0)) throw std::invalid_argument("gen_polarization: negative noise");
    rng::Rng r(seed);
    photophys::PolarizationSweep sweep;
    sweep.points.reserve(angles_deg.size());
    for (double ang : angles_deg) {
        const double wrapped = ang - 360.0 * std::floor(ang / 360.0);
        // angle reduced mod 90 (exact) so shifted grids generate bit-identical counts
        const double d = std::fmod(ang, 90.0) - std::fmod(max_angle_deg, 90.0);
        double counts = c0 + c1 * std::cos(4.0 * d * std::numbers::pi / 180.0);
        if (noise_fraction > 0.0) counts *= 1.0 + noise_fraction * r.gaussian();
        sweep.points.push_back({wrapped, counts});
    }
    return sweep;
}

// Error-function edges scaled so the 10-90% spans equal the requested times;
// the 50% crossings are `width` apart. off = on/ER. A damped sinusoidal
// ripple of the given initial fraction rings on the first quarter of the
// plateau. The sampling grid phase is randomized within one sample period.
inline pulse::PulseTrace gen_pulse(double rise_10_90, double fall_10_90, double width,
                                   double on_level, double extinction_ratio,
                                   double ripple_fraction, double sample_period,
                                   std::uint64_t seed) {
    if (!(rise_10_90 > 0.0 && fall_10_90 > 0.0 && sample_period > 0.0))
        throw std::invalid_argument("gen_pulse: times must be > 0");
    if (!(width > rise_10_90 + fall_10_90))
        throw std::invalid_argument("gen_pulse: width must exceed rise + fall");
    if (!(extinction_ratio > 1.0)) throw std::invalid_argument("gen_pulse: ER must be > 1");
    if (!(on_level > 0.0)) throw std::invalid_argument("gen_pulse: on level must be > 0");
    if (!(ripple_fraction >= 0.0)) throw std::invalid_argument("gen_pulse: negative ripple");

    // 10-90 span of the normal CDF edge is 2*1.2815515655446004 sigma
    constexpr double span_sigmas = 2.5631031310892007;
    const double sr = rise_10_90 / span_sigmas;
    const double sf = fall_10_90 / span_sigmas;
    const double off = on_level / extinction_ratio;
    const double lead = 6.0 * sr + 20.0 * sample_period;
    const double trail = 6.0 * sf + 20.0 * sample_period;

    rng::Rng r(seed);
    const double jitter = r.uniform();  // sampling-phase offset, fraction of a period

    const auto n = static_cast<std::size_t>(std::ceil((lead + width + trail) / sample_period));
    const auto cdf = [](double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); };
    const double ripple_tau = width / 16.0;
    const double ripple_period = std::max(width / 20.0, 4.0 * sample_period);
    const double ripple_start = 2.5 * sr;

    pulse::PulseTrace trace;
    trace.sample_period = sample_period;
    trace.nominal_pulse_width = width;
    trace.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (static_cast<double>(i) + jitter) * sample_period - lead;
        const double envelope = cdf(t / sr) * (1.0 - cdf((t - width) / sf));
        double v = off + (on_level - off) * envelope;
        if (ripple_fraction > 0.0 && t >= ripple_start) {
            const double dtp = t - ripple_start;
            v += ripple_fraction * on_level * envelope * std::exp(-dtp / ripple_tau) *
                 std::sin(2.0 * std::numbers::pi * dtp / ripple_period);
        }
        trace.samples[i] = v;
    }
    return trace;
}

inline odmr::OdmrSweep gen_odmr(double baseline, double contrast, double f0, double fwhm,
                                const std::vector<double>& frequencies, double noise_fraction,
                                std::uint64_t seed,
                                NoiseModel noise = NoiseModel::multiplicative) {
    if (!(contrast >= 0.0 && contrast < 1.0))
        throw std::invalid_argument("gen_odmr: contrast must be in [0, 1)");
    if (!(fwhm > 0.0)) throw std::invalid_argument("gen_odmr: linewidth must be > 0");
    if (!(baseline > 0.0)) throw std::invalid_argument("gen_odmr: baseline must be > 0");
    if (!(noise_fraction >= 0.0)) throw std::invalid_argument("gen_odmr: negative noise");
    rng::Rng r(seed);
    odmr::OdmrSweep s;
    s.frequencies = frequencies;
    s.fluorescence.reserve(frequencies.size());
    for (double f : frequencies) {
        double v = odmr::lorentzian_dip(f, baseline, contrast, f0, fwhm);
        if (noise == NoiseModel::poisson)
            v = static_cast<double>(r.poisson(std::max(0.0, v)));
        else if (noise_fraction > 0.0)
            v *= 1.0 + noise_fraction * r.gaussian();
        s.fluorescence.push_back(v);
    }
    return s;
}

namespace detail {
// asymmetric Gaussian: different sigmas left and right of the peak
inline double asym_gauss(double x, double peak, double sigma_left, double sigma_right) {
    const double s = x < peak ? sigma_left : sigma_right;
    const double d = (x - peak) / s;
    return std::exp(-0.5 * d * d);
}
}  // namespace detail

// NV- component: ZPL Gaussian at 637 nm over a broad sideband peaking near
// 700 nm. NV0 component (scaled by nv0_weight): ZPL at 575 nm plus a band
// over roughly 575-650 nm.
inline photophys::Spectrum gen_spectrum(double zpl_weight, double nv0_weight,
                                        const std::vector<double>& wavelength_grid,
                                        std::uint64_t seed, double noise_fraction = 0.0) {
    if (!(zpl_weight >= 0.0 && nv0_weight >= 0.0))
        throw std::invalid_argument("gen_spectrum: weights must be >= 0");
    if (!(noise_fraction >= 0.0)) throw std::invalid_argument("gen_spectrum: negative noise");
    rng::Rng r(seed);
    photophys::Spectrum sp;
    sp.samples.reserve(wavelength_grid.size());
    for (double w : wavelength_grid) {
        double v = detail::asym_gauss(w, 700.0, 35.0, 55.0);        // NV- phonon sideband
        v += zpl_weight * detail::asym_gauss(w, 637.0, 1.8, 1.8);   // NV- ZPL
        v += nv0_weight * (2.5 * detail::asym_gauss(w, 575.0, 2.5, 2.5) +
                           1.5 * detail::asym_gauss(w, 600.0, 15.0, 35.0));
        if (noise_fraction > 0.0) v *= 1.0 + noise_fraction * r.gaussian();
        sp.samples.push_back({w, std::max(0.0, v)});
    }
    return sp;
}

}  // namespace nvlex::synth
