#pragma once

// Photophysics analyses: saturation curve with linear background subtraction,
// half-wave-plate polarization sweep, emission-spectrum diagnostics.
// Powers in W, count rates in counts/s, angles in degrees, wavelengths in nm.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nvlex/fitcore.hpp"

namespace nvlex::photophys {

// ---------------------------------------------------------------------------
// Saturation: I(P) = a P / (P_sat + P) + b P
// ---------------------------------------------------------------------------

struct PowerPoint {
    double power = 0.0;   // W
    double counts = 0.0;  // counts/s
};

struct SaturationCurve {
    std::vector<PowerPoint> points;
    std::vector<PowerPoint> background_points;  // optional; empty = none
};

inline void validate_power_series(const std::vector<PowerPoint>& pts, const char* what) {
    if (pts.size() < 5) throw std::invalid_argument(std::string(what) + ": need at least 5 points");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!std::isfinite(pts[i].power) || !std::isfinite(pts[i].counts) || pts[i].power < 0.0)
            throw std::invalid_argument(std::string(what) + ": invalid sample");
        if (i > 0 && !(pts[i].power > pts[i - 1].power))
            throw std::invalid_argument(std::string(what) + ": powers must be strictly increasing");
    }
}

inline void validate(const SaturationCurve& c) {
    validate_power_series(c.points, "saturation curve");
    if (!c.background_points.empty())
        validate_power_series(c.background_points, "saturation background");
}

inline double saturation_model(double power, double a, double p_sat, double b) {
    return a * power / (p_sat + power) + b * power;
}

struct SaturationFit {
    double a = 0.0;      // counts/s at full saturation
    double p_sat = 0.0;  // W
    double b = 0.0;      // counts/s per W
    double a_error = 0.0;
    double p_sat_error = 0.0;
    double b_error = 0.0;
    std::optional<fitcore::LinearFit> background;
    bool background_subtracted = false;
    bool converged = false;
    bool negative_b = false;                  // b floated below 0
    bool negative_after_subtraction = false;  // some corrected counts < 0 (retained)
    bool p_sat_extrapolated = false;          // p_sat outside the sampled power range
    bool low_max_power = false;               // max power < 1.5 * fitted p_sat
    fitcore::FitResult fit;

    double operator()(double power) const { return saturation_model(power, a, p_sat, b); }
};

// counts' = counts - (slope * P + intercept); negative results are retained.
inline std::vector<PowerPoint> subtract_background(const std::vector<PowerPoint>& signal,
                                                   const fitcore::LinearFit& background) {
    std::vector<PowerPoint> out(signal.size());
    for (std::size_t i = 0; i < signal.size(); ++i)
        out[i] = {signal[i].power, signal[i].counts - background(signal[i].power)};
    return out;
}

namespace detail {
// power at which counts first cross `level`, linear interpolation
inline double power_at_level(const std::vector<PowerPoint>& pts, double level) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i].counts, b = pts[i + 1].counts;
        if ((a - level) * (b - level) <= 0.0 && a != b) {
            const double t = (level - a) / (b - a);
            return pts[i].power + t * (pts[i + 1].power - pts[i].power);
        }
    }
    return pts[pts.size() / 2].power;
}
}  // namespace detail

inline SaturationFit fit_saturation(const SaturationCurve& curve,
                                    const fitcore::FitOptions& options = {}) {
    validate(curve);
    SaturationFit out;

    std::vector<PowerPoint> pts = curve.points;
    if (!curve.background_points.empty()) {
        std::vector<double> bp(curve.background_points.size()), bc(curve.background_points.size());
        for (std::size_t i = 0; i < bp.size(); ++i) {
            bp[i] = curve.background_points[i].power;
            bc[i] = curve.background_points[i].counts;
        }
        out.background = fitcore::fit_linear(bp, bc);
        pts = subtract_background(pts, *out.background);
        out.background_subtracted = true;
        out.negative_after_subtraction =
            std::any_of(pts.begin(), pts.end(), [](const auto& p) { return p.counts < 0.0; });
    }

    const double cmax = std::max_element(pts.begin(), pts.end(), [](const auto& u, const auto& v) {
                            return u.counts < v.counts;
                        })->counts;
    if (!(cmax > 0.0)) throw std::invalid_argument("fit_saturation: no positive counts");

    // start values per the data: a = 2 max counts, p_sat at the half-max
    // crossing, b from the tail slope in excess of the saturating term
    const double a0 = 2.0 * cmax;
    double p0 = detail::power_at_level(pts, 0.5 * cmax);
    if (!(p0 > 0.0)) p0 = 0.5 * pts.back().power;
    double b0 = 0.0;
    const bool fit_b = !out.background_subtracted;  // b fixed to 0 after subtraction
    if (fit_b && pts.size() >= 2) {
        const auto &u = pts[pts.size() - 2], &v = pts.back();
        const double tail_slope = (v.counts - u.counts) / (v.power - u.power);
        const double sat_slope = a0 * p0 / ((p0 + v.power) * (p0 + v.power));
        b0 = std::max(0.0, tail_slope - sat_slope);
    }

    std::vector<double> xs(pts.size()), ys(pts.size()), wts(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        xs[i] = pts[i].power;
        ys[i] = pts[i].counts;
        // Shot noise on count rates grows with the rate, so fit in relative
        // terms: weights follow 1/counts^2 (floored so background-subtracted
        // points near zero cannot dominate).  Only the weight shape is known,
        // hence the reported errors are rescaled by the reduced chi-square.
        const double level = std::max(ys[i], 1e-3 * cmax);
        wts[i] = (cmax / level) * (cmax / level);
    }

    fitcore::ModelFunction model;
    model.arity = fit_b ? 3 : 2;
    model.evaluate = [fit_b](std::span<const double> p, double x) {
        return saturation_model(x, p[0], p[1], fit_b ? p[2] : 0.0);
    };
    model.jacobian = [fit_b](std::span<const double> p, double x, std::span<double> g) {
        const double denom = p[1] + x;
        g[0] = x / denom;
        g[1] = -p[0] * x / (denom * denom);
        if (fit_b) g[2] = x;
    };

    std::vector<double> initial{a0, p0};
    if (fit_b) initial.push_back(b0);
    auto fit = fitcore::fit_nonlinear(model, xs, ys, wts, initial, options);

    // The weights fix only the relative noise shape; recover the absolute
    // scale from the weighted residuals.
    double scale = 1.0;
    if (fit.degrees_of_freedom > 0 && std::isfinite(fit.residual_sum_squares))
        scale = std::sqrt(fit.residual_sum_squares / fit.degrees_of_freedom);

    out.fit = fit;
    out.converged = fit.converged;
    out.a = fit.parameters[0];
    out.p_sat = std::abs(fit.parameters[1]);
    out.b = fit_b ? fit.parameters[2] : 0.0;
    out.a_error = scale * fit.standard_errors[0];
    out.p_sat_error = scale * fit.standard_errors[1];
    out.b_error = fit_b ? scale * fit.standard_errors[2] : 0.0;
    out.negative_b = out.b < 0.0;
    out.p_sat_extrapolated = out.p_sat > pts.back().power || out.p_sat < pts.front().power;
    out.low_max_power = pts.back().power < 1.5 * out.p_sat;
    return out;
}

// ---------------------------------------------------------------------------
// Polarization: I(a') = C0 + C1 cos(4 (a' - phase) pi/180)
// ---------------------------------------------------------------------------

struct PolarizationPoint {
    double angle = 0.0;   // half-wave-plate angle a', degrees in [0, 360)
    double counts = 0.0;  // counts/s
};

struct PolarizationSweep {
    std::vector<PolarizationPoint> points;
};

inline void validate(const PolarizationSweep& s) {
    if (s.points.size() < 8)
        throw std::invalid_argument("polarization sweep: need at least 8 points");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : s.points) {
        if (!std::isfinite(p.angle) || !std::isfinite(p.counts) || p.angle < 0.0 ||
            p.angle >= 360.0)
            throw std::invalid_argument("polarization sweep: angle must be in [0, 360)");
        lo = std::min(lo, p.angle);
        hi = std::max(hi, p.angle);
    }
    if (hi - lo < 90.0)
        throw std::invalid_argument("polarization sweep: must span at least 90 degrees");
}

struct PolarizationFit {
    double offset = 0.0;       // C0, counts/s
    double amplitude = 0.0;    // C1 >= 0, counts/s
    double max_angle = 0.0;    // principal value in [0, 45) deg (phase mod 45)
    double phase_deg = 0.0;    // actual maximum location in [0, 90); maxima at phase + k*90
    double visibility = 0.0;   // C1/C0
    double offset_error = 0.0;
    double amplitude_error = 0.0;
    double max_angle_error = 0.0;
    double visibility_error = 0.0;
    bool converged = false;
    bool flat_response = false;  // amplitude consistent with zero; angles meaningless
    double residual_sum_squares = 0.0;

    double operator()(double angle_deg) const {
        return offset + amplitude * std::cos(4.0 * (angle_deg - phase_deg) * std::numbers::pi / 180.0);
    }
};

// Linear least squares in (C0, A, B) with I = C0 + A cos(4a') + B sin(4a'),
// then C1 = hypot(A, B) and the phase from atan2. The model's maxima sit at
// phase_deg + k*90; max_angle folds the phase into [0, 45) as a principal
// value, which coincides with phase_deg whenever the maximum lies below 45.
inline PolarizationFit fit_polarization(const PolarizationSweep& sweep) {
    validate(sweep);
    const std::size_t n = sweep.points.size();

    // normal equations for the 3-parameter linear model
    std::vector<double> ata(9, 0.0), aty(3, 0.0);
    std::vector<std::array<double, 3>> rows(n);
    for (std::size_t i = 0; i < n; ++i) {
        // fmod is exact, so sweeps differing by a 90-degree shift produce a
        // bit-identical design matrix (period-90 model)
        const double u = 4.0 * std::fmod(sweep.points[i].angle, 90.0) * std::numbers::pi / 180.0;
        rows[i] = {1.0, std::cos(u), std::sin(u)};
        for (int r = 0; r < 3; ++r) {
            aty[r] += rows[i][r] * sweep.points[i].counts;
            for (int c = 0; c < 3; ++c) ata[3 * r + c] += rows[i][r] * rows[i][c];
        }
    }
    std::vector<double> inv;
    PolarizationFit out;
    if (!fitcore::detail::invert(ata, 3, inv)) return out;  // converged=false
    double c0 = 0.0, a = 0.0, z = 0.0;
    for (int c = 0; c < 3; ++c) {
        c0 += inv[0 * 3 + c] * aty[c];
        a += inv[1 * 3 + c] * aty[c];
        z += inv[2 * 3 + c] * aty[c];
    }

    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = sweep.points[i].counts - (c0 * rows[i][0] + a * rows[i][1] + z * rows[i][2]);
        rss += r * r;
    }
    const int dof = static_cast<int>(n) - 3;
    const double sigma2 = dof > 0 ? rss / dof : 0.0;

    out.converged = true;
    out.residual_sum_squares = rss;
    out.offset = c0;
    out.amplitude = std::hypot(a, z);

    const double var_c0 = sigma2 * inv[0], var_a = sigma2 * inv[4], var_b = sigma2 * inv[8];
    const double cov_ab = sigma2 * inv[5];
    const double c1 = out.amplitude;
    if (c1 > 0.0) {
        out.amplitude_error =
            std::sqrt(std::max(0.0, (a * a * var_a + z * z * var_b + 2.0 * a * z * cov_ab))) / c1;
        const double var_phase4 =
            std::max(0.0, (a * a * var_b + z * z * var_a - 2.0 * a * z * cov_ab)) / (c1 * c1 * c1 * c1);
        out.max_angle_error = std::sqrt(var_phase4) * (180.0 / std::numbers::pi) / 4.0;
    } else {
        out.amplitude_error = std::sqrt(std::max(var_a, var_b));
    }
    out.offset_error = std::sqrt(std::max(0.0, var_c0));

    // A cos u + B sin u = C1 cos(u - phi), maxima where u = phi + 2 pi k
    double phase = std::atan2(z, a) * (180.0 / std::numbers::pi) / 4.0;  // (-45, 45]
    phase = std::fmod(phase + 90.0, 90.0);                               // [0, 90)
    out.phase_deg = phase;
    out.max_angle = std::fmod(phase, 45.0);

    out.flat_response = !(out.amplitude > 2.0 * out.amplitude_error) || out.amplitude == 0.0;
    if (out.offset != 0.0) {
        out.visibility = out.amplitude / out.offset;
        const double ra = c1 > 0.0 ? out.amplitude_error / c1 : 0.0;
        const double rc = out.offset_error / out.offset;
        out.visibility_error = std::abs(out.visibility) * std::sqrt(ra * ra + rc * rc);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spectrum diagnostics
// ---------------------------------------------------------------------------

struct SpectrumSample {
    double wavelength = 0.0;  // nm
    double intensity = 0.0;   // arbitrary, >= 0
};

struct Spectrum {
    std::vector<SpectrumSample> samples;
};

inline void validate(const Spectrum& s) {
    if (s.samples.size() < 8) throw std::invalid_argument("spectrum: need at least 8 samples");
    for (std::size_t i = 0; i < s.samples.size(); ++i) {
        const auto& p = s.samples[i];
        if (!std::isfinite(p.wavelength) || !std::isfinite(p.intensity) || p.intensity < 0.0)
            throw std::invalid_argument("spectrum: invalid sample");
        if (i > 0 && !(p.wavelength > s.samples[i - 1].wavelength))
            throw std::invalid_argument("spectrum: wavelengths must be strictly increasing");
    }
}

struct SpectrumReport {
    bool zpl_present = false;
    std::optional<double> zpl_wavelength;  // nm, in [630, 645] when present
    double zpl_prominence = 0.0;           // excess over local baseline, intensity units
    double peak_wavelength = 0.0;          // global maximum, nm
    double nv0_band_fraction = 0.0;        // integral [550,600] / integral [550,850]
    bool charge_state_ok = false;          // nv0_band_fraction < threshold
    bool zpl_window_covered = true;        // data reaches the [630, 645] search window
};

namespace detail {
// trapezoidal integral of the piecewise-linear interpolant over
// [lo, hi] clipped to the sampled range
inline double integrate_window(const std::vector<SpectrumSample>& s, double lo, double hi) {
    lo = std::max(lo, s.front().wavelength);
    hi = std::min(hi, s.back().wavelength);
    if (!(hi > lo)) return 0.0;
    const auto value_at = [&](double w) {
        auto it = std::lower_bound(s.begin(), s.end(), w, [](const SpectrumSample& p, double x) {
            return p.wavelength < x;
        });
        if (it == s.begin()) return it->intensity;
        if (it == s.end()) return (it - 1)->intensity;
        const auto& r = *it;
        const auto& l = *(it - 1);
        const double t = (w - l.wavelength) / (r.wavelength - l.wavelength);
        return l.intensity + t * (r.intensity - l.intensity);
    };
    double integral = 0.0;
    double wa = lo, ia = value_at(lo);
    for (const auto& p : s) {
        if (p.wavelength <= lo) continue;
        if (p.wavelength >= hi) break;
        integral += 0.5 * (ia + p.intensity) * (p.wavelength - wa);
        wa = p.wavelength;
        ia = p.intensity;
    }
    integral += 0.5 * (ia + value_at(hi)) * (hi - wa);
    return integral;
}
}  // namespace detail

// ZPL: local maximum in [630, 645] nm that clears a linear baseline fitted on
// the flanks [625, 630) u (645, 650] by at least 3x the flank residual RMS.
// NV0 contamination: intensity fraction in the 550-600 nm band.
inline SpectrumReport analyze_spectrum(const Spectrum& spectrum, double nv0_threshold = 0.05) {
    validate(spectrum);
    if (!(nv0_threshold > 0.0))
        throw std::invalid_argument("analyze_spectrum: threshold must be > 0");
    const auto& s = spectrum.samples;
    SpectrumReport r;

    std::size_t ipeak = 0;
    for (std::size_t i = 1; i < s.size(); ++i)
        if (s[i].intensity > s[ipeak].intensity) ipeak = i;
    r.peak_wavelength = s[ipeak].wavelength;

    r.zpl_window_covered = s.front().wavelength <= 630.0 && s.back().wavelength >= 645.0;
    if (r.zpl_window_covered) {
        std::vector<double> fw, fi;  // flank points for the local baseline
        for (const auto& p : s)
            if ((p.wavelength >= 625.0 && p.wavelength < 630.0) ||
                (p.wavelength > 645.0 && p.wavelength <= 650.0)) {
                fw.push_back(p.wavelength);
                fi.push_back(p.intensity);
            }
        if (fw.size() >= 2) {
            const auto base = fitcore::fit_linear(fw, fi);
            double ss = 0.0;
            for (std::size_t i = 0; i < fw.size(); ++i) {
                const double d = fi[i] - base(fw[i]);
                ss += d * d;
            }
            double rms = std::sqrt(ss / static_cast<double>(fw.size()));
            rms = std::max(rms, 1e-9 * std::max(s[ipeak].intensity, 1e-300));  // noiseless floor
            double best = 0.0, best_w = 0.0;
            for (std::size_t i = 1; i + 1 < s.size(); ++i) {
                if (s[i].wavelength < 630.0 || s[i].wavelength > 645.0) continue;
                if (s[i].intensity < s[i - 1].intensity || s[i].intensity < s[i + 1].intensity)
                    continue;  // not a local maximum
                const double excess = s[i].intensity - base(s[i].wavelength);
                if (excess > best) {
                    best = excess;
                    best_w = s[i].wavelength;
                }
            }
            if (best >= 3.0 * rms) {
                r.zpl_present = true;
                r.zpl_wavelength = best_w;
                r.zpl_prominence = best;
            }
        }
    }

    const double nv0 = detail::integrate_window(s, 550.0, 600.0);
    const double total = detail::integrate_window(s, 550.0, 850.0);
    r.nv0_band_fraction = total > 0.0 ? nv0 / total : 0.0;
    r.charge_state_ok = r.nv0_band_fraction < nv0_threshold;
    return r;
}

}  // namespace nvlex::photophys
