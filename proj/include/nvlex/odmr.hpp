#pragma once

// ODMR sweep analysis: direct average-minus-minimum contrast and a
// Lorentzian-dip fit I(f) = B (1 - C (G/2)^2 / ((f-f0)^2 + (G/2)^2)).
// Frequencies in Hz.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "nvlex/fitcore.hpp"

namespace nvlex::odmr {

struct OdmrSweep {
    std::vector<double> frequencies;   // Hz, strictly monotone
    std::vector<double> fluorescence;  // counts/s or normalized
};

namespace detail {
// Returns the sweep sorted by ascending frequency; accepts strictly
// increasing or strictly decreasing input so axis reversal is a no-op.
inline OdmrSweep ascending(const OdmrSweep& s) {
    if (s.frequencies.size() != s.fluorescence.size())
        throw std::invalid_argument("odmr sweep: column length mismatch");
    if (s.frequencies.size() < 11)
        throw std::invalid_argument("odmr sweep: need at least 11 points");
    bool inc = true, dec = true;
    for (std::size_t i = 0; i < s.frequencies.size(); ++i) {
        if (!std::isfinite(s.frequencies[i]) || !std::isfinite(s.fluorescence[i]))
            throw std::invalid_argument("odmr sweep: non-finite sample");
        if (i > 0) {
            inc = inc && s.frequencies[i] > s.frequencies[i - 1];
            dec = dec && s.frequencies[i] < s.frequencies[i - 1];
        }
    }
    if (!inc && !dec)
        throw std::invalid_argument("odmr sweep: frequencies must be strictly monotone");
    if (inc) return s;
    OdmrSweep r;
    r.frequencies.assign(s.frequencies.rbegin(), s.frequencies.rend());
    r.fluorescence.assign(s.fluorescence.rbegin(), s.fluorescence.rend());
    return r;
}

inline double edge_mean(const OdmrSweep& s) {
    double sum = 0.0;
    const std::size_t n = s.fluorescence.size();
    for (std::size_t i = 0; i < 5; ++i) sum += s.fluorescence[i] + s.fluorescence[n - 1 - i];
    return sum / 10.0;
}
}  // namespace detail

inline double lorentzian_dip(double f, double baseline, double contrast, double f0,
                             double fwhm) {
    const double hg = 0.5 * fwhm;
    const double d = f - f0;
    return baseline * (1.0 - contrast * hg * hg / (d * d + hg * hg));
}

// C = (I_avg - I_min) / I_avg with I_avg the mean of the first and last five
// points and I_min the global minimum.
inline double contrast_direct(const OdmrSweep& sweep) {
    const OdmrSweep s = detail::ascending(sweep);
    const double avg = detail::edge_mean(s);
    if (!(avg > 0.0)) throw std::invalid_argument("contrast_direct: edge average must be > 0");
    const double mn = *std::min_element(s.fluorescence.begin(), s.fluorescence.end());
    return (avg - mn) / avg;
}

struct OdmrResult {
    double contrast_direct = 0.0;
    double contrast_lorentzian = 0.0;  // fitted C
    double contrast_error = 0.0;
    double center_frequency = 0.0;  // f0, Hz
    double center_frequency_error = 0.0;
    double linewidth_fwhm = 0.0;  // Gamma, Hz
    double linewidth_error = 0.0;
    double baseline = 0.0;  // B
    double baseline_error = 0.0;
    bool converged = false;
    bool low_signal = false;        // dip shallower than 5% of edge mean
    bool center_at_boundary = false;
    fitcore::FitResult fit;
};

// Lorentzian fit with start values read off the data (B = edge mean,
// f0 = argmin, C = direct contrast, Gamma = interpolated FWHM). The fit runs
// in a normalized frequency coordinate u = (f - f_mid)/span for conditioning
// and maps back afterwards.
inline OdmrResult fit_odmr(const OdmrSweep& sweep, const fitcore::FitOptions& options = {}) {
    const OdmrSweep s = detail::ascending(sweep);
    const std::size_t n = s.frequencies.size();

    OdmrResult out;
    out.contrast_direct = contrast_direct(s);

    const double edge = detail::edge_mean(s);
    std::size_t imin = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (s.fluorescence[i] < s.fluorescence[imin]) imin = i;
    out.low_signal = s.fluorescence[imin] >= 0.95 * edge;

    // interpolated FWHM of the dip around the minimum
    const double half_level = edge - 0.5 * (edge - s.fluorescence[imin]);
    double f_left = s.frequencies.front(), f_right = s.frequencies.back();
    for (std::size_t i = imin; i-- > 0;)
        if (s.fluorescence[i] >= half_level) {
            const double t = (half_level - s.fluorescence[i]) /
                             (s.fluorescence[i + 1] - s.fluorescence[i]);
            f_left = s.frequencies[i] + t * (s.frequencies[i + 1] - s.frequencies[i]);
            break;
        }
    for (std::size_t i = imin + 1; i < n; ++i)
        if (s.fluorescence[i] >= half_level) {
            const double t = (half_level - s.fluorescence[i - 1]) /
                             (s.fluorescence[i] - s.fluorescence[i - 1]);
            f_right = s.frequencies[i - 1] + t * (s.frequencies[i] - s.frequencies[i - 1]);
            break;
        }

    const double f_lo = s.frequencies.front(), f_hi = s.frequencies.back();
    const double scale = f_hi - f_lo;
    const double f_mid = 0.5 * (f_lo + f_hi);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = (s.frequencies[i] - f_mid) / scale;

    const double g0 = std::max((f_right - f_left) / scale, 1e-6);
    const std::vector<double> initial{edge, std::max(out.contrast_direct, 1e-3),
                                      (s.frequencies[imin] - f_mid) / scale, g0};

    fitcore::ModelFunction model;
    model.arity = 4;  // (B, C, u0, g)
    model.evaluate = [](std::span<const double> p, double x) {
        return lorentzian_dip(x, p[0], p[1], p[2], p[3]);
    };
    model.jacobian = [](std::span<const double> p, double x, std::span<double> g) {
        const double hg = 0.5 * p[3];
        const double d = x - p[2];
        const double denom = d * d + hg * hg;
        const double lor = hg * hg / denom;
        g[0] = 1.0 - p[1] * lor;
        g[1] = -p[0] * lor;
        g[2] = -2.0 * p[0] * p[1] * hg * hg * d / (denom * denom);
        g[3] = -p[0] * p[1] * hg * d * d / (denom * denom);
    };

    auto fit = fitcore::fit_nonlinear(model, u, s.fluorescence, initial, options);
    out.fit = fit;
    out.converged = fit.converged;
    out.baseline = fit.parameters[0];
    out.contrast_lorentzian = fit.parameters[1];
    out.center_frequency = f_mid + fit.parameters[2] * scale;
    out.linewidth_fwhm = std::abs(fit.parameters[3]) * scale;
    out.baseline_error = fit.standard_errors[0];
    out.contrast_error = fit.standard_errors[1];
    out.center_frequency_error = fit.standard_errors[2] * scale;
    out.linewidth_error = fit.standard_errors[3] * scale;

    const double df = (f_hi - f_lo) / static_cast<double>(n - 1);
    out.center_at_boundary =
        out.center_frequency <= f_lo + 0.5 * df || out.center_frequency >= f_hi - 0.5 * df;
    return out;
}

}  // namespace nvlex::odmr
