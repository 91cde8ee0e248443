#pragma once

// Gaussian-beam evaluation, razor-blade (knife-edge) profile fitting and
// caustic / M^2 analysis. Everything is SI internally: meters and watts.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "nvlex/fitcore.hpp"

namespace nvlex::beam {

struct BeamGeometry {
    double waist_radius = 0.0;    // W0, m
    double rayleigh_range = 0.0;  // zR, m
    double focus_position = 0.0;  // z0, m (stage coordinate of the focus)
    double wavelength = 0.0;      // m

    bool valid() const {
        return waist_radius > 0.0 && rayleigh_range > 0.0 && wavelength > 0.0 &&
               std::isfinite(focus_position);
    }
};

namespace detail {
inline void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}
inline void require_positive(double v, const char* what) {
    detail::require(std::isfinite(v) && v > 0.0, what);
}
}  // namespace detail

// Beam radius W(z) = W0 sqrt(1 + ((z-z0)/zR)^2).
inline double width_at(const BeamGeometry& g, double z) {
    detail::require(g.valid(), "width_at: invalid beam geometry");
    const double u = (z - g.focus_position) / g.rayleigh_range;
    return g.waist_radius * std::sqrt(1.0 + u * u);
}

// On-axis-normalized Gaussian intensity I(rho, z).
inline double intensity(const BeamGeometry& g, double peak_intensity, double rho, double z) {
    const double w = width_at(g, z);
    const double ratio = g.waist_radius / w;
    return peak_intensity * ratio * ratio * std::exp(-2.0 * rho * rho / (w * w));
}

// Far-field divergence half-angle.
inline double divergence(const BeamGeometry& g) {
    detail::require(g.valid(), "divergence: invalid beam geometry");
    return g.waist_radius / g.rayleigh_range;
}

// Beam propagation factor M^2 = pi W0^2 / (lambda zR); 1 for an ideal beam.
inline double m_squared(double waist_radius, double rayleigh_range, double wavelength) {
    detail::require_positive(waist_radius, "m_squared: waist must be > 0");
    detail::require_positive(rayleigh_range, "m_squared: rayleigh range must be > 0");
    detail::require_positive(wavelength, "m_squared: wavelength must be > 0");
    return std::numbers::pi * waist_radius * waist_radius / (wavelength * rayleigh_range);
}

// Focal spot diameter 2 W_SS behind an objective of focal length f, filled by
// a beam of diameter D.
inline double spot_size(double m2, double wavelength, double focal_length, double beam_diameter) {
    detail::require_positive(m2, "spot_size: M^2 must be > 0");
    detail::require_positive(wavelength, "spot_size: wavelength must be > 0");
    detail::require_positive(focal_length, "spot_size: focal length must be > 0");
    detail::require_positive(beam_diameter, "spot_size: beam diameter must be > 0");
    return 4.0 * m2 * wavelength * focal_length / (std::numbers::pi * beam_diameter);
}

// Confocal detection volume sqrt(2^5/pi^3) (M^2)^3 lambda^3 f^4 / D^4.
inline double confocal_volume(double m2, double wavelength, double focal_length,
                              double beam_diameter) {
    detail::require_positive(m2, "confocal_volume: M^2 must be > 0");
    detail::require_positive(wavelength, "confocal_volume: wavelength must be > 0");
    detail::require_positive(focal_length, "confocal_volume: focal length must be > 0");
    detail::require_positive(beam_diameter, "confocal_volume: beam diameter must be > 0");
    const double c = std::sqrt(32.0 / (std::numbers::pi * std::numbers::pi * std::numbers::pi));
    const double l3 = wavelength * wavelength * wavelength;
    const double f4 = std::pow(focal_length, 4);
    const double d4 = std::pow(beam_diameter, 4);
    return c * m2 * m2 * m2 * l3 * f4 / d4;
}

// ---------------------------------------------------------------------------
// Knife edge
// ---------------------------------------------------------------------------

struct KnifeEdgeSample {
    double blade_position = 0.0;     // m
    double transmitted_power = 0.0;  // W
};

struct KnifeEdgeScan {
    double z = 0.0;  // stage position of this transverse cut, m
    std::vector<KnifeEdgeSample> samples;
};

struct KnifeEdgeFit {
    double width = 0.0;  // W(z), m
    double total_power = 0.0;
    double center = 0.0;
    double width_error = 0.0;
    double total_power_error = 0.0;
    double center_error = 0.0;
    int blade_direction = +1;  // +1: power falls with x, -1: power rises
    bool converged = false;
    bool low_dynamic_range = false;  // max/min power span < 5x
    fitcore::FitResult fit;
};

// P(x) = (P0/2) erfc(s sqrt(2) (x - xc) / W), s = blade direction.
inline double knife_edge_model(double x, double width, double total_power, double center,
                               int direction) {
    const double u = direction * std::sqrt(2.0) * (x - center) / width;
    return 0.5 * total_power * std::erfc(u);
}

inline void validate(const KnifeEdgeScan& scan) {
    detail::require(scan.samples.size() >= 6, "knife-edge scan: need at least 6 samples");
    for (std::size_t i = 0; i < scan.samples.size(); ++i) {
        const auto& s = scan.samples[i];
        detail::require(std::isfinite(s.blade_position) && std::isfinite(s.transmitted_power),
                        "knife-edge scan: non-finite sample");
        detail::require(s.transmitted_power >= 0.0, "knife-edge scan: negative power");
        if (i > 0)
            detail::require(s.blade_position > scan.samples[i - 1].blade_position,
                            "knife-edge scan: blade positions must be strictly increasing");
    }
}

// Interpolated blade position where the power first crosses `level`,
// scanning in the direction the power decreases.
namespace detail {
inline double crossing_position(const std::vector<KnifeEdgeSample>& s, double level) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const double a = s[i].transmitted_power, b = s[i + 1].transmitted_power;
        if ((a - level) * (b - level) <= 0.0 && a != b) {
            const double t = (level - a) / (b - a);
            return s[i].blade_position + t * (s[i + 1].blade_position - s[i].blade_position);
        }
    }
    return s[s.size() / 2].blade_position;
}
}  // namespace detail

inline KnifeEdgeFit fit_knife_edge(const KnifeEdgeScan& scan,
                                   const fitcore::FitOptions& options = {}) {
    validate(scan);
    const auto& s = scan.samples;
    double pmax = 0.0, pmin = std::numeric_limits<double>::infinity();
    for (const auto& pt : s) {
        pmax = std::max(pmax, pt.transmitted_power);
        pmin = std::min(pmin, pt.transmitted_power);
    }
    detail::require(pmax > 0.0, "knife-edge scan: all powers zero");

    // blade direction from the overall trend
    const int direction = s.front().transmitted_power >= s.back().transmitted_power ? +1 : -1;

    // start values straight from the data: P0 = max power, x_c at the half-power
    // crossing, W from the 10%-90% span over the erfc quantile 1.2816
    const double xc0 = detail::crossing_position(s, 0.5 * pmax);
    const double x10 = detail::crossing_position(s, 0.1 * pmax);
    const double x90 = detail::crossing_position(s, 0.9 * pmax);
    double w0 = std::abs(x10 - x90) / 1.28;
    if (!(w0 > 0.0)) w0 = 0.25 * std::abs(s.back().blade_position - s.front().blade_position);

    std::vector<double> xs(s.size()), ys(s.size()), wts(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        xs[i] = s[i].blade_position;
        ys[i] = s[i].transmitted_power;
        // Laser power noise is fractional, so the residuals are heteroscedastic
        // with sigma proportional to the level: weight by 1/power^2, floored so
        // the blade-closed tail cannot acquire unbounded leverage. The shape is
        // all we assume; the absolute scale is recovered from the residuals.
        const double level = std::max(ys[i], 1e-3 * pmax);
        wts[i] = (pmax / level) * (pmax / level);
    }

    fitcore::ModelFunction model;
    model.arity = 3;
    model.evaluate = [direction](std::span<const double> p, double x) {
        return knife_edge_model(x, p[0], p[1], p[2], direction);
    };
    model.jacobian = [direction](std::span<const double> p, double x, std::span<double> g) {
        const double w = p[0], p0 = p[1], xc = p[2];
        const double u = direction * std::sqrt(2.0) * (x - xc) / w;
        const double gauss = std::exp(-u * u) / std::sqrt(std::numbers::pi);
        g[0] = p0 * gauss * u / w;                            // d/dW
        g[1] = 0.5 * std::erfc(u);                            // d/dP0
        g[2] = p0 * gauss * direction * std::sqrt(2.0) / w;   // d/dxc
    };

    const std::vector<double> initial{w0, pmax, xc0};
    auto fit = fitcore::fit_nonlinear(model, xs, ys, wts, initial, options);

    // the weights fixed only the relative noise shape: recover the absolute
    // scale from the weighted residuals
    double scale = 1.0;
    if (fit.degrees_of_freedom > 0 && std::isfinite(fit.residual_sum_squares))
        scale = std::sqrt(fit.residual_sum_squares / fit.degrees_of_freedom);

    KnifeEdgeFit out;
    out.fit = fit;
    out.converged = fit.converged;
    out.blade_direction = direction;
    out.width = std::abs(fit.parameters[0]);
    out.total_power = fit.parameters[1];
    out.center = fit.parameters[2];
    out.width_error = fit.standard_errors.empty() ? 0.0 : scale * fit.standard_errors[0];
    out.total_power_error = fit.standard_errors.empty() ? 0.0 : scale * fit.standard_errors[1];
    out.center_error = fit.standard_errors.empty() ? 0.0 : scale * fit.standard_errors[2];
    out.low_dynamic_range = pmax < 5.0 * std::max(pmin, pmax * 1e-12);
    return out;
}

// -dP/dx of the fitted erfc profile: the recovered Gaussian intensity cut.
// Peak P0 sqrt(2/pi)/W at the center, independent of blade direction.
inline std::vector<double> derivative_profile(const KnifeEdgeFit& fit,
                                              std::span<const double> x_grid) {
    detail::require_positive(fit.width, "derivative_profile: width must be > 0");
    std::vector<double> out(x_grid.size());
    const double peak = fit.total_power * std::sqrt(2.0 / std::numbers::pi) / fit.width;
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        const double d = x_grid[i] - fit.center;
        out[i] = peak * std::exp(-2.0 * d * d / (fit.width * fit.width));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Caustic / M^2
// ---------------------------------------------------------------------------

struct CausticPoint {
    double z = 0.0;      // m
    double width = 0.0;  // measured W(z), m
    std::optional<double> width_error;
};

struct ObjectiveOptics {
    double focal_length = 0.0;   // m
    double beam_diameter = 0.0;  // incoming beam diameter at the pupil, m
};

struct FocalEstimates {
    double spot_size = 0.0;  // 2 W_SS, m
    double spot_size_error = 0.0;
    double confocal_volume = 0.0;  // m^3
    double confocal_volume_error = 0.0;
};

struct BeamQualityReport {
    BeamGeometry geometry;
    double waist_error = 0.0;
    double rayleigh_error = 0.0;
    double focus_error = 0.0;
    double divergence = 0.0;  // rad
    double divergence_error = 0.0;
    double m_squared = 0.0;
    double m_squared_error = 0.0;
    std::optional<FocalEstimates> focal;
    bool converged = false;
    bool one_sided = false;      // all samples on one side of the focus
    bool poor_span = false;      // caustic arms not sampled past 1.2x the minimum
    bool sub_unity_m2 = false;   // point estimate below 1; kept, not clamped
    fitcore::FitResult fit;
};

inline BeamQualityReport fit_caustic(std::span<const CausticPoint> points, double wavelength,
                                     const std::optional<ObjectiveOptics>& optics = std::nullopt,
                                     const fitcore::FitOptions& options = {}) {
    detail::require(points.size() >= 4, "fit_caustic: need at least 4 points");
    detail::require_positive(wavelength, "fit_caustic: wavelength must be > 0");
    for (const auto& pt : points) {
        detail::require(std::isfinite(pt.z) && std::isfinite(pt.width) && pt.width > 0.0,
                        "fit_caustic: invalid caustic point");
        if (pt.width_error)
            detail::require(*pt.width_error > 0.0, "fit_caustic: width errors must be > 0");
    }

    std::vector<double> zs(points.size()), ws(points.size());
    std::size_t imin = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        zs[i] = points[i].z;
        ws[i] = points[i].width;
        if (ws[i] < ws[imin]) imin = i;
    }
    const bool weighted =
        std::all_of(points.begin(), points.end(), [](const auto& p) { return p.width_error.has_value(); });
    std::vector<double> weights;
    if (weighted) {
        weights.resize(points.size());
        for (std::size_t i = 0; i < points.size(); ++i)
            weights[i] = 1.0 / (*points[i].width_error * *points[i].width_error);
    }

    // start values: waist and focus at the smallest measured width, Rayleigh
    // range back-solved from the farthest point
    const double w0_guess = ws[imin];
    const double z0_guess = zs[imin];
    std::size_t ifar = 0;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (std::abs(zs[i] - z0_guess) > std::abs(zs[ifar] - z0_guess)) ifar = i;
    double zr_guess = 0.0;
    if (ws[ifar] > w0_guess)
        zr_guess = std::abs(zs[ifar] - z0_guess) /
                   std::sqrt(ws[ifar] * ws[ifar] / (w0_guess * w0_guess) - 1.0);
    if (!(zr_guess > 0.0))
        zr_guess = 0.25 * (*std::max_element(zs.begin(), zs.end()) -
                           *std::min_element(zs.begin(), zs.end()));
    if (!(zr_guess > 0.0)) zr_guess = std::abs(z0_guess) + w0_guess;

    fitcore::ModelFunction model;
    model.arity = 3;  // (W0, zR, z0)
    model.evaluate = [](std::span<const double> p, double z) {
        const double u = (z - p[2]) / p[1];
        return p[0] * std::sqrt(1.0 + u * u);
    };
    model.jacobian = [](std::span<const double> p, double z, std::span<double> g) {
        const double u = (z - p[2]) / p[1];
        const double root = std::sqrt(1.0 + u * u);
        g[0] = root;
        g[1] = -p[0] * u * u / (p[1] * root);
        g[2] = -p[0] * u / (p[1] * root);
    };

    const std::vector<double> initial{w0_guess, zr_guess, z0_guess};
    auto fit = weighted ? fitcore::fit_nonlinear(model, zs, ws, weights, initial, options)
                        : fitcore::fit_nonlinear(model, zs, ws, initial, options);

    BeamQualityReport out;
    out.fit = fit;
    out.converged = fit.converged;
    out.geometry.waist_radius = std::abs(fit.parameters[0]);
    out.geometry.rayleigh_range = std::abs(fit.parameters[1]);
    out.geometry.focus_position = fit.parameters[2];
    out.geometry.wavelength = wavelength;
    out.waist_error = fit.standard_errors[0];
    out.rayleigh_error = fit.standard_errors[1];
    out.focus_error = fit.standard_errors[2];

    const double w0 = out.geometry.waist_radius;
    const double zr = out.geometry.rayleigh_range;
    out.divergence = w0 / zr;
    out.m_squared = m_squared(w0, zr, wavelength);
    out.sub_unity_m2 = out.m_squared < 1.0;

    // first-order propagation through the (W0, zR) covariance block
    const auto& cov = fit.covariance;
    if (std::isfinite(cov[0][0])) {
        const double dm_dw = 2.0 * out.m_squared / w0;
        const double dm_dz = -out.m_squared / zr;
        const std::vector<double> gm{dm_dw, dm_dz};
        const std::vector<std::vector<double>> c2{{cov[0][0], cov[0][1]}, {cov[1][0], cov[1][1]}};
        out.m_squared_error = std::sqrt(fitcore::propagate_variance(gm, c2));
        const std::vector<double> gt{1.0 / zr, -w0 / (zr * zr)};
        out.divergence_error = std::sqrt(fitcore::propagate_variance(gt, c2));
    }

    bool has_left = false, has_right = false, arm_left = false, arm_right = false;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const bool left = zs[i] < out.geometry.focus_position;
        (left ? has_left : has_right) = true;
        if (ws[i] > 1.2 * ws[imin]) (left ? arm_left : arm_right) = true;
    }
    out.one_sided = !(has_left && has_right);
    out.poor_span = !(arm_left && arm_right);

    if (optics) {
        FocalEstimates fe;
        fe.spot_size = spot_size(out.m_squared, wavelength, optics->focal_length, optics->beam_diameter);
        fe.confocal_volume =
            confocal_volume(out.m_squared, wavelength, optics->focal_length, optics->beam_diameter);
        if (out.m_squared > 0.0) {
            fe.spot_size_error = fe.spot_size * out.m_squared_error / out.m_squared;
            fe.confocal_volume_error = 3.0 * fe.confocal_volume * out.m_squared_error / out.m_squared;
        }
        out.focal = fe;
    }
    return out;
}

}  // namespace nvlex::beam
