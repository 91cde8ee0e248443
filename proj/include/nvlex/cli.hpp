#pragma once

// Command-line front end: CSV ingestion, subcommand dispatch, structured
// report output. Exit codes: 0 success, 1 input/format error, 2 fit
// non-convergence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nvlex/beam.hpp"
#include "nvlex/csv.hpp"
#include "nvlex/odmr.hpp"
#include "nvlex/photonstats.hpp"
#include "nvlex/photophys.hpp"
#include "nvlex/pulse.hpp"
#include "nvlex/report.hpp"
#include "nvlex/synth.hpp"

namespace nvlex::cli {
namespace detail {

struct OutputOptions {
    std::string out;        // report destination; empty = stdout
    std::string format = "json";
    std::string curve_out;  // optional plot-data CSV
};

inline void add_output_flags(CLI::App* cmd, OutputOptions& o, bool with_curve = true) {
    cmd->add_option("--out", o.out, "write the report to this file instead of stdout");
    cmd->add_option("--format", o.format, "report format: json or flat")
        ->check(CLI::IsMember({"json", "flat"}));
    if (with_curve)
        cmd->add_option("--curve-out", o.curve_out, "write (x, y_data, y_fit) samples as CSV");
}

inline void emit(const report::AnalysisReport& rep, const OutputOptions& o) {
    const std::string text = rep.serialize(o.format);
    if (o.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(o.out);
        if (!f) throw std::runtime_error(o.out + ": cannot open report file for writing");
        f << text;
    }
}

inline void warn_unknown_columns(const csv::Table& t, const std::set<std::string>& known,
                                 report::AnalysisReport& rep) {
    for (const auto& h : t.headers)
        if (!known.contains(h)) rep.warn(t.source + ": ignoring unknown column '" + h + "'");
}

inline std::vector<double> linspace(double a, double b, int n) {
    if (n < 2) throw std::invalid_argument("grid needs at least 2 points");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        v[static_cast<std::size_t>(i)] = a + (b - a) * static_cast<double>(i) / (n - 1);
    return v;
}

// ---------------------------------------------------------------------- //
// analyzers                                                              //
// ---------------------------------------------------------------------- //

inline int run_knife_edge(const std::string& file, double z_um, const OutputOptions& out) {
    report::AnalysisReport rep("knife-edge");
    rep.set_input_digest(report::digest_files({file}));
    const auto t = csv::read_table(file);
    warn_unknown_columns(t, {"x_um", "power_uW"}, rep);
    const auto& x = t.column("x_um");
    const auto& p = t.column("power_uW");

    beam::KnifeEdgeScan scan;  // fitted in CSV units: um and uW
    scan.z = z_um;
    scan.samples.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) scan.samples[i] = {x[i], p[i]};
    std::sort(scan.samples.begin(), scan.samples.end(),
              [](const auto& a, const auto& b) { return a.blade_position < b.blade_position; });

    const auto fit = beam::fit_knife_edge(scan);
    rep.add("width_um", fit.width, fit.width_error, "um");
    rep.add("total_power_uW", fit.total_power, fit.total_power_error, "uW");
    rep.add("center_um", fit.center, fit.center_error, "um");
    rep.add("z_um", z_um, std::nullopt, "um");
    rep.add("blade_direction", fit.blade_direction);
    rep.flag("converged", fit.converged);
    rep.flag("low_dynamic_range", fit.low_dynamic_range);
    if (!fit.converged) rep.warn("erfc fit did not converge");

    if (!out.curve_out.empty()) {
        std::vector<double> yfit(x.size());
        for (std::size_t i = 0; i < scan.samples.size(); ++i)
            yfit[i] = beam::knife_edge_model(scan.samples[i].blade_position, fit.width,
                                             fit.total_power, fit.center, fit.blade_direction);
        std::vector<double> xs(scan.samples.size()), ys(scan.samples.size());
        for (std::size_t i = 0; i < scan.samples.size(); ++i) {
            xs[i] = scan.samples[i].blade_position;
            ys[i] = scan.samples[i].transmitted_power;
        }
        csv::write_table(out.curve_out, {"x_um", "power_uW", "fit_uW"}, {xs, ys, yfit});
    }
    emit(rep, out);
    return fit.converged ? 0 : 2;
}

inline int run_caustic(const std::string& file, double lambda_nm, double focal_mm,
                       double pupil_mm, const OutputOptions& out) {
    report::AnalysisReport rep("caustic");
    rep.set_input_digest(report::digest_files({file}));
    const auto t = csv::read_table(file);
    warn_unknown_columns(t, {"z_um", "w_um", "w_err_um"}, rep);
    const auto& z = t.column("z_um");
    const auto& w = t.column("w_um");
    const bool weighted = t.find("w_err_um").has_value();

    std::vector<beam::CausticPoint> pts(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        pts[i].z = z[i];
        pts[i].width = w[i];
        if (weighted) pts[i].width_error = t.column("w_err_um")[i];
    }
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.z < b.z; });

    const double lambda_um = lambda_nm * 1e-3;
    std::optional<beam::ObjectiveOptics> optics;
    if (focal_mm > 0.0 && pupil_mm > 0.0)
        optics = beam::ObjectiveOptics{focal_mm * 1e3, pupil_mm * 1e3};  // mm -> um
    const auto fit = beam::fit_caustic(pts, lambda_um, optics);

    rep.add("waist_radius_um", fit.geometry.waist_radius, fit.waist_error, "um");
    rep.add("rayleigh_range_um", fit.geometry.rayleigh_range, fit.rayleigh_error, "um");
    rep.add("focus_position_um", fit.geometry.focus_position, fit.focus_error, "um");
    rep.add("divergence_rad", fit.divergence, fit.divergence_error, "rad");
    rep.add("m_squared", fit.m_squared, fit.m_squared_error);
    if (fit.focal) {
        rep.add("spot_size_um", fit.focal->spot_size, fit.focal->spot_size_error, "um");
        rep.add("confocal_volume_um3", fit.focal->confocal_volume,
                fit.focal->confocal_volume_error, "um^3");
    }
    rep.flag("converged", fit.converged);
    rep.flag("one_sided", fit.one_sided);
    rep.flag("poor_span", fit.poor_span);
    rep.flag("sub_unity_m2", fit.sub_unity_m2);
    if (fit.one_sided) rep.warn("all caustic points lie on one side of the focus");
    if (fit.poor_span) rep.warn("caustic arms not sampled past 1.2x the minimum width");
    if (!fit.converged) rep.warn("caustic fit did not converge");

    if (!out.curve_out.empty()) {
        std::vector<double> zs(pts.size()), ws(pts.size()), yfit(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            zs[i] = pts[i].z;
            ws[i] = pts[i].width;
            yfit[i] = beam::width_at(fit.geometry, pts[i].z);
        }
        csv::write_table(out.curve_out, {"z_um", "w_um", "fit_um"}, {zs, ws, yfit});
    }
    emit(rep, out);
    return fit.converged ? 0 : 2;
}

inline photonstats::TimestampSeries load_timestamps(const csv::Table& t, int channel,
                                                    report::AnalysisReport& rep) {
    warn_unknown_columns(t, {"t_ns"}, rep);
    photonstats::TimestampSeries s;
    s.channel_id = channel;
    s.arrival_times = t.column("t_ns");
    std::sort(s.arrival_times.begin(), s.arrival_times.end());
    s.t_start = s.arrival_times.front();
    s.t_end = s.arrival_times.back();
    return s;
}

inline int run_g2(const std::string& file_a, const std::string& file_b, double window_ns,
                  double bin_ns, int smoothing_bins, const OutputOptions& out) {
    report::AnalysisReport rep("g2");
    rep.set_input_digest(report::digest_files({file_a, file_b}));
    const auto ta = csv::read_table(file_a);
    const auto tb = csv::read_table(file_b);
    auto a = load_timestamps(ta, 0, rep);
    auto b = load_timestamps(tb, 1, rep);

    // the correlator requires an odd total bin count; adjust the window to
    // the nearest value that satisfies it rather than erroring out
    if (!(bin_ns > 0.0) || !(window_ns > 0.0))
        throw std::invalid_argument("g2: window and bin width must be > 0");
    const double n_exact = 2.0 * window_ns / bin_ns;
    long long n_bins = std::llround(n_exact);
    if (std::abs(n_exact - static_cast<double>(n_bins)) > 1e-6 || n_bins % 2 == 0 || n_bins < 1) {
        long long odd = 2 * static_cast<long long>(std::floor(n_exact / 2.0)) + 1;
        if (odd < 1) odd = 1;
        const double adjusted = static_cast<double>(odd) * bin_ns / 2.0;
        rep.warn("window adjusted from " + std::to_string(window_ns) + " ns to " +
                 std::to_string(adjusted) + " ns for an odd bin count (" + std::to_string(odd) +
                 " bins)");
        window_ns = adjusted;
        n_bins = odd;
    }

    const auto hist = photonstats::correlate(a, b, window_ns, bin_ns);
    const double g0 = photonstats::g2_zero(hist, smoothing_bins);
    const auto est = photonstats::emitter_count(std::max(0.0, g0));

    rep.add("g2_zero", g0);
    rep.add("n_emitters", est.n_emitters);
    rep.add("window_ns", window_ns, std::nullopt, "ns");
    rep.add("bin_ns", bin_ns, std::nullopt, "ns");
    rep.add("n_bins", static_cast<double>(n_bins));
    rep.add("smoothing_bins", smoothing_bins);
    rep.add("normalization_factor", hist.normalization_factor);
    rep.add("events_a", static_cast<double>(a.arrival_times.size()));
    rep.add("events_b", static_cast<double>(b.arrival_times.size()));
    rep.flag("is_single", est.is_single);

    if (!out.curve_out.empty()) {
        std::vector<double> counts(hist.raw_counts.size());
        for (std::size_t i = 0; i < counts.size(); ++i)
            counts[i] = static_cast<double>(hist.raw_counts[i]);
        csv::write_table(out.curve_out, {"tau_ns", "g2", "raw_counts"},
                         {hist.bin_centers, hist.g2, counts});
    }
    emit(rep, out);
    return 0;
}

inline int run_saturation(const std::string& file, const std::string& background_file,
                          const OutputOptions& out) {
    report::AnalysisReport rep("saturation");
    std::vector<std::string> inputs{file};
    if (!background_file.empty()) inputs.push_back(background_file);
    rep.set_input_digest(report::digest_files(inputs));

    const auto load = [&rep](const std::string& path) {
        const auto t = csv::read_table(path);
        warn_unknown_columns(t, {"power_uW", "counts_per_s"}, rep);
        const auto& p = t.column("power_uW");
        const auto& c = t.column("counts_per_s");
        std::vector<photophys::PowerPoint> pts(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) pts[i] = {p[i], c[i]};
        std::sort(pts.begin(), pts.end(),
                  [](const auto& a, const auto& b) { return a.power < b.power; });
        return pts;
    };

    photophys::SaturationCurve curve;  // powers kept in uW; p_sat comes out in uW
    curve.points = load(file);
    if (!background_file.empty()) curve.background_points = load(background_file);

    const auto fit = photophys::fit_saturation(curve);
    rep.add("a_counts_per_s", fit.a, fit.a_error, "counts/s");
    rep.add("p_sat_uW", fit.p_sat, fit.p_sat_error, "uW");
    rep.add("b_counts_per_s_per_uW", fit.b, fit.b_error, "counts/s/uW");
    if (fit.background) {
        rep.add("background_slope", fit.background->slope, fit.background->slope_error,
                "counts/s/uW");
        rep.add("background_intercept", fit.background->intercept,
                fit.background->intercept_error, "counts/s");
    }
    rep.flag("converged", fit.converged);
    rep.flag("background_subtracted", fit.background_subtracted);
    rep.flag("negative_b", fit.negative_b);
    rep.flag("negative_after_subtraction", fit.negative_after_subtraction);
    rep.flag("p_sat_extrapolated", fit.p_sat_extrapolated);
    rep.flag("low_max_power", fit.low_max_power);
    if (fit.low_max_power) rep.warn("max sampled power below 1.5x the fitted saturation power");
    if (!fit.converged) rep.warn("saturation fit did not converge");

    if (!out.curve_out.empty()) {
        auto pts = curve.points;
        if (fit.background) pts = photophys::subtract_background(pts, *fit.background);
        std::vector<double> xs(pts.size()), ys(pts.size()), yfit(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            xs[i] = pts[i].power;
            ys[i] = pts[i].counts;
            yfit[i] = fit(pts[i].power);
        }
        csv::write_table(out.curve_out, {"power_uW", "counts_per_s", "fit_counts_per_s"},
                         {xs, ys, yfit});
    }
    emit(rep, out);
    return fit.converged ? 0 : 2;
}

inline int run_polarization(const std::string& file, const OutputOptions& out) {
    report::AnalysisReport rep("polarization");
    rep.set_input_digest(report::digest_files({file}));
    const auto t = csv::read_table(file);
    warn_unknown_columns(t, {"angle_deg", "counts_per_s"}, rep);
    const auto& ang = t.column("angle_deg");
    const auto& cts = t.column("counts_per_s");

    photophys::PolarizationSweep sweep;
    sweep.points.resize(ang.size());
    for (std::size_t i = 0; i < ang.size(); ++i) sweep.points[i] = {ang[i], cts[i]};

    const auto fit = photophys::fit_polarization(sweep);
    rep.add("offset_counts_per_s", fit.offset, fit.offset_error, "counts/s");
    rep.add("amplitude_counts_per_s", fit.amplitude, fit.amplitude_error, "counts/s");
    rep.add("max_angle_deg", fit.max_angle, fit.max_angle_error, "deg");
    rep.add("phase_deg", fit.phase_deg, fit.max_angle_error, "deg");
    rep.add("visibility", fit.visibility, fit.visibility_error);
    rep.flag("converged", fit.converged);
    rep.flag("flat_response", fit.flat_response);
    if (fit.flat_response)
        rep.warn("modulation amplitude consistent with zero; max_angle is meaningless");
    if (!fit.converged) rep.warn("polarization fit did not converge");

    if (!out.curve_out.empty()) {
        std::vector<double> yfit(ang.size());
        for (std::size_t i = 0; i < ang.size(); ++i) yfit[i] = fit(sweep.points[i].angle);
        csv::write_table(out.curve_out, {"angle_deg", "counts_per_s", "fit_counts_per_s"},
                         {ang, cts, yfit});
    }
    emit(rep, out);
    return fit.converged ? 0 : 2;
}

inline int run_spectrum(const std::string& file, double nv0_threshold, const OutputOptions& out) {
    report::AnalysisReport rep("spectrum");
    rep.set_input_digest(report::digest_files({file}));
    const auto t = csv::read_table(file);
    warn_unknown_columns(t, {"wavelength_nm", "intensity"}, rep);
    const auto& w = t.column("wavelength_nm");
    const auto& in = t.column("intensity");

    photophys::Spectrum sp;
    sp.samples.resize(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) sp.samples[i] = {w[i], in[i]};
    std::sort(sp.samples.begin(), sp.samples.end(),
              [](const auto& a, const auto& b) { return a.wavelength < b.wavelength; });

    const auto r = photophys::analyze_spectrum(sp, nv0_threshold);
    if (r.zpl_wavelength) rep.add("zpl_wavelength_nm", *r.zpl_wavelength, std::nullopt, "nm");
    rep.add("zpl_prominence", r.zpl_prominence);
    rep.add("peak_wavelength_nm", r.peak_wavelength, std::nullopt, "nm");
    rep.add("nv0_band_fraction", r.nv0_band_fraction);
    rep.add("nv0_threshold", nv0_threshold);
    rep.flag("zpl_present", r.zpl_present);
    rep.flag("charge_state_ok", r.charge_state_ok);
    rep.flag("zpl_window_covered", r.zpl_window_covered);
    if (!r.zpl_window_covered)
        rep.warn("wavelength coverage misses the 630-645 nm ZPL search window");
    emit(rep, out);
    return 0;
}

inline int run_pulse(const std::string& file, double input_power, const OutputOptions& out) {
    report::AnalysisReport rep("pulse");
    rep.set_input_digest(report::digest_files({file}));
    const auto t = csv::read_table(file);
    warn_unknown_columns(t, {"t_ns", "intensity"}, rep);
    const auto& ts = t.column("t_ns");
    const auto& in = t.column("intensity");
    if (ts.size() < 2) throw csv::CsvError(file + ": need at least 2 samples");

    const double dt = (ts.back() - ts.front()) / static_cast<double>(ts.size() - 1);
    if (!(dt > 0.0)) throw csv::CsvError(file + ": time column must be increasing");
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (std::abs(ts[i] - (ts.front() + static_cast<double>(i) * dt)) > 1e-3 * dt)
            throw csv::CsvError(file + ": samples are not uniformly spaced in time");

    pulse::PulseTrace trace;
    trace.sample_period = dt;
    trace.samples = in;

    const auto m = pulse::analyze_pulse(
        trace, input_power > 0.0 ? std::optional<double>(input_power) : std::nullopt);
    rep.add("rise_time_ns", m.rise_time, std::nullopt, "ns");
    rep.add("fall_time_ns", m.fall_time, std::nullopt, "ns");
    rep.add("on_level", m.on_level);
    rep.add("off_level", m.off_level);
    rep.add("extinction_ratio", m.extinction_ratio);
    rep.add("ripple_rms_fraction", m.ripple_rms_fraction);
    if (m.transmittance) rep.add("transmittance", *m.transmittance);
    rep.flag("extinction_unbounded", m.extinction_unbounded);
    emit(rep, out);
    return 0;
}

inline int run_odmr(const std::string& file, const OutputOptions& out) {
    report::AnalysisReport rep("odmr");
    rep.set_input_digest(report::digest_files({file}));
    const auto t = csv::read_table(file);
    warn_unknown_columns(t, {"freq_mhz", "fluorescence"}, rep);

    odmr::OdmrSweep sweep;
    sweep.frequencies = t.column("freq_mhz");
    sweep.fluorescence = t.column("fluorescence");

    const auto r = odmr::fit_odmr(sweep);
    rep.add("contrast_direct", r.contrast_direct);
    rep.add("contrast_lorentzian", r.contrast_lorentzian, r.contrast_error);
    rep.add("center_frequency_mhz", r.center_frequency, r.center_frequency_error, "MHz");
    rep.add("linewidth_fwhm_mhz", r.linewidth_fwhm, r.linewidth_error, "MHz");
    rep.add("baseline", r.baseline, r.baseline_error);
    rep.flag("converged", r.converged);
    rep.flag("low_signal", r.low_signal);
    rep.flag("center_at_boundary", r.center_at_boundary);
    if (r.low_signal) rep.warn("dip shallower than 5% of the edge level");
    if (r.center_at_boundary) rep.warn("fitted center frequency at the sweep boundary");
    if (!r.converged) rep.warn("Lorentzian fit did not converge");

    if (!out.curve_out.empty()) {
        std::vector<double> yfit(sweep.frequencies.size());
        for (std::size_t i = 0; i < yfit.size(); ++i)
            yfit[i] = odmr::lorentzian_dip(sweep.frequencies[i], r.baseline,
                                           r.contrast_lorentzian, r.center_frequency,
                                           r.linewidth_fwhm);
        csv::write_table(out.curve_out, {"freq_mhz", "fluorescence", "fit"},
                         {sweep.frequencies, sweep.fluorescence, yfit});
    }
    emit(rep, out);
    return r.converged ? 0 : 2;
}

}  // namespace detail

// Build the full CLI and run it. Returns the process exit code.
inline int run(int argc, const char* const* argv) {
    using detail::OutputOptions;

    CLI::App app{"single-NV laser-excitation characterization toolkit"};
    app.require_subcommand(1);

    // ---- knife-edge ----
    struct {
        std::string file;
        double z_um = 0.0;
        OutputOptions out;
    } ke;
    auto* ke_cmd = app.add_subcommand("knife-edge", "fit a razor-blade scan (x_um, power_uW)");
    ke_cmd->add_option("file", ke.file, "scan CSV")->required();
    ke_cmd->add_option("--z-um", ke.z_um, "stage position of this cut, um");
    detail::add_output_flags(ke_cmd, ke.out);

    // ---- caustic ----
    struct {
        std::string file;
        double lambda_nm = 532.0, focal_mm = 0.0, pupil_mm = 0.0;
        OutputOptions out;
    } ca;
    auto* ca_cmd = app.add_subcommand("caustic", "fit W(z) caustic (z_um, w_um[, w_err_um])");
    ca_cmd->add_option("file", ca.file, "caustic CSV")->required();
    ca_cmd->add_option("--lambda-nm", ca.lambda_nm, "wavelength, nm")->required();
    ca_cmd->add_option("--focal-mm", ca.focal_mm, "objective focal length, mm (enables focal estimates)");
    ca_cmd->add_option("--pupil-mm", ca.pupil_mm, "beam diameter at the objective pupil, mm");
    detail::add_output_flags(ca_cmd, ca.out);

    // ---- g2 ----
    struct {
        std::string file_a, file_b;
        double window_ns = 150.2, bin_ns = 0.4;
        int smoothing = 1;
        OutputOptions out;
    } g2;
    auto* g2_cmd = app.add_subcommand("g2", "correlate two timestamp channels (t_ns)");
    g2_cmd->add_option("file_a", g2.file_a, "channel A timestamps CSV")->required();
    g2_cmd->add_option("file_b", g2.file_b, "channel B timestamps CSV")->required();
    g2_cmd->add_option("--window-ns", g2.window_ns, "correlation window, ns");
    g2_cmd->add_option("--bin-ns", g2.bin_ns, "bin width, ns");
    g2_cmd->add_option("--smoothing-bins", g2.smoothing, "odd number of bins averaged at tau=0");
    detail::add_output_flags(g2_cmd, g2.out);

    // ---- saturation ----
    struct {
        std::string file, background;
        OutputOptions out;
    } sat;
    auto* sat_cmd =
        app.add_subcommand("saturation", "fit a saturation curve (power_uW, counts_per_s)");
    sat_cmd->add_option("file", sat.file, "signal CSV")->required();
    sat_cmd->add_option("--background", sat.background,
                        "background CSV; fitted linearly and subtracted, b fixed to 0");
    detail::add_output_flags(sat_cmd, sat.out);

    // ---- polarization ----
    struct {
        std::string file;
        OutputOptions out;
    } pol;
    auto* pol_cmd = app.add_subcommand("polarization",
                                       "fit a half-wave-plate sweep (angle_deg, counts_per_s)");
    pol_cmd->add_option("file", pol.file, "sweep CSV")->required();
    detail::add_output_flags(pol_cmd, pol.out);

    // ---- spectrum ----
    struct {
        std::string file;
        double threshold = 0.05;
        OutputOptions out;
    } spec;
    auto* spec_cmd =
        app.add_subcommand("spectrum", "diagnose an emission spectrum (wavelength_nm, intensity)");
    spec_cmd->add_option("file", spec.file, "spectrum CSV")->required();
    spec_cmd->add_option("--nv0-threshold", spec.threshold,
                         "max tolerable 550-600 nm band fraction");
    detail::add_output_flags(spec_cmd, spec.out, false);

    // ---- pulse ----
    struct {
        std::string file;
        double input_power = 0.0;
        OutputOptions out;
    } pu;
    auto* pu_cmd = app.add_subcommand("pulse", "pulse-trace metrology (t_ns, intensity)");
    pu_cmd->add_option("file", pu.file, "trace CSV")->required();
    pu_cmd->add_option("--input-power", pu.input_power,
                       "input power reference; enables transmittance");
    detail::add_output_flags(pu_cmd, pu.out, false);

    // ---- odmr ----
    struct {
        std::string file;
        OutputOptions out;
    } od;
    auto* od_cmd = app.add_subcommand("odmr", "ODMR contrast analysis (freq_mhz, fluorescence)");
    od_cmd->add_option("file", od.file, "sweep CSV")->required();
    detail::add_output_flags(od_cmd, od.out);

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "generate synthetic datasets (seeded oracles)");
    sim->require_subcommand(1);

    struct {
        double w0_um = 11.9, zr_um = 700.0, z0_um = 0.0, lambda_nm = 532.0, z_um = 0.0;
        double p0_uw = 100.0, xmin_um = -100.0, xmax_um = 100.0, noise = 0.0, center_um = 0.0;
        int points = 40;
        std::uint64_t seed = 1;
        std::string out;
    } ske;
    auto* ske_cmd = sim->add_subcommand("knife-edge", "erfc blade scan -> x_um, power_uW");
    ske_cmd->add_option("--w0-um", ske.w0_um, "waist radius, um");
    ske_cmd->add_option("--zr-um", ske.zr_um, "Rayleigh range, um");
    ske_cmd->add_option("--z0-um", ske.z0_um, "focus position, um");
    ske_cmd->add_option("--lambda-nm", ske.lambda_nm, "wavelength, nm");
    ske_cmd->add_option("--z-um", ske.z_um, "stage position of the cut, um");
    ske_cmd->add_option("--p0-uw", ske.p0_uw, "total power, uW");
    ske_cmd->add_option("--center-um", ske.center_um, "blade half-power position, um");
    ske_cmd->add_option("--xmin-um", ske.xmin_um);
    ske_cmd->add_option("--xmax-um", ske.xmax_um);
    ske_cmd->add_option("--points", ske.points);
    ske_cmd->add_option("--noise", ske.noise, "multiplicative Gaussian noise fraction");
    ske_cmd->add_option("--seed", ske.seed);
    ske_cmd->add_option("--out", ske.out, "output CSV path (default stdout)");

    struct {
        double w0_um = 11.9, zr_um = 700.0, z0_um = 0.0, lambda_nm = 532.0;
        double zmin_um = -3500.0, zmax_um = 3500.0, noise = 0.0;
        int points = 15;
        std::uint64_t seed = 1;
        std::string out;
    } sca;
    auto* sca_cmd = sim->add_subcommand("caustic", "W(z) samples -> z_um, w_um[, w_err_um]");
    sca_cmd->add_option("--w0-um", sca.w0_um);
    sca_cmd->add_option("--zr-um", sca.zr_um);
    sca_cmd->add_option("--z0-um", sca.z0_um);
    sca_cmd->add_option("--lambda-nm", sca.lambda_nm);
    sca_cmd->add_option("--zmin-um", sca.zmin_um);
    sca_cmd->add_option("--zmax-um", sca.zmax_um);
    sca_cmd->add_option("--points", sca.points);
    sca_cmd->add_option("--noise", sca.noise, "multiplicative Gaussian noise fraction on W");
    sca_cmd->add_option("--seed", sca.seed);
    sca_cmd->add_option("--out", sca.out, "output CSV path (default stdout)");

    struct {
        int emitters = 1;
        double excitation = 0.1, decay = 0.1, duration = 1e6;
        std::uint64_t seed = 1;
        std::string out_a, out_b;
    } sph;
    auto* sph_cmd = sim->add_subcommand("photons", "two-level emitter streams -> two t_ns files");
    sph_cmd->add_option("--emitters", sph.emitters, "number of independent emitters");
    sph_cmd->add_option("--excitation-rate", sph.excitation, "1/ns");
    sph_cmd->add_option("--decay-rate", sph.decay, "1/ns");
    sph_cmd->add_option("--duration-ns", sph.duration);
    sph_cmd->add_option("--seed", sph.seed);
    sph_cmd->add_option("--out-a", sph.out_a, "channel A CSV")->required();
    sph_cmd->add_option("--out-b", sph.out_b, "channel B CSV")->required();

    struct {
        double a = 1e5, p_sat_uw = 258.0, b = 0.0;
        double pmin_uw = 10.0, pmax_uw = 1032.0, noise = 0.0;
        int points = 25;
        bool poisson = false;
        std::uint64_t seed = 1;
        std::string out;
    } ssa;
    auto* ssa_cmd =
        sim->add_subcommand("saturation", "saturating + linear curve -> power_uW, counts_per_s");
    ssa_cmd->add_option("--a", ssa.a, "saturated rate, counts/s");
    ssa_cmd->add_option("--p-sat-uw", ssa.p_sat_uw);
    ssa_cmd->add_option("--b", ssa.b, "linear background, counts/s per uW");
    ssa_cmd->add_option("--pmin-uw", ssa.pmin_uw);
    ssa_cmd->add_option("--pmax-uw", ssa.pmax_uw);
    ssa_cmd->add_option("--points", ssa.points);
    ssa_cmd->add_option("--noise", ssa.noise);
    ssa_cmd->add_flag("--poisson", ssa.poisson, "Poisson counting noise instead of Gaussian");
    ssa_cmd->add_option("--seed", ssa.seed);
    ssa_cmd->add_option("--out", ssa.out, "output CSV path (default stdout)");

    struct {
        double c0 = 1000.0, c1 = 450.0, max_angle = 41.2;
        double start = 0.0, stop = 350.0, noise = 0.0;
        int points = 36;
        std::uint64_t seed = 1;
        std::string out;
    } spo;
    auto* spo_cmd = sim->add_subcommand("polarization", "cos(4a') sweep -> angle_deg, counts_per_s");
    spo_cmd->add_option("--c0", spo.c0, "offset, counts/s");
    spo_cmd->add_option("--c1", spo.c1, "amplitude, counts/s");
    spo_cmd->add_option("--max-angle-deg", spo.max_angle);
    spo_cmd->add_option("--start-deg", spo.start);
    spo_cmd->add_option("--stop-deg", spo.stop);
    spo_cmd->add_option("--points", spo.points);
    spo_cmd->add_option("--noise", spo.noise);
    spo_cmd->add_option("--seed", spo.seed);
    spo_cmd->add_option("--out", spo.out, "output CSV path (default stdout)");

    struct {
        double zpl = 1.0, nv0 = 0.0, wmin = 550.0, wmax = 850.0, noise = 0.0;
        int points = 601;
        std::uint64_t seed = 1;
        std::string out;
    } ssp;
    auto* ssp_cmd = sim->add_subcommand("spectrum", "NV spectrum -> wavelength_nm, intensity");
    ssp_cmd->add_option("--zpl-weight", ssp.zpl);
    ssp_cmd->add_option("--nv0-weight", ssp.nv0);
    ssp_cmd->add_option("--wmin-nm", ssp.wmin);
    ssp_cmd->add_option("--wmax-nm", ssp.wmax);
    ssp_cmd->add_option("--points", ssp.points);
    ssp_cmd->add_option("--noise", ssp.noise);
    ssp_cmd->add_option("--seed", ssp.seed);
    ssp_cmd->add_option("--out", ssp.out, "output CSV path (default stdout)");

    struct {
        double rise = 28.8, fall = 28.8, width = 2000.0, on = 1.0, er = 460760.0;
        double ripple = 0.0, dt = 0.8;
        std::uint64_t seed = 1;
        std::string out;
    } spu;
    auto* spu_cmd = sim->add_subcommand("pulse", "erf-edge pulse -> t_ns, intensity");
    spu_cmd->add_option("--rise-ns", spu.rise, "10-90% rise time");
    spu_cmd->add_option("--fall-ns", spu.fall, "90-10% fall time");
    spu_cmd->add_option("--width-ns", spu.width, "50% crossing separation");
    spu_cmd->add_option("--on-level", spu.on);
    spu_cmd->add_option("--er", spu.er, "extinction ratio");
    spu_cmd->add_option("--ripple", spu.ripple, "initial ripple fraction");
    spu_cmd->add_option("--dt-ns", spu.dt, "sample period");
    spu_cmd->add_option("--seed", spu.seed);
    spu_cmd->add_option("--out", spu.out, "output CSV path (default stdout)");

    struct {
        double baseline = 1.0, contrast = 0.279, f0 = 2870.0, gamma = 10.0;
        double fmin = 2820.0, fmax = 2920.0, noise = 0.0;
        int points = 101;
        bool poisson = false;
        std::uint64_t seed = 1;
        std::string out;
    } sod;
    auto* sod_cmd = sim->add_subcommand("odmr", "Lorentzian dip -> freq_mhz, fluorescence");
    sod_cmd->add_option("--baseline", sod.baseline);
    sod_cmd->add_option("--contrast", sod.contrast);
    sod_cmd->add_option("--f0-mhz", sod.f0);
    sod_cmd->add_option("--gamma-mhz", sod.gamma, "FWHM linewidth");
    sod_cmd->add_option("--fmin-mhz", sod.fmin);
    sod_cmd->add_option("--fmax-mhz", sod.fmax);
    sod_cmd->add_option("--points", sod.points);
    sod_cmd->add_option("--noise", sod.noise);
    sod_cmd->add_flag("--poisson", sod.poisson, "Poisson counting noise instead of Gaussian");
    sod_cmd->add_option("--seed", sod.seed);
    sod_cmd->add_option("--out", sod.out, "output CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const auto write_csv = [](const std::string& path, const std::vector<std::string>& headers,
                              const std::vector<std::vector<double>>& cols) {
        if (path.empty())
            csv::write_table(std::cout, headers, cols);
        else
            csv::write_table(path, headers, cols);
    };

    try {
        if (ke_cmd->parsed()) return detail::run_knife_edge(ke.file, ke.z_um, ke.out);
        if (ca_cmd->parsed())
            return detail::run_caustic(ca.file, ca.lambda_nm, ca.focal_mm, ca.pupil_mm, ca.out);
        if (g2_cmd->parsed())
            return detail::run_g2(g2.file_a, g2.file_b, g2.window_ns, g2.bin_ns, g2.smoothing,
                                  g2.out);
        if (sat_cmd->parsed()) return detail::run_saturation(sat.file, sat.background, sat.out);
        if (pol_cmd->parsed()) return detail::run_polarization(pol.file, pol.out);
        if (spec_cmd->parsed()) return detail::run_spectrum(spec.file, spec.threshold, spec.out);
        if (pu_cmd->parsed()) return detail::run_pulse(pu.file, pu.input_power, pu.out);
        if (od_cmd->parsed()) return detail::run_odmr(od.file, od.out);

        if (sim->parsed()) {
            if (ske_cmd->parsed()) {
                const beam::BeamGeometry g{ske.w0_um, ske.zr_um, ske.z0_um, ske.lambda_nm * 1e-3};
                const auto scan =
                    synth::gen_knife_edge(g, ske.z_um, detail::linspace(ske.xmin_um, ske.xmax_um,
                                                                        ske.points),
                                          ske.p0_uw, ske.noise, ske.seed, ske.center_um);
                std::vector<double> xs(scan.samples.size()), ps(scan.samples.size());
                for (std::size_t i = 0; i < scan.samples.size(); ++i) {
                    xs[i] = scan.samples[i].blade_position;
                    ps[i] = scan.samples[i].transmitted_power;
                }
                write_csv(ske.out, {"x_um", "power_uW"}, {xs, ps});
                return 0;
            }
            if (sca_cmd->parsed()) {
                const beam::BeamGeometry g{sca.w0_um, sca.zr_um, sca.z0_um, sca.lambda_nm * 1e-3};
                const auto pts = synth::gen_caustic(
                    g, detail::linspace(sca.zmin_um, sca.zmax_um, sca.points), sca.noise, sca.seed);
                std::vector<double> zs(pts.size()), ws(pts.size()), es;
                for (std::size_t i = 0; i < pts.size(); ++i) {
                    zs[i] = pts[i].z;
                    ws[i] = pts[i].width;
                    if (pts[i].width_error) es.push_back(*pts[i].width_error);
                }
                if (es.size() == pts.size())
                    write_csv(sca.out, {"z_um", "w_um", "w_err_um"}, {zs, ws, es});
                else
                    write_csv(sca.out, {"z_um", "w_um"}, {zs, ws});
                return 0;
            }
            if (sph_cmd->parsed()) {
                const auto [a, b] = synth::gen_photon_stream(sph.emitters, sph.excitation,
                                                             sph.decay, sph.duration, sph.seed);
                csv::write_table(sph.out_a, {"t_ns"}, {a.arrival_times});
                csv::write_table(sph.out_b, {"t_ns"}, {b.arrival_times});
                return 0;
            }
            if (ssa_cmd->parsed()) {
                const auto curve = synth::gen_saturation(
                    ssa.a, ssa.p_sat_uw, ssa.b, detail::linspace(ssa.pmin_uw, ssa.pmax_uw,
                                                                 ssa.points),
                    ssa.noise, ssa.seed,
                    ssa.poisson ? synth::NoiseModel::poisson : synth::NoiseModel::multiplicative);
                std::vector<double> ps(curve.points.size()), cs(curve.points.size());
                for (std::size_t i = 0; i < curve.points.size(); ++i) {
                    ps[i] = curve.points[i].power;
                    cs[i] = curve.points[i].counts;
                }
                write_csv(ssa.out, {"power_uW", "counts_per_s"}, {ps, cs});
                return 0;
            }
            if (spo_cmd->parsed()) {
                const auto sweep = synth::gen_polarization(
                    spo.c0, spo.c1, spo.max_angle,
                    detail::linspace(spo.start, spo.stop, spo.points), spo.noise, spo.seed);
                std::vector<double> as(sweep.points.size()), cs(sweep.points.size());
                for (std::size_t i = 0; i < sweep.points.size(); ++i) {
                    as[i] = sweep.points[i].angle;
                    cs[i] = sweep.points[i].counts;
                }
                write_csv(spo.out, {"angle_deg", "counts_per_s"}, {as, cs});
                return 0;
            }
            if (ssp_cmd->parsed()) {
                const auto sp = synth::gen_spectrum(ssp.zpl, ssp.nv0,
                                                    detail::linspace(ssp.wmin, ssp.wmax,
                                                                     ssp.points),
                                                    ssp.seed, ssp.noise);
                std::vector<double> ws(sp.samples.size()), is(sp.samples.size());
                for (std::size_t i = 0; i < sp.samples.size(); ++i) {
                    ws[i] = sp.samples[i].wavelength;
                    is[i] = sp.samples[i].intensity;
                }
                write_csv(ssp.out, {"wavelength_nm", "intensity"}, {ws, is});
                return 0;
            }
            if (spu_cmd->parsed()) {
                const auto trace = synth::gen_pulse(spu.rise, spu.fall, spu.width, spu.on, spu.er,
                                                    spu.ripple, spu.dt, spu.seed);
                std::vector<double> ts(trace.samples.size());
                for (std::size_t i = 0; i < ts.size(); ++i)
                    ts[i] = static_cast<double>(i) * trace.sample_period;
                write_csv(spu.out, {"t_ns", "intensity"}, {ts, trace.samples});
                return 0;
            }
            if (sod_cmd->parsed()) {
                const auto sweep = synth::gen_odmr(
                    sod.baseline, sod.contrast, sod.f0, sod.gamma,
                    detail::linspace(sod.fmin, sod.fmax, sod.points), sod.noise, sod.seed,
                    sod.poisson ? synth::NoiseModel::poisson : synth::NoiseModel::multiplicative);
                write_csv(sod.out, {"freq_mhz", "fluorescence"},
                          {sweep.frequencies, sweep.fluorescence});
                return 0;
            }
        }
    } catch (const csv::CsvError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    std::cerr << "error: no subcommand executed\n";
    return 1;
}

}  // namespace nvlex::cli
