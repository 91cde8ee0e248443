#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "nvlex/odmr.hpp"
#include "nvlex/synth.hpp"
#include "test_util.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using testutil::linspace;

namespace {
// typical zero-field sweep: B = 1, C = 0.279, f0 = 2870 MHz, Gamma = 10 MHz
nvlex::odmr::OdmrSweep reference_sweep(double noise, std::uint64_t seed,
                                       double half_span = 50.0, std::size_t n = 101) {
    return nvlex::synth::gen_odmr(1.0, 0.279, 2870.0, 10.0,
                                  linspace(2870.0 - half_span, 2870.0 + half_span, n), noise,
                                  seed);
}
}  // namespace

TEST_CASE("lorentzian dip model evaluates its landmarks", "[odmr]") {
    // at the centre the dip reaches B(1 - C); far away it returns to B
    REQUIRE_THAT(nvlex::odmr::lorentzian_dip(2870.0, 1.0, 0.279, 2870.0, 10.0),
                 WithinRel(1.0 - 0.279, 1e-12));
    REQUIRE_THAT(nvlex::odmr::lorentzian_dip(2870.0 + 1e6, 1.0, 0.279, 2870.0, 10.0),
                 WithinRel(1.0, 1e-9));
    // at f0 +- Gamma/2 exactly half the contrast remains
    REQUIRE_THAT(nvlex::odmr::lorentzian_dip(2875.0, 1.0, 0.279, 2870.0, 10.0),
                 WithinRel(1.0 - 0.5 * 0.279, 1e-12));
}

TEST_CASE("direct contrast reads the dip off the data", "[odmr]") {
    const auto sweep = reference_sweep(0.0, 1);
    const double direct = nvlex::odmr::contrast_direct(sweep);
    // the edge mean sits slightly below B, so the direct estimate is biased
    // low by the Lorentzian tails but must stay within half a point here
    REQUIRE_THAT(direct, WithinAbs(0.279, 0.005));

    nvlex::odmr::OdmrSweep flat;
    flat.frequencies = linspace(2820.0, 2920.0, 12);
    flat.fluorescence.assign(12, 3.0);
    REQUIRE(nvlex::odmr::contrast_direct(flat) == 0.0);
}

TEST_CASE("both contrast estimators agree on interior-dip data", "[odmr]") {
    // noiseless, dip well inside the window: the analytic tail bias of the
    // direct estimator is 0.00217, far below the one-point agreement bound
    const auto sweep = reference_sweep(0.0, 2);
    const auto res = nvlex::odmr::fit_odmr(sweep);
    REQUIRE(res.converged);
    const double diff = std::abs(res.contrast_lorentzian - res.contrast_direct);
    REQUIRE_THAT(diff, WithinAbs(0.002171300516007224, 1e-6));
    REQUIRE(diff < 0.01);
}

TEST_CASE("odmr fit recovers exact synthetic parameters", "[odmr]") {
    const auto res = nvlex::odmr::fit_odmr(reference_sweep(0.0, 3));
    REQUIRE(res.converged);
    REQUIRE_THAT(res.baseline, WithinRel(1.0, 1e-6));
    REQUIRE_THAT(res.contrast_lorentzian, WithinRel(0.279, 1e-6));
    REQUIRE_THAT(res.center_frequency, WithinAbs(2870.0, 1e-6));
    REQUIRE_THAT(res.linewidth_fwhm, WithinRel(10.0, 1e-6));
    REQUIRE_FALSE(res.low_signal);
    REQUIRE_FALSE(res.center_at_boundary);
}

TEST_CASE("odmr fit tolerates one percent noise", "[odmr]") {
    const auto res = nvlex::odmr::fit_odmr(reference_sweep(0.01, 4));
    REQUIRE(res.converged);
    REQUIRE_THAT(res.contrast_lorentzian, WithinAbs(0.279, 0.015));
    REQUIRE_THAT(res.center_frequency, WithinAbs(2870.0, 1.0));
    REQUIRE_THAT(res.linewidth_fwhm, WithinAbs(10.0, 1.5));
    REQUIRE(res.contrast_error > 0.0);
    REQUIRE(res.contrast_error < 0.02);
}

TEST_CASE("sweep direction does not change the odmr result", "[odmr]") {
    const auto sweep = reference_sweep(0.01, 5);
    nvlex::odmr::OdmrSweep reversed;
    reversed.frequencies.assign(sweep.frequencies.rbegin(), sweep.frequencies.rend());
    reversed.fluorescence.assign(sweep.fluorescence.rbegin(), sweep.fluorescence.rend());

    const auto fwd = nvlex::odmr::fit_odmr(sweep);
    const auto bwd = nvlex::odmr::fit_odmr(reversed);
    // the reversed sweep is re-sorted to the identical ascending arrays,
    // so every derived number matches exactly
    REQUIRE(fwd.contrast_lorentzian == bwd.contrast_lorentzian);
    REQUIRE(fwd.center_frequency == bwd.center_frequency);
    REQUIRE(fwd.linewidth_fwhm == bwd.linewidth_fwhm);
    REQUIRE(fwd.contrast_direct == bwd.contrast_direct);
}

TEST_CASE("fluorescence rescaling scales only the baseline", "[odmr]") {
    auto sweep = reference_sweep(0.01, 6);
    const auto base = nvlex::odmr::fit_odmr(sweep);
    for (double& v : sweep.fluorescence) v *= 40.0;
    const auto scaled = nvlex::odmr::fit_odmr(sweep);
    REQUIRE_THAT(scaled.contrast_lorentzian, WithinAbs(base.contrast_lorentzian, 1e-9));
    REQUIRE_THAT(scaled.contrast_direct, WithinAbs(base.contrast_direct, 1e-12));
    REQUIRE_THAT(scaled.center_frequency, WithinAbs(base.center_frequency, 1e-6));
    REQUIRE_THAT(scaled.baseline, WithinRel(40.0 * base.baseline, 1e-9));
}

TEST_CASE("fitted linewidth matches the interpolated FWHM", "[odmr]") {
    const auto sweep = reference_sweep(0.0, 7);
    const auto res = nvlex::odmr::fit_odmr(sweep);

    // read the FWHM directly off the noiseless curve
    const double b = res.baseline, mid = b - 0.5 * (b - *std::min_element(
        sweep.fluorescence.begin(), sweep.fluorescence.end()));
    double left = 0.0, right = 0.0;
    for (std::size_t i = 1; i < sweep.frequencies.size(); ++i) {
        const double f0 = sweep.fluorescence[i - 1], f1 = sweep.fluorescence[i];
        if (f0 > mid && f1 <= mid)
            left = sweep.frequencies[i - 1] + (f0 - mid) / (f0 - f1) *
                       (sweep.frequencies[i] - sweep.frequencies[i - 1]);
        if (f0 <= mid && f1 > mid)
            right = sweep.frequencies[i - 1] + (mid - f0) / (f1 - f0) *
                        (sweep.frequencies[i] - sweep.frequencies[i - 1]);
    }
    REQUIRE_THAT(res.linewidth_fwhm, WithinRel(right - left, 0.02));
}

TEST_CASE("shallow dips raise the low-signal flag", "[odmr]") {
    const auto sweep = nvlex::synth::gen_odmr(1.0, 0.02, 2870.0, 10.0,
                                              linspace(2820.0, 2920.0, 101), 0.0, 8);
    const auto res = nvlex::odmr::fit_odmr(sweep);
    REQUIRE(res.low_signal);
    REQUIRE_THAT(res.contrast_lorentzian, WithinAbs(0.02, 0.01));
}

TEST_CASE("a dip at the sweep edge is flagged", "[odmr]") {
    // dip centred exactly on the first sweep point: only half of it is seen
    const auto sweep = nvlex::synth::gen_odmr(1.0, 0.279, 2820.0, 10.0,
                                              linspace(2820.0, 2920.0, 101), 0.0, 9);
    const auto res = nvlex::odmr::fit_odmr(sweep);
    REQUIRE(res.center_at_boundary);
    // an interior dip does not trip the flag
    REQUIRE_FALSE(nvlex::odmr::fit_odmr(reference_sweep(0.0, 10)).center_at_boundary);
}

TEST_CASE("odmr input validation", "[odmr]") {
    nvlex::odmr::OdmrSweep s;
    s.frequencies = linspace(2820.0, 2920.0, 10);
    s.fluorescence.assign(10, 1.0);
    REQUIRE_THROWS_AS(nvlex::odmr::fit_odmr(s), std::invalid_argument);  // < 11 points

    s.frequencies = linspace(2820.0, 2920.0, 12);
    s.fluorescence.assign(11, 1.0);  // length mismatch
    REQUIRE_THROWS_AS(nvlex::odmr::fit_odmr(s), std::invalid_argument);

    s.frequencies = linspace(2820.0, 2920.0, 12);
    s.fluorescence.assign(12, 1.0);
    s.frequencies[5] = s.frequencies[4];  // not strictly monotone
    REQUIRE_THROWS_AS(nvlex::odmr::fit_odmr(s), std::invalid_argument);

    s.frequencies = linspace(2820.0, 2920.0, 12);
    s.fluorescence.assign(12, -1.0);  // edge average not positive
    REQUIRE_THROWS_AS(nvlex::odmr::fit_odmr(s), std::invalid_argument);

    s.fluorescence.assign(12, 1.0);
    s.fluorescence[6] = std::nan("");  // non-finite sample
    REQUIRE_THROWS_AS(nvlex::odmr::fit_odmr(s), std::invalid_argument);
}
