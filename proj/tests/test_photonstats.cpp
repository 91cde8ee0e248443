#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "nvlex/photonstats.hpp"
#include "nvlex/synth.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using nvlex::photonstats::CorrelationHistogram;
using nvlex::photonstats::TimestampSeries;

namespace {

CorrelationHistogram flat_histogram(std::size_t n, double g2value) {
    CorrelationHistogram h;
    h.bin_width = 1.0;
    h.normalization_factor = 1.0;
    h.bin_centers.resize(n);
    h.raw_counts.assign(n, 0);
    h.g2.assign(n, g2value);
    for (std::size_t k = 0; k < n; ++k)
        h.bin_centers[k] = (static_cast<double>(k) - static_cast<double>(n / 2));
    return h;
}

double mean_g2_outside(const CorrelationHistogram& h, double tau_min) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < h.g2.size(); ++k) {
        if (std::abs(h.bin_centers[k]) < tau_min) continue;
        sum += h.g2[k];
        ++n;
    }
    return sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("bin count must come out as an odd integer", "[photonstats]") {
    const auto [a, b] = nvlex::synth::gen_photon_stream(1, 0.05, 0.05, 2e5, 42);

    // 2*150/0.4 = 750 bins: even, no bin centred at zero
    REQUIRE_THROWS_AS(nvlex::photonstats::correlate(a, b, 150.0, 0.4), std::invalid_argument);
    // 2*150.2/0.4 = 751 bins: accepted
    const auto h = nvlex::photonstats::correlate(a, b, 150.2, 0.4);
    REQUIRE(h.g2.size() == 751);
    REQUIRE(h.bin_centers[375] == 0.0);
    REQUIRE_THAT(h.bin_centers.front(), WithinRel(-150.0, 1e-12));
    REQUIRE_THAT(h.bin_centers.back(), WithinRel(150.0, 1e-12));
    // a non-integer bin count is rejected outright
    REQUIRE_THROWS_AS(nvlex::photonstats::correlate(a, b, 150.1, 0.4), std::invalid_argument);
}

TEST_CASE("independent Poisson streams normalize to one", "[photonstats]") {
    const auto a = nvlex::synth::gen_poisson_stream(0.02, 5e6, 101, 0);
    const auto b = nvlex::synth::gen_poisson_stream(0.02, 5e6, 202, 1);
    REQUIRE(a.arrival_times.size() > 50000);  // ~1e5 expected

    const auto h = nvlex::photonstats::correlate(a, b, 150.2, 0.4);
    double mean = 0.0;
    for (const double v : h.g2) mean += v;
    mean /= static_cast<double>(h.g2.size());
    REQUIRE_THAT(mean, WithinAbs(1.0, 0.02));
    REQUIRE_THAT(nvlex::photonstats::g2_zero(h, 5), WithinAbs(1.0, 0.15));
}

TEST_CASE("single emitter shows antibunching with recovery to one", "[photonstats]") {
    const auto [a, b] = nvlex::synth::gen_photon_stream(1, 0.1, 0.1, 5e6, 7);
    const auto h = nvlex::photonstats::correlate(a, b, 150.2, 0.4);
    const double dip = nvlex::photonstats::g2_zero(h);
    REQUIRE(dip < 0.1);
    // far from zero delay the correlation recovers to the Poisson level
    REQUIRE_THAT(mean_g2_outside(h, 80.0), WithinAbs(1.0, 0.05));
    const auto est = nvlex::photonstats::emitter_count(dip);
    REQUIRE(est.is_single);
}

TEST_CASE("two merged single emitters give g2(0) near one half", "[photonstats]") {
    const auto [a, b] = nvlex::synth::gen_photon_stream(2, 0.1, 0.1, 5e6, 11);
    const auto h = nvlex::photonstats::correlate(a, b, 150.2, 0.4);
    // light smoothing keeps the estimate above the single-emitter threshold:
    // the dip recovers on a 5 ns scale, so +-1 bin adds a small positive bias
    const double dip = nvlex::photonstats::g2_zero(h, 3);
    REQUIRE_THAT(dip, WithinAbs(0.5, 0.05));
    REQUIRE_FALSE(nvlex::photonstats::emitter_count(dip).is_single);
}

TEST_CASE("correlation is exactly mirror symmetric under channel swap", "[photonstats]") {
    const auto [a, b] = nvlex::synth::gen_photon_stream(1, 0.08, 0.12, 1e6, 19);
    const auto hab = nvlex::photonstats::correlate(a, b, 50.1, 0.2);
    const auto hba = nvlex::photonstats::correlate(b, a, 50.1, 0.2);
    const std::size_t n = hab.raw_counts.size();
    REQUIRE(hba.raw_counts.size() == n);
    for (std::size_t k = 0; k < n; ++k)
        REQUIRE(hab.raw_counts[k] == hba.raw_counts[n - 1 - k]);
}

TEST_CASE("correlation is invariant under a common time shift", "[photonstats]") {
    auto [a, b] = nvlex::synth::gen_photon_stream(1, 0.1, 0.1, 1e6, 23);
    const auto before = nvlex::photonstats::correlate(a, b, 50.1, 0.2);

    const double shift = 1234.5;
    for (auto* s : {&a, &b}) {
        for (double& t : s->arrival_times) t += shift;
        s->t_start += shift;
        s->t_end += shift;
    }
    const auto after = nvlex::photonstats::correlate(a, b, 50.1, 0.2);
    REQUIRE(before.raw_counts == after.raw_counts);
    REQUIRE_THAT(after.normalization_factor, WithinRel(before.normalization_factor, 1e-9));
}

TEST_CASE("correlate validates its inputs", "[photonstats]") {
    TimestampSeries a;
    a.channel_id = 0;
    a.t_start = 0.0;
    a.t_end = 100.0;
    a.arrival_times = {1.0, 2.0, 3.0};
    TimestampSeries b = a;
    b.channel_id = 1;

    REQUIRE_THROWS_AS(nvlex::photonstats::correlate(a, b, -5.1, 0.2), std::invalid_argument);
    REQUIRE_THROWS_AS(nvlex::photonstats::correlate(a, b, 50.1, 0.0), std::invalid_argument);

    TimestampSeries disjoint = b;
    disjoint.t_start = 200.0;
    disjoint.t_end = 300.0;
    disjoint.arrival_times = {201.0, 202.0};
    REQUIRE_THROWS_AS(nvlex::photonstats::correlate(a, disjoint, 10.1, 0.2),
                      std::invalid_argument);

    TimestampSeries unsorted = a;
    unsorted.arrival_times = {3.0, 1.0, 2.0};
    REQUIRE_THROWS_AS(nvlex::photonstats::correlate(unsorted, b, 10.1, 0.2),
                      std::invalid_argument);

    TimestampSeries outside = a;
    outside.arrival_times = {1.0, 2.0, 150.0};  // beyond t_end
    REQUIRE_THROWS_AS(nvlex::photonstats::correlate(outside, b, 10.1, 0.2),
                      std::invalid_argument);
}

TEST_CASE("g2_zero averages the requested central bins", "[photonstats]") {
    auto h = flat_histogram(13, 1.0);
    REQUIRE(nvlex::photonstats::g2_zero(h) == 1.0);

    h.g2[6] = 0.0;  // centre bin
    REQUIRE(nvlex::photonstats::g2_zero(h, 1) == 0.0);
    REQUIRE_THAT(nvlex::photonstats::g2_zero(h, 3), WithinRel(2.0 / 3.0, 1e-12));

    REQUIRE_THROWS_AS(nvlex::photonstats::g2_zero(h, 2), std::invalid_argument);   // even
    REQUIRE_THROWS_AS(nvlex::photonstats::g2_zero(h, -1), std::invalid_argument);  // negative
    REQUIRE_THROWS_AS(nvlex::photonstats::g2_zero(h, 5), std::invalid_argument);   // > n/4

    const auto even = flat_histogram(10, 1.0);
    REQUIRE_THROWS_AS(nvlex::photonstats::g2_zero(even, 1), std::invalid_argument);
}

TEST_CASE("emitter count inverts the antibunching depth", "[photonstats]") {
    const auto one = nvlex::photonstats::emitter_count(0.0);
    REQUIRE_THAT(one.n_emitters, WithinRel(1.0, 1e-12));
    REQUIRE(one.is_single);

    const auto two = nvlex::photonstats::emitter_count(0.5);
    REQUIRE_THAT(two.n_emitters, WithinRel(2.0, 1e-12));
    REQUIRE_FALSE(two.is_single);  // threshold is strict

    const auto four = nvlex::photonstats::emitter_count(0.75);
    REQUIRE_THAT(four.n_emitters, WithinRel(4.0, 1e-12));

    REQUIRE(std::isinf(nvlex::photonstats::emitter_count(1.0).n_emitters));
    REQUIRE(std::isinf(nvlex::photonstats::emitter_count(1.3).n_emitters));
    REQUIRE_THROWS_AS(nvlex::photonstats::emitter_count(-0.1), std::invalid_argument);
}

TEST_CASE("raw pair counts are conserved across binning", "[photonstats]") {
    // with a window wider than the stream every ordered pair lands in a bin
    TimestampSeries a;
    a.t_start = 0.0;
    a.t_end = 10.0;
    a.arrival_times = {1.0, 4.0, 9.0};
    TimestampSeries b = a;
    b.channel_id = 1;
    b.arrival_times = {2.0, 5.0};

    const auto h = nvlex::photonstats::correlate(a, b, 20.1, 0.2);
    long long total = 0;
    for (const long long c : h.raw_counts) total += c;
    REQUIRE(total == 6);  // 3 x 2 ordered pairs

    // tau = +1 ns appears twice (1->2 and 4->5); bin centre index = half + 5
    const std::size_t half = h.raw_counts.size() / 2;
    REQUIRE(h.raw_counts[half + 5] == 2);
}
