#pragma once

// Second-order correlation g2(tau) from two-channel photon timestamps and
// emitter-count inference. Times are in nanoseconds throughout.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace nvlex::photonstats {

struct TimestampSeries {
    int channel_id = 0;
    std::vector<double> arrival_times;  // ns, sorted non-decreasing
    double t_start = 0.0;               // ns
    double t_end = 0.0;                 // ns
};

inline void validate(const TimestampSeries& s) {
    if (!(s.t_end > s.t_start))
        throw std::invalid_argument("timestamp series: acquisition span must have t_end > t_start");
    if (s.arrival_times.empty())
        throw std::invalid_argument("timestamp series: empty");
    double prev = -std::numeric_limits<double>::infinity();
    for (double t : s.arrival_times) {
        if (!std::isfinite(t)) throw std::invalid_argument("timestamp series: non-finite time");
        if (t < prev) throw std::invalid_argument("timestamp series: times must be sorted");
        if (t < s.t_start || t > s.t_end)
            throw std::invalid_argument("timestamp series: time outside acquisition span");
        prev = t;
    }
}

struct CorrelationHistogram {
    std::vector<double> bin_centers;      // ns, symmetric about 0
    std::vector<std::int64_t> raw_counts;
    std::vector<double> g2;               // raw_counts / normalization_factor
    double bin_width = 0.0;               // ns
    double normalization_factor = 0.0;    // expected pairs per bin for independent streams
};

struct EmitterEstimate {
    double g2_zero = 0.0;
    double n_emitters = 0.0;  // 1/(1 - g2_zero); +inf when g2_zero >= 1
    bool is_single = false;   // strict g2_zero < 0.5
};

// Full pair cross-correlation: raw_counts[k] counts pairs (t_a, t_b) with
// tau = t_b - t_a falling in bin k. The histogram spans (-window, +window)
// with a bin centred exactly at tau = 0, which requires the total bin count
// n = 2*window/bin_width to be an odd integer: window=150, bin=0.4 gives
// n=750 and is rejected; window=150.2 gives n=751 and is accepted.
inline CorrelationHistogram correlate(const TimestampSeries& a, const TimestampSeries& b,
                                      double window, double bin_width) {
    validate(a);
    validate(b);
    if (!(window > 0.0)) throw std::invalid_argument("correlate: window must be > 0");
    if (!(bin_width > 0.0)) throw std::invalid_argument("correlate: bin width must be > 0");

    const double n_exact = 2.0 * window / bin_width;
    const long long n_bins = std::llround(n_exact);
    if (n_bins < 1 || std::abs(n_exact - static_cast<double>(n_bins)) > 1e-6)
        throw std::invalid_argument("correlate: 2*window/bin_width must be an integer bin count");
    if (n_bins % 2 == 0)
        throw std::invalid_argument(
            "correlate: bin count must be odd so one bin is centred at tau=0 "
            "(pick window = (2m+1)*bin_width/2)");
    const long long half = n_bins / 2;

    const double t0 = std::max(a.t_start, b.t_start);
    const double t1 = std::min(a.t_end, b.t_end);
    if (!(t1 > t0)) throw std::invalid_argument("correlate: series do not overlap in time");

    CorrelationHistogram h;
    h.bin_width = bin_width;
    h.bin_centers.resize(static_cast<std::size_t>(n_bins));
    h.raw_counts.assign(static_cast<std::size_t>(n_bins), 0);
    for (long long k = 0; k < n_bins; ++k)
        h.bin_centers[static_cast<std::size_t>(k)] = static_cast<double>(k - half) * bin_width;

    // sorted two-pointer sweep: for each t_a only the b-events inside
    // [t_a - window, t_a + window] are visited
    const auto& ta = a.arrival_times;
    const auto& tb = b.arrival_times;
    std::size_t lo = 0;
    for (const double t : ta) {
        while (lo < tb.size() && tb[lo] < t - window) ++lo;
        for (std::size_t j = lo; j < tb.size() && tb[j] <= t + window; ++j) {
            const double tau = tb[j] - t;
            // ties-away-from-zero magnitude binning keeps the histogram
            // exactly mirror-symmetric under a <-> b exchange
            const double mag = std::floor(std::abs(tau) / bin_width + 0.5);
            if (mag > static_cast<double>(half)) continue;
            const long long k = half + (tau < 0.0 ? -1LL : 1LL) * static_cast<long long>(mag);
            ++h.raw_counts[static_cast<std::size_t>(k)];
        }
    }

    // normalization from mean rates over the overlap span: g2 -> 1 for
    // independent Poisson streams
    const auto in_overlap = [&](const std::vector<double>& v) {
        const auto first = std::lower_bound(v.begin(), v.end(), t0);
        const auto last = std::upper_bound(v.begin(), v.end(), t1);
        return static_cast<double>(last - first);
    };
    const double span = t1 - t0;
    const double rate_a = in_overlap(ta) / span;
    const double rate_b = in_overlap(tb) / span;
    h.normalization_factor = rate_a * rate_b * bin_width * span;
    if (!(h.normalization_factor > 0.0))
        throw std::invalid_argument("correlate: no events in the overlap span");

    h.g2.resize(h.raw_counts.size());
    for (std::size_t k = 0; k < h.raw_counts.size(); ++k)
        h.g2[k] = static_cast<double>(h.raw_counts[k]) / h.normalization_factor;
    return h;
}

// Mean g2 over `smoothing_bins` bins centred on tau = 0.
inline double g2_zero(const CorrelationHistogram& h, int smoothing_bins = 1) {
    const std::size_t n = h.g2.size();
    if (n == 0 || n % 2 == 0)
        throw std::invalid_argument("g2_zero: histogram must have an odd, non-zero bin count");
    if (smoothing_bins < 1 || smoothing_bins % 2 == 0 ||
        static_cast<std::size_t>(smoothing_bins) > n / 4)
        throw std::invalid_argument("g2_zero: smoothing_bins must be odd, >= 1 and <= nbins/4");
    const std::size_t center = n / 2;
    const std::size_t r = static_cast<std::size_t>(smoothing_bins) / 2;
    double sum = 0.0;
    for (std::size_t k = center - r; k <= center + r; ++k) sum += h.g2[k];
    return sum / static_cast<double>(smoothing_bins);
}

// Inverts g2(0, n) = 1 - 1/n. is_single uses the strict 0.5
// threshold, so g2_zero = 0.5 (n = 2) is already not single.
inline EmitterEstimate emitter_count(double g2_zero_value) {
    if (!(g2_zero_value >= 0.0))
        throw std::invalid_argument("emitter_count: g2(0) must be >= 0");
    EmitterEstimate e;
    e.g2_zero = g2_zero_value;
    e.n_emitters = g2_zero_value < 1.0 ? 1.0 / (1.0 - g2_zero_value)
                                       : std::numeric_limits<double>::infinity();
    e.is_single = g2_zero_value < 0.5;
    return e;
}

}  // namespace nvlex::photonstats
