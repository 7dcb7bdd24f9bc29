#pragma once

// Independent reference implementations used to freeze expected values.
// These deliberately avoid the library's code paths: plain loops, textbook
// definitions, no shared helpers.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace oracle {

// ---- WFDB 212 bit packing ------------------------------------------------
// Independent decoding via arithmetic (no shifts shared with the library).
inline std::vector<int> decode_212(const std::vector<std::uint8_t>& bytes,
                                   std::size_t n) {
    std::vector<int> out;
    for (std::size_t g = 0; g * 3 + 2 < bytes.size() && out.size() < n; ++g) {
        const int b0 = bytes[g * 3], b1 = bytes[g * 3 + 1], b2 = bytes[g * 3 + 2];
        int s0 = (b1 % 16) * 256 + b0;
        int s1 = (b1 / 16) * 256 + b2;
        if (s0 >= 2048) s0 -= 4096;
        if (s1 >= 2048) s1 -= 4096;
        out.push_back(s0);
        if (out.size() < n) out.push_back(s1);
    }
    return out;
}

// ---- Pan-Tompkins difference equations ------------------------------------
// Direct recursion with explicit history indexing.
inline std::vector<double> lowpass(const std::vector<double>& x) {
    std::vector<double> y(x.size(), 0.0);
    auto get = [](const std::vector<double>& v, long i) {
        return i >= 0 && i < static_cast<long>(v.size()) ? v[i] : 0.0;
    };
    for (long n = 0; n < static_cast<long>(x.size()); ++n)
        y[n] = 2 * get(y, n - 1) - get(y, n - 2) + get(x, n) - 2 * get(x, n - 6) +
               get(x, n - 12);
    return y;
}

inline std::vector<double> highpass(const std::vector<double>& x) {
    // y(n) = 32 x(n-16) - sum of the last 32 inputs
    std::vector<double> y(x.size(), 0.0);
    auto get = [](const std::vector<double>& v, long i) {
        return i >= 0 && i < static_cast<long>(v.size()) ? v[i] : 0.0;
    };
    for (long n = 0; n < static_cast<long>(x.size()); ++n) {
        double sum = 0.0;
        for (long k = n - 31; k <= n; ++k) sum += get(x, k);
        y[n] = 32 * get(x, n - 16) - sum;
    }
    return y;
}

inline std::vector<double> derivative(const std::vector<double>& x) {
    std::vector<double> y(x.size(), 0.0);
    auto get = [](const std::vector<double>& v, long i) {
        return i >= 0 && i < static_cast<long>(v.size()) ? v[i] : 0.0;
    };
    for (long n = 0; n < static_cast<long>(x.size()); ++n)
        y[n] = (2 * get(x, n) + get(x, n - 1) - get(x, n - 3) - 2 * get(x, n - 4)) / 8.0;
    return y;
}

inline std::vector<double> mwi(const std::vector<double>& x, int width) {
    std::vector<double> y(x.size(), 0.0);
    for (long n = 0; n < static_cast<long>(x.size()); ++n) {
        double sum = 0.0;
        for (long k = n - width + 1; k <= n; ++k)
            if (k >= 0) sum += x[k];
        y[n] = sum / width;
    }
    return y;
}

// ---- HRV features ----------------------------------------------------------
// Straightforward textbook formulas, population-n deviations, 1/128 s bins.
inline std::array<double, 15> hrv_features(const std::vector<double>& rr) {
    const std::size_t n = rr.size();
    double sum = 0.0;
    for (double v : rr) sum += v;
    const double mean = sum / n;

    std::vector<double> sorted = rr;
    std::sort(sorted.begin(), sorted.end());
    const double median =
        n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;

    double var = 0.0;
    for (double v : rr) var += (v - mean) * (v - mean);
    const double sdnn = std::sqrt(var / n);

    std::vector<double> d;
    for (std::size_t i = 1; i < n; ++i) d.push_back(rr[i] - rr[i - 1]);
    double sq = 0.0, dsum = 0.0;
    int nn50 = 0;
    for (double v : d) {
        sq += v * v;
        dsum += v;
        if (std::fabs(v) > 0.050) ++nn50;
    }
    const double rmssd = std::sqrt(sq / d.size());
    const double dmean = dsum / d.size();
    double dvar = 0.0;
    for (double v : d) dvar += (v - dmean) * (v - dmean);
    const double sdsd = std::sqrt(dvar / d.size());

    const double mn = sorted.front(), mx = sorted.back();

    double hsum = 0.0;
    for (double v : rr) hsum += 60.0 / v;
    const double hmean = hsum / n;
    double hvar = 0.0;
    for (double v : rr) hvar += (60.0 / v - hmean) * (60.0 / v - hmean);

    std::map<long, int> bins;
    for (double v : rr) bins[static_cast<long>(std::floor(v * 128.0))]++;
    int tallest = 0;
    for (auto& [b, c] : bins) tallest = std::max(tallest, c);

    std::vector<double> dev;
    for (double v : rr) dev.push_back(std::fabs(v - median));
    std::sort(dev.begin(), dev.end());
    const double mad =
        n % 2 ? dev[n / 2] : (dev[n / 2 - 1] + dev[n / 2]) / 2.0;

    return {mean,
            median,
            sdnn,
            rmssd,
            sdsd,
            static_cast<double>(nn50),
            100.0 * nn50 / static_cast<double>(d.size()),
            mn,
            mx,
            mx - mn,
            sdnn / mean,
            60.0 / mean,
            std::sqrt(hvar / n),
            static_cast<double>(n) / tallest,
            mad};
}

// ---- flag voting over the published condition table ------------------------
// The 10x5 table transcribed literally; 1 = row's first class, 2 = second.
inline const std::array<std::array<int, 5>, 10>& condition_table() {
    static const std::array<std::array<int, 5>, 10> table = {{
        {1, 2, 0, 0, 0}, // Net 1  AB
        {1, 0, 2, 0, 0}, // Net 2  AC
        {1, 0, 0, 2, 0}, // Net 3  AD
        {1, 0, 0, 0, 2}, // Net 4  AE
        {0, 1, 2, 0, 0}, // Net 5  BC
        {0, 1, 0, 2, 0}, // Net 6  BD
        {0, 1, 0, 0, 2}, // Net 7  BE
        {0, 0, 1, 2, 0}, // Net 8  CD
        {0, 0, 1, 0, 2}, // Net 9  CE
        {0, 0, 0, 1, 2}, // Net 10 DE
    }};
    return table;
}

// winners[r] is 1 or 2. Returns FA..FE by scanning the table per class.
inline std::array<int, 5> brute_force_flags(const std::array<int, 10>& winners) {
    std::array<int, 5> flags{};
    for (int cls = 0; cls < 5; ++cls)
        for (int net = 0; net < 10; ++net)
            if (condition_table()[net][cls] == winners[net]) ++flags[cls];
    return flags;
}

// argmax with the documented tie rule (scores then lower index); all
// winning scores equal here, so ties fall to the lower index.
inline int brute_force_argmax(const std::array<int, 5>& flags) {
    int best = 0;
    for (int c = 1; c < 5; ++c)
        if (flags[c] > flags[best]) best = c;
    return best;
}

} // namespace oracle
