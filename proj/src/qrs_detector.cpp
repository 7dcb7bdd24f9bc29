#include "ecgnet/qrs_detector.hpp"

#include "ecgnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace ecgnet {

namespace {

constexpr double kFs = 200.0;
constexpr int kRefractorySamples = 40;   // 200 ms
constexpr int kTWaveWindowSamples = 72;  // 360 ms
constexpr int kSlopeWindowSamples = 15;  // 75 ms of derivative history
constexpr int kLearnSamples = 400;       // 2 s threshold learning phase
constexpr int kWarmupSamples = 32;       // high-pass transient
constexpr int kLocalizeHalfWindow = 40;  // +/- samples around the fiducial

double at(const std::vector<double>& x, long i) {
    return (i >= 0 && i < static_cast<long>(x.size())) ? x[static_cast<std::size_t>(i)]
                                                       : 0.0;
}

} // namespace

std::vector<double> band_pass(const std::vector<double>& x, double fs) {
    if (fs != kFs)
        throw DataError("band_pass requires fs == 200 Hz (resample first)");

    const long n = static_cast<long>(x.size());
    // low-pass: y(n) = 2y(n-1) - y(n-2) + x(n) - 2x(n-6) + x(n-12)
    std::vector<double> lp(x.size(), 0.0);
    for (long i = 0; i < n; ++i)
        lp[i] = 2 * at(lp, i - 1) - at(lp, i - 2) + at(x, i) - 2 * at(x, i - 6) +
                at(x, i - 12);

    // high-pass: y(n) = 32 lp(n-16) - s(n), where s is the running 32-sample
    // sum s(n) = s(n-1) + lp(n) - lp(n-32). DC settles to zero after the
    // 32-sample transient.
    std::vector<double> hp(x.size(), 0.0);
    double running = 0.0;
    for (long i = 0; i < n; ++i) {
        running += at(lp, i) - at(lp, i - 32);
        hp[i] = 32 * at(lp, i - 16) - running;
    }
    return hp;
}

std::vector<double> derivative(const std::vector<double>& x) {
    if (x.size() < 5)
        throw DataError("derivative needs at least 5 samples");
    const long n = static_cast<long>(x.size());
    std::vector<double> y(x.size(), 0.0);
    for (long i = 0; i < n; ++i)
        y[i] = (2 * at(x, i) + at(x, i - 1) - at(x, i - 3) - 2 * at(x, i - 4)) / 8.0;
    return y;
}

std::vector<double> square(const std::vector<double>& x) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * x[i];
    return y;
}

std::vector<double> moving_window_integrate(const std::vector<double>& x,
                                            int width) {
    if (width <= 0) throw DataError("integration width must be positive");
    std::vector<double> y(x.size(), 0.0);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum += x[i];
        if (i >= static_cast<std::size_t>(width)) sum -= x[i - width];
        y[i] = sum / width;
    }
    return y;
}

StageTrace compute_stage_trace(const std::vector<double>& x, double fs) {
    StageTrace t;
    t.raw = x;
    t.bandpassed = band_pass(x, fs);
    t.derivative = derivative(t.bandpassed);
    t.squared = square(t.derivative);
    t.integrated = moving_window_integrate(t.squared, 30);
    return t;
}

namespace {

struct Candidate {
    long index = 0;   // fiducial position in the integrated signal
    double amp = 0.0; // integrated amplitude
    double slope = 0.0;
    bool accepted = false;
};

struct Accepted {
    long fiducial;
    double amp;
    ThresholdSnapshot snapshot;
};

// max |derivative| over the 75 ms leading up to the fiducial
double candidate_slope(const std::vector<double>& der, long i) {
    double best = 0.0;
    for (long k = std::max<long>(0, i - kSlopeWindowSamples); k <= i; ++k)
        best = std::max(best, std::fabs(der[static_cast<std::size_t>(k)]));
    return best;
}

} // namespace

DetectionResult detect_r_peaks(const EcgRecord& record) {
    if (record.fs != kFs)
        throw DataError("detect_r_peaks requires fs == 200 Hz (resample first)");
    const long n = static_cast<long>(record.samples.size());
    if (n < 5 * static_cast<long>(kFs))
        throw DataError("record too short: need at least 5 s for threshold learning");

    DetectionResult result;
    result.trace = compute_stage_trace(record.samples, record.fs);
    const std::vector<double>& mwi = result.trace.integrated;
    const std::vector<double>& der = result.trace.derivative;

    // learning phase: first 2 s (warm-up excluded), no peaks emitted here;
    // the detection sweep afterwards covers the full record
    double learn_max = 0.0, learn_sum = 0.0;
    long learn_count = 0;
    for (long i = kWarmupSamples; i < std::min<long>(kLearnSamples, n); ++i) {
        learn_max = std::max(learn_max, mwi[i]);
        learn_sum += mwi[i];
        ++learn_count;
    }
    double spki = 0.6 * learn_max;
    double npki = learn_count > 0 ? 0.3 * (learn_sum / learn_count) : 0.0;
    double threshold1 = npki + 0.25 * (spki - npki);

    // candidate peaks: local maxima of the integrated signal; a still-rising
    // tail also counts so a beat at the record edge is not lost
    std::vector<Candidate> cands;
    for (long i = 1; i + 1 < n; ++i) {
        if (mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1] && mwi[i] > 0.0)
            cands.push_back({i, mwi[i], candidate_slope(der, i), false});
    }
    if (n >= 2 && mwi[n - 1] > mwi[n - 2] && mwi[n - 1] > 0.0)
        cands.push_back({n - 1, mwi[n - 1], candidate_slope(der, n - 1), false});

    std::vector<Accepted> accepted;
    std::vector<double> rr_ring;   // last 8 RR intervals, samples
    double rr_average = 0.0;
    double last_slope = 0.0;

    auto push_rr = [&](double rr) {
        rr_ring.push_back(rr);
        if (rr_ring.size() > 8) rr_ring.erase(rr_ring.begin());
        rr_average = std::accumulate(rr_ring.begin(), rr_ring.end(), 0.0) /
                     static_cast<double>(rr_ring.size());
    };

    auto accept = [&](std::size_t cand_idx, bool searchback) {
        Candidate& c = cands[cand_idx];
        c.accepted = true;
        if (searchback)
            spki = 0.25 * c.amp + 0.75 * spki;
        else
            spki = 0.125 * c.amp + 0.875 * spki;
        threshold1 = npki + 0.25 * (spki - npki);
        if (!accepted.empty()) push_rr(static_cast<double>(c.index - accepted.back().fiducial));
        accepted.push_back({c.index, c.amp, {spki, npki, threshold1}});
        last_slope = c.slope;
    };

    for (std::size_t ci = 0; ci < cands.size(); ++ci) {
        Candidate& c = cands[ci];

        // search-back: the expected beat is overdue, re-scan the gap at half
        // threshold before judging the current candidate
        if (!accepted.empty() && !rr_ring.empty() &&
            static_cast<double>(c.index - accepted.back().fiducial) >
                1.66 * rr_average) {
            std::size_t best = cands.size();
            for (std::size_t k = 0; k < ci; ++k) {
                const Candidate& b = cands[k];
                if (b.accepted || b.index <= accepted.back().fiducial + kRefractorySamples)
                    continue;
                if (b.amp >= threshold1 / 2 &&
                    (best == cands.size() || b.amp > cands[best].amp))
                    best = k;
            }
            if (best != cands.size()) accept(best, true);
        }

        if (!accepted.empty()) {
            const long gap = c.index - accepted.back().fiducial;
            if (gap < kRefractorySamples) {
                // refractory collision: keep the larger integrated amplitude
                if (c.amp > accepted.back().amp) {
                    // retract the previous acceptance and redo it with this one
                    const double old_amp = accepted.back().amp;
                    spki = (spki - 0.125 * old_amp) / 0.875;
                    if (!rr_ring.empty() && accepted.size() > 1) {
                        rr_ring.pop_back();
                    }
                    accepted.pop_back();
                    if (!rr_ring.empty())
                        rr_average = std::accumulate(rr_ring.begin(), rr_ring.end(), 0.0) /
                                     static_cast<double>(rr_ring.size());
                    accept(ci, false);
                }
                continue;
            }
            if (gap < kTWaveWindowSamples && c.slope < 0.5 * last_slope) {
                // T wave: flat-slope candidate close behind the previous QRS
                npki = 0.125 * c.amp + 0.875 * npki;
                threshold1 = npki + 0.25 * (spki - npki);
                continue;
            }
        }

        if (c.amp > threshold1) {
            accept(ci, false);
        } else {
            npki = 0.125 * c.amp + 0.875 * npki;
            threshold1 = npki + 0.25 * (spki - npki);
        }
    }

    // localize each fiducial to the raw-signal maximum, compensating the
    // cascade group delay
    const long delay = std::lround(result.trace.total_delay());
    RPeakSeries& peaks = result.peaks;
    std::vector<double> peak_amps;
    for (const Accepted& a : accepted) {
        const long center = a.fiducial - delay;
        const long lo = std::max<long>(0, center - kLocalizeHalfWindow);
        const long hi = std::min<long>(n - 1, center + kLocalizeHalfWindow);
        if (lo > hi) continue;
        long best = lo;
        for (long i = lo + 1; i <= hi; ++i)
            if (record.samples[i] > record.samples[best]) best = i;

        // refractory spacing must also hold after localization
        if (!peaks.indices.empty() &&
            best - static_cast<long>(peaks.indices.back()) < kRefractorySamples) {
            if (a.amp > peak_amps.back()) {
                // rare localization collision: keep the larger integrated amplitude
                peaks.indices.back() = static_cast<std::size_t>(best);
                peaks.times.back() = static_cast<double>(best) / kFs;
                peaks.threshold_log.back() = a.snapshot;
                peak_amps.back() = a.amp;
            }
            continue;
        }
        peaks.indices.push_back(static_cast<std::size_t>(best));
        peaks.times.push_back(static_cast<double>(best) / kFs);
        peaks.threshold_log.push_back(a.snapshot);
        peak_amps.push_back(a.amp);
    }
    return result;
}

MatchStats match_beats(const std::vector<double>& truth,
                       const std::vector<double>& detected, double tol_s) {
    MatchStats s;
    std::vector<bool> used(detected.size(), false);
    for (double t : truth) {
        std::size_t best = detected.size();
        double best_err = tol_s;
        for (std::size_t i = 0; i < detected.size(); ++i) {
            if (used[i]) continue;
            const double err = std::fabs(detected[i] - t);
            if (err <= best_err) {
                best_err = err;
                best = i;
            }
        }
        if (best != detected.size()) {
            used[best] = true;
            ++s.true_positives;
        } else {
            ++s.false_negatives;
        }
    }
    s.false_positives = detected.size() - s.true_positives;
    s.sensitivity = truth.empty() ? 0.0
                                  : static_cast<double>(s.true_positives) /
                                        static_cast<double>(truth.size());
    s.positive_predictivity =
        detected.empty() ? 0.0
                         : static_cast<double>(s.true_positives) /
                               static_cast<double>(detected.size());
    return s;
}

void write_stage_trace(const StageTrace& trace, const RPeakSeries& peaks,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "n,raw,bandpassed,derivative,squared,integrated,is_peak\n";
    std::size_t next_peak = 0;
    char buf[192];
    for (std::size_t i = 0; i < trace.raw.size(); ++i) {
        int is_peak = 0;
        if (next_peak < peaks.indices.size() && peaks.indices[next_peak] == i) {
            is_peak = 1;
            ++next_peak;
        }
        std::snprintf(buf, sizeof(buf), "%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", i,
                      trace.raw[i], trace.bandpassed[i], trace.derivative[i],
                      trace.squared[i], trace.integrated[i], is_peak);
        out << buf;
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace ecgnet
