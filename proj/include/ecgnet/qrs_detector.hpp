#pragma once

#include "ecgnet/signal_io.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace ecgnet {

// Per-stage outputs of the detection cascade, all aligned to the input
// length. Each filter runs in zero initial state, so stage k lags the raw
// signal by its group delay (samples):
struct StageTrace {
    std::vector<double> raw;
    std::vector<double> bandpassed;
    std::vector<double> derivative;
    std::vector<double> squared;
    std::vector<double> integrated;

    double bandpass_delay = 21.0;     // 5 (low-pass) + 16 (high-pass)
    double derivative_delay = 2.0;
    double integration_delay = 14.5;  // (width - 1) / 2 for width 30

    double total_delay() const {
        return bandpass_delay + derivative_delay + integration_delay;
    }
};

struct ThresholdSnapshot {
    double spki = 0.0;
    double npki = 0.0;
    double threshold1 = 0.0;
};

struct RPeakSeries {
    std::vector<double> times;         // seconds, strictly increasing
    std::vector<std::size_t> indices;  // sample positions in the 200 Hz record
    std::vector<ThresholdSnapshot> threshold_log; // one snapshot per peak

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }
};

struct DetectionResult {
    RPeakSeries peaks;
    StageTrace trace;
};

// Beat-matching counts against a ground-truth series.
struct MatchStats {
    std::size_t true_positives = 0;
    std::size_t false_negatives = 0;
    std::size_t false_positives = 0;
    double sensitivity = 0.0;          // TP / (TP + FN)
    double positive_predictivity = 0.0; // TP / (TP + FP)
};

// ---- Cascade stages (all expect the canonical 200 Hz rate) -------------
std::vector<double> band_pass(const std::vector<double>& x, double fs);
std::vector<double> derivative(const std::vector<double>& x);
std::vector<double> square(const std::vector<double>& x);
std::vector<double> moving_window_integrate(const std::vector<double>& x,
                                            int width = 30);

StageTrace compute_stage_trace(const std::vector<double>& x, double fs);

// Adaptive dual-threshold R-peak detection on the integrated signal, with
// T-wave rejection and RR-gap search-back. Peaks are localized back to the
// raw-signal maximum (group delay compensated).
DetectionResult detect_r_peaks(const EcgRecord& record);

// Greedy nearest matching within +/- tol_s.
MatchStats match_beats(const std::vector<double>& truth,
                       const std::vector<double>& detected, double tol_s);

// Trace export: CSV columns n,raw,bandpassed,derivative,squared,integrated,is_peak
void write_stage_trace(const StageTrace& trace, const RPeakSeries& peaks,
                       const std::string& path);

} // namespace ecgnet
