#pragma once

#include "ecgnet/qrs_detector.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace ecgnet {

// Versioned 15-slot time-domain feature order. Extraction, training, and
// inference all pin this tag; model files refuse a mismatch.
inline constexpr const char* kFeatureVersion = "hrv15-v1";
inline constexpr std::size_t kFeatureCount = 15;

// Slot layout (RR in seconds, HR in bpm, population-n standard deviations):
//   f01 meanRR   f02 medianRR  f03 SDNN    f04 RMSSD   f05 SDSD
//   f06 NN50     f07 pNN50     f08 minRR   f09 maxRR   f10 rangeRR
//   f11 CV       f12 meanHR    f13 sdHR    f14 HRV triangular index
//   f15 MAD of RR
inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "meanRR", "medianRR", "SDNN",  "RMSSD",  "SDSD",
    "NN50",   "pNN50",    "minRR", "maxRR",  "rangeRR",
    "CV",     "meanHR",   "sdHR",  "triIndex", "MAD"};

using FeatureVector = std::array<double, kFeatureCount>;

// Successive R-peak differences after physiological cleaning.
struct RrSeries {
    std::vector<double> values;    // seconds, each in (0.2, 4.0)
    std::size_t removed_count = 0; // intervals dropped by cleaning
};

struct FeatureMatrix {
    std::vector<FeatureVector> rows;
    std::vector<int> labels;              // class index per row, < class_names.size()
    std::vector<std::string> class_names; // 5 labels for the full problem

    std::size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
};

// Per-feature z-score statistics, fitted on training rows only.
struct Normalizer {
    std::array<double, kFeatureCount> mean{};
    std::array<double, kFeatureCount> sd = identity_sd(); // constant features get sd := 1

    static std::array<double, kFeatureCount> identity_sd() {
        std::array<double, kFeatureCount> s;
        s.fill(1.0);
        return s;
    }

    FeatureVector apply(const FeatureVector& x) const {
        FeatureVector out;
        for (std::size_t i = 0; i < kFeatureCount; ++i)
            out[i] = (x[i] - mean[i]) / sd[i];
        return out;
    }
};

// rr(i) = r(i+1) - r(i); intervals outside (0.2, 4.0) s are removed.
RrSeries rr_intervals(const std::vector<double>& peak_times);
RrSeries rr_intervals(const RPeakSeries& peaks);

// The 15 features in the documented order. Requires >= 30 intervals.
FeatureVector extract_features(const RrSeries& rr);

FeatureMatrix build_matrix(const std::vector<FeatureVector>& vectors,
                           const std::vector<int>& labels,
                           const std::vector<std::string>& class_names);

Normalizer fit_normalizer(const FeatureMatrix& train);
FeatureMatrix apply_normalizer(const Normalizer& nz, const FeatureMatrix& matrix);

// Feature export/import: CSV with header `label,f01..f15`.
void write_feature_csv(const FeatureMatrix& matrix, const std::string& path);
FeatureMatrix read_feature_csv(const std::string& path,
                               const std::vector<std::string>& class_names);

} // namespace ecgnet
