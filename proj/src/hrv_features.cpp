#include "ecgnet/hrv_features.hpp"

#include "ecgnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace ecgnet {

namespace {

constexpr double kRrMin = 0.2; // seconds
constexpr double kRrMax = 4.0;
constexpr double kTriBinWidth = 1.0 / 128.0; // 7.8125 ms histogram bins

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// population (n) standard deviation
double sd_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size()));
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

RrSeries rr_intervals(const std::vector<double>& peak_times) {
    if (peak_times.size() < 2)
        throw DataError("rr_intervals needs at least 2 peaks");
    RrSeries rr;
    rr.values.reserve(peak_times.size() - 1);
    // bounds take a small tolerance so a 0.2 s interval computed from float
    // peak times survives cleaning
    for (std::size_t i = 0; i + 1 < peak_times.size(); ++i) {
        const double v = peak_times[i + 1] - peak_times[i];
        if (v >= kRrMin - 1e-9 && v <= kRrMax + 1e-9)
            rr.values.push_back(v);
        else
            ++rr.removed_count;
    }
    return rr;
}

RrSeries rr_intervals(const RPeakSeries& peaks) {
    return rr_intervals(peaks.times);
}

FeatureVector extract_features(const RrSeries& rr) {
    const std::vector<double>& v = rr.values;
    if (v.size() < 30)
        throw DataError("feature extraction needs at least 30 RR intervals, got " +
                        std::to_string(v.size()));

    std::vector<double> diffs(v.size() - 1);
    for (std::size_t i = 0; i + 1 < v.size(); ++i) diffs[i] = v[i + 1] - v[i];

    const double mean_rr = mean_of(v);
    const double sdnn = sd_of(v);

    double rmssd_acc = 0.0;
    std::size_t nn50 = 0;
    for (double d : diffs) {
        rmssd_acc += d * d;
        if (std::fabs(d) > 0.050) ++nn50;
    }
    const double rmssd = std::sqrt(rmssd_acc / static_cast<double>(diffs.size()));

    const double min_rr = *std::min_element(v.begin(), v.end());
    const double max_rr = *std::max_element(v.begin(), v.end());

    std::vector<double> hr(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) hr[i] = 60.0 / v[i];

    // triangular index: total count over the tallest 7.8125 ms histogram bin
    std::map<long, std::size_t> hist;
    for (double x : v) ++hist[static_cast<long>(std::floor(x / kTriBinWidth))];
    std::size_t tallest = 0;
    for (const auto& [bin, count] : hist) tallest = std::max(tallest, count);

    const double median_rr = median_of(v);
    std::vector<double> abs_dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        abs_dev[i] = std::fabs(v[i] - median_rr);

    FeatureVector f;
    f[0] = mean_rr;
    f[1] = median_rr;
    f[2] = sdnn;
    f[3] = rmssd;
    f[4] = sd_of(diffs);
    f[5] = static_cast<double>(nn50);
    f[6] = 100.0 * static_cast<double>(nn50) / static_cast<double>(diffs.size());
    f[7] = min_rr;
    f[8] = max_rr;
    f[9] = max_rr - min_rr;
    f[10] = sdnn / mean_rr;
    f[11] = 60.0 / mean_rr;
    f[12] = sd_of(hr);
    f[13] = static_cast<double>(v.size()) / static_cast<double>(tallest);
    f[14] = median_of(abs_dev);
    return f;
}

FeatureMatrix build_matrix(const std::vector<FeatureVector>& vectors,
                           const std::vector<int>& labels,
                           const std::vector<std::string>& class_names) {
    if (vectors.size() != labels.size())
        throw DataError("row/label count mismatch: " +
                        std::to_string(vectors.size()) + " vs " +
                        std::to_string(labels.size()));
    for (int l : labels)
        if (l < 0 || static_cast<std::size_t>(l) >= class_names.size())
            throw DataError("label out of range: " + std::to_string(l));
    FeatureMatrix m;
    m.rows = vectors;
    m.labels = labels;
    m.class_names = class_names;
    return m;
}

Normalizer fit_normalizer(const FeatureMatrix& train) {
    if (train.empty()) throw DataError("cannot fit normalizer on empty matrix");
    Normalizer nz;
    const auto n = static_cast<double>(train.rows.size());
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        double sum = 0.0;
        for (const auto& r : train.rows) sum += r[j];
        nz.mean[j] = sum / n;
        double acc = 0.0;
        for (const auto& r : train.rows) {
            const double d = r[j] - nz.mean[j];
            acc += d * d;
        }
        const double sd = std::sqrt(acc / n);
        nz.sd[j] = sd > 0.0 ? sd : 1.0;
    }
    return nz;
}

FeatureMatrix apply_normalizer(const Normalizer& nz, const FeatureMatrix& matrix) {
    FeatureMatrix out = matrix;
    for (auto& r : out.rows) r = nz.apply(r);
    return out;
}

void write_feature_csv(const FeatureMatrix& matrix, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "label";
    for (std::size_t j = 1; j <= kFeatureCount; ++j) {
        char col[8];
        std::snprintf(col, sizeof(col), ",f%02zu", j);
        out << col;
    }
    out << "\n";
    char buf[32];
    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
        out << matrix.labels[i];
        for (double v : matrix.rows[i]) {
            std::snprintf(buf, sizeof(buf), ",%.17g", v);
            out << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

FeatureMatrix read_feature_csv(const std::string& path,
                               const std::vector<std::string>& class_names) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line))
        throw FormatError(path + ": empty feature file");
    {
        std::ostringstream expected;
        expected << "label";
        for (std::size_t j = 1; j <= kFeatureCount; ++j) {
            char col[8];
            std::snprintf(col, sizeof(col), ",f%02zu", j);
            expected << col;
        }
        std::string got = line;
        if (!got.empty() && got.back() == '\r') got.pop_back();
        if (got != expected.str())
            throw FormatError(path + ": unexpected header '" + line +
                              "' (feature order version is " + kFeatureVersion + ")");
    }

    FeatureMatrix m;
    m.class_names = class_names;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ','))
            throw FormatError(path + ":" + std::to_string(line_no) + ": bad row");
        int label = 0;
        try {
            label = std::stoi(cell);
        } catch (...) {
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": bad label '" + cell + "'");
        }
        if (label < 0 || static_cast<std::size_t>(label) >= class_names.size())
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": label out of range: " + std::to_string(label));
        FeatureVector f;
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            if (!std::getline(row, cell, ','))
                throw FormatError(path + ":" + std::to_string(line_no) +
                                  ": expected 15 feature columns");
            try {
                f[j] = std::stod(cell);
            } catch (...) {
                throw FormatError(path + ":" + std::to_string(line_no) +
                                  ": non-numeric feature '" + cell + "'");
            }
        }
        m.rows.push_back(f);
        m.labels.push_back(label);
    }
    return m;
}

} // namespace ecgnet
