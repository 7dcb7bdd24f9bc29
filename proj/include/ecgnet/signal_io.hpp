#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ecgnet {

// A uniformly sampled single-lead ECG voltage sequence (millivolts).
// Immutable once constructed; safe to share between threads.
struct EcgRecord {
    std::vector<double> samples;                 // mV
    double fs = 0.0;                             // Hz, > 0
    std::string name;
    std::optional<std::vector<double>> annotations; // ground-truth beat times, seconds, strictly increasing

    double duration_s() const {
        return fs > 0 ? static_cast<double>(samples.size()) / fs : 0.0;
    }
};

struct SegmentSet {
    std::vector<EcgRecord> segments;
    double window_s = 0.0;
    double hop_s = 0.0;
    std::string parent;
};

// Result of synthesize_ecg: the record plus the exact template R-apex times.
struct SyntheticEcg {
    EcgRecord record;
    std::vector<double> truth_r_times; // seconds
};

// ---- CSV form ---------------------------------------------------------
// Optional first line `# fs=<float>`; one sample (mV) per line; LF ends.
EcgRecord read_csv_record(const std::string& path,
                          std::optional<double> fs_override = std::nullopt);
void write_csv_record(const EcgRecord& record, const std::string& path);

// Annotation sidecar: beat times in seconds, one per line.
std::vector<double> read_annotations(const std::string& path);
void write_annotations(const std::vector<double>& times, const std::string& path);

// ---- WFDB format 212 --------------------------------------------------
// Reads the first signal of a WFDB record stored in format 212
// (two 12-bit two's-complement samples per 3 bytes). Samples are converted
// to mV as (raw - baseline) / gain.
EcgRecord read_wfdb_record(const std::string& header_path);

// Raw 12-bit packing, exposed for round-trip checks and test fixtures.
std::vector<int> decode_wfdb_212(const std::vector<std::uint8_t>& bytes,
                                 std::size_t n_samples);
std::vector<std::uint8_t> encode_wfdb_212(const std::vector<int>& samples);

// ---- Transformations --------------------------------------------------
// Local cubic (Catmull-Rom) interpolation onto a uniform endpoint-inclusive
// grid at target_fs.
EcgRecord resample(const EcgRecord& record, double target_fs);

// Deterministic synthetic ECG at 200 Hz: repeating P/QRS/T template of
// Gaussian bumps plus additive white noise of sd `noise_sd` (mV).
SyntheticEcg synthesize_ecg(double bpm, double duration_s, double noise_sd,
                            std::uint64_t seed);

// Fixed-length windows of `window_s` seconds every `hop_s` seconds; the tail
// shorter than one window is discarded. Intersecting annotations are
// re-based to each segment's start.
SegmentSet segment(const EcgRecord& record, double window_s, double hop_s);

} // namespace ecgnet
