#include "ecgnet/signal_io.hpp"

#include "ecgnet/errors.hpp"
#include "ecgnet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ecgnet {

namespace {

std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

bool parse_double_strict(const std::string& s, double& out) {
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    return *end == '\0';
}

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return c == ' ' || c == '\t' || c == '\r';
    });
}

} // namespace

// ---- CSV form ---------------------------------------------------------

EcgRecord read_csv_record(const std::string& path,
                          std::optional<double> fs_override) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    EcgRecord rec;
    rec.name = std::filesystem::path(path).stem().string();

    std::optional<double> header_fs;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (first && line.rfind("#", 0) == 0) {
            first = false;
            auto pos = line.find("fs=");
            if (pos == std::string::npos)
                throw FormatError(path + ":1: header line must be '# fs=<float>'");
            double fs = 0;
            if (!parse_double_strict(line.substr(pos + 3), fs) || fs <= 0)
                throw FormatError(path + ":1: bad sampling rate in header");
            header_fs = fs;
            continue;
        }
        first = false;
        if (is_blank(line)) continue;
        double v = 0;
        if (!parse_double_strict(line, v))
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": non-numeric sample '" + line + "'");
        rec.samples.push_back(v);
    }

    if (rec.samples.empty()) throw DataError(path + ": no samples");
    if (fs_override) {
        rec.fs = *fs_override; // override wins over the header
    } else if (header_fs) {
        rec.fs = *header_fs;
    } else {
        throw FormatError(path + ": sampling rate unknown (no '# fs=' header "
                          "and no override)");
    }
    if (rec.fs <= 0) throw DataError(path + ": fs must be > 0");
    return rec;
}

void write_csv_record(const EcgRecord& record, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << "# fs=" << fmt_g17(record.fs) << "\n";
    for (double v : record.samples) out << fmt_g17(v) << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<double> read_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<double> times;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        double v = 0;
        if (!parse_double_strict(line, v))
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": non-numeric beat time");
        if (!times.empty() && v <= times.back())
            throw FormatError(path + ":" + std::to_string(line_no) +
                              ": beat times must be strictly increasing");
        times.push_back(v);
    }
    return times;
}

void write_annotations(const std::vector<double>& times,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (double t : times) out << fmt_g17(t) << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

// ---- WFDB format 212 --------------------------------------------------

std::vector<int> decode_wfdb_212(const std::vector<std::uint8_t>& bytes,
                                 std::size_t n_samples) {
    const std::size_t needed = (n_samples + 1) / 2 * 3;
    if (bytes.size() < needed)
        throw FormatError("truncated format-212 stream: need " +
                          std::to_string(needed) + " bytes, have " +
                          std::to_string(bytes.size()));
    std::vector<int> out;
    out.reserve(n_samples);
    for (std::size_t group = 0; out.size() < n_samples; ++group) {
        const std::uint8_t b0 = bytes[group * 3];
        const std::uint8_t b1 = bytes[group * 3 + 1];
        const std::uint8_t b2 = bytes[group * 3 + 2];
        int s0 = ((b1 & 0x0F) << 8) | b0;
        int s1 = ((b1 & 0xF0) << 4) | b2;
        if (s0 & 0x800) s0 -= 4096; // 12-bit two's complement
        if (s1 & 0x800) s1 -= 4096;
        out.push_back(s0);
        if (out.size() < n_samples) out.push_back(s1);
    }
    return out;
}

std::vector<std::uint8_t> encode_wfdb_212(const std::vector<int>& samples) {
    if (samples.size() % 2 != 0)
        throw DataError("format-212 encoding requires an even sample count");
    std::vector<std::uint8_t> bytes;
    bytes.reserve(samples.size() / 2 * 3);
    for (std::size_t i = 0; i < samples.size(); i += 2) {
        const int s0 = samples[i];
        const int s1 = samples[i + 1];
        if (s0 < -2048 || s0 > 2047 || s1 < -2048 || s1 > 2047)
            throw DataError("sample out of 12-bit range at index " +
                            std::to_string(i));
        const unsigned u0 = static_cast<unsigned>(s0) & 0xFFF;
        const unsigned u1 = static_cast<unsigned>(s1) & 0xFFF;
        bytes.push_back(static_cast<std::uint8_t>(u0 & 0xFF));
        bytes.push_back(static_cast<std::uint8_t>(((u0 >> 8) & 0x0F) |
                                                  (((u1 >> 8) & 0x0F) << 4)));
        bytes.push_back(static_cast<std::uint8_t>(u1 & 0xFF));
    }
    return bytes;
}

EcgRecord read_wfdb_record(const std::string& header_path) {
    std::ifstream in(header_path);
    if (!in) throw IoError("cannot open '" + header_path + "'");

    std::string line;
    // skip comment/blank lines before the record line
    do {
        if (!std::getline(in, line))
            throw FormatError(header_path + ": missing record line");
    } while (is_blank(line) || line[0] == '#');

    std::istringstream rec_line(line);
    std::string rec_name;
    long nsig = 0, nsamples = 0;
    double fs = 0;
    if (!(rec_line >> rec_name >> nsig >> fs >> nsamples))
        throw FormatError(header_path +
                          ": record line must be '<name> <nsig> <fs> <nsamples>'");
    if (nsig < 1 || fs <= 0 || nsamples < 0)
        throw FormatError(header_path + ": bad record line values");

    // first signal line: <file> 212 <gain>(<baseline>)/...
    do {
        if (!std::getline(in, line))
            throw FormatError(header_path + ": missing signal line");
    } while (is_blank(line) || line[0] == '#');

    std::istringstream sig_line(line);
    std::string dat_name, fmt, gain_spec;
    if (!(sig_line >> dat_name >> fmt >> gain_spec))
        throw FormatError(header_path + ": bad signal line '" + line + "'");
    if (fmt != "212")
        throw FormatError(header_path + ": unsupported storage format '" + fmt +
                          "' (only 212)");

    double gain = 0;
    int baseline = 0;
    {
        const char* p = gain_spec.c_str();
        char* end = nullptr;
        gain = std::strtod(p, &end);
        if (end == p)
            throw FormatError(header_path + ": bad gain '" + gain_spec + "'");
        if (*end == '(') {
            baseline = static_cast<int>(std::strtol(end + 1, &end, 10));
            if (*end != ')')
                throw FormatError(header_path + ": unterminated baseline in '" +
                                  gain_spec + "'");
        }
    }
    if (gain == 0)
        throw FormatError(header_path + ": gain must be nonzero");

    const auto dat_path =
        std::filesystem::path(header_path).parent_path() / dat_name;
    std::ifstream dat(dat_path, std::ios::binary);
    if (!dat) throw IoError("cannot open '" + dat_path.string() + "'");
    std::vector<std::uint8_t> bytes(
        (std::istreambuf_iterator<char>(dat)), std::istreambuf_iterator<char>());

    // format 212 interleaves one sample per signal per frame
    const std::size_t total = static_cast<std::size_t>(nsig) *
                              static_cast<std::size_t>(nsamples);
    const std::vector<int> raw = decode_wfdb_212(bytes, total);

    EcgRecord rec;
    rec.name = rec_name;
    rec.fs = fs;
    rec.samples.reserve(nsamples);
    for (long k = 0; k < nsamples; ++k)
        rec.samples.push_back((raw[static_cast<std::size_t>(k) * nsig] - baseline) /
                              gain);
    return rec;
}

// ---- Transformations --------------------------------------------------

EcgRecord resample(const EcgRecord& record, double target_fs) {
    if (target_fs <= 0) throw DataError("target_fs must be > 0");
    if (record.samples.size() < 2)
        throw DataError("resample needs at least 2 samples");
    if (record.fs == target_fs) return record;

    const std::size_t n = record.samples.size();
    const double duration = static_cast<double>(n - 1) / record.fs;
    const auto m =
        static_cast<std::size_t>(std::floor(duration * target_fs + 1e-9)) + 1;

    // local Catmull-Rom cubic with clamped edges; degenerates to linear on
    // 2-point records and keeps band-limited round-trip error well under the
    // 2%-of-range budget up to 0.2 * fs
    const std::vector<double>& x = record.samples;
    auto clamped = [&](long i) {
        if (i < 0) i = 0;
        if (i >= static_cast<long>(n)) i = static_cast<long>(n) - 1;
        return x[static_cast<std::size_t>(i)];
    };

    EcgRecord out;
    out.fs = target_fs;
    out.name = record.name;
    out.annotations = record.annotations;
    out.samples.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double pos = static_cast<double>(i) / target_fs * record.fs;
        auto i1 = static_cast<long>(pos);
        if (i1 >= static_cast<long>(n) - 1) i1 = static_cast<long>(n) - 2;
        const double u = pos - static_cast<double>(i1);
        const double p0 = clamped(i1 - 1);
        const double p1 = clamped(i1);
        const double p2 = clamped(i1 + 1);
        const double p3 = clamped(i1 + 2);
        out.samples[i] =
            0.5 * (2.0 * p1 + (-p0 + p2) * u +
                   (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u +
                   (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
    }
    return out;
}

SyntheticEcg synthesize_ecg(double bpm, double duration_s, double noise_sd,
                            std::uint64_t seed) {
    if (bpm < 30 || bpm > 220)
        throw DataError("bpm must be within [30, 220]");
    if (duration_s <= 0) throw DataError("duration must be > 0");

    constexpr double fs = 200.0;
    const auto n = static_cast<std::size_t>(std::llround(duration_s * fs));

    EcgRecord rec;
    rec.fs = fs;
    rec.samples.assign(n, 0.0);
    {
        std::ostringstream name;
        name << "synthetic_bpm" << bpm << "_seed" << seed;
        rec.name = name.str();
    }

    const double period = 60.0 / bpm;
    // P and T placement compresses at fast rates so waves stay inside the beat
    const double f = std::clamp(period, 0.45, 1.0);

    struct Bump {
        double amp, center, sigma;
    };
    const Bump bumps[] = {
        {0.15, -0.16 * f, 0.025 * f}, // P
        {-0.10, -0.025, 0.010},       // Q
        {1.00, 0.0, 0.012},           // R
        {-0.15, 0.025, 0.010},        // S
        {0.30, 0.22 * f, 0.045 * f},  // T
    };

    std::vector<double> truth;
    for (std::size_t k = 0;; ++k) {
        const double tc = period / 2 + static_cast<double>(k) * period;
        const auto r_idx = std::llround(tc * fs);
        if (r_idx >= static_cast<long long>(n)) break;
        truth.push_back(static_cast<double>(r_idx) / fs);
        const double r_time = static_cast<double>(r_idx) / fs;
        for (const auto& b : bumps) {
            const double c = r_time + b.center;
            const auto lo = std::max<long long>(0, std::llround((c - 4 * b.sigma) * fs));
            const auto hi = std::min<long long>(static_cast<long long>(n) - 1,
                                                std::llround((c + 4 * b.sigma) * fs));
            for (long long i = lo; i <= hi; ++i) {
                const double dt = static_cast<double>(i) / fs - c;
                rec.samples[static_cast<std::size_t>(i)] +=
                    b.amp * std::exp(-dt * dt / (2 * b.sigma * b.sigma));
            }
        }
    }

    if (noise_sd > 0) {
        CounterRng rng(seed);
        for (auto& s : rec.samples) s += noise_sd * rng.next_gaussian();
    }

    return {std::move(rec), std::move(truth)};
}

SegmentSet segment(const EcgRecord& record, double window_s, double hop_s) {
    if (window_s < 30) throw DataError("window must be at least 30 s");
    if (hop_s <= 0 || hop_s > window_s)
        throw DataError("hop must satisfy 0 < hop <= window");
    if (record.samples.empty()) throw DataError("empty record");
    if (record.fs <= 0) throw DataError("fs must be > 0");

    const auto win = static_cast<std::size_t>(std::llround(window_s * record.fs));
    const auto hop = static_cast<std::size_t>(std::llround(hop_s * record.fs));
    const std::size_t n = record.samples.size();
    if (n < win) throw DataError("record shorter than one window");

    SegmentSet set;
    set.window_s = window_s;
    set.hop_s = hop_s;
    set.parent = record.name;

    std::size_t index = 0;
    for (std::size_t start = 0; start + win <= n; start += hop, ++index) {
        EcgRecord seg;
        seg.fs = record.fs;
        seg.name = record.name + "[" + std::to_string(index) + "]";
        seg.samples.assign(record.samples.begin() + static_cast<long>(start),
                           record.samples.begin() + static_cast<long>(start + win));
        if (record.annotations) {
            const double t0 = static_cast<double>(start) / record.fs;
            const double t1 = static_cast<double>(start + win) / record.fs;
            std::vector<double> ann;
            for (double a : *record.annotations)
                if (a >= t0 && a < t1) ann.push_back(a - t0);
            seg.annotations = std::move(ann);
        }
        set.segments.push_back(std::move(seg));
    }
    return set;
}

} // namespace ecgnet
