#include "ecgnet/commands.hpp"

#include "ecgnet/errors.hpp"
#include "ecgnet/hrv_features.hpp"
#include "ecgnet/qrs_detector.hpp"
#include "ecgnet/rng.hpp"
#include "ecgnet/signal_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>

namespace ecgnet::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kCanonicalFs = 200.0;

EcgRecord load_record(const std::string& path, std::optional<double> fs) {
    EcgRecord rec;
    if (fs::path(path).extension() == ".hea")
        rec = read_wfdb_record(path);
    else
        rec = read_csv_record(path, fs);
    if (rec.fs != kCanonicalFs) rec = resample(rec, kCanonicalFs);
    return rec;
}

std::vector<std::string> class_names_or_default(const std::vector<std::string>& names) {
    if (names.empty()) return ClassSet::default_set().names;
    if (names.size() != kNumClasses)
        throw DataError("exactly 5 class names are required");
    return names;
}

int resolve_label(const std::string& token,
                  const std::vector<std::string>& class_names) {
    char* end = nullptr;
    const long v = std::strtol(token.c_str(), &end, 10);
    if (end != token.c_str() && *end == '\0') {
        if (v < 0 || v >= static_cast<long>(class_names.size()))
            throw DataError("label index out of range: " + token);
        return static_cast<int>(v);
    }
    const auto it = std::find(class_names.begin(), class_names.end(), token);
    if (it == class_names.end())
        throw DataError("unknown class label '" + token + "'");
    return static_cast<int>(it - class_names.begin());
}

std::string artifact_format(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
        return j.at("format").get<std::string>();
    } catch (const json::exception&) {
        throw FormatError(path + ": not an ecgnet artifact");
    }
}

const std::vector<std::string>& canonical_kinds() {
    static const std::vector<std::string> kinds = {"cascade", "feedforward",
                                                   "fit", "pattern"};
    return kinds;
}

} // namespace

int run_detect(const DetectOptions& opt, std::ostream& out) {
    if (opt.inputs.empty()) throw DataError("detect needs at least one input");
    if (!opt.annotations.empty() && opt.inputs.size() != 1)
        throw DataError("--ann applies to a single input");

    fs::create_directories(opt.out_dir);
    const bool trace_is_dir = opt.inputs.size() > 1 || fs::is_directory(opt.trace);
    if (!opt.trace.empty() && trace_is_dir) fs::create_directories(opt.trace);

    for (const std::string& input : opt.inputs) {
        const EcgRecord rec = load_record(input, opt.fs);
        const DetectionResult det = detect_r_peaks(rec);

        const auto peaks_path =
            fs::path(opt.out_dir) / (fs::path(input).stem().string() + ".peaks.csv");
        write_annotations(det.peaks.times, peaks_path.string());
        out << rec.name << ": " << det.peaks.size() << " peaks -> "
            << peaks_path.string() << "\n";

        if (!opt.trace.empty()) {
            const auto trace_path =
                trace_is_dir
                    ? fs::path(opt.trace) / (fs::path(input).stem().string() + ".trace.csv")
                    : fs::path(opt.trace);
            write_stage_trace(det.trace, det.peaks, trace_path.string());
            out << rec.name << ": trace -> " << trace_path.string() << "\n";
        }

        if (!opt.annotations.empty()) {
            const std::vector<double> truth = read_annotations(opt.annotations);
            const MatchStats m = match_beats(truth, det.peaks.times, 0.040);
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "%s: sensitivity %.4f, positive predictivity %.4f "
                          "(TP %zu FN %zu FP %zu)\n",
                          rec.name.c_str(), m.sensitivity,
                          m.positive_predictivity, m.true_positives,
                          m.false_negatives, m.false_positives);
            out << buf;
        }
    }
    return kExitOk;
}

int run_features(const FeaturesOptions& opt, std::ostream& out) {
    if (opt.inputs.empty()) throw DataError("features needs labeled inputs");
    const std::vector<std::string> class_names =
        class_names_or_default(opt.class_names);
    const double hop = opt.hop_s > 0 ? opt.hop_s : opt.window_s;

    std::vector<FeatureVector> rows;
    std::vector<int> labels;
    for (const LabeledInput& li : opt.inputs) {
        const int label = resolve_label(li.label, class_names);
        const EcgRecord rec = load_record(li.path, opt.fs);

        SegmentSet set;
        try {
            set = segment(rec, opt.window_s, hop);
        } catch (const DataError& e) {
            out << "rejected " << rec.name << ": " << e.what() << "\n";
            continue;
        }
        for (const EcgRecord& seg : set.segments) {
            try {
                const DetectionResult det = detect_r_peaks(seg);
                const RrSeries rr = rr_intervals(det.peaks);
                rows.push_back(extract_features(rr));
                labels.push_back(label);
                if (rr.removed_count > 0)
                    out << seg.name << ": cleaned " << rr.removed_count
                        << " out-of-range RR intervals\n";
            } catch (const DataError& e) {
                out << "rejected " << seg.name << ": " << e.what() << "\n";
            }
        }
    }
    if (rows.empty()) throw DataError("no segments produced usable features");

    const FeatureMatrix matrix = build_matrix(rows, labels, class_names);
    write_feature_csv(matrix, opt.out);
    out << "wrote " << matrix.size() << " feature rows -> " << opt.out << "\n";
    return kExitOk;
}

int run_train(const TrainOptions& opt, std::ostream& out) {
    const std::vector<std::string> class_names =
        class_names_or_default(opt.class_names);
    const FeatureMatrix train = read_feature_csv(opt.features_csv, class_names);

    TrainConfig cfg;
    cfg.kind = topology_kind_from_string(opt.kind);
    cfg.hidden = opt.hidden;
    cfg.scg.max_iter = opt.max_iter;

    fs::create_directories(opt.out_dir);
    if (opt.mode == "pairwise") {
        std::vector<TrainingHistory> histories;
        const PairNetBank bank = train_bank(train, cfg, opt.seed, &histories);
        const auto manifest =
            fs::path(opt.out_dir) / ("bank_" + opt.kind + ".json");
        save_bank(bank, manifest.string());

        const auto hist_path =
            fs::path(opt.out_dir) / ("bank_" + opt.kind + "_history.csv");
        std::ofstream hist(hist_path);
        if (!hist) throw IoError("cannot write '" + hist_path.string() + "'");
        hist << "net,iter,loss\n";
        char buf[96];
        for (std::size_t r = 0; r < histories.size(); ++r)
            for (std::size_t i = 0; i < histories[r].loss.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%zu,%zu,%.17g\n", r + 1, i,
                              histories[r].loss[i]);
                hist << buf;
            }
        out << "trained 10 pair nets (" << opt.kind << ", seed " << opt.seed
            << ") -> " << manifest.string() << "\n";
    } else if (opt.mode == "multiclass") {
        TrainingHistory history;
        const Mlp net = train_multiclass_baseline(train, cfg, opt.seed, &history);
        const auto model_path =
            fs::path(opt.out_dir) / ("model_" + opt.kind + ".json");
        save_model(net, model_path.string());
        write_history_csv(history,
                          (fs::path(opt.out_dir) /
                           ("model_" + opt.kind + "_history.csv")).string());
        out << "trained multiclass net (" << opt.kind << ", seed " << opt.seed
            << ", final loss " << net.final_loss << ") -> "
            << model_path.string() << "\n";
    } else {
        throw DataError("unknown train mode '" + opt.mode +
                        "' (pairwise | multiclass)");
    }
    return kExitOk;
}

int run_evaluate(const EvaluateOptions& opt, std::ostream& out) {
    if (opt.models.empty()) throw DataError("evaluate needs at least one model");
    const std::vector<std::string> class_names =
        class_names_or_default(opt.class_names);
    const FeatureMatrix test = read_feature_csv(opt.test_csv, class_names);

    std::vector<Mlp> models;
    std::vector<PairNetBank> banks;
    std::vector<std::pair<bool, std::size_t>> order; // is_bank, index
    for (const std::string& path : opt.models) {
        const std::string format = artifact_format(path);
        if (format == "ecgnet-model") {
            models.push_back(load_model(path));
            order.emplace_back(false, models.size() - 1);
        } else if (format == "ecgnet-bank") {
            banks.push_back(load_bank(path));
            order.emplace_back(true, banks.size() - 1);
        } else {
            throw FormatError(path + ": unknown artifact format '" + format + "'");
        }
    }

    if (!opt.out_dir.empty()) fs::create_directories(opt.out_dir);
    auto mirror_to_file = [&](const std::string& name, const std::string& text) {
        if (opt.out_dir.empty()) return;
        std::ofstream f(fs::path(opt.out_dir) / name);
        if (!f) throw IoError("cannot write into '" + opt.out_dir + "'");
        f << text;
    };

    if (opt.table == "pairwise") {
        std::vector<const PairNetBank*> bank_ptrs;
        for (const auto& [is_bank, idx] : order) {
            if (!is_bank)
                throw DataError("--table pairwise expects bank manifests only");
            bank_ptrs.push_back(&banks[idx]);
        }
        const PairwiseGrid grid = pairwise_grid(bank_ptrs, test);
        const std::string table = render_pairwise_table(grid);
        out << table;
        mirror_to_file("pairwise.txt", table);
        if (!opt.out_dir.empty()) {
            std::ostringstream csv;
            csv << "row,kind,accuracy\n";
            for (std::size_t r = 0; r < grid.row_labels.size(); ++r)
                for (std::size_t k = 0; k < grid.kind_names.size(); ++k)
                    csv << '"' << grid.row_labels[r] << '"' << ','
                        << grid.kind_names[k] << ',' << grid.cells[r][k] << "\n";
            mirror_to_file("pairwise.csv", csv.str());
        }
    } else if (opt.table == "comparison") {
        // pair one baseline and one bank per topology kind
        std::vector<const Mlp*> base_ptrs;
        std::vector<const PairNetBank*> bank_ptrs;
        for (const std::string& kind : canonical_kinds()) {
            const Mlp* base = nullptr;
            const PairNetBank* bank = nullptr;
            for (const Mlp& m : models)
                if (to_string(m.topology.kind) == kind) base = &m;
            for (const PairNetBank& b : banks)
                if (to_string(b.kind) == kind) bank = &b;
            if (!base && !bank) continue;
            if (!base || !bank)
                throw DataError("comparison table needs both a multiclass model "
                                "and a bank for kind '" + kind + "'");
            base_ptrs.push_back(base);
            bank_ptrs.push_back(bank);
        }
        const std::string table =
            render_comparison_table(comparison_grid(base_ptrs, bank_ptrs, test));
        out << table;
        mirror_to_file("comparison.txt", table);
    } else if (opt.table.empty()) {
        std::ostringstream report_text, per_class;
        per_class << "artifact,kind,class,accuracy\n";
        for (std::size_t i = 0; i < order.size(); ++i) {
            const auto& [is_bank, idx] = order[i];
            EvalReport report = is_bank ? evaluate_bank(banks[idx], test)
                                        : evaluate_multiclass(models[idx], test);
            report.artifact = opt.models[i];
            report_text << render_report(report);
            if (i + 1 < order.size()) report_text << "\n";
            for (std::size_t c = 0; c < kNumClasses; ++c)
                per_class << '"' << report.artifact << "\"," << report.kind << ",\""
                          << class_names[c] << "\"," << report.per_class_accuracy[c]
                          << "\n";
        }
        out << report_text.str();
        mirror_to_file("report.txt", report_text.str());
        mirror_to_file("per_class.csv", per_class.str());
    } else {
        throw DataError("unknown table '" + opt.table + "' (pairwise | comparison)");
    }
    return kExitOk;
}

int run_classify(const ClassifyOptions& opt, std::ostream& out) {
    const std::vector<std::string> class_names =
        class_names_or_default(opt.class_names);
    const FeatureMatrix rows = read_feature_csv(opt.features_csv, class_names);
    if (rows.empty()) throw DataError("no feature rows to classify");

    std::ostringstream text;
    const std::string format = artifact_format(opt.model);
    if (format == "ecgnet-bank") {
        const PairNetBank bank = load_bank(opt.model);
        text << "row,label,predicted,predicted_name,FA,FB,FC,FD,FE,tie_broken\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Decision d = classify(bank, rows.rows[i]);
            text << i << "," << rows.labels[i] << "," << d.class_index << ","
                 << bank.classes.names[static_cast<std::size_t>(d.class_index)];
            for (int f : d.flags.flags) text << "," << f;
            text << "," << (d.tie_broken ? 1 : 0) << "\n";
        }
    } else if (format == "ecgnet-model") {
        const Mlp net = load_model(opt.model);
        text << "row,label,predicted,predicted_name\n";
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Prediction p = predict(net, rows.rows[i]);
            text << i << "," << rows.labels[i] << "," << p.class_index << ","
                 << net.class_names[static_cast<std::size_t>(p.class_index)] << "\n";
        }
    } else {
        throw FormatError(opt.model + ": unknown artifact format '" + format + "'");
    }
    out << text.str();
    if (!opt.out_dir.empty()) {
        fs::create_directories(opt.out_dir);
        std::ofstream f(fs::path(opt.out_dir) / "predictions.csv");
        if (!f) throw IoError("cannot write into '" + opt.out_dir + "'");
        f << text.str();
    }
    return kExitOk;
}

int run_compare(const CompareOptions& opt, std::ostream& out) {
    const std::vector<std::string> class_names =
        class_names_or_default(opt.class_names);
    const FeatureMatrix train = read_feature_csv(opt.train_csv, class_names);
    const FeatureMatrix test = read_feature_csv(opt.test_csv, class_names);

    std::vector<std::string> kinds =
        opt.kinds.empty() ? canonical_kinds() : opt.kinds;

    struct Artifact {
        Mlp baseline;
        PairNetBank bank;
    };
    std::vector<Artifact> artifacts(kinds.size());

    // one deterministic seed per artifact, so concurrent and sequential
    // schedules produce identical results
    auto train_one = [&](std::size_t k) {
        TrainConfig cfg;
        cfg.kind = topology_kind_from_string(kinds[k]);
        cfg.scg.max_iter = opt.max_iter;
        artifacts[k].baseline = train_multiclass_baseline(
            train, cfg, derive_seed(opt.seed, 2 * k));
        artifacts[k].bank = train_bank(train, cfg, derive_seed(opt.seed, 2 * k + 1));
    };

    if (opt.sequential) {
        for (std::size_t k = 0; k < kinds.size(); ++k) train_one(k);
    } else {
        std::vector<std::future<void>> jobs;
        for (std::size_t k = 0; k < kinds.size(); ++k)
            jobs.push_back(std::async(std::launch::async, train_one, k));
        for (auto& j : jobs) j.get();
    }

    std::vector<const Mlp*> base_ptrs;
    std::vector<const PairNetBank*> bank_ptrs;
    for (const Artifact& a : artifacts) {
        base_ptrs.push_back(&a.baseline);
        bank_ptrs.push_back(&a.bank);
    }
    const std::string table =
        render_comparison_table(comparison_grid(base_ptrs, bank_ptrs, test));
    out << table;
    out << "config: seed=" << opt.seed << " kinds=";
    for (std::size_t k = 0; k < kinds.size(); ++k)
        out << (k ? "," : "") << kinds[k];
    out << " max_iter=" << opt.max_iter << " features=" << kFeatureVersion << "\n";

    if (!opt.out_dir.empty()) {
        fs::create_directories(opt.out_dir);
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            save_model(artifacts[k].baseline,
                       (fs::path(opt.out_dir) / ("model_" + kinds[k] + ".json")).string());
            save_bank(artifacts[k].bank,
                      (fs::path(opt.out_dir) / ("bank_" + kinds[k] + ".json")).string());
        }
        std::ofstream tf(fs::path(opt.out_dir) / "comparison.txt");
        if (!tf) throw IoError("cannot write comparison table");
        tf << table;
        out << "artifacts -> " << opt.out_dir << "\n";
    }
    return kExitOk;
}

int exit_code_for_current_exception() {
    try {
        throw;
    } catch (const IoError&) {
        return kExitIo;
    } catch (const FormatError&) {
        return kExitFormat;
    } catch (const DataError&) {
        return kExitData;
    } catch (...) {
        return kExitUsage;
    }
}

} // namespace ecgnet::cli
