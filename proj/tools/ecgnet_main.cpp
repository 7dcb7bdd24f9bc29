#include "ecgnet/commands.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>

using namespace ecgnet::cli;

namespace {

ecgnet::cli::LabeledInput parse_labeled(const std::string& token) {
    const auto pos = token.rfind(':');
    if (pos == std::string::npos || pos == 0 || pos + 1 == token.size())
        throw CLI::ValidationError("inputs", "expected <path>:<label>, got '" +
                                                 token + "'");
    return {token.substr(0, pos), token.substr(pos + 1)};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ECG QRS detection, HRV features, and 5-class "
                 "pairwise-voting classification"};
    app.require_subcommand(1);
    app.set_config("--config", "", "flat key=value config file (flags win)");

    DetectOptions detect_opt;
    auto* detect = app.add_subcommand(
        "detect", "detect R peaks; writes one peak-time CSV per record");
    detect->add_option("inputs", detect_opt.inputs,
                       "ECG records (CSV or WFDB .hea)")
        ->required();
    double detect_fs = 0.0;
    detect->add_option("--fs", detect_fs, "sampling rate for headerless CSVs");
    detect->add_option("--out", detect_opt.out_dir, "output directory")
        ->capture_default_str();
    detect->add_option("--trace", detect_opt.trace,
                       "stage-trace CSV (file for one input, else directory)");
    detect->add_option("--ann", detect_opt.annotations,
                       "truth annotation sidecar; prints detection metrics");

    FeaturesOptions features_opt;
    std::vector<std::string> labeled_tokens;
    auto* features = app.add_subcommand(
        "features", "extract per-segment HRV feature rows from labeled records");
    features->add_option("inputs", labeled_tokens, "<path>:<label> pairs")
        ->required();
    features->add_option("--window", features_opt.window_s, "segment window (s)")
        ->capture_default_str();
    features->add_option("--hop", features_opt.hop_s,
                         "segment hop (s); defaults to the window");
    double features_fs = 0.0;
    features->add_option("--fs", features_fs, "sampling rate for headerless CSVs");
    features->add_option("--out", features_opt.out, "output feature CSV")
        ->capture_default_str();
    features->add_option("--classes", features_opt.class_names,
                         "5 class names, comma separated")
        ->delimiter(',');

    TrainOptions train_opt;
    auto* train = app.add_subcommand("train",
                                     "train a pairwise bank or a multiclass net");
    train->add_option("features", train_opt.features_csv, "training feature CSV")
        ->required();
    train->add_option("--mode", train_opt.mode, "pairwise | multiclass")
        ->capture_default_str();
    train->add_option("--kind", train_opt.kind,
                      "cascade | feedforward | fit | pattern")
        ->capture_default_str();
    train->add_option("--hidden", train_opt.hidden, "hidden layer sizes")
        ->delimiter(',');
    train->add_option("--seed", train_opt.seed, "training seed")
        ->capture_default_str();
    train->add_option("--max-iter", train_opt.max_iter, "SCG iteration cap")
        ->capture_default_str();
    train->add_option("--out", train_opt.out_dir, "output directory")
        ->capture_default_str();
    train->add_option("--classes", train_opt.class_names,
                      "5 class names, comma separated")
        ->delimiter(',');

    EvaluateOptions eval_opt;
    auto* evaluate = app.add_subcommand("evaluate",
                                        "score models/banks on a test CSV");
    evaluate->add_option("--model", eval_opt.models,
                         "model file or bank manifest (repeatable)")
        ->required();
    evaluate->add_option("test", eval_opt.test_csv, "test feature CSV")->required();
    evaluate->add_option("--table", eval_opt.table,
                         "pairwise | comparison (default: plain reports)");
    evaluate->add_option("--out", eval_opt.out_dir,
                         "directory for report/table text and plot CSVs");
    evaluate->add_option("--classes", eval_opt.class_names,
                         "5 class names, comma separated")
        ->delimiter(',');

    ClassifyOptions classify_opt;
    auto* classify = app.add_subcommand("classify",
                                        "classify feature rows with an artifact");
    classify->add_option("--model", classify_opt.model, "model file or bank manifest")
        ->required();
    classify->add_option("features", classify_opt.features_csv, "feature CSV")
        ->required();
    classify->add_option("--out", classify_opt.out_dir,
                         "directory for predictions.csv");
    classify->add_option("--classes", classify_opt.class_names,
                         "5 class names, comma separated")
        ->delimiter(',');

    CompareOptions compare_opt;
    auto* compare = app.add_subcommand(
        "compare", "train all kinds both ways and print the comparison table");
    compare->add_option("train", compare_opt.train_csv, "training feature CSV")
        ->required();
    compare->add_option("test", compare_opt.test_csv, "test feature CSV")
        ->required();
    compare->add_option("--kinds", compare_opt.kinds,
                        "topology kinds to include (default: all four)")
        ->delimiter(',');
    compare->add_option("--seed", compare_opt.seed, "master seed")
        ->capture_default_str();
    compare->add_option("--max-iter", compare_opt.max_iter, "SCG iteration cap")
        ->capture_default_str();
    compare->add_option("--out", compare_opt.out_dir,
                        "directory for the trained artifacts and table");
    compare->add_option("--classes", compare_opt.class_names,
                        "5 class names, comma separated")
        ->delimiter(',');
    compare->add_flag("--sequential", compare_opt.sequential,
                      "train artifacts one by one");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*detect) {
            if (detect->count("--fs") > 0) detect_opt.fs = detect_fs;
            return run_detect(detect_opt, std::cout);
        }
        if (*features) {
            for (const std::string& t : labeled_tokens)
                features_opt.inputs.push_back(parse_labeled(t));
            if (features->count("--fs") > 0) features_opt.fs = features_fs;
            return run_features(features_opt, std::cout);
        }
        if (*train) return run_train(train_opt, std::cout);
        if (*evaluate) return run_evaluate(eval_opt, std::cout);
        if (*classify) return run_classify(classify_opt, std::cout);
        if (*compare) return run_compare(compare_opt, std::cout);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for_current_exception();
    }
    return kExitUsage;
}
