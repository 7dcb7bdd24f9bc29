#pragma once

#include "ecgnet/eval.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ecgnet::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitFormat = 3;
inline constexpr int kExitData = 4;

struct DetectOptions {
    std::vector<std::string> inputs; // CSV files or WFDB .hea headers
    std::optional<double> fs;        // sampling-rate override for bare CSVs
    std::string out_dir = ".";
    std::string trace;               // file (one input) or directory
    std::string annotations;         // truth sidecar, single input only
};

struct LabeledInput {
    std::string path;
    std::string label; // class index (0..4) or class name
};

struct FeaturesOptions {
    std::vector<LabeledInput> inputs;
    double window_s = 300.0;
    double hop_s = 0.0; // 0 = window_s
    std::optional<double> fs;
    std::string out = "features.csv";
    std::vector<std::string> class_names; // default ClassSet when empty
};

struct TrainOptions {
    std::string features_csv;
    std::string mode = "pairwise"; // pairwise | multiclass
    std::string kind = "feedforward";
    std::vector<int> hidden = {7};
    std::uint64_t seed = 42;
    int max_iter = 500;
    std::string out_dir = ".";
    std::vector<std::string> class_names;
};

struct EvaluateOptions {
    std::vector<std::string> models; // model files and/or bank manifests
    std::string test_csv;
    std::string table;   // "" | pairwise | comparison
    std::string out_dir; // when set, also writes the report and plot CSVs
    std::vector<std::string> class_names;
};

struct ClassifyOptions {
    std::string model; // model file or bank manifest
    std::string features_csv;
    std::string out_dir; // when set, also writes predictions.csv
    std::vector<std::string> class_names;
};

struct CompareOptions {
    std::string train_csv;
    std::string test_csv;
    std::vector<std::string> kinds; // default: all four
    std::uint64_t seed = 42;
    int max_iter = 500;
    std::string out_dir; // when set, artifacts are saved here
    std::vector<std::string> class_names;
    bool sequential = false; // train the 8 artifacts one by one
};

int run_detect(const DetectOptions& opt, std::ostream& out);
int run_features(const FeaturesOptions& opt, std::ostream& out);
int run_train(const TrainOptions& opt, std::ostream& out);
int run_evaluate(const EvaluateOptions& opt, std::ostream& out);
int run_classify(const ClassifyOptions& opt, std::ostream& out);
int run_compare(const CompareOptions& opt, std::ostream& out);

// Maps library exceptions onto the exit-code contract; used by main and by
// the process-level tests.
int exit_code_for_current_exception();

} // namespace ecgnet::cli
