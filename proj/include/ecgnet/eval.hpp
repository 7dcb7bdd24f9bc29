#pragma once

#include "ecgnet/ovo_classifier.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace ecgnet {

// Evaluation summary for one artifact on one labeled test set. Per-class and
// overall accuracies are cross-checked against the confusion matrix.
struct EvalReport {
    std::array<double, kNumClasses> per_class_accuracy{}; // percent
    double overall_accuracy = 0.0;                        // percent
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> confusion{};
    std::array<std::size_t, kNumClasses> class_counts{};
    std::size_t total = 0;
    std::size_t correct = 0;
    std::size_t tie_count = 0;

    // config echo, sufficient to reproduce the run
    std::string artifact;
    std::string kind;
    std::uint64_t seed = 0;
    std::string feature_version;
    std::vector<std::string> class_names;
};

EvalReport evaluate_multiclass(const Mlp& net, const FeatureMatrix& test);
EvalReport evaluate_bank(const PairNetBank& bank, const FeatureMatrix& test);

std::string render_report(const EvalReport& report);

// Accuracy cell in the tables' convention: "<1" below one percent, otherwise
// two decimals with trailing zeros trimmed ("100", "62.5", "66.67").
std::string format_accuracy_cell(double percent);

// Column labels used by the two table styles.
const char* pairwise_kind_label(TopologyKind kind);   // e.g. "Cascade Net."
const char* comparison_kind_label(TopologyKind kind); // e.g. "Cascade Net"

// Pair-accuracy grid: one column per topology kind, two rows per disease
// pair (the starred class is the one whose test rows the cell scores).
struct PairwiseGrid {
    std::vector<std::string> kind_names;
    std::vector<std::string> row_labels;
    std::vector<std::vector<double>> cells; // [row][kind], percent
};

// Normal-vs-proposed comparison: five class rows, a Normal and a Proposed
// sub-column per topology kind.
struct ComparisonGrid {
    std::vector<std::string> kind_names;
    std::vector<std::string> class_names;
    std::vector<std::vector<std::array<double, 2>>> cells; // [class][kind]{normal, proposed}
};

// Builds the grid from trained banks (all evaluated on the same test rows).
// Pairs involving the last class (the normal rhythm, letter E) are excluded,
// matching the source table's layout.
PairwiseGrid pairwise_grid(const std::vector<const PairNetBank*>& banks,
                           const FeatureMatrix& test);

ComparisonGrid comparison_grid(const std::vector<const Mlp*>& baselines,
                               const std::vector<const PairNetBank*>& banks,
                               const FeatureMatrix& test);

std::string render_pairwise_table(const PairwiseGrid& grid);
std::string render_comparison_table(const ComparisonGrid& grid);

} // namespace ecgnet
