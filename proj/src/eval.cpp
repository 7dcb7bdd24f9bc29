#include "ecgnet/eval.hpp"

#include "ecgnet/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace ecgnet {

namespace {

void finalize_report(EvalReport& r) {
    r.total = 0;
    r.correct = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        std::size_t row_total = 0;
        for (std::size_t p = 0; p < kNumClasses; ++p) row_total += r.confusion[c][p];
        r.class_counts[c] = row_total;
        r.total += row_total;
        r.correct += r.confusion[c][c];
        r.per_class_accuracy[c] =
            row_total == 0 ? 0.0
                           : 100.0 * static_cast<double>(r.confusion[c][c]) /
                                 static_cast<double>(row_total);
    }
    r.overall_accuracy =
        r.total == 0 ? 0.0
                     : 100.0 * static_cast<double>(r.correct) /
                           static_cast<double>(r.total);
}

void check_labels(const FeatureMatrix& test) {
    if (test.empty()) throw DataError("empty test set");
    if (test.class_names.size() != kNumClasses)
        throw DataError("evaluation needs the 5-class matrix");
}

} // namespace

EvalReport evaluate_multiclass(const Mlp& net, const FeatureMatrix& test) {
    check_labels(test);
    if (net.class_names.size() != kNumClasses)
        throw DataError("not a 5-output multiclass model");

    EvalReport r;
    std::size_t correct_direct = 0;
    for (std::size_t i = 0; i < test.rows.size(); ++i) {
        const Prediction pred = predict(net, test.rows[i]);
        // model output order may differ from the matrix class order
        const int predicted = [&] {
            const std::string& name =
                net.class_names[static_cast<std::size_t>(pred.class_index)];
            const auto it = std::find(test.class_names.begin(),
                                      test.class_names.end(), name);
            if (it == test.class_names.end())
                throw DataError("model class '" + name +
                                "' unknown to the test matrix");
            return static_cast<int>(it - test.class_names.begin());
        }();
        ++r.confusion[static_cast<std::size_t>(test.labels[i])]
                     [static_cast<std::size_t>(predicted)];
        if (predicted == test.labels[i]) ++correct_direct;
    }
    finalize_report(r);
    if (correct_direct != r.correct)
        throw Error("internal accuracy/confusion cross-check failed");
    r.kind = to_string(net.topology.kind);
    r.seed = net.seed;
    r.feature_version = net.feature_version;
    r.class_names = test.class_names;
    return r;
}

EvalReport evaluate_bank(const PairNetBank& bank, const FeatureMatrix& test) {
    check_labels(test);
    if (bank.classes.names != test.class_names)
        throw DataError("bank class set does not match the test matrix");

    EvalReport r;
    std::size_t correct_direct = 0;
    for (std::size_t i = 0; i < test.rows.size(); ++i) {
        const Decision d = classify(bank, test.rows[i]);
        ++r.confusion[static_cast<std::size_t>(test.labels[i])]
                     [static_cast<std::size_t>(d.class_index)];
        if (d.tie_broken) ++r.tie_count;
        if (d.class_index == test.labels[i]) ++correct_direct;
    }
    finalize_report(r);
    if (correct_direct != r.correct)
        throw Error("internal accuracy/confusion cross-check failed");
    r.kind = to_string(bank.kind);
    r.seed = bank.master_seed;
    r.feature_version = bank.feature_version;
    r.class_names = test.class_names;
    return r;
}

std::string format_accuracy_cell(double percent) {
    if (percent < 1.0) return "<1";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", percent);
    std::string s(buf);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

const char* pairwise_kind_label(TopologyKind kind) {
    switch (kind) {
        case TopologyKind::cascade: return "Cascade Net.";
        case TopologyKind::feedforward: return "Feed forward Net.";
        case TopologyKind::fit: return "Fit Net.";
        case TopologyKind::pattern: return "Pattern Net.";
    }
    return "?";
}

const char* comparison_kind_label(TopologyKind kind) {
    switch (kind) {
        case TopologyKind::cascade: return "Cascade Net";
        case TopologyKind::feedforward: return "Feed Forward Net";
        case TopologyKind::fit: return "Fit Net";
        case TopologyKind::pattern: return "Pattern Net";
    }
    return "?";
}

std::string render_report(const EvalReport& r) {
    std::ostringstream out;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "overall accuracy: %s%%  (%zu/%zu)\n",
                  format_accuracy_cell(r.overall_accuracy).c_str(), r.correct,
                  r.total);
    out << buf;
    out << "per-class accuracy:\n";
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        std::snprintf(buf, sizeof(buf), "  %c %-28s %6s%%  (%zu/%zu)\n",
                      static_cast<char>('A' + c),
                      c < r.class_names.size() ? r.class_names[c].c_str() : "?",
                      format_accuracy_cell(r.per_class_accuracy[c]).c_str(),
                      r.confusion[c][c], r.class_counts[c]);
        out << buf;
    }
    out << "ties broken: " << r.tie_count << "\n";
    out << "confusion (rows truth, cols predicted):\n     ";
    for (std::size_t c = 0; c < kNumClasses; ++c)
        out << "     " << static_cast<char>('A' + c);
    out << "\n";
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        out << "    " << static_cast<char>('A' + c);
        for (std::size_t p = 0; p < kNumClasses; ++p) {
            std::snprintf(buf, sizeof(buf), "%6zu", r.confusion[c][p]);
            out << buf;
        }
        out << "\n";
    }
    out << "config: artifact=" << (r.artifact.empty() ? "-" : r.artifact)
        << " kind=" << r.kind << " seed=" << r.seed
        << " features=" << r.feature_version << "\n";
    return out.str();
}

namespace {

PairwiseGrid grid_with_kind_columns(const std::vector<const PairNetBank*>& banks) {
    if (banks.empty()) throw DataError("pairwise table needs at least one bank");
    PairwiseGrid grid;
    for (const PairNetBank* b : banks) {
        if (!b->trained()) throw DataError("untrained bank in pairwise table");
        grid.kind_names.push_back(pairwise_kind_label(b->kind));
    }
    return grid;
}

} // namespace

PairwiseGrid pairwise_grid(const std::vector<const PairNetBank*>& banks,
                           const FeatureMatrix& test) {
    check_labels(test);
    PairwiseGrid grid = grid_with_kind_columns(banks);
    for (const PairNetBank* b : banks)
        if (b->classes.names != test.class_names)
            throw DataError("bank class set does not match the test matrix");

    const auto& pairs = enumerate_pairs();
    for (std::size_t r = 0; r < kNumPairs; ++r) {
        const ClassPair& p = pairs[r];
        if (p.second == static_cast<int>(kNumClasses) - 1)
            continue; // the normal class is excluded from the pair table
        for (int starred = 0; starred < 2; ++starred) {
            const int target = starred == 0 ? p.first : p.second;
            std::ostringstream label;
            label << test.class_names[static_cast<std::size_t>(p.first)]
                  << (starred == 0 ? "*" : "") << ", "
                  << test.class_names[static_cast<std::size_t>(p.second)]
                  << (starred == 1 ? "*" : "");
            grid.row_labels.push_back(label.str());

            std::vector<double> row;
            for (const PairNetBank* b : banks) {
                std::size_t total = 0, correct = 0;
                for (std::size_t i = 0; i < test.rows.size(); ++i) {
                    if (test.labels[i] != target) continue;
                    ++total;
                    const Prediction pred = predict(b->nets[r], test.rows[i]);
                    const int winner_class =
                        pred.class_index == 0 ? p.first : p.second;
                    if (winner_class == target) ++correct;
                }
                if (total == 0)
                    throw DataError("no test rows for class '" +
                                    test.class_names[static_cast<std::size_t>(target)] +
                                    "'");
                row.push_back(100.0 * static_cast<double>(correct) /
                              static_cast<double>(total));
            }
            grid.cells.push_back(std::move(row));
        }
    }
    return grid;
}

ComparisonGrid comparison_grid(const std::vector<const Mlp*>& baselines,
                               const std::vector<const PairNetBank*>& banks,
                               const FeatureMatrix& test) {
    check_labels(test);
    if (baselines.size() != banks.size() || baselines.empty())
        throw DataError("comparison needs matching baseline/bank lists");

    ComparisonGrid grid;
    grid.class_names = test.class_names;
    grid.cells.assign(kNumClasses,
                      std::vector<std::array<double, 2>>(baselines.size()));
    for (std::size_t k = 0; k < baselines.size(); ++k) {
        if (baselines[k]->topology.kind != banks[k]->kind)
            throw DataError("baseline/bank kind mismatch in comparison column " +
                            std::to_string(k));
        grid.kind_names.push_back(comparison_kind_label(banks[k]->kind));
        const EvalReport normal = evaluate_multiclass(*baselines[k], test);
        const EvalReport proposed = evaluate_bank(*banks[k], test);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            grid.cells[c][k][0] = normal.per_class_accuracy[c];
            grid.cells[c][k][1] = proposed.per_class_accuracy[c];
        }
    }
    return grid;
}

namespace {

std::string pad_left(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

} // namespace

std::string render_pairwise_table(const PairwiseGrid& grid) {
    std::size_t label_w = std::string("Signal Classes").size();
    for (const auto& l : grid.row_labels) label_w = std::max(label_w, l.size());

    std::vector<std::size_t> col_w;
    for (std::size_t k = 0; k < grid.kind_names.size(); ++k) {
        std::size_t w = grid.kind_names[k].size();
        for (const auto& row : grid.cells)
            w = std::max(w, format_accuracy_cell(row[k]).size());
        col_w.push_back(w);
    }

    std::ostringstream out;
    out << pad_right("Signal Classes", label_w);
    for (std::size_t k = 0; k < grid.kind_names.size(); ++k)
        out << "  " << pad_left(grid.kind_names[k], col_w[k]);
    out << "\n";
    for (std::size_t r = 0; r < grid.row_labels.size(); ++r) {
        out << pad_right(grid.row_labels[r], label_w);
        for (std::size_t k = 0; k < grid.kind_names.size(); ++k)
            out << "  " << pad_left(format_accuracy_cell(grid.cells[r][k]), col_w[k]);
        out << "\n";
    }
    return out.str();
}

std::string render_comparison_table(const ComparisonGrid& grid) {
    std::size_t label_w = std::string("Signal Classes").size();
    for (const auto& l : grid.class_names) label_w = std::max(label_w, l.size());

    // each kind spans two sub-columns: Normal and Proposed
    std::vector<std::array<std::size_t, 2>> col_w;
    for (std::size_t k = 0; k < grid.kind_names.size(); ++k) {
        std::array<std::size_t, 2> w = {std::string("Normal").size(),
                                        std::string("Proposed").size()};
        for (const auto& row : grid.cells)
            for (int half = 0; half < 2; ++half)
                w[half] = std::max(w[half],
                                   format_accuracy_cell(row[k][half]).size());
        col_w.push_back(w);
    }

    std::ostringstream out;
    out << pad_right("Signal Classes", label_w);
    for (std::size_t k = 0; k < grid.kind_names.size(); ++k) {
        const std::size_t span = col_w[k][0] + col_w[k][1] + 2;
        out << "  " << pad_right(grid.kind_names[k], span);
    }
    out << "\n" << pad_right("", label_w);
    for (std::size_t k = 0; k < grid.kind_names.size(); ++k)
        out << "  " << pad_left("Normal", col_w[k][0]) << "  "
            << pad_left("Proposed", col_w[k][1]);
    out << "\n";
    for (std::size_t c = 0; c < grid.class_names.size(); ++c) {
        out << pad_right(grid.class_names[c], label_w);
        for (std::size_t k = 0; k < grid.kind_names.size(); ++k)
            out << "  " << pad_left(format_accuracy_cell(grid.cells[c][k][0]), col_w[k][0])
                << "  " << pad_left(format_accuracy_cell(grid.cells[c][k][1]), col_w[k][1]);
        out << "\n";
    }
    return out.str();
}

} // namespace ecgnet
