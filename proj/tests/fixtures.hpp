#pragma once

#include "ecgnet/eval.hpp"

#include <array>
#include <string>

namespace testutil {

// The published pair-accuracy figures arranged in this project's canonical
// row order (pairs in condition-table order, the starred class first within
// each pair). Backs the byte-for-byte golden render check.
inline ecgnet::PairwiseGrid reference_pairwise_grid() {
    using ecgnet::TopologyKind;
    ecgnet::PairwiseGrid g;
    g.kind_names = {ecgnet::pairwise_kind_label(TopologyKind::cascade),
                    ecgnet::pairwise_kind_label(TopologyKind::feedforward),
                    ecgnet::pairwise_kind_label(TopologyKind::fit),
                    ecgnet::pairwise_kind_label(TopologyKind::pattern)};
    const char* A = "Sleep Apnea";
    const char* B = "Long Term AF";
    const char* C = "Arrhythmia";
    const char* D = "Supraventricular Arrhythmia";
    auto row = [&g](const char* first, bool star_first, const char* second,
                    std::array<double, 4> cells) {
        g.row_labels.push_back(std::string(first) + (star_first ? "*" : "") +
                               ", " + second + (star_first ? "" : "*"));
        g.cells.push_back({cells[0], cells[1], cells[2], cells[3]});
    };
    row(A, true, B, {62.5, 70.83, 70.83, 75});
    row(A, false, B, {100, 100, 100, 92});
    row(A, true, C, {100, 79.16, 79.16, 83.33});
    row(A, false, C, {66.67, 73.33, 46.66, 13.33});
    row(A, true, D, {45.83, 70.83, 45.83, 62.5});
    row(A, false, D, {93.61, 100, 97.87, 100});
    row(B, true, C, {96, 100, 100, 96});
    row(B, false, C, {66.67, 93.33, 93.33, 80});
    row(B, true, D, {100, 100, 100, 100});
    row(B, false, D, {100, 100, 100, 100});
    row(C, true, D, {0.5, 20, 0.5, 20});
    row(C, false, D, {100, 95.74, 93.62, 95.74});
    return g;
}

} // namespace testutil
