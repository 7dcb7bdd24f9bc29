#pragma once

#include "ecgnet/hrv_features.hpp"
#include "ecgnet/neural.hpp"
#include "ecgnet/ovo_classifier.hpp"
#include "ecgnet/rng.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

namespace testutil {

namespace fs = std::filesystem;

// Self-cleaning scratch directory for file-format tests.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        const auto base = fs::temp_directory_path();
        path_ = base / ("ecgnet_test_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path& path() const { return path_; }
    std::string file(const std::string& name) const {
        return (path_ / name).string();
    }

private:
    fs::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Well-separated 15-dim Gaussian blobs, one cluster per class. Class c puts
// mass on dimensions {c, c+5, c+10}, so every pair of classes is linearly
// separable by a wide margin.
inline ecgnet::FeatureMatrix make_blobs(std::size_t rows_per_class,
                                        std::uint64_t seed,
                                        std::size_t n_classes = 5) {
    ecgnet::FeatureMatrix m;
    m.class_names = ecgnet::ClassSet::default_set().names;
    ecgnet::CounterRng rng(seed);
    for (std::size_t c = 0; c < n_classes; ++c) {
        for (std::size_t r = 0; r < rows_per_class; ++r) {
            ecgnet::FeatureVector x{};
            for (std::size_t j = 0; j < ecgnet::kFeatureCount; ++j)
                x[j] = (j % 5 == c ? 3.0 : 0.0) + 0.5 * rng.next_gaussian();
            m.rows.push_back(x);
            m.labels.push_back(static_cast<int>(c));
        }
    }
    return m;
}

// A bias-only "trained" linear net: forward output equals `biases` for any
// input. Useful for exercising decision logic with chosen scores.
inline ecgnet::Mlp make_constant_net(const std::vector<double>& biases,
                                     const std::vector<std::string>& class_names) {
    ecgnet::Topology topo;
    topo.kind = ecgnet::TopologyKind::feedforward;
    topo.input_dim = static_cast<int>(ecgnet::kFeatureCount);
    topo.hidden = {};
    topo.output_dim = static_cast<int>(biases.size());
    ecgnet::Mlp net = ecgnet::init_network(topo, 0);
    std::fill(net.params.begin(), net.params.end(), 0.0);
    // layout: W (out x in) then b
    const std::size_t w_size =
        static_cast<std::size_t>(topo.input_dim) * biases.size();
    for (std::size_t i = 0; i < biases.size(); ++i)
        net.params[w_size + i] = biases[i];
    net.class_names = class_names;
    net.trained = true;
    return net;
}

// A bank of constant nets with chosen per-pair outcomes/scores.
// outcome_scores[r] = {score_first, score_second}; the larger one wins.
inline ecgnet::PairNetBank make_constant_bank(
    const std::array<std::array<double, 2>, ecgnet::kNumPairs>& outcome_scores) {
    ecgnet::PairNetBank bank;
    bank.classes = ecgnet::ClassSet::default_set();
    bank.kind = ecgnet::TopologyKind::feedforward;
    const auto& pairs = ecgnet::enumerate_pairs();
    for (std::size_t r = 0; r < ecgnet::kNumPairs; ++r) {
        const auto& p = pairs[r];
        bank.nets.push_back(make_constant_net(
            {outcome_scores[r][0], outcome_scores[r][1]},
            {bank.classes.names[static_cast<std::size_t>(p.first)],
             bank.classes.names[static_cast<std::size_t>(p.second)]}));
    }
    return bank;
}

} // namespace testutil
