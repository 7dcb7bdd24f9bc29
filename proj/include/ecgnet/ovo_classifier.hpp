#pragma once

#include "ecgnet/neural.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ecgnet {

inline constexpr std::size_t kNumClasses = 5;
inline constexpr std::size_t kNumPairs = 10; // C(5,2)

// The five classes mapped to letters A..E (indices 0..4). The assignment is
// configuration: the default follows the source-database listing with the
// normal rhythm last. The mapping is serialized into every artifact.
struct ClassSet {
    std::vector<std::string> names; // exactly 5, distinct

    static ClassSet default_set();
    char letter(int index) const { return static_cast<char>('A' + index); }
    int index_of(const std::string& name) const;
};

struct ClassPair {
    int first = 0;  // winner "1" side
    int second = 0; // winner "2" side
};

// Pair rows in fixed order AB, AC, AD, AE, BC, BD, BE, CD, CE, DE.
const std::array<ClassPair, kNumPairs>& enumerate_pairs();

// 10x5 lookup: 1 = sample belongs to the row's first class, 2 = second,
// 0 = not applicable. Structural invariants are asserted at construction.
class ConditionTable {
public:
    static const ConditionTable& standard();

    // net_number is 1-based (Net1..Net10), class_index 0-based (A..E)
    int lookup(int net_number, int class_index) const;

private:
    ConditionTable();
    std::array<std::array<int, kNumClasses>, kNumPairs> entries_{};
};

// Outcome of one pair network: winner 1 or 2 plus the winning output score.
struct PairOutcome {
    int winner = 0;
    double winning_score = 0.0;
};

// Per-class vote counts FA..FE plus the score sums used for tie-breaking
// (winning-output scores over the nets the class actually won).
struct FlagVector {
    std::array<int, kNumClasses> flags{};
    std::array<double, kNumClasses> tie_score{};

    int sum() const;
};

struct Decision {
    int class_index = 0;
    FlagVector flags;
    bool tie_broken = false;
};

// The 10 trained pair networks in table order.
struct PairNetBank {
    std::vector<Mlp> nets; // size 10
    ClassSet classes;
    TopologyKind kind = TopologyKind::feedforward;
    std::uint64_t master_seed = 0;
    std::string feature_version = kFeatureVersion;

    bool trained() const;
};

struct TrainConfig {
    TopologyKind kind = TopologyKind::feedforward;
    std::vector<int> hidden = {7};
    ScgParams scg;
};

FlagVector compute_flags(const std::array<PairOutcome, kNumPairs>& outcomes);

// Trains one 2-output net per pair on the rows of its two classes, each with
// a pair-specific normalizer and a seed derived from (master_seed, pair index).
PairNetBank train_bank(const FeatureMatrix& train, const TrainConfig& cfg,
                       std::uint64_t master_seed,
                       std::vector<TrainingHistory>* histories = nullptr);

// Runs all 10 nets, sums the flags, argmax; ties break on the larger
// tie-break score, then the lower class index.
Decision classify(const PairNetBank& bank, const FeatureVector& raw_features);

// The conventional 5-output classifier on the same features/normalization.
Mlp train_multiclass_baseline(const FeatureMatrix& train, const TrainConfig& cfg,
                              std::uint64_t seed,
                              TrainingHistory* history = nullptr);

// Bank manifest (JSON) listing the 10 model files plus the class mapping and
// master seed; the files live next to the manifest.
void save_bank(const PairNetBank& bank, const std::string& manifest_path);
PairNetBank load_bank(const std::string& manifest_path);

} // namespace ecgnet
