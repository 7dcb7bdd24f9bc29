#include "ecgnet/ovo_classifier.hpp"

#include "ecgnet/errors.hpp"
#include "ecgnet/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

namespace ecgnet {

using nlohmann::json;

ClassSet ClassSet::default_set() {
    return ClassSet{{"Sleep Apnea", "Long Term AF", "Arrhythmia",
                     "Supraventricular Arrhythmia", "Normal"}};
}

int ClassSet::index_of(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw DataError("unknown class '" + name + "'");
    return static_cast<int>(it - names.begin());
}

namespace {

void validate_class_set(const ClassSet& cs) {
    if (cs.names.size() != kNumClasses)
        throw DataError("class set must hold exactly 5 classes");
    const std::set<std::string> uniq(cs.names.begin(), cs.names.end());
    if (uniq.size() != kNumClasses)
        throw DataError("class set entries must be distinct");
}

} // namespace

const std::array<ClassPair, kNumPairs>& enumerate_pairs() {
    static const std::array<ClassPair, kNumPairs> pairs = [] {
        std::array<ClassPair, kNumPairs> p{};
        std::size_t r = 0;
        for (int a = 0; a < static_cast<int>(kNumClasses); ++a)
            for (int b = a + 1; b < static_cast<int>(kNumClasses); ++b)
                p[r++] = {a, b};
        return p;
    }();
    return pairs;
}

ConditionTable::ConditionTable() {
    const auto& pairs = enumerate_pairs();
    for (std::size_t r = 0; r < kNumPairs; ++r) {
        entries_[r].fill(0);
        entries_[r][static_cast<std::size_t>(pairs[r].first)] = 1;
        entries_[r][static_cast<std::size_t>(pairs[r].second)] = 2;
    }
    // structural invariants: one 1, one 2, three 0s per row; every class
    // appears in exactly 4 rows
    std::array<int, kNumClasses> appearances{};
    for (const auto& row : entries_) {
        int ones = 0, twos = 0, zeros = 0;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            if (row[c] == 1) ++ones;
            else if (row[c] == 2) ++twos;
            else ++zeros;
            if (row[c] != 0) ++appearances[c];
        }
        if (ones != 1 || twos != 1 || zeros != 3)
            throw DataError("condition table row violates 1/2/0 structure");
    }
    for (int a : appearances)
        if (a != 4) throw DataError("condition table class must appear in 4 rows");
}

const ConditionTable& ConditionTable::standard() {
    static const ConditionTable table;
    return table;
}

int ConditionTable::lookup(int net_number, int class_index) const {
    if (net_number < 1 || net_number > static_cast<int>(kNumPairs))
        throw DataError("net number must be in 1..10");
    if (class_index < 0 || class_index >= static_cast<int>(kNumClasses))
        throw DataError("class index must be in 0..4");
    return entries_[static_cast<std::size_t>(net_number - 1)]
                   [static_cast<std::size_t>(class_index)];
}

int FlagVector::sum() const {
    return std::accumulate(flags.begin(), flags.end(), 0);
}

FlagVector compute_flags(const std::array<PairOutcome, kNumPairs>& outcomes) {
    const auto& pairs = enumerate_pairs();
    FlagVector fv;
    for (std::size_t r = 0; r < kNumPairs; ++r) {
        const PairOutcome& o = outcomes[r];
        if (o.winner != 1 && o.winner != 2)
            throw DataError("pair outcome winner must be 1 or 2 (net " +
                            std::to_string(r + 1) + ")");
        const int cls = o.winner == 1 ? pairs[r].first : pairs[r].second;
        ++fv.flags[static_cast<std::size_t>(cls)];
        fv.tie_score[static_cast<std::size_t>(cls)] += o.winning_score;
    }
    return fv;
}

bool PairNetBank::trained() const {
    return nets.size() == kNumPairs &&
           std::all_of(nets.begin(), nets.end(),
                       [](const Mlp& n) { return n.trained; });
}

namespace {

FeatureMatrix filter_classes(const FeatureMatrix& m, int a, int b) {
    FeatureMatrix out;
    out.class_names = m.class_names;
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        if (m.labels[i] == a || m.labels[i] == b) {
            out.rows.push_back(m.rows[i]);
            out.labels.push_back(m.labels[i]);
        }
    }
    return out;
}

void require_all_classes(const FeatureMatrix& train, const ClassSet& cs) {
    std::array<std::size_t, kNumClasses> counts{};
    for (int l : train.labels)
        if (l >= 0 && l < static_cast<int>(kNumClasses))
            ++counts[static_cast<std::size_t>(l)];
    for (std::size_t c = 0; c < kNumClasses; ++c)
        if (counts[c] == 0)
            throw DataError("training data has no rows for class '" +
                            cs.names[c] + "'");
}

} // namespace

PairNetBank train_bank(const FeatureMatrix& train, const TrainConfig& cfg,
                       std::uint64_t master_seed,
                       std::vector<TrainingHistory>* histories) {
    if (train.class_names.size() != kNumClasses)
        throw DataError("pairwise training needs the 5-class matrix");
    ClassSet cs{train.class_names};
    validate_class_set(cs);
    require_all_classes(train, cs);

    PairNetBank bank;
    bank.classes = cs;
    bank.kind = cfg.kind;
    bank.master_seed = master_seed;

    const auto& pairs = enumerate_pairs();
    for (std::size_t r = 0; r < kNumPairs; ++r) {
        const ClassPair& p = pairs[r];
        FeatureMatrix sub = filter_classes(train, p.first, p.second);

        Topology topo;
        topo.kind = cfg.kind;
        topo.input_dim = static_cast<int>(kFeatureCount);
        topo.hidden = cfg.hidden;
        topo.output_dim = 2;

        Mlp net = init_network(topo, derive_seed(master_seed, r));
        net.class_names = {cs.names[static_cast<std::size_t>(p.first)],
                           cs.names[static_cast<std::size_t>(p.second)]};
        const Normalizer nz = fit_normalizer(sub);
        TrainingHistory hist =
            scg_train(net, apply_normalizer(nz, sub), nullptr, cfg.scg);
        if (histories) histories->push_back(std::move(hist));
        net.normalizer = nz;
        bank.nets.push_back(std::move(net));
    }
    return bank;
}

Decision classify(const PairNetBank& bank, const FeatureVector& raw_features) {
    if (!bank.trained()) throw DataError("classify called on an untrained bank");

    std::array<PairOutcome, kNumPairs> outcomes;
    for (std::size_t r = 0; r < kNumPairs; ++r) {
        const Prediction pred = predict(bank.nets[r], raw_features);
        outcomes[r].winner = pred.class_index + 1;
        outcomes[r].winning_score =
            pred.scores[static_cast<std::size_t>(pred.class_index)];
    }

    Decision d;
    d.flags = compute_flags(outcomes);
    int best = 0;
    for (int c = 1; c < static_cast<int>(kNumClasses); ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const auto bi = static_cast<std::size_t>(best);
        if (d.flags.flags[ci] > d.flags.flags[bi] ||
            (d.flags.flags[ci] == d.flags.flags[bi] &&
             d.flags.tie_score[ci] > d.flags.tie_score[bi]))
            best = c;
    }
    const int max_flag = d.flags.flags[static_cast<std::size_t>(best)];
    int shared = 0;
    for (int f : d.flags.flags)
        if (f == max_flag) ++shared;
    d.class_index = best;
    d.tie_broken = shared > 1;
    return d;
}

Mlp train_multiclass_baseline(const FeatureMatrix& train, const TrainConfig& cfg,
                              std::uint64_t seed, TrainingHistory* history) {
    if (train.class_names.size() != kNumClasses)
        throw DataError("multiclass training needs the 5-class matrix");
    ClassSet cs{train.class_names};
    validate_class_set(cs);
    require_all_classes(train, cs);

    Topology topo;
    topo.kind = cfg.kind;
    topo.input_dim = static_cast<int>(kFeatureCount);
    topo.hidden = cfg.hidden;
    topo.output_dim = static_cast<int>(kNumClasses);

    Mlp net = init_network(topo, seed);
    net.class_names = train.class_names;
    const Normalizer nz = fit_normalizer(train);
    TrainingHistory hist =
        scg_train(net, apply_normalizer(nz, train), nullptr, cfg.scg);
    if (history) *history = std::move(hist);
    net.normalizer = nz;
    return net;
}

// ---- bank files ---------------------------------------------------------

void save_bank(const PairNetBank& bank, const std::string& manifest_path) {
    if (bank.nets.size() != kNumPairs)
        throw DataError("bank must hold exactly 10 nets");
    validate_class_set(bank.classes);

    const std::filesystem::path manifest(manifest_path);
    const std::string stem = manifest.stem().string();
    const auto dir = manifest.parent_path();
    const auto& pairs = enumerate_pairs();

    std::vector<std::string> model_files;
    for (std::size_t r = 0; r < kNumPairs; ++r) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_net%02zu_%c%c.json", stem.c_str(),
                      r + 1, bank.classes.letter(pairs[r].first),
                      bank.classes.letter(pairs[r].second));
        model_files.emplace_back(name);
        save_model(bank.nets[r], (dir / name).string());
    }

    json j;
    j["format"] = "ecgnet-bank";
    j["format_version"] = 1;
    j["feature_version"] = bank.feature_version;
    j["class_set"] = bank.classes.names;
    j["kind"] = to_string(bank.kind);
    j["master_seed"] = bank.master_seed;
    j["models"] = model_files;

    std::ofstream out(manifest_path);
    if (!out) throw IoError("cannot write '" + manifest_path + "'");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for '" + manifest_path + "'");
}

PairNetBank load_bank(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open '" + manifest_path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(manifest_path + ": not a valid bank manifest: " +
                          e.what());
    }

    PairNetBank bank;
    try {
        if (j.at("format").get<std::string>() != "ecgnet-bank")
            throw FormatError(manifest_path + ": not an ecgnet bank manifest");
        if (j.at("format_version").get<int>() != 1)
            throw FormatError(manifest_path + ": unsupported bank format version");
        bank.feature_version = j.at("feature_version").get<std::string>();
        if (bank.feature_version != kFeatureVersion)
            throw FormatError(manifest_path +
                              ": feature-order version mismatch: manifest has '" +
                              bank.feature_version + "', this build uses '" +
                              kFeatureVersion + "'");
        bank.classes.names = j.at("class_set").get<std::vector<std::string>>();
        bank.kind = topology_kind_from_string(j.at("kind").get<std::string>());
        bank.master_seed = j.at("master_seed").get<std::uint64_t>();

        const auto files = j.at("models").get<std::vector<std::string>>();
        if (files.size() != kNumPairs)
            throw FormatError(manifest_path + ": manifest must list 10 models");
        validate_class_set(bank.classes);

        const auto dir = std::filesystem::path(manifest_path).parent_path();
        const auto& pairs = enumerate_pairs();
        for (std::size_t r = 0; r < kNumPairs; ++r) {
            Mlp net = load_model((dir / files[r]).string());
            const std::vector<std::string> expect = {
                bank.classes.names[static_cast<std::size_t>(pairs[r].first)],
                bank.classes.names[static_cast<std::size_t>(pairs[r].second)]};
            if (net.class_names != expect)
                throw FormatError(manifest_path + ": net " + std::to_string(r + 1) +
                                  " class order does not match its pair");
            bank.nets.push_back(std::move(net));
        }
    } catch (const json::exception& e) {
        throw FormatError(manifest_path + ": malformed bank manifest: " + e.what());
    }
    return bank;
}

} // namespace ecgnet
