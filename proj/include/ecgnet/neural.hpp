#pragma once

#include "ecgnet/hrv_features.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace ecgnet {

// The four network variants. All share tanh hidden layers and train with
// SCG; they differ in output activation/loss and wiring:
//   pattern     -> softmax output, cross-entropy loss
//   feedforward -> linear output, mean squared error against one-hot
//   fit         -> same realization as feedforward, kept as a distinct kind
//                  so the four columns of the comparison tables are four
//                  genuinely separate trained models
//   cascade     -> feedforward plus input-to-every-later-layer skip weights
enum class TopologyKind { feedforward, fit, pattern, cascade };

const char* to_string(TopologyKind kind);
TopologyKind topology_kind_from_string(const std::string& name);

struct Topology {
    TopologyKind kind = TopologyKind::feedforward;
    int input_dim = static_cast<int>(kFeatureCount);
    std::vector<int> hidden = {7};
    int output_dim = 2;
};

// Parameter vector layout, per layer in order:
//   W (row-major, out x in), then skip S (out x input_dim, cascade layers
//   after the first only), then bias b (out).
std::size_t count_params(const Topology& topology);

struct ScgParams {
    int max_iter = 500;
    double sigma = 5e-5;    // finite-difference step scale
    double lambda0 = 5e-7;  // initial Levenberg-style scaling
    double goal_loss = 1e-5;
    int patience = 20;      // consecutive non-improving validation losses
};

struct Mlp {
    Topology topology;
    std::vector<double> params;
    Normalizer normalizer; // identity until a trainer fits one
    std::vector<std::string> class_names;
    std::uint64_t seed = 0;
    int epochs_run = 0;
    double final_loss = 0.0;
    bool trained = false;
    std::string feature_version = kFeatureVersion;
};

// A training batch: rows plus one-hot targets, both row-major.
struct Batch {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;

    std::size_t size() const { return inputs.size(); }
};

struct TrainingHistory {
    std::vector<double> loss;     // achieved loss after each iteration
    std::vector<double> val_loss; // same cadence, when a validation set is given
    int iterations = 0;
    std::string stop_reason;
};

struct Prediction {
    int class_index = 0; // argmax, ties to the lower index
    std::vector<double> scores;
};

// Weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)] from a counter-based
// generator; biases zero. fan_in counts all inputs of the layer (previous
// layer plus skip inputs for cascade).
Mlp init_network(const Topology& topology, std::uint64_t seed);

// x must already be normalized via the net's stored Normalizer.
std::vector<double> forward(const Mlp& net, const std::vector<double>& x);

// Mean loss over the batch and the exact analytic gradient in layout order.
// pattern: softmax cross-entropy; other kinds: MSE against one-hot.
std::pair<double, std::vector<double>> loss_and_gradient(const Mlp& net,
                                                         const Batch& batch);

// Moller's scaled conjugate gradient, full batch, deterministic.
TrainingHistory scg_train(Mlp& net, const Batch& train, const Batch* val,
                          const ScgParams& params);

// FeatureMatrix convenience wrapper: rows map to one-hot targets against the
// net's class_names (matrix labels resolve through matrix.class_names).
TrainingHistory scg_train(Mlp& net, const FeatureMatrix& train,
                          const FeatureMatrix* val, const ScgParams& params);

Batch batch_from_matrix(const FeatureMatrix& matrix,
                        const std::vector<std::string>& output_class_names);

// Stratified 70/30 split: round(0.7 * n_c) training rows per class,
// deterministic shuffle by seed.
std::pair<FeatureMatrix, FeatureMatrix> split_70_30(const FeatureMatrix& matrix,
                                                    std::uint64_t seed);

// Stored-normalizer application, forward pass, argmax.
Prediction predict(const Mlp& net, const FeatureVector& raw_features);

// Versioned model file (JSON text). write -> read -> write is byte-identical.
void save_model(const Mlp& net, const std::string& path);
Mlp load_model(const std::string& path);

void write_history_csv(const TrainingHistory& history, const std::string& path);

} // namespace ecgnet
