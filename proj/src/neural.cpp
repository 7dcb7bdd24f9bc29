#include "ecgnet/neural.hpp"

#include "ecgnet/errors.hpp"
#include "ecgnet/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace ecgnet {

using nlohmann::json;

const char* to_string(TopologyKind kind) {
    switch (kind) {
        case TopologyKind::feedforward: return "feedforward";
        case TopologyKind::fit: return "fit";
        case TopologyKind::pattern: return "pattern";
        case TopologyKind::cascade: return "cascade";
    }
    return "?";
}

TopologyKind topology_kind_from_string(const std::string& name) {
    if (name == "feedforward") return TopologyKind::feedforward;
    if (name == "fit") return TopologyKind::fit;
    if (name == "pattern") return TopologyKind::pattern;
    if (name == "cascade") return TopologyKind::cascade;
    throw FormatError("unknown topology kind '" + name + "'");
}

namespace {

struct LayerSpan {
    std::size_t w_off = 0;
    std::size_t rows = 0; // layer width
    std::size_t cols = 0; // previous layer width
    std::size_t s_off = 0;
    bool has_skip = false;
    std::size_t b_off = 0;
};

std::vector<LayerSpan> layout_of(const Topology& t) {
    if (t.input_dim < 1 || t.output_dim < 1)
        throw DataError("topology dimensions must be >= 1");
    for (int h : t.hidden)
        if (h < 1) throw DataError("hidden sizes must be >= 1");

    std::vector<LayerSpan> spans;
    std::size_t off = 0;
    std::size_t prev = static_cast<std::size_t>(t.input_dim);
    const std::size_t n_layers = t.hidden.size() + 1;
    for (std::size_t l = 0; l < n_layers; ++l) {
        LayerSpan s;
        s.rows = l < t.hidden.size() ? static_cast<std::size_t>(t.hidden[l])
                                     : static_cast<std::size_t>(t.output_dim);
        s.cols = prev;
        s.w_off = off;
        off += s.rows * s.cols;
        s.has_skip = t.kind == TopologyKind::cascade && l > 0;
        if (s.has_skip) {
            s.s_off = off;
            off += s.rows * static_cast<std::size_t>(t.input_dim);
        }
        s.b_off = off;
        off += s.rows;
        spans.push_back(s);
        prev = s.rows;
    }
    return spans;
}

std::size_t total_params(const std::vector<LayerSpan>& spans) {
    const LayerSpan& last = spans.back();
    return last.b_off + last.rows;
}

void softmax_inplace(std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

// Forward pass storing every layer's activation (acts[0] is the input).
// The returned vector is the network output (softmax applied for pattern).
std::vector<double> forward_pass(const Topology& topo,
                                 const std::vector<LayerSpan>& spans,
                                 const std::vector<double>& params,
                                 const std::vector<double>& x,
                                 std::vector<std::vector<double>>* acts) {
    if (static_cast<int>(x.size()) != topo.input_dim)
        throw DataError("input dimension mismatch: expected " +
                        std::to_string(topo.input_dim) + ", got " +
                        std::to_string(x.size()));
    if (acts) {
        acts->clear();
        acts->push_back(x);
    }
    std::vector<double> a = x;
    for (std::size_t l = 0; l < spans.size(); ++l) {
        const LayerSpan& s = spans[l];
        std::vector<double> z(s.rows, 0.0);
        for (std::size_t i = 0; i < s.rows; ++i) {
            double acc = params[s.b_off + i];
            const double* wrow = &params[s.w_off + i * s.cols];
            for (std::size_t j = 0; j < s.cols; ++j) acc += wrow[j] * a[j];
            if (s.has_skip) {
                const double* srow = &params[s.s_off + i * x.size()];
                for (std::size_t j = 0; j < x.size(); ++j) acc += srow[j] * x[j];
            }
            z[i] = acc;
        }
        if (l + 1 < spans.size()) {
            for (double& v : z) v = std::tanh(v);
        } else if (topo.kind == TopologyKind::pattern) {
            softmax_inplace(z);
        }
        if (acts) acts->push_back(z);
        a = std::move(z);
    }
    return a;
}

// Mean batch loss; when grad != nullptr, also the exact gradient in layout
// order. The core evaluator takes the parameter vector explicitly so the
// SCG trial points need no Mlp copies.
double eval_loss_grad(const Topology& topo, const std::vector<LayerSpan>& spans,
                      const std::vector<double>& params, const Batch& batch,
                      std::vector<double>* grad) {
    if (batch.inputs.empty()) throw DataError("empty batch");
    if (batch.inputs.size() != batch.targets.size())
        throw DataError("batch inputs/targets size mismatch");

    if (grad) grad->assign(params.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.inputs.size());
    const bool cross_entropy = topo.kind == TopologyKind::pattern;

    double loss = 0.0;
    std::vector<std::vector<double>> acts;
    std::vector<double> delta, delta_prev;
    for (std::size_t row = 0; row < batch.inputs.size(); ++row) {
        const std::vector<double>& x = batch.inputs[row];
        const std::vector<double>& t = batch.targets[row];
        if (static_cast<int>(t.size()) != topo.output_dim)
            throw DataError("target dimension mismatch");

        const std::vector<double> y =
            forward_pass(topo, spans, params, x, grad ? &acts : nullptr);
        if (!grad) {
            // loss only
            if (cross_entropy) {
                for (std::size_t k = 0; k < y.size(); ++k)
                    if (t[k] != 0.0)
                        loss -= t[k] * std::log(std::max(y[k], 1e-300));
            } else {
                for (std::size_t k = 0; k < y.size(); ++k)
                    loss += (y[k] - t[k]) * (y[k] - t[k]);
            }
            continue;
        }

        delta.assign(y.size(), 0.0);
        if (cross_entropy) {
            for (std::size_t k = 0; k < y.size(); ++k) {
                if (t[k] != 0.0) loss -= t[k] * std::log(std::max(y[k], 1e-300));
                delta[k] = (y[k] - t[k]) * inv_n; // softmax + CE combined
            }
        } else {
            for (std::size_t k = 0; k < y.size(); ++k) {
                const double e = y[k] - t[k];
                loss += e * e;
                delta[k] = 2.0 * e * inv_n;
            }
        }

        for (std::size_t li = spans.size(); li-- > 0;) {
            const LayerSpan& s = spans[li];
            const std::vector<double>& a_in = acts[li];
            for (std::size_t i = 0; i < s.rows; ++i) {
                const double d = delta[i];
                double* gw = &(*grad)[s.w_off + i * s.cols];
                for (std::size_t j = 0; j < s.cols; ++j) gw[j] += d * a_in[j];
                if (s.has_skip) {
                    double* gs = &(*grad)[s.s_off + i * x.size()];
                    for (std::size_t j = 0; j < x.size(); ++j) gs[j] += d * x[j];
                }
                (*grad)[s.b_off + i] += d;
            }
            if (li == 0) break;
            delta_prev.assign(s.cols, 0.0);
            for (std::size_t i = 0; i < s.rows; ++i) {
                const double d = delta[i];
                const double* wrow = &params[s.w_off + i * s.cols];
                for (std::size_t j = 0; j < s.cols; ++j)
                    delta_prev[j] += wrow[j] * d;
            }
            // tanh'(z) = 1 - a^2 on the producing layer's activation
            const std::vector<double>& a = acts[li];
            for (std::size_t j = 0; j < s.cols; ++j)
                delta_prev[j] *= 1.0 - a[j] * a[j];
            delta = delta_prev;
        }
    }
    return loss * inv_n;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

} // namespace

std::size_t count_params(const Topology& topology) {
    const auto spans = layout_of(topology);
    return total_params(spans);
}

Mlp init_network(const Topology& topology, std::uint64_t seed) {
    const auto spans = layout_of(topology);
    Mlp net;
    net.topology = topology;
    net.seed = seed;
    net.params.assign(total_params(spans), 0.0);

    CounterRng rng(seed);
    for (const LayerSpan& s : spans) {
        const std::size_t fan_in =
            s.cols + (s.has_skip ? static_cast<std::size_t>(topology.input_dim) : 0);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < s.rows * s.cols; ++i)
            net.params[s.w_off + i] = rng.next_double(-bound, bound);
        if (s.has_skip)
            for (std::size_t i = 0;
                 i < s.rows * static_cast<std::size_t>(topology.input_dim); ++i)
                net.params[s.s_off + i] = rng.next_double(-bound, bound);
        // biases stay zero
    }
    return net;
}

std::vector<double> forward(const Mlp& net, const std::vector<double>& x) {
    const auto spans = layout_of(net.topology);
    return forward_pass(net.topology, spans, net.params, x, nullptr);
}

std::pair<double, std::vector<double>> loss_and_gradient(const Mlp& net,
                                                         const Batch& batch) {
    const auto spans = layout_of(net.topology);
    std::vector<double> grad;
    const double loss =
        eval_loss_grad(net.topology, spans, net.params, batch, &grad);
    return {loss, std::move(grad)};
}

TrainingHistory scg_train(Mlp& net, const Batch& train, const Batch* val,
                          const ScgParams& prm) {
    if (train.inputs.empty()) throw DataError("empty training batch");
    if (prm.max_iter <= 0 || prm.sigma <= 0 || prm.lambda0 <= 0)
        throw DataError("ScgParams values must be positive");

    const auto spans = layout_of(net.topology);
    const std::size_t n_weights = total_params(spans);
    if (net.params.size() != n_weights)
        throw DataError("network parameter vector has the wrong size");

    std::vector<double> w = net.params;
    std::vector<double> g(n_weights), g_trial(n_weights), s(n_weights);
    std::vector<double> w_trial(n_weights);

    auto loss_at = [&](const std::vector<double>& wv) {
        return eval_loss_grad(net.topology, spans, wv, train, nullptr);
    };
    auto grad_at = [&](const std::vector<double>& wv, std::vector<double>& out) {
        return eval_loss_grad(net.topology, spans, wv, train, &out);
    };

    double f = grad_at(w, g);
    if (!std::isfinite(f))
        throw DataError("non-finite loss at iteration 0");

    std::vector<double> r(n_weights), p(n_weights), r_new(n_weights);
    for (std::size_t i = 0; i < n_weights; ++i) r[i] = -g[i];
    p = r;

    double lambda = prm.lambda0;
    double lambda_bar = 0.0;
    bool success = true;
    double delta = 0.0, p_norm2 = 0.0;

    TrainingHistory hist;
    hist.loss.push_back(f);

    double best_val = std::numeric_limits<double>::infinity();
    int bad_streak = 0;
    auto record_val = [&]() {
        if (!val) return false;
        const double vf = eval_loss_grad(net.topology, spans, w, *val, nullptr);
        hist.val_loss.push_back(vf);
        if (vf < best_val) {
            best_val = vf;
            bad_streak = 0;
        } else {
            ++bad_streak;
        }
        return bad_streak >= prm.patience;
    };
    if (val) {
        const double vf = eval_loss_grad(net.topology, spans, w, *val, nullptr);
        hist.val_loss.push_back(vf);
        best_val = vf;
    }

    std::string stop = "max_iter";
    int k = 0;
    while (k < prm.max_iter) {
        ++k;
        if (f <= prm.goal_loss) {
            stop = "goal_loss";
            --k;
            break;
        }
        if (std::sqrt(dot(r, r)) < 1e-14) {
            stop = "gradient_vanished";
            --k;
            break;
        }

        auto second_order = [&]() {
            p_norm2 = dot(p, p);
            if (p_norm2 < 1e-300) {
                p = r;
                p_norm2 = dot(p, p);
            }
            const double sigma_k = prm.sigma / std::sqrt(p_norm2);
            for (std::size_t i = 0; i < n_weights; ++i)
                w_trial[i] = w[i] + sigma_k * p[i];
            grad_at(w_trial, g_trial);
            for (std::size_t i = 0; i < n_weights; ++i)
                s[i] = (g_trial[i] - g[i]) / sigma_k;
            delta = dot(p, s);
        };
        auto regularize = [&]() {
            delta += (lambda - lambda_bar) * p_norm2;
            if (delta <= 0) {
                // force the scaled Hessian model positive definite
                lambda_bar = 2.0 * (lambda - delta / p_norm2);
                delta = -delta + lambda * p_norm2;
                lambda = lambda_bar;
            }
        };

        if (success) second_order();
        regularize();

        double mu = dot(p, r);
        if (mu <= 0.0) {
            // stale conjugate direction: restart on steepest descent
            p = r;
            second_order();
            regularize();
            mu = dot(p, r);
        }

        const double alpha = mu / delta;
        for (std::size_t i = 0; i < n_weights; ++i)
            w_trial[i] = w[i] + alpha * p[i];
        const double f_trial = loss_at(w_trial);
        if (!std::isfinite(f_trial))
            throw DataError("non-finite loss at iteration " + std::to_string(k));
        const double comparison = 2.0 * delta * (f - f_trial) / (mu * mu);

        if (comparison >= 0) {
            w = w_trial;
            f = f_trial;
            grad_at(w, g);
            for (std::size_t i = 0; i < n_weights; ++i) r_new[i] = -g[i];
            lambda_bar = 0.0;
            success = true;
            if (k % static_cast<int>(n_weights) == 0) {
                p = r_new; // periodic restart
            } else {
                const double beta = (dot(r_new, r_new) - dot(r_new, r)) / mu;
                for (std::size_t i = 0; i < n_weights; ++i)
                    p[i] = r_new[i] + beta * p[i];
            }
            r = r_new;
            if (comparison >= 0.75) lambda *= 0.25;
        } else {
            lambda_bar = lambda;
            success = false;
        }
        if (comparison < 0.25) {
            lambda += delta * (1.0 - comparison) / p_norm2;
            if (!std::isfinite(lambda) || lambda > 1e100) lambda = 1e100;
        }

        hist.loss.push_back(f);
        if (record_val()) {
            stop = "patience";
            break;
        }
    }
    if (f <= prm.goal_loss && stop == "max_iter") stop = "goal_loss";

    hist.iterations = k;
    hist.stop_reason = stop;

    net.params = std::move(w);
    net.epochs_run = k;
    net.final_loss = f;
    net.trained = true;
    return hist;
}

Batch batch_from_matrix(const FeatureMatrix& matrix,
                        const std::vector<std::string>& output_class_names) {
    Batch b;
    b.inputs.reserve(matrix.rows.size());
    b.targets.reserve(matrix.rows.size());
    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
        const std::string& name = matrix.class_names[matrix.labels[i]];
        const auto it = std::find(output_class_names.begin(),
                                  output_class_names.end(), name);
        if (it == output_class_names.end())
            throw DataError("row class '" + name +
                            "' is not among the network's output classes");
        std::vector<double> target(output_class_names.size(), 0.0);
        target[static_cast<std::size_t>(it - output_class_names.begin())] = 1.0;
        b.inputs.emplace_back(matrix.rows[i].begin(), matrix.rows[i].end());
        b.targets.push_back(std::move(target));
    }
    return b;
}

TrainingHistory scg_train(Mlp& net, const FeatureMatrix& train,
                          const FeatureMatrix* val, const ScgParams& params) {
    const Batch tb = batch_from_matrix(train, net.class_names);
    Batch vb;
    if (val) vb = batch_from_matrix(*val, net.class_names);
    return scg_train(net, tb, val ? &vb : nullptr, params);
}

std::pair<FeatureMatrix, FeatureMatrix> split_70_30(const FeatureMatrix& matrix,
                                                    std::uint64_t seed) {
    FeatureMatrix train, test;
    train.class_names = matrix.class_names;
    test.class_names = matrix.class_names;

    for (std::size_t cls = 0; cls < matrix.class_names.size(); ++cls) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < matrix.labels.size(); ++i)
            if (matrix.labels[i] == static_cast<int>(cls)) idx.push_back(i);
        if (idx.empty()) continue;
        if (idx.size() < 2)
            throw DataError("class '" + matrix.class_names[cls] +
                            "' has fewer than 2 rows");
        CounterRng rng(derive_seed(seed, cls));
        for (std::size_t i = idx.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng.next_below(i + 1));
            std::swap(idx[i], idx[j]);
        }
        const auto n_train =
            static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            FeatureMatrix& dst = i < n_train ? train : test;
            dst.rows.push_back(matrix.rows[idx[i]]);
            dst.labels.push_back(matrix.labels[idx[i]]);
        }
    }
    return {std::move(train), std::move(test)};
}

Prediction predict(const Mlp& net, const FeatureVector& raw_features) {
    if (!net.trained) throw DataError("predict called on an untrained net");
    if (net.topology.input_dim != static_cast<int>(kFeatureCount))
        throw DataError("predict expects a feature-width network");
    const FeatureVector z = net.normalizer.apply(raw_features);
    Prediction pred;
    pred.scores = forward(net, std::vector<double>(z.begin(), z.end()));
    pred.class_index = 0;
    for (std::size_t i = 1; i < pred.scores.size(); ++i)
        if (pred.scores[i] > pred.scores[pred.class_index])
            pred.class_index = static_cast<int>(i);
    return pred;
}

// ---- model files -------------------------------------------------------

void save_model(const Mlp& net, const std::string& path) {
    const auto spans = layout_of(net.topology);
    json layers = json::array();
    for (const LayerSpan& s : spans) {
        json layer;
        layer["w"] = std::vector<double>(net.params.begin() + s.w_off,
                                         net.params.begin() + s.w_off +
                                             s.rows * s.cols);
        if (s.has_skip)
            layer["skip"] = std::vector<double>(
                net.params.begin() + s.s_off,
                net.params.begin() + s.s_off +
                    s.rows * static_cast<std::size_t>(net.topology.input_dim));
        layer["b"] = std::vector<double>(net.params.begin() + s.b_off,
                                         net.params.begin() + s.b_off + s.rows);
        layers.push_back(std::move(layer));
    }

    json j;
    j["format"] = "ecgnet-model";
    j["format_version"] = 1;
    j["feature_version"] = net.feature_version;
    j["topology"] = {{"kind", to_string(net.topology.kind)},
                     {"input_dim", net.topology.input_dim},
                     {"hidden", net.topology.hidden},
                     {"output_dim", net.topology.output_dim}};
    j["class_names"] = net.class_names;
    j["seed"] = net.seed;
    j["epochs"] = net.epochs_run;
    j["final_loss"] = net.final_loss;
    j["trained"] = net.trained;
    j["normalizer"] = {
        {"mean", std::vector<double>(net.normalizer.mean.begin(),
                                     net.normalizer.mean.end())},
        {"sd", std::vector<double>(net.normalizer.sd.begin(),
                                   net.normalizer.sd.end())}};
    j["layers"] = std::move(layers);

    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

Mlp load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path + ": not a valid model file: " + e.what());
    }

    try {
        if (j.at("format").get<std::string>() != "ecgnet-model")
            throw FormatError(path + ": not an ecgnet model file");
        if (j.at("format_version").get<int>() != 1)
            throw FormatError(path + ": unsupported model format version");
        Mlp net;
        net.feature_version = j.at("feature_version").get<std::string>();
        if (net.feature_version != kFeatureVersion)
            throw FormatError(path + ": feature-order version mismatch: file has '" +
                              net.feature_version + "', this build uses '" +
                              kFeatureVersion + "'");
        const json& topo = j.at("topology");
        net.topology.kind =
            topology_kind_from_string(topo.at("kind").get<std::string>());
        net.topology.input_dim = topo.at("input_dim").get<int>();
        net.topology.hidden = topo.at("hidden").get<std::vector<int>>();
        net.topology.output_dim = topo.at("output_dim").get<int>();
        net.class_names = j.at("class_names").get<std::vector<std::string>>();
        net.seed = j.at("seed").get<std::uint64_t>();
        net.epochs_run = j.at("epochs").get<int>();
        net.final_loss = j.at("final_loss").get<double>();
        net.trained = j.at("trained").get<bool>();

        const auto mean =
            j.at("normalizer").at("mean").get<std::vector<double>>();
        const auto sd = j.at("normalizer").at("sd").get<std::vector<double>>();
        if (mean.size() != kFeatureCount || sd.size() != kFeatureCount)
            throw FormatError(path + ": normalizer must hold 15 statistics");
        std::copy(mean.begin(), mean.end(), net.normalizer.mean.begin());
        std::copy(sd.begin(), sd.end(), net.normalizer.sd.begin());

        const auto spans = layout_of(net.topology);
        net.params.assign(total_params(spans), 0.0);
        const json& layers = j.at("layers");
        if (layers.size() != spans.size())
            throw FormatError(path + ": layer count does not match topology");
        for (std::size_t l = 0; l < spans.size(); ++l) {
            const LayerSpan& s = spans[l];
            const auto w = layers[l].at("w").get<std::vector<double>>();
            const auto b = layers[l].at("b").get<std::vector<double>>();
            if (w.size() != s.rows * s.cols || b.size() != s.rows)
                throw FormatError(path + ": weight shape mismatch in layer " +
                                  std::to_string(l));
            std::copy(w.begin(), w.end(), net.params.begin() + s.w_off);
            std::copy(b.begin(), b.end(), net.params.begin() + s.b_off);
            if (s.has_skip) {
                const auto sk = layers[l].at("skip").get<std::vector<double>>();
                if (sk.size() != s.rows * static_cast<std::size_t>(net.topology.input_dim))
                    throw FormatError(path + ": skip shape mismatch in layer " +
                                      std::to_string(l));
                std::copy(sk.begin(), sk.end(), net.params.begin() + s.s_off);
            }
        }
        return net;
    } catch (const json::exception& e) {
        throw FormatError(path + ": malformed model file: " + e.what());
    }
}

void write_history_csv(const TrainingHistory& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path + "'");
    const bool has_val = !history.val_loss.empty();
    out << (has_val ? "iter,loss,val_loss\n" : "iter,loss\n");
    char buf[96];
    for (std::size_t i = 0; i < history.loss.size(); ++i) {
        if (has_val && i < history.val_loss.size())
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g\n", i,
                          history.loss[i], history.val_loss[i]);
        else
            std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, history.loss[i]);
        out << buf;
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace ecgnet
